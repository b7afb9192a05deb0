#pragma once

// Test-only reference computations, independent of the library's solvers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace aigx::oracle {

/// Euclidean projection onto {p >= 0, sum p = budget} (sort-based).
inline std::vector<double> project_simplex(const std::vector<double>& v, double budget) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - budget) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::max(0.0, v[i] - theta);
  return p;
}

inline double sum_rate(const std::vector<double>& g, const std::vector<double>& p, double noise) {
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) r += std::log2(1.0 + g[i] * p[i] / noise);
  return r;
}

/// Projected gradient ascent on the sum rate from the uniform point.
inline std::vector<double> projected_gradient_ascent(const std::vector<double>& g, double noise,
                                                     double budget, int iterations) {
  std::vector<double> p(g.size(), budget / static_cast<double>(g.size()));
  // Step below 1/L where L bounds the Hessian: max g^2 / (noise^2 ln 2).
  const double gmax = *std::max_element(g.begin(), g.end());
  const double step = 0.5 * noise * noise * std::log(2.0) / (gmax * gmax);
  std::vector<double> grad(g.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      grad[i] = g[i] / ((noise + g[i] * p[i]) * std::log(2.0));
      grad[i] = p[i] + step * grad[i];
    }
    auto next = project_simplex(grad, budget);
    double moved = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) moved = std::max(moved, std::abs(next[i] - p[i]));
    p = std::move(next);
    if (moved < 1e-15) break;
  }
  return p;
}

/// Uniformly random point of the scaled simplex (normalized exponentials).
template <typename Rng>
inline std::vector<double> random_simplex_point(std::size_t m, double budget, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(m);
  double s = 0.0;
  for (auto& x : p) {
    x = e(rng);
    s += x;
  }
  for (auto& x : p) x *= budget / s;
  return p;
}

}  // namespace aigx::oracle
