#include "aigx/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aigx {
namespace {

constexpr int kMaxBisectionIters = 200;

std::vector<double> inverse_snr(const ChannelState& state, const ChannelConfig& cfg) {
  if (state.gains.size() != static_cast<std::size_t>(cfg.num_channels)) {
    throw std::invalid_argument("waterfill: gain vector does not match num_channels");
  }
  std::vector<double> inv(state.gains.size());
  for (std::size_t m = 0; m < inv.size(); ++m) inv[m] = cfg.noise_power / state.gains[m];
  return inv;
}

double poured(const std::vector<double>& inv, double mu) {
  double total = 0.0;
  for (double f : inv) total += std::max(0.0, mu - f);
  return total;
}

// Exact water level from the sorted floors.
double sorted_water_level(std::vector<double> inv, double budget) {
  std::sort(inv.begin(), inv.end());
  double prefix = 0.0;
  double mu = inv.front() + budget;
  for (std::size_t k = 0; k < inv.size(); ++k) {
    prefix += inv[k];
    const double candidate = (budget + prefix) / static_cast<double>(k + 1);
    if (candidate <= inv[k]) break;
    mu = candidate;
  }
  return mu;
}

}  // namespace

WaterfillSolution waterfill(const ChannelState& state, const ChannelConfig& cfg, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("waterfill: tol must be > 0");
  const auto inv = inverse_snr(state, cfg);
  const double budget = cfg.power_budget;

  double lo = *std::min_element(inv.begin(), inv.end());
  double hi = lo + budget;
  double mu = hi;
  for (int it = 0; it < kMaxBisectionIters; ++it) {
    mu = 0.5 * (lo + hi);
    const double residual = poured(inv, mu) - budget;
    if (std::abs(residual) <= tol * budget) break;
    (residual > 0.0 ? hi : lo) = mu;
  }

  // Closed-form level on the active set found by bisection.
  double floor_sum = 0.0;
  int active = 0;
  for (double f : inv) {
    if (f < mu) {
      floor_sum += f;
      ++active;
    }
  }
  double exact = (budget + floor_sum) / active;
  bool consistent = true;
  for (double f : inv) {
    if ((f < mu) != (f < exact)) consistent = false;
  }
  if (!consistent) exact = sorted_water_level(inv, budget);

  WaterfillSolution sol;
  sol.water_level = exact;
  sol.allocation.powers.resize(inv.size());
  sol.active_channels.resize(inv.size());
  for (std::size_t m = 0; m < inv.size(); ++m) {
    const double p = std::max(0.0, exact - inv[m]);
    sol.allocation.powers[m] = p;
    sol.active_channels[m] = p > 0.0;
  }
  return sol;
}

WaterfillSolution as_candidate(const PowerAllocation& alloc, const ChannelState& state,
                               const ChannelConfig& cfg) {
  const auto inv = inverse_snr(state, cfg);
  if (alloc.powers.size() != inv.size()) {
    throw std::invalid_argument("as_candidate: allocation does not match num_channels");
  }
  WaterfillSolution sol;
  sol.allocation = alloc;
  sol.active_channels.resize(inv.size());
  double level_sum = 0.0;
  int active = 0;
  for (std::size_t m = 0; m < inv.size(); ++m) {
    sol.active_channels[m] = alloc.powers[m] > 0.0;
    if (sol.active_channels[m]) {
      level_sum += inv[m] + alloc.powers[m];
      ++active;
    }
  }
  sol.water_level = active > 0 ? level_sum / active : 0.0;
  return sol;
}

bool verify_kkt(const WaterfillSolution& sol, const ChannelState& state,
                const ChannelConfig& cfg, double tol) {
  const std::size_t m_count = static_cast<std::size_t>(cfg.num_channels);
  if (state.gains.size() != m_count || sol.allocation.powers.size() != m_count ||
      sol.active_channels.size() != m_count) {
    return false;
  }
  if (!is_feasible(sol.allocation, cfg, tol)) return false;
  if (!(sol.water_level > 0.0)) return false;

  const double mu = sol.water_level;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double floor = cfg.noise_power / state.gains[m];
    const double p = sol.allocation.powers[m];
    if (sol.active_channels[m] != (p > 0.0)) return false;
    if (p > 0.0) {
      // Stationarity: 1/marginal = floor + p must sit at the water level.
      if (std::abs(floor + p - mu) > tol * mu) return false;
    } else if (floor < mu * (1.0 - tol)) {
      // Complementary slackness: an idle channel must not be below the level.
      return false;
    }
  }
  return true;
}

}  // namespace aigx
