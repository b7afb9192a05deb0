#include "aigx/channel_env.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aigx {

void ChannelConfig::validate() const {
  if (num_channels < 1) throw std::invalid_argument("num_channels must be >= 1");
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power must be > 0");
  if (!(power_budget > 0.0)) throw std::invalid_argument("power_budget must be > 0");
}

GainDistribution::GainDistribution(std::vector<GainRange> ranges)
    : ranges_(std::move(ranges)) {
  if (ranges_.empty()) throw std::invalid_argument("gain distribution has no channels");
  for (std::size_t m = 0; m < ranges_.size(); ++m) {
    const auto& r = ranges_[m];
    if (!(r.lo > 0.0) || !(r.lo <= r.hi) || !std::isfinite(r.hi)) {
      throw std::invalid_argument("invalid gain range on channel " + std::to_string(m) +
                                  ": need 0 < lo <= hi");
    }
  }
}

GainDistribution GainDistribution::from_blocks(const std::vector<Block>& blocks) {
  std::vector<GainRange> ranges;
  for (const auto& b : blocks) {
    if (b.count < 1) throw std::invalid_argument("gain block needs count >= 1");
    ranges.insert(ranges.end(), static_cast<std::size_t>(b.count), GainRange{b.lo, b.hi});
  }
  return GainDistribution(std::move(ranges));
}

ChannelState sample_gains(const GainDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelState s;
  s.gains.reserve(dist.size());
  for (const auto& r : dist.ranges()) {
    // lo + u*(hi-lo) keeps degenerate ranges exact.
    s.gains.push_back(r.lo + unit(rng) * (r.hi - r.lo));
  }
  return s;
}

double sum_rate(const ChannelState& state, const PowerAllocation& alloc,
                const ChannelConfig& cfg) {
  const auto m = static_cast<std::size_t>(cfg.num_channels);
  if (state.gains.size() != m || alloc.powers.size() != m) {
    throw std::invalid_argument("sum_rate: expected " + std::to_string(m) +
                                " channels, got gains=" + std::to_string(state.gains.size()) +
                                " powers=" + std::to_string(alloc.powers.size()));
  }
  double rate = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    rate += std::log2(1.0 + state.gains[i] * alloc.powers[i] / cfg.noise_power);
  }
  return rate;
}

PowerAllocation uniform_allocation(const ChannelConfig& cfg) {
  return {std::vector<double>(static_cast<std::size_t>(cfg.num_channels),
                              cfg.power_budget / cfg.num_channels)};
}

bool is_feasible(const PowerAllocation& alloc, const ChannelConfig& cfg, double rel_tol) {
  if (alloc.powers.size() != static_cast<std::size_t>(cfg.num_channels)) return false;
  double total = 0.0;
  for (double p : alloc.powers) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    total += p;
  }
  return std::abs(total - cfg.power_budget) <= rel_tol * cfg.power_budget;
}

}  // namespace aigx
