#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "aigx/rng.hpp"

namespace aigx {

/// Single base-station/user link over M parallel channels.
struct ChannelConfig {
  int num_channels = 20;
  double noise_power = 1.0;   // per channel, linear
  double power_budget = 0.2;  // total transmit power, linear

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct GainRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const GainRange&) const = default;
};

/// Independent uniform gain range per channel.
class GainDistribution {
 public:
  GainDistribution() = default;
  explicit GainDistribution(std::vector<GainRange> ranges);

  /// `count` channels sharing [lo, hi], concatenated in order.
  struct Block {
    int count;
    double lo;
    double hi;
  };
  static GainDistribution from_blocks(const std::vector<Block>& blocks);

  const std::vector<GainRange>& ranges() const { return ranges_; }
  std::size_t size() const { return ranges_.size(); }

  bool operator==(const GainDistribution&) const = default;

 private:
  std::vector<GainRange> ranges_;
};

/// Linear-scale channel power gains, all strictly positive.
struct ChannelState {
  std::vector<double> gains;
};

/// Nonnegative per-channel powers summing to the power budget.
struct PowerAllocation {
  std::vector<double> powers;
};

ChannelState sample_gains(const GainDistribution& dist, Rng& rng);

/// Shannon sum rate in bits per channel use. Throws std::invalid_argument
/// on dimension mismatch.
double sum_rate(const ChannelState& state, const PowerAllocation& alloc,
                const ChannelConfig& cfg);

PowerAllocation uniform_allocation(const ChannelConfig& cfg);

/// True when every power is >= 0 and the total matches the budget to
/// `rel_tol` relative.
bool is_feasible(const PowerAllocation& alloc, const ChannelConfig& cfg,
                 double rel_tol = 1e-9);

}  // namespace aigx
