#pragma once

#include <vector>

#include "aigx/channel_env.hpp"

namespace aigx {

/// Optimal sum-rate allocation p_m = max(0, mu - N0/g_m).
struct WaterfillSolution {
  PowerAllocation allocation;
  double water_level = 0.0;
  std::vector<bool> active_channels;
};

inline constexpr double kDefaultWaterfillTol = 1e-10;

/// Bisection on the water level until the budget residual is below `tol`
/// (relative to the budget), then mu is recomputed in closed form on the
/// resulting active set.
WaterfillSolution waterfill(const ChannelState& state, const ChannelConfig& cfg,
                            double tol = kDefaultWaterfillTol);

/// Wraps an arbitrary allocation as a candidate solution: active = p > 0,
/// water level = mean of (N0/g + p) over active channels.
WaterfillSolution as_candidate(const PowerAllocation& alloc, const ChannelState& state,
                               const ChannelConfig& cfg);

/// KKT conditions of max sum_rate s.t. sum p = P, p >= 0:
///   primal feasibility, equal marginal rate g/(N0 + g p) = 1/mu on active
///   channels, and g/N0 <= 1/mu on inactive ones.
bool verify_kkt(const WaterfillSolution& sol, const ChannelState& state,
                const ChannelConfig& cfg, double tol);

}  // namespace aigx
