#include "xrsim/policies.hpp"

#include <limits>

namespace xrsim {

OracleChoice greedy_oracle(const FramePair& frame, std::span<const double> trace_slice,
                           const SystemParams& sys, const ActionGrid& grid,
                           const RewardParams& rp) {
    OracleChoice best;
    best.reward = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto outcome = simulate_frame(frame, grid[i], trace_slice, sys);
        const double r = reward(outcome, rp);
        if (r > best.reward) best = {grid[i], i, r};
    }
    return best;
}

OraclePolicy::OraclePolicy(ActionGrid grid, SystemParams sys, RewardParams rp)
    : grid_(std::move(grid)), sys_(std::move(sys)), rp_(rp) {}

Action OraclePolicy::decide(const Observation& obs) {
    return greedy_oracle(obs.frame, obs.frame_slots, sys_, grid_, rp_).action;
}

}  // namespace xrsim
