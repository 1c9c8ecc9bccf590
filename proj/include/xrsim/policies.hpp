#pragma once

#include <span>

#include "xrsim/action_grid.hpp"
#include "xrsim/environment.hpp"

namespace xrsim {

struct OracleChoice {
    Action action;
    std::size_t index = 0;
    double reward = 0.0;
};

/// Full-knowledge per-frame argmax of the reward over every action on `grid`.
/// Ties go to the lowest grid index, i.e. the lexicographically smallest
/// (n_ul, n_dl, alpha_index).
[[nodiscard]] OracleChoice greedy_oracle(const FramePair& frame,
                                         std::span<const double> trace_slice,
                                         const SystemParams& sys, const ActionGrid& grid,
                                         const RewardParams& rp);

/// Greedy oracle as a policy. Restricting the grid to alpha = 1 or alpha = 0 gives
/// the non-learning always/never-offload baselines.
class OraclePolicy final : public Policy {
public:
    OraclePolicy(ActionGrid grid, SystemParams sys, RewardParams rp);
    Action decide(const Observation& obs) override;

private:
    ActionGrid grid_;
    SystemParams sys_;
    RewardParams rp_;
};

/// Always returns the same action.
class FixedPolicy final : public Policy {
public:
    explicit FixedPolicy(Action a) : action_(a) {}
    Action decide(const Observation&) override { return action_; }

private:
    Action action_;
};

[[nodiscard]] inline ActionGrid always_offload_grid(const ActionGrid& grid) {
    return grid.restricted_to(1.0);
}
[[nodiscard]] inline ActionGrid never_offload_grid(const ActionGrid& grid) {
    return grid.restricted_to(0.0);
}

}  // namespace xrsim
