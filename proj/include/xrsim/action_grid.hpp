#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xrsim/frame_model.hpp"

namespace xrsim {

/// The discrete action lattice: every (n_ul, n_dl) split with n_ul >= 1 and
/// n_ul + n_dl <= slots_per_frame, crossed with a list of offload ratios.
/// Actions are stored in lexicographic (n_ul, n_dl, alpha_index) order, so the
/// position of an action doubles as its network output index.
class ActionGrid {
public:
    ActionGrid(std::vector<double> alpha_values, int slots_per_frame);

    /// Alpha values {0, 0.25, 0.5, 0.75, 1}.
    static ActionGrid standard(int slots_per_frame);

    /// Same slot splits with alpha pinned to one value already on the grid.
    [[nodiscard]] ActionGrid restricted_to(double alpha) const;

    [[nodiscard]] std::size_t size() const { return actions_.size(); }
    [[nodiscard]] const Action& operator[](std::size_t i) const { return actions_.at(i); }
    [[nodiscard]] std::span<const Action> actions() const { return actions_; }
    [[nodiscard]] std::span<const double> alpha_values() const { return alphas_; }
    [[nodiscard]] int slots_per_frame() const { return slots_; }
    [[nodiscard]] bool spans_offload_extremes() const;

    /// Position of `a` on the grid; throws std::out_of_range if absent.
    [[nodiscard]] std::size_t index_of(const Action& a) const;

private:
    std::vector<double> alphas_;
    int slots_;
    std::vector<Action> actions_;
};

}  // namespace xrsim
