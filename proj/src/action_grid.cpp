#include "xrsim/action_grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace xrsim {

ActionGrid::ActionGrid(std::vector<double> alpha_values, int slots_per_frame)
    : alphas_(std::move(alpha_values)), slots_(slots_per_frame) {
    if (alphas_.empty()) throw std::invalid_argument("action grid needs at least one alpha");
    if (slots_ < 1) throw std::invalid_argument("action grid needs at least one slot");
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
        if (!(alphas_[i] >= 0.0 && alphas_[i] <= 1.0))
            throw std::invalid_argument("alpha values must lie in [0, 1]");
        if (i > 0 && !(alphas_[i] > alphas_[i - 1]))
            throw std::invalid_argument("alpha values must be strictly increasing");
    }
    for (int n_ul = 1; n_ul <= slots_; ++n_ul)
        for (int n_dl = 0; n_ul + n_dl <= slots_; ++n_dl)
            for (double a : alphas_) actions_.push_back({n_ul, n_dl, a});
}

ActionGrid ActionGrid::standard(int slots_per_frame) {
    return ActionGrid({0.0, 0.25, 0.5, 0.75, 1.0}, slots_per_frame);
}

ActionGrid ActionGrid::restricted_to(double alpha) const {
    if (std::find(alphas_.begin(), alphas_.end(), alpha) == alphas_.end())
        throw std::invalid_argument("alpha not on the grid");
    return ActionGrid({alpha}, slots_);
}

bool ActionGrid::spans_offload_extremes() const {
    return alphas_.front() == 0.0 && alphas_.back() == 1.0;
}

std::size_t ActionGrid::index_of(const Action& a) const {
    auto it = std::find(actions_.begin(), actions_.end(), a);
    if (it == actions_.end()) throw std::out_of_range("action not on the grid");
    return static_cast<std::size_t>(it - actions_.begin());
}

}  // namespace xrsim
