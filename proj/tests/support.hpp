#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "xrsim/dqn.hpp"

namespace xrsim::testing {

/// Contextual bandit with one action strictly better in every state. Rewards depend
/// on the state so the network has to learn a shared offset, not a constant.
class DominantBandit final : public Environment {
public:
    DominantBandit(std::size_t n_actions, std::size_t best, std::size_t steps, std::uint64_t seed)
        : n_(n_actions), best_(best), steps_(steps), rng_(seed) {}

    StateVec reset() override {
        t_ = 0;
        draw();
        return s_;
    }

    EnvStep step(std::size_t action) override {
        const double base = -0.5 + 0.2 * s_[0] - 0.1 * s_[2];
        const double r = action == best_ ? base + 0.4 : base - 0.01 * static_cast<double>(action % 7);
        ++t_;
        draw();
        const bool terminal = t_ >= steps_;
        return {s_, r, terminal};
    }

    [[nodiscard]] std::size_t num_actions() const override { return n_; }

private:
    void draw() {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        s_ = {u(rng_), u(rng_), u(rng_)};
    }

    std::size_t n_, best_, steps_, t_ = 0;
    std::mt19937_64 rng_;
    StateVec s_{};
};

inline TrainConfig bandit_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.gamma = 0.0;
    cfg.episodes = 60;
    cfg.hidden = 16;
    cfg.batch_size = 32;
    cfg.replay_capacity = 5000;
    cfg.epsilon_decay_steps = 3000;
    cfg.learning_rate = 3e-3;
    cfg.seed = seed;
    return cfg;
}

/// Share of random states where the greedy action is `best`.
inline double greedy_share(const QNetwork& net, std::size_t best, std::size_t n_states,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_states; ++i) {
        const StateVec s{u(rng), u(rng), u(rng)};
        hits += greedy_action(forward(net, s)) == best ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(n_states);
}

/// Largest relative gap between the analytic TD-loss gradient and central finite
/// differences, over every parameter. Gaps below `abs_floor` count as zero.
inline double gradient_check(const QNetwork& net, const QNetwork& target,
                             const std::vector<Transition>& batch, double gamma,
                             double h = 1e-5, double abs_floor = 1e-9,
                             double* worst_abs = nullptr, std::size_t* compared = nullptr) {
    QNetwork grad;
    td_loss_gradient(net, target, batch, gamma, grad);
    const auto analytic = grad.flatten();
    auto flat = net.flatten();
    QNetwork probe = net;
    double worst = 0.0;
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double keep = flat[k];
        flat[k] = keep + h;
        probe.assign(flat);
        const double up = td_loss(probe, target, batch, gamma);
        flat[k] = keep - h;
        probe.assign(flat);
        const double down = td_loss(probe, target, batch, gamma);
        flat[k] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double gap = std::abs(numeric - analytic[k]);
        if (worst_abs) *worst_abs = std::max(*worst_abs, gap);
        if (compared) ++*compared;
        if (gap < abs_floor) continue;
        worst = std::max(worst, gap / std::max(std::abs(numeric), std::abs(analytic[k])));
    }
    return worst;
}

/// Tiny random net plus a random batch for gradient checks.
struct GradientCase {
    QNetwork net;
    QNetwork target;
    std::vector<Transition> batch;
};

inline GradientCase random_gradient_case(std::uint64_t seed, int hidden = 4, int outputs = 5,
                                         std::size_t batch_size = 6) {
    std::mt19937_64 rng(seed);
    GradientCase c;
    c.net = QNetwork::random(hidden, outputs, rng);
    c.target = QNetwork::random(hidden, outputs, rng);
    std::normal_distribution<double> n01(0.0, 0.3);
    for (auto& b : c.net.b1) b = n01(rng);
    for (auto& b : c.net.b2) b = n01(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(outputs) - 1);
    for (std::size_t i = 0; i < batch_size; ++i) {
        Transition t;
        t.state = {u(rng), u(rng), u(rng)};
        t.action = pick(rng);
        t.reward = u(rng) - 0.5;
        t.next_state = {u(rng), u(rng), u(rng)};
        t.terminal = i % 3 == 2;
        c.batch.push_back(t);
    }
    return c;
}

}  // namespace xrsim::testing
