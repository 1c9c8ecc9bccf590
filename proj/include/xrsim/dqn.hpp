#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "xrsim/action_grid.hpp"
#include "xrsim/environment.hpp"

namespace xrsim {

using StateVec = std::array<double, 3>;

/// Maps raw (d_ul, d_dl, h) into network inputs: frame sizes over their means, gain
/// as dB offset from `gain_reference` divided by `db_span`.
struct StateNormalizer {
    double ul_mean = 1.0;
    double dl_mean = 1.0;
    double gain_reference = 1.0;
    double db_span = 20.0;

    [[nodiscard]] StateVec operator()(const EnvState& s) const;
};

[[nodiscard]] StateVec normalize_state(const EnvState& raw, const TrafficParams& traffic,
                                       double gain_reference, double db_span = 20.0);

/// Single-hidden-layer Q network: 3 -> hidden (ReLU) -> one value per action.
/// Weights are row-major: w1 is hidden x 3, w2 is outputs x hidden.
struct QNetwork {
    int hidden = 0;
    int outputs = 0;
    std::vector<double> w1, b1, w2, b2;

    static QNetwork zeros(int hidden, int outputs);
    static QNetwork random(int hidden, int outputs, std::mt19937_64& rng,
                           double head_init_scale = 1.0);

    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] bool finite() const;
    /// All parameters flattened as w1, b1, w2, b2.
    [[nodiscard]] std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
};

[[nodiscard]] std::vector<double> forward(const QNetwork& net, const StateVec& state);

struct Transition {
    StateVec state{};
    std::size_t action = 0;
    double reward = 0.0;
    StateVec next_state{};
    bool terminal = false;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double learning_rate_end = 1e-4;
    std::size_t learning_rate_decay_steps = 0;  // 0 keeps learning_rate constant
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::size_t epsilon_decay_steps = 5000;
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 64;
    std::size_t target_sync = 250;
    std::size_t train_every = 1;
    std::size_t episodes = 200;
    int hidden = 64;
    double reward_scale = 1.0;  // applied to rewards entering the replay buffer
    double head_init_scale = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] double epsilon_at(std::size_t step) const;
    [[nodiscard]] double learning_rate_at(std::size_t step) const;
};

class TrainingDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean squared TD error over the batch; targets r + gamma max_a' Q_target(s', a'),
/// without bootstrap on terminal transitions.
[[nodiscard]] double td_loss(const QNetwork& net, const QNetwork& target,
                             std::span<const Transition> batch, double gamma);

/// td_loss and its gradient with respect to `net` (written into `grad`, same shape).
double td_loss_gradient(const QNetwork& net, const QNetwork& target,
                        std::span<const Transition> batch, double gamma, QNetwork& grad);

class AdamOptimizer {
public:
    explicit AdamOptimizer(const QNetwork& shape, double learning_rate, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8);
    void apply(QNetwork& net, const QNetwork& grad);
    /// Lazy variant: hidden layer plus only the listed output rows are stepped.
    void apply_rows(QNetwork& net, const QNetwork& grad, std::span<const std::size_t> rows);
    /// Gradient buffer shaped like `shape`, reused across steps.
    QNetwork& scratch(const QNetwork& shape);
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
    QNetwork grad_;
};

/// One optimizer step on the batch; returns the pre-step loss.
/// Throws TrainingDivergence if the loss or the updated weights are not finite.
double train_step(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  const TrainConfig& cfg, AdamOptimizer& opt);

/// Epsilon-greedy over all outputs; greedy ties go to the lowest index.
[[nodiscard]] std::size_t select_action(const QNetwork& net, const StateVec& state,
                                        double epsilon, std::mt19937_64& rng);

[[nodiscard]] std::size_t greedy_action(std::span<const double> q_values);

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(const Transition& t);
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    void sample(std::size_t n, std::mt19937_64& rng, std::vector<Transition>& out) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

struct EnvStep {
    StateVec next_state{};
    double reward = 0.0;
    bool terminal = false;
};

/// Discrete-action environment seen by the learner (normalized observations).
class Environment {
public:
    virtual ~Environment() = default;
    virtual StateVec reset() = 0;
    virtual EnvStep step(std::size_t action) = 0;
    [[nodiscard]] virtual std::size_t num_actions() const = 0;
};

/// XrEnv behind an action grid and a state normalizer.
class GridEnv final : public Environment {
public:
    GridEnv(XrEnv env, ActionGrid grid, StateNormalizer norm);
    StateVec reset() override;
    EnvStep step(std::size_t action) override;
    [[nodiscard]] std::size_t num_actions() const override { return grid_.size(); }

private:
    XrEnv env_;
    ActionGrid grid_;
    StateNormalizer norm_;
};

using EnvFactory = std::function<std::unique_ptr<Environment>(std::size_t episode)>;

struct TrainResult {
    QNetwork net;
    std::vector<double> curve;  // mean reward per step, one entry per episode
    std::size_t steps = 0;
};

/// Deterministic per cfg.seed. Throws TrainingDivergence on non-finite loss.
[[nodiscard]] TrainResult train(const EnvFactory& factory, const TrainConfig& cfg);

/// Greedy decisions from a trained network.
class DqnPolicy final : public Policy {
public:
    DqnPolicy(QNetwork net, ActionGrid grid, StateNormalizer norm);
    Action decide(const Observation& obs) override;

private:
    QNetwork net_;
    ActionGrid grid_;
    StateNormalizer norm_;
};

struct Checkpoint {
    QNetwork net;
    TrainConfig train;
    StateNormalizer normalizer;
    std::vector<double> alpha_values;
    int slots_per_frame = 0;
};

/// JSON dump of dimensions, parameters (round-trip exact decimals), config and seed.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xrsim
