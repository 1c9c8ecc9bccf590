#include "xrsim/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace xrsim {

using json = nlohmann::json;

StateVec StateNormalizer::operator()(const EnvState& s) const {
    const double h_db = 10.0 * std::log10(s.h / gain_reference);
    return {s.d_ul / ul_mean, s.d_dl / dl_mean, h_db / db_span};
}

StateVec normalize_state(const EnvState& raw, const TrafficParams& traffic, double gain_reference,
                         double db_span) {
    if (!(gain_reference > 0.0)) throw std::invalid_argument("gain_reference must be > 0");
    return StateNormalizer{traffic.mean_ul_bits(), traffic.mean_dl_bits(), gain_reference,
                           db_span}(raw);
}

// ---------------------------------------------------------------------------
// Network

QNetwork QNetwork::zeros(int hidden, int outputs) {
    if (hidden < 1 || outputs < 1) throw std::invalid_argument("network dimensions must be >= 1");
    QNetwork net;
    net.hidden = hidden;
    net.outputs = outputs;
    net.w1.assign(static_cast<std::size_t>(hidden) * 3, 0.0);
    net.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    net.w2.assign(static_cast<std::size_t>(outputs) * hidden, 0.0);
    net.b2.assign(static_cast<std::size_t>(outputs), 0.0);
    return net;
}

QNetwork QNetwork::random(int hidden, int outputs, std::mt19937_64& rng, double head_init_scale) {
    QNetwork net = zeros(hidden, outputs);
    // He-uniform for the ReLU layer. The head starts at a small scale so untried
    // actions sit near zero, above any reachable (non-positive) reward.
    std::uniform_real_distribution<double> u1(-std::sqrt(6.0 / 3.0), std::sqrt(6.0 / 3.0));
    for (double& w : net.w1) w = u1(rng);
    const double lim2 = head_init_scale * std::sqrt(6.0 / (hidden + outputs));
    std::uniform_real_distribution<double> u2(-lim2, lim2);
    for (double& w : net.w2) w = u2(rng);
    return net;
}

std::size_t QNetwork::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

bool QNetwork::finite() const {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(w1) && ok(b1) && ok(w2) && ok(b2);
}

std::vector<double> QNetwork::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto* v : {&w1, &b1, &w2, &b2}) flat.insert(flat.end(), v->begin(), v->end());
    return flat;
}

void QNetwork::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
    std::size_t off = 0;
    for (auto* v : {&w1, &b1, &w2, &b2}) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v->size(), v->begin());
        off += v->size();
    }
}

namespace {

void hidden_layer(const QNetwork& net, const StateVec& s, std::vector<double>& pre,
                  std::vector<double>& act) {
    pre.resize(static_cast<std::size_t>(net.hidden));
    act.resize(pre.size());
    for (std::size_t j = 0; j < pre.size(); ++j) {
        const double* w = &net.w1[j * 3];
        pre[j] = net.b1[j] + w[0] * s[0] + w[1] * s[1] + w[2] * s[2];
        act[j] = pre[j] > 0.0 ? pre[j] : 0.0;
    }
}

double output_row(const QNetwork& net, std::span<const double> act, std::size_t a) {
    const double* w = &net.w2[a * static_cast<std::size_t>(net.hidden)];
    double q = net.b2[a];
    for (std::size_t j = 0; j < act.size(); ++j) q += w[j] * act[j];
    return q;
}

double max_q(const QNetwork& net, const StateVec& s) {
    std::vector<double> pre, act;
    hidden_layer(net, s, pre, act);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < static_cast<std::size_t>(net.outputs); ++a)
        best = std::max(best, output_row(net, act, a));
    return best;
}

double td_target(const QNetwork& target, const Transition& tr, double gamma) {
    if (tr.terminal || gamma == 0.0) return tr.reward;
    return tr.reward + gamma * max_q(target, tr.next_state);
}

}  // namespace

std::vector<double> forward(const QNetwork& net, const StateVec& state) {
    std::vector<double> pre, act;
    hidden_layer(net, state, pre, act);
    std::vector<double> q(static_cast<std::size_t>(net.outputs));
    for (std::size_t a = 0; a < q.size(); ++a) q[a] = output_row(net, act, a);
    return q;
}

// ---------------------------------------------------------------------------
// Loss and gradient

double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
               double gamma) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    std::vector<double> pre, act;
    double loss = 0.0;
    for (const auto& tr : batch) {
        hidden_layer(net, tr.state, pre, act);
        const double err = output_row(net, act, tr.action) - td_target(target, tr, gamma);
        loss += err * err;
    }
    return loss / static_cast<double>(batch.size());
}

namespace {

// Adds the batch gradient into `grad`, whose hidden layer and batch-action rows the
// caller has zeroed. Other rows are left alone.
double accumulate_gradient(const QNetwork& net, const QNetwork& target,
                           std::span<const Transition> batch, double gamma, QNetwork& grad) {
    const auto hidden = static_cast<std::size_t>(net.hidden);
    const double scale = 2.0 / static_cast<double>(batch.size());
    std::vector<double> pre, act;
    double loss = 0.0;
    for (const auto& tr : batch) {
        if (tr.action >= static_cast<std::size_t>(net.outputs))
            throw std::out_of_range("transition action outside network outputs");
        hidden_layer(net, tr.state, pre, act);
        const double err = output_row(net, act, tr.action) - td_target(target, tr, gamma);
        loss += err * err;

        const double dq = scale * err;
        grad.b2[tr.action] += dq;
        double* gw2 = &grad.w2[tr.action * hidden];
        const double* w2 = &net.w2[tr.action * hidden];
        for (std::size_t j = 0; j < hidden; ++j) {
            gw2[j] += dq * act[j];
            if (pre[j] <= 0.0) continue;
            const double dz = dq * w2[j];
            grad.b1[j] += dz;
            for (std::size_t k = 0; k < 3; ++k) grad.w1[j * 3 + k] += dz * tr.state[k];
        }
    }
    return loss / static_cast<double>(batch.size());
}

void zero_rows(QNetwork& grad, std::span<const Transition> batch) {
    std::fill(grad.w1.begin(), grad.w1.end(), 0.0);
    std::fill(grad.b1.begin(), grad.b1.end(), 0.0);
    const auto hidden = static_cast<std::size_t>(grad.hidden);
    for (const auto& tr : batch) {
        if (tr.action >= static_cast<std::size_t>(grad.outputs))
            throw std::out_of_range("transition action outside network outputs");
        std::fill_n(grad.w2.begin() + static_cast<std::ptrdiff_t>(tr.action * hidden), hidden, 0.0);
        grad.b2[tr.action] = 0.0;
    }
}

}  // namespace

double td_loss_gradient(const QNetwork& net, const QNetwork& target,
                        std::span<const Transition> batch, double gamma, QNetwork& grad) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    grad = QNetwork::zeros(net.hidden, net.outputs);
    return accumulate_gradient(net, target, batch, gamma, grad);
}

AdamOptimizer::AdamOptimizer(const QNetwork& shape, double learning_rate, double beta1,
                             double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(shape.parameter_count(), 0.0), v_(shape.parameter_count(), 0.0) {}

QNetwork& AdamOptimizer::scratch(const QNetwork& shape) {
    if (grad_.hidden != shape.hidden || grad_.outputs != shape.outputs)
        grad_ = QNetwork::zeros(shape.hidden, shape.outputs);
    return grad_;
}

void AdamOptimizer::apply(QNetwork& net, const QNetwork& grad) {
    std::vector<std::size_t> all(static_cast<std::size_t>(net.outputs));
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    apply_rows(net, grad, all);
}

void AdamOptimizer::apply_rows(QNetwork& net, const QNetwork& grad,
                               std::span<const std::size_t> rows) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](double* p, const double* g, std::size_t n, std::size_t offset) {
        double* m = &m_[offset];
        double* v = &v_[offset];
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    };
    const auto hidden = static_cast<std::size_t>(net.hidden);
    const std::size_t off_b1 = net.w1.size();
    const std::size_t off_w2 = off_b1 + net.b1.size();
    const std::size_t off_b2 = off_w2 + net.w2.size();
    update(net.w1.data(), grad.w1.data(), net.w1.size(), 0);
    update(net.b1.data(), grad.b1.data(), net.b1.size(), off_b1);
    for (std::size_t a : rows) {
        update(&net.w2[a * hidden], &grad.w2[a * hidden], hidden, off_w2 + a * hidden);
        update(&net.b2[a], &grad.b2[a], 1, off_b2 + a);
    }
}

double train_step(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  const TrainConfig& cfg, AdamOptimizer& opt) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    QNetwork& grad = opt.scratch(net);
    zero_rows(grad, batch);
    const double loss = accumulate_gradient(net, target, batch, cfg.gamma, grad);
    if (!std::isfinite(loss))
        throw TrainingDivergence("divergence: non-finite TD loss (" + std::to_string(loss) + ")");
    // Only output rows of actions in the batch have gradient (lazy Adam).
    std::vector<std::size_t> rows;
    rows.reserve(batch.size());
    for (const auto& tr : batch) rows.push_back(tr.action);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    opt.apply_rows(net, grad, rows);
    // Rows outside the batch were not touched, so checking the stepped ones suffices.
    auto finite = [](const double* p, std::size_t n) {
        return std::all_of(p, p + n, [](double x) { return std::isfinite(x); });
    };
    const auto hidden = static_cast<std::size_t>(net.hidden);
    bool ok = finite(net.w1.data(), net.w1.size()) && finite(net.b1.data(), net.b1.size());
    for (std::size_t a : rows) ok = ok && finite(&net.w2[a * hidden], hidden) && std::isfinite(net.b2[a]);
    if (!ok) throw TrainingDivergence("divergence: non-finite network parameters");
    return loss;
}

// ---------------------------------------------------------------------------
// Acting

std::size_t greedy_action(std::span<const double> q_values) {
    if (q_values.empty()) throw std::invalid_argument("no actions");
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_values.size(); ++a)
        if (q_values[a] > q_values[best]) best = a;
    return best;
}

std::size_t select_action(const QNetwork& net, const StateVec& state, double epsilon,
                          std::mt19937_64& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon outside [0, 1]");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (epsilon > 0.0 && coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(net.outputs) - 1);
        return pick(rng);
    }
    thread_local std::vector<double> pre, act;
    hidden_layer(net, state, pre, act);
    std::size_t best = 0;
    double best_q = output_row(net, act, 0);
    for (std::size_t a = 1; a < static_cast<std::size_t>(net.outputs); ++a) {
        const double q = output_row(net, act, a);
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return best;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("replay capacity must be >= 1");
    data_.reserve(capacity_);
}

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

void ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng, std::vector<Transition>& out) const {
    if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    out.resize(n);
    for (auto& t : out) t = data_[pick(rng)];
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(learning_rate_end > 0.0)) throw std::invalid_argument("learning_rate_end must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
    if (!(epsilon_start > 0.0 && epsilon_start <= 1.0) ||
        !(epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
        throw std::invalid_argument("epsilon schedule must satisfy 0 <= end <= start <= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (replay_capacity < batch_size)
        throw std::invalid_argument("replay_capacity must be >= batch_size");
    if (target_sync < 1 || train_every < 1)
        throw std::invalid_argument("target_sync and train_every must be >= 1");
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
    if (!(reward_scale > 0.0)) throw std::invalid_argument("reward_scale must be > 0");
}

double TrainConfig::learning_rate_at(std::size_t step) const {
    if (learning_rate_decay_steps == 0) return learning_rate;
    if (step >= learning_rate_decay_steps) return learning_rate_end;
    const double frac = static_cast<double>(step) / static_cast<double>(learning_rate_decay_steps);
    return learning_rate + frac * (learning_rate_end - learning_rate);
}

double TrainConfig::epsilon_at(std::size_t step) const {
    if (epsilon_decay_steps == 0 || step >= epsilon_decay_steps) return epsilon_end;
    const double frac = static_cast<double>(step) / static_cast<double>(epsilon_decay_steps);
    return epsilon_start + frac * (epsilon_end - epsilon_start);
}

GridEnv::GridEnv(XrEnv env, ActionGrid grid, StateNormalizer norm)
    : env_(std::move(env)), grid_(std::move(grid)), norm_(norm) {
    if (grid_.slots_per_frame() != env_.system().slots.slots_per_frame)
        throw std::invalid_argument("action grid and slot config disagree on slots per frame");
}

StateVec GridEnv::reset() { return norm_(env_.reset()); }

EnvStep GridEnv::step(std::size_t action) {
    auto res = env_.step(grid_[action]);
    return {res.terminal ? StateVec{} : norm_(res.next_state), res.reward, res.terminal};
}

TrainResult train(const EnvFactory& factory, const TrainConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    std::unique_ptr<Environment> env = factory(0);
    const auto n_actions = env->num_actions();
    TrainResult result;
    result.net = QNetwork::random(cfg.hidden, static_cast<int>(n_actions), rng, cfg.head_init_scale);
    QNetwork target = result.net;
    AdamOptimizer opt(result.net, cfg.learning_rate);
    ReplayBuffer replay(cfg.replay_capacity);
    std::vector<Transition> batch;

    std::size_t step = 0;
    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        if (ep > 0) env = factory(ep);
        if (env->num_actions() != n_actions)
            throw std::invalid_argument("environment action count changed between episodes");
        StateVec s = env->reset();
        double total = 0.0;
        std::size_t n = 0;
        bool terminal = false;
        while (!terminal) {
            const auto a = select_action(result.net, s, cfg.epsilon_at(step), rng);
            const auto r = env->step(a);
            replay.push({s, a, r.reward * cfg.reward_scale, r.next_state, r.terminal});
            total += r.reward;
            ++n;
            ++step;
            terminal = r.terminal;
            s = r.next_state;

            if (replay.size() >= cfg.batch_size && step % cfg.train_every == 0) {
                replay.sample(cfg.batch_size, rng, batch);
                opt.set_learning_rate(cfg.learning_rate_at(step));
                train_step(result.net, target, batch, cfg, opt);
            }
            if (step % cfg.target_sync == 0) target = result.net;
        }
        result.curve.push_back(total / static_cast<double>(n));
    }
    result.steps = step;
    return result;
}

DqnPolicy::DqnPolicy(QNetwork net, ActionGrid grid, StateNormalizer norm)
    : net_(std::move(net)), grid_(std::move(grid)), norm_(norm) {
    if (static_cast<std::size_t>(net_.outputs) != grid_.size())
        throw std::invalid_argument("network outputs do not match the action grid");
}

Action DqnPolicy::decide(const Observation& obs) {
    return grid_[greedy_action(forward(net_, norm_(obs.state)))];
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto& t = ckpt.train;
    json j;
    j["format"] = "xrsim-qnetwork";
    j["version"] = 1;
    j["hidden"] = ckpt.net.hidden;
    j["outputs"] = ckpt.net.outputs;
    j["w1"] = ckpt.net.w1;
    j["b1"] = ckpt.net.b1;
    j["w2"] = ckpt.net.w2;
    j["b2"] = ckpt.net.b2;
    j["alpha_values"] = ckpt.alpha_values;
    j["slots_per_frame"] = ckpt.slots_per_frame;
    j["normalizer"] = {{"ul_mean", ckpt.normalizer.ul_mean},
                       {"dl_mean", ckpt.normalizer.dl_mean},
                       {"gain_reference", ckpt.normalizer.gain_reference},
                       {"db_span", ckpt.normalizer.db_span}};
    j["train"] = {{"learning_rate", t.learning_rate},
                  {"learning_rate_end", t.learning_rate_end},
                  {"learning_rate_decay_steps", t.learning_rate_decay_steps},
                  {"gamma", t.gamma},
                  {"epsilon_start", t.epsilon_start},
                  {"epsilon_end", t.epsilon_end},
                  {"epsilon_decay_steps", t.epsilon_decay_steps},
                  {"replay_capacity", t.replay_capacity},
                  {"batch_size", t.batch_size},
                  {"target_sync", t.target_sync},
                  {"train_every", t.train_every},
                  {"episodes", t.episodes},
                  {"hidden", t.hidden},
                  {"reward_scale", t.reward_scale},
                  {"head_init_scale", t.head_init_scale},
                  {"seed", t.seed}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const json j = json::parse(in);
    if (j.value("format", "") != "xrsim-qnetwork")
        throw std::runtime_error(path.string() + ": not a Q-network checkpoint");

    Checkpoint c;
    c.net = QNetwork::zeros(j.at("hidden").get<int>(), j.at("outputs").get<int>());
    auto fill = [&](const char* key, std::vector<double>& dst) {
        auto v = j.at(key).get<std::vector<double>>();
        if (v.size() != dst.size()) throw std::runtime_error(path.string() + ": bad size for " + key);
        dst = std::move(v);
    };
    fill("w1", c.net.w1);
    fill("b1", c.net.b1);
    fill("w2", c.net.w2);
    fill("b2", c.net.b2);
    c.alpha_values = j.at("alpha_values").get<std::vector<double>>();
    c.slots_per_frame = j.at("slots_per_frame").get<int>();
    const auto& n = j.at("normalizer");
    c.normalizer = {n.at("ul_mean").get<double>(), n.at("dl_mean").get<double>(),
                    n.at("gain_reference").get<double>(), n.at("db_span").get<double>()};
    const auto& t = j.at("train");
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.learning_rate_end = t.at("learning_rate_end").get<double>();
    c.train.learning_rate_decay_steps = t.at("learning_rate_decay_steps").get<std::size_t>();
    c.train.gamma = t.at("gamma").get<double>();
    c.train.epsilon_start = t.at("epsilon_start").get<double>();
    c.train.epsilon_end = t.at("epsilon_end").get<double>();
    c.train.epsilon_decay_steps = t.at("epsilon_decay_steps").get<std::size_t>();
    c.train.replay_capacity = t.at("replay_capacity").get<std::size_t>();
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    c.train.target_sync = t.at("target_sync").get<std::size_t>();
    c.train.train_every = t.at("train_every").get<std::size_t>();
    c.train.episodes = t.at("episodes").get<std::size_t>();
    c.train.hidden = t.at("hidden").get<int>();
    c.train.reward_scale = t.at("reward_scale").get<double>();
    c.train.head_init_scale = t.at("head_init_scale").get<double>();
    c.train.seed = t.at("seed").get<std::uint64_t>();
    if (!c.net.finite()) throw std::runtime_error(path.string() + ": non-finite parameters");
    return c;
}

}  // namespace xrsim
