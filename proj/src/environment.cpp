#include "xrsim/environment.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "csv_util.hpp"

namespace xrsim {

void RewardParams::validate() const {
    // sigma = 0 makes "allocate nothing" optimal.
    if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("sigma must be in (0, 1]");
    if (!(e_max > 0.0)) throw std::invalid_argument("e_max must be > 0");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
}

double reward(const FrameOutcome& outcome, const RewardParams& rp) {
    return -rp.sigma * (outcome.fli_ul + outcome.fli_dl) -
           (1.0 - rp.sigma) * (outcome.energy.e_total / rp.e_max);
}

double e_max_default(const SlotConfig& cfg, const HeadsetParams& hp, const TrafficParams& traffic) {
    const double slot_power = std::max(hp.p_ul_max, hp.p_dl);
    const double d_max = traffic.max_dl_bits();
    return cfg.slots_per_frame * cfg.slot_time * slot_power + d_max / hp.f_dec * hp.p_dec +
           d_max / hp.effective_f_loc() * hp.p_loc;
}

XrEnv::XrEnv(SystemParams sys, RewardParams rp, std::vector<FramePair> frames, ChannelTrace trace)
    : sys_(std::move(sys)), rp_(rp), frames_(std::move(frames)), trace_(std::move(trace)) {
    sys_.validate();
    rp_.validate();
    if (frames_.empty()) throw std::invalid_argument("episode needs at least one frame");
    const auto need = frames_.size() * static_cast<std::size_t>(sys_.slots.slots_per_frame);
    if (trace_.gains.size() < need) throw std::invalid_argument("trace underrun");
}

EnvState XrEnv::reset() {
    cursor_ = 0;
    return state_at(0);
}

std::span<const double> XrEnv::frame_slots(std::size_t frame) const {
    const auto n = static_cast<std::size_t>(sys_.slots.slots_per_frame);
    return std::span<const double>(trace_.gains).subspan(frame * n, n);
}

EnvState XrEnv::state_at(std::size_t frame) const {
    if (frame >= frames_.size()) return {};
    return {frames_[frame].d_ul, frames_[frame].d_dl, frame_slots(frame).front()};
}

Observation XrEnv::observe() const {
    if (done()) throw std::logic_error("episode exhausted");
    return {state_at(cursor_), frames_[cursor_], frame_slots(cursor_)};
}

StepResult XrEnv::step(const Action& action) {
    if (done()) throw std::logic_error("episode exhausted");
    validate_action(action, sys_.slots);

    StepResult res;
    const auto end = std::min(frames_.size(), cursor_ + static_cast<std::size_t>(rp_.window));
    for (; cursor_ < end; ++cursor_) {
        auto outcome = simulate_frame(frames_[cursor_], action, frame_slots(cursor_), sys_);
        res.reward += reward(outcome, rp_);
        res.outcomes.push_back(outcome);
    }
    res.terminal = done();
    res.next_state = state_at(cursor_);
    return res;
}

std::vector<FrameLogRow> run_episode(XrEnv& env, Policy& policy) {
    std::vector<FrameLogRow> log;
    log.reserve(env.n_frames());
    env.reset();
    while (!env.done()) {
        const auto first = env.frame_cursor();
        const Action action = policy.decide(env.observe());
        const auto res = env.step(action);
        for (std::size_t i = 0; i < res.outcomes.size(); ++i)
            log.push_back({first + i, action, res.outcomes[i],
                           reward(res.outcomes[i], env.reward_params())});
    }
    return log;
}

EpisodeMetrics summarize(std::span<const FrameLogRow> log) {
    EpisodeMetrics m;
    if (log.empty()) return m;
    for (const auto& row : log) {
        m.flr_ul += row.outcome.fli_ul;
        m.flr_dl += row.outcome.fli_dl;
        m.mean_energy += row.outcome.energy.e_total;
        m.mean_offload_ratio += row.action.alpha;
        m.mean_reward += row.reward;
    }
    const auto n = static_cast<double>(log.size());
    m.frames = log.size();
    m.flr_ul /= n;
    m.flr_dl /= n;
    m.flr_total = 0.5 * (m.flr_ul + m.flr_dl);
    m.mean_energy /= n;
    m.mean_offload_ratio /= n;
    m.mean_reward /= n;
    return m;
}

void write_episode_log(std::span<const FrameLogRow> log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "frame_index,n_ul,n_dl,alpha,fli_ul,fli_dl,e_total,reward\n";
    for (const auto& r : log) {
        out << r.frame_index << ',' << r.action.n_ul << ',' << r.action.n_dl << ','
            << detail::format_double(r.action.alpha) << ',' << r.outcome.fli_ul << ','
            << r.outcome.fli_dl << ',' << detail::format_double(r.outcome.energy.e_total) << ','
            << detail::format_double(r.reward) << '\n';
    }
}

std::vector<FrameLogRow> read_episode_log(const std::filesystem::path& path) {
    const auto rows = detail::read_numeric_csv(
        path, {"frame_index", "n_ul", "n_dl", "alpha", "fli_ul", "fli_dl", "e_total", "reward"});
    std::vector<FrameLogRow> log;
    log.reserve(rows.size());
    for (const auto& f : rows) {
        FrameLogRow r;
        r.frame_index = static_cast<std::size_t>(f[0]);
        r.action = {static_cast<int>(f[1]), static_cast<int>(f[2]), f[3]};
        r.outcome.fli_ul = static_cast<int>(f[4]);
        r.outcome.fli_dl = static_cast<int>(f[5]);
        r.outcome.energy.e_total = f[6];
        r.reward = f[7];
        log.push_back(r);
    }
    return log;
}

}  // namespace xrsim
