#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrsim/frame_model.hpp"

namespace xrsim {

struct RewardParams {
    double sigma = 0.7;  // weight on frame loss vs. normalized energy
    double e_max = 1.0;  // J
    int window = 1;      // frames an action is held for

    void validate() const;
};

/// -sigma (fli_ul + fli_dl) - (1 - sigma) e_total / e_max. Never positive.
[[nodiscard]] double reward(const FrameOutcome& outcome, const RewardParams& rp);

/// Upper bound on one frame's energy: every slot at the larger of the UL and DL
/// powers, plus the largest possible DL frame both decoded and rendered locally.
[[nodiscard]] double e_max_default(const SlotConfig& cfg, const HeadsetParams& hp,
                                   const TrafficParams& traffic);

/// What the agent sees at the start of a frame.
struct EnvState {
    double d_ul = 0.0;
    double d_dl = 0.0;
    double h = 0.0;  // gain at the frame's first slot
};

/// Agent observation plus the full-knowledge view oracles are allowed to use.
struct Observation {
    EnvState state;
    FramePair frame;
    std::span<const double> frame_slots;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual Action decide(const Observation& obs) = 0;
};

struct StepResult {
    EnvState next_state;
    double reward = 0.0;                 // summed over the decision window
    std::vector<FrameOutcome> outcomes;  // one per frame in the window
    bool terminal = false;
};

/// Episode over a fixed traffic sequence and channel trace. The trace must hold
/// slots_per_frame gains for every frame. Not thread-safe: one cursor per instance.
class XrEnv {
public:
    XrEnv(SystemParams sys, RewardParams rp, std::vector<FramePair> frames, ChannelTrace trace);

    EnvState reset();
    /// Holds `action` for the configured window (truncated at episode end).
    /// Throws std::logic_error once the episode is exhausted.
    StepResult step(const Action& action);

    [[nodiscard]] bool done() const { return cursor_ >= frames_.size(); }
    [[nodiscard]] std::size_t frame_cursor() const { return cursor_; }
    [[nodiscard]] std::size_t n_frames() const { return frames_.size(); }
    [[nodiscard]] Observation observe() const;
    [[nodiscard]] const SystemParams& system() const { return sys_; }
    [[nodiscard]] const RewardParams& reward_params() const { return rp_; }
    [[nodiscard]] std::span<const double> frame_slots(std::size_t frame) const;

private:
    [[nodiscard]] EnvState state_at(std::size_t frame) const;

    SystemParams sys_;
    RewardParams rp_;
    std::vector<FramePair> frames_;
    ChannelTrace trace_;
    std::size_t cursor_ = 0;
};

struct FrameLogRow {
    std::size_t frame_index = 0;
    Action action;
    FrameOutcome outcome;
    double reward = 0.0;  // per-frame reward
};

struct EpisodeMetrics {
    double flr_ul = 0.0;
    double flr_dl = 0.0;
    double flr_total = 0.0;  // mean of the UL and DL loss rates
    double mean_energy = 0.0;
    double mean_offload_ratio = 0.0;
    double mean_reward = 0.0;
    std::size_t frames = 0;
};

/// Runs `policy` over the whole episode; one row per frame.
std::vector<FrameLogRow> run_episode(XrEnv& env, Policy& policy);

[[nodiscard]] EpisodeMetrics summarize(std::span<const FrameLogRow> log);

void write_episode_log(std::span<const FrameLogRow> log, const std::filesystem::path& path);
/// Reads a log back. Only the logged fields are filled (energy holds e_total only).
[[nodiscard]] std::vector<FrameLogRow> read_episode_log(const std::filesystem::path& path);

}  // namespace xrsim
