#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xrsim/dqn.hpp"
#include "xrsim/environment.hpp"
#include "xrsim/frame_model.hpp"
#include "xrsim/traffic.hpp"

namespace xrsim {

/// How agents are trained across the distance axis of a sweep.
enum class TrainScope {
    Cell,    // one agent per sweep point
    Pooled,  // one agent per (bandwidth, capability, sigma), episodes at random distances
};

struct TrainingSetup {
    TrainConfig dqn;
    std::size_t frames_per_episode = 500;
    TrainScope scope = TrainScope::Cell;
    /// Pooled episodes draw distances with density proportional to d^(p - 1):
    /// 0 is log-uniform, 1 is uniform.
    double distance_exponent = 0.0;
    double reference_distance = 500.0;  // m, anchors the gain normalization
    double db_span = 20.0;
    std::filesystem::path load_from;  // reuse checkpoints found here instead of training
};

struct SweepAxes {
    std::vector<double> distances;
    std::vector<double> bandwidths;
    std::vector<double> loc_capability_scales;
    std::vector<double> sigmas;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> policies;
    std::size_t eval_frames = 500;
    double flr_limit = 0.1;
    double always_threshold = 0.9;
    double never_threshold = 0.1;
};

struct OutputSetup {
    std::filesystem::path directory = "results";
    bool frame_logs = false;
    bool save_checkpoints = false;
};

struct ExperimentConfig {
    SystemParams system;
    TrafficParams traffic;
    RewardParams reward;  // e_max <= 0 means "derive from the max-energy bound"
    std::vector<double> alpha_values{0.0, 0.25, 0.5, 0.75, 1.0};
    TrainingSetup training;
    SweepAxes sweep;
    OutputSetup output;
    int workers = 1;

    /// Defaults for every field, with a 100-700 m distance grid.
    ExperimentConfig();

    void validate() const;
};

/// Known policy names: partial, always, never (DQN agents on the full, alpha=1 and
/// alpha=0 grids) and oracle, oracle_always, oracle_never (greedy full-knowledge).
[[nodiscard]] bool is_known_policy(const std::string& name);
[[nodiscard]] bool is_learning_policy(const std::string& name);

/// Parses JSON text; absent keys keep their defaults, unknown keys are errors.
[[nodiscard]] ExperimentConfig parse_config(const std::string& json_text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
/// Full canonical JSON (every key), stable across runs.
[[nodiscard]] std::string dump_config(const ExperimentConfig& cfg, int indent = 2);
/// FNV-1a over the canonical dump minus output directory and worker count, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);

}  // namespace xrsim
