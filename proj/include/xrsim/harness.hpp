#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xrsim/config.hpp"
#include "xrsim/environment.hpp"

namespace xrsim {

/// A (bandwidth, local capability, sigma) combination; distances and seeds vary inside it.
struct Setting {
    double bandwidth = 0.0;
    double loc_capability_scale = 1.0;
    double sigma = 0.7;

    auto operator<=>(const Setting&) const = default;
};

struct CellKey {
    Setting setting;
    double distance = 0.0;
    std::string policy;
    std::uint64_t seed = 0;

    auto operator<=>(const CellKey&) const = default;
};

struct CellResult {
    CellKey key;
    EpisodeMetrics metrics;
    bool covered = false;
    std::string status = "ok";  // "ok" or "diverged"
};

/// Every seed the run consumed, by stream, so the manifest can show that no
/// evaluation trace was also used for training.
struct SeedAudit {
    std::vector<std::uint64_t> train_seeds;
    std::vector<std::uint64_t> eval_seeds;
    [[nodiscard]] bool disjoint() const;
};

struct SweepOutcome {
    std::vector<CellResult> rows;  // sorted by key
    SeedAudit audit;
    std::size_t agents_trained = 0;
    std::size_t agents_loaded = 0;
};

enum class SweepMode {
    Full,       // train or load, then evaluate
    TrainOnly,  // train and write checkpoints, no evaluation
};

/// Seeds for the frozen evaluation episode at one sweep point.
[[nodiscard]] std::uint64_t eval_traffic_seed(std::uint64_t seed);
[[nodiscard]] std::uint64_t eval_channel_seed(std::uint64_t seed);

/// Full run of the configured sweep. Cells are independent jobs spread over
/// cfg.workers threads; the merged rows do not depend on the worker count.
/// Training divergence marks the affected rows "diverged" and the sweep continues.
[[nodiscard]] SweepOutcome run_sweep(const ExperimentConfig& cfg, SweepMode mode = SweepMode::Full);

[[nodiscard]] std::vector<Setting> settings_of(const ExperimentConfig& cfg);
[[nodiscard]] SystemParams system_for(const ExperimentConfig& cfg, const Setting& s);
[[nodiscard]] RewardParams reward_for(const ExperimentConfig& cfg, const Setting& s);

/// Seed-averaged metrics over the distance grid for one setting and policy.
/// Only "ok" rows contribute. `seed` restricts the average to one seed bundle.
struct PolicyCurve {
    std::vector<double> distances;
    std::vector<double> flr_total;
    std::vector<double> mean_energy;
    std::vector<double> mean_offload_ratio;
    std::vector<double> mean_reward;
    std::vector<std::size_t> samples;
};

[[nodiscard]] PolicyCurve policy_curve(const std::vector<CellResult>& rows, const Setting& setting,
                                       const std::string& policy,
                                       std::optional<std::uint64_t> seed = std::nullopt);

/// Largest grid distance reached from the nearest point without the FLR ever
/// exceeding `flr_limit`. Empty if the nearest point already fails.
[[nodiscard]] std::optional<double> coverage_distance(const std::vector<double>& distances,
                                                      const std::vector<double>& flr_total,
                                                      double flr_limit);

enum class Region { Never, Partial, Always };
[[nodiscard]] const char* region_name(Region r);

struct RegionTable {
    std::vector<double> distances;
    std::vector<Region> labels;
    /// Distances where the label changes, midway between neighbouring grid points.
    std::vector<double> boundaries;
};

[[nodiscard]] RegionTable decision_regions(const std::vector<double>& distances,
                                           const std::vector<double>& mean_offload_ratio,
                                           double always_threshold = 0.9,
                                           double never_threshold = 0.1);

void write_results_csv(const std::vector<CellResult>& rows, const std::filesystem::path& path);
[[nodiscard]] std::vector<CellResult> read_results_csv(const std::filesystem::path& path);

/// Aggregates, coverage distances and region boundaries per setting and policy.
[[nodiscard]] std::string summary_json(const ExperimentConfig& cfg,
                                       const std::vector<CellResult>& rows);
[[nodiscard]] std::string manifest_json(const ExperimentConfig& cfg, const SweepOutcome& outcome,
                                        const std::string& command);

/// results.csv, summary.json and manifest.json under cfg.output.directory.
void write_outputs(const ExperimentConfig& cfg, const SweepOutcome& outcome,
                   const std::string& command);

/// File stem used for checkpoints and frame logs of one agent or cell.
[[nodiscard]] std::string agent_name(const Setting& s, const std::string& policy,
                                     std::uint64_t seed, std::optional<double> distance);

}  // namespace xrsim
