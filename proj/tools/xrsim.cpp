#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrsim/config.hpp"
#include "xrsim/environment.hpp"
#include "xrsim/harness.hpp"

using namespace xrsim;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    int workers = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", c.out, "Output directory (overrides output.directory)");
    cmd->add_option("-s,--seed", c.seeds, "Seed override; repeat for several");
    cmd->add_option("-w,--workers", c.workers, "Worker threads (overrides workers)");
}

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (!c.out.empty()) cfg.output.directory = c.out;
    if (!c.seeds.empty()) cfg.sweep.seeds = c.seeds;
    if (c.workers > 0) cfg.workers = c.workers;
    cfg.validate();
    return cfg;
}

void print_summary(const ExperimentConfig& cfg, const SweepOutcome& o) {
    std::size_t diverged = 0;
    for (const auto& r : o.rows) diverged += r.status != "ok";
    std::printf("%zu rows, %zu agents trained, %zu loaded, %zu diverged -> %s\n", o.rows.size(),
                o.agents_trained, o.agents_loaded, diverged, cfg.output.directory.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"XR headset slot allocation and partial offloading simulator"};
    app.require_subcommand(1);

    Common c_sweep, c_train, c_eval;
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate every policy over the sweep grid");
    add_common(sweep, c_sweep);

    auto* trn = app.add_subcommand("train", "Train agents and write checkpoints only");
    add_common(trn, c_train);

    std::string checkpoints;
    auto* eval = app.add_subcommand("evaluate", "Evaluate previously trained checkpoints");
    add_common(eval, c_eval);
    eval->add_option("--checkpoints", checkpoints, "Directory written by `train`")
        ->required()
        ->check(CLI::ExistingDirectory);

    std::string results_path, region_policy = "partial", regions_config;
    auto* regions = app.add_subcommand("regions", "Offloading decision regions from results.csv");
    regions->add_option("results", results_path, "results.csv")->required()->check(CLI::ExistingFile);
    regions->add_option("-p,--policy", region_policy, "Policy to classify");
    regions->add_option("-c,--config", regions_config, "Config supplying the thresholds")
        ->check(CLI::ExistingFile);

    std::string frame_log;
    double replay_limit = 0.1;
    auto* replay = app.add_subcommand("replay", "Recompute episode metrics from a per-frame log");
    replay->add_option("log", frame_log, "Per-frame CSV")->required()->check(CLI::ExistingFile);
    replay->add_option("--flr-limit", replay_limit, "FLR limit for the covered flag");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            const auto cfg = resolve(c_sweep);
            const auto o = run_sweep(cfg);
            write_outputs(cfg, o, "sweep");
            print_summary(cfg, o);
        } else if (*trn) {
            const auto cfg = resolve(c_train);
            const auto o = run_sweep(cfg, SweepMode::TrainOnly);
            std::filesystem::create_directories(cfg.output.directory);
            std::ofstream(cfg.output.directory / "manifest.json") << manifest_json(cfg, o, "train") << '\n';
            print_summary(cfg, o);
        } else if (*eval) {
            auto cfg = resolve(c_eval);
            cfg.training.load_from = checkpoints;
            const auto o = run_sweep(cfg);
            write_outputs(cfg, o, "evaluate");
            print_summary(cfg, o);
        } else if (*regions) {
            const auto cfg = regions_config.empty() ? ExperimentConfig{} : load_config(regions_config);
            const auto rows = read_results_csv(results_path);
            std::set<Setting> settings;
            for (const auto& r : rows)
                if (r.key.policy == region_policy) settings.insert(r.key.setting);
            if (settings.empty()) throw std::runtime_error("no rows for policy " + region_policy);
            std::printf("bandwidth_hz,loc_capability_scale,sigma,distance_m,mean_offload_ratio,region\n");
            for (const auto& s : settings) {
                const auto curve = policy_curve(rows, s, region_policy);
                const auto t = decision_regions(curve.distances, curve.mean_offload_ratio,
                                                cfg.sweep.always_threshold, cfg.sweep.never_threshold);
                for (std::size_t i = 0; i < t.distances.size(); ++i)
                    std::printf("%g,%g,%g,%g,%.6f,%s\n", s.bandwidth, s.loc_capability_scale, s.sigma,
                                t.distances[i], curve.mean_offload_ratio[i], region_name(t.labels[i]));
                std::fprintf(stderr, "boundaries (m):");
                for (double b : t.boundaries) std::fprintf(stderr, " %g", b);
                std::fprintf(stderr, "\n");
            }
        } else if (*replay) {
            const auto m = summarize(read_episode_log(frame_log));
            nlohmann::json j = {{"frames", m.frames},
                                {"flr_ul", m.flr_ul},
                                {"flr_dl", m.flr_dl},
                                {"flr_total", m.flr_total},
                                {"mean_energy_j", m.mean_energy},
                                {"mean_offload_ratio", m.mean_offload_ratio},
                                {"mean_reward", m.mean_reward},
                                {"covered", m.flr_total <= replay_limit}};
            std::cout << j.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
