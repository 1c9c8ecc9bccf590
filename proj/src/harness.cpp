#include "xrsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "csv_util.hpp"
#include "json.hpp"
#include "xrsim/dqn.hpp"
#include "xrsim/policies.hpp"
#include "xrsim/seeding.hpp"

namespace xrsim {

using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
const std::vector<std::string> kResultColumns = {
    "distance_m", "bandwidth_hz", "loc_capability_scale", "sigma", "policy", "seed",
    "flr_ul", "flr_dl", "flr_total", "mean_energy_j", "mean_offload_ratio", "mean_reward",
    "covered", "status"};

std::uint64_t train_traffic_seed(std::uint64_t seed, std::size_t ep) {
    return derive_seed(seed, "train-traffic", ep);
}
std::uint64_t train_channel_seed(std::uint64_t seed, std::size_t ep) {
    return derive_seed(seed, "train-channel", ep);
}
std::uint64_t train_distance_seed(std::uint64_t seed, std::size_t ep) {
    return derive_seed(seed, "train-distance", ep);
}

ActionGrid grid_for(const ExperimentConfig& cfg, const std::string& policy) {
    ActionGrid full(cfg.alpha_values, cfg.system.slots.slots_per_frame);
    if (policy == "always" || policy == "oracle_always") return always_offload_grid(full);
    if (policy == "never" || policy == "oracle_never") return never_offload_grid(full);
    return full;
}

StateNormalizer normalizer_for(const ExperimentConfig& cfg) {
    return {cfg.traffic.mean_ul_bits(), cfg.traffic.mean_dl_bits(),
            mean_large_scale_gain(cfg.training.reference_distance, cfg.system.radio),
            cfg.training.db_span};
}

// One unit of work: a trained (or oracle) agent and the distances it is evaluated at.
struct Job {
    Setting setting;
    std::uint64_t seed = 0;
    std::string policy;
    std::optional<double> train_distance;  // cell scope; empty when pooled
    std::vector<double> eval_distances;
};

struct JobOutput {
    std::vector<CellResult> rows;
    std::vector<std::uint64_t> train_seeds;
    bool trained = false;
    bool loaded = false;
};

std::vector<Job> plan_jobs(const ExperimentConfig& cfg) {
    std::vector<Job> jobs;
    const auto& sw = cfg.sweep;
    for (const auto& setting : settings_of(cfg))
        for (auto seed : sw.seeds)
            for (const auto& policy : sw.policies) {
                const bool pooled =
                    is_learning_policy(policy) && cfg.training.scope == TrainScope::Pooled;
                if (pooled) {
                    jobs.push_back({setting, seed, policy, std::nullopt, sw.distances});
                    continue;
                }
                for (double d : sw.distances)
                    jobs.push_back({setting, seed, policy,
                                    is_learning_policy(policy) ? std::optional<double>(d)
                                                               : std::nullopt,
                                    {d}});
            }
    return jobs;
}

EnvFactory training_factory(const ExperimentConfig& cfg, const Job& job, const SystemParams& sys,
                            const RewardParams& rp, const ActionGrid& grid,
                            const StateNormalizer& norm) {
    const auto n_frames = cfg.training.frames_per_episode;
    const auto n_slots = n_frames * static_cast<std::size_t>(sys.slots.slots_per_frame);
    const double d_lo = std::max(10.0, 0.7 * cfg.sweep.distances.front());
    const double d_hi = cfg.sweep.distances.back();
    return [&cfg, job, sys, rp, grid, norm, n_frames, n_slots, d_lo,
            d_hi](std::size_t ep) -> std::unique_ptr<Environment> {
        double distance;
        if (job.train_distance) {
            distance = *job.train_distance;
        } else {
            // Inverse CDF of a density proportional to d^(p - 1) on [d_lo, d_hi]. Small p
            // keeps the near end of the grid from being starved of samples.
            std::mt19937_64 rng(train_distance_seed(job.seed, ep));
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const double p = cfg.training.distance_exponent;
            if (p == 0.0) {
                distance = d_lo * std::exp(u * std::log(d_hi / d_lo));
            } else {
                const double lo = std::pow(d_lo, p), hi = std::pow(d_hi, p);
                distance = std::pow(lo + u * (hi - lo), 1.0 / p);
            }
        }
        auto frames = generate_frames(cfg.traffic, n_frames, train_traffic_seed(job.seed, ep));
        auto trace = generate_trace(distance, n_slots, sys.radio, train_channel_seed(job.seed, ep),
                                    sys.slots.slot_time);
        return std::make_unique<GridEnv>(XrEnv(sys, rp, std::move(frames), std::move(trace)), grid,
                                         norm);
    };
}

CellResult evaluate_cell(const ExperimentConfig& cfg, const Job& job, double distance,
                         Policy& policy, const SystemParams& sys, const RewardParams& rp) {
    const auto n = cfg.sweep.eval_frames;
    auto frames = generate_frames(cfg.traffic, n, eval_traffic_seed(job.seed));
    auto trace = generate_trace(distance, n * static_cast<std::size_t>(sys.slots.slots_per_frame),
                                sys.radio, eval_channel_seed(job.seed), sys.slots.slot_time);
    XrEnv env(sys, rp, std::move(frames), std::move(trace));
    const auto log = run_episode(env, policy);

    if (cfg.output.frame_logs)
        write_episode_log(log, cfg.output.directory / "frames" /
                                   (agent_name(job.setting, job.policy, job.seed, distance) + ".csv"));

    CellResult row;
    row.key = {job.setting, distance, job.policy, job.seed};
    row.metrics = summarize(log);
    row.covered = row.metrics.flr_total <= cfg.sweep.flr_limit;
    return row;
}

JobOutput run_job(const ExperimentConfig& cfg, const Job& job, SweepMode mode) {
    JobOutput out;
    const auto sys = system_for(cfg, job.setting);
    const auto rp = reward_for(cfg, job.setting);
    const auto grid = grid_for(cfg, job.policy);

    if (!is_learning_policy(job.policy)) {
        if (mode == SweepMode::TrainOnly) return out;
        OraclePolicy oracle(grid, sys, rp);
        for (double d : job.eval_distances) out.rows.push_back(evaluate_cell(cfg, job, d, oracle, sys, rp));
        return out;
    }

    const auto norm = normalizer_for(cfg);
    const auto name = agent_name(job.setting, job.policy, job.seed, job.train_distance);
    QNetwork net;
    if (!cfg.training.load_from.empty()) {
        const auto path = cfg.training.load_from / (name + ".json");
        if (!std::filesystem::exists(path))
            throw std::runtime_error("missing checkpoint " + path.string());
        auto ck = load_checkpoint(path);
        if (static_cast<std::size_t>(ck.net.outputs) != grid.size())
            throw std::runtime_error(path.string() + ": action grid does not match the config");
        net = std::move(ck.net);
        out.loaded = true;
    } else {
        TrainConfig tc = cfg.training.dqn;
        tc.seed = derive_seed(job.seed, "agent");
        for (std::size_t ep = 0; ep < tc.episodes; ++ep) {
            out.train_seeds.push_back(train_traffic_seed(job.seed, ep));
            out.train_seeds.push_back(train_channel_seed(job.seed, ep));
        }
        try {
            net = train(training_factory(cfg, job, sys, rp, grid, norm), tc).net;
        } catch (const TrainingDivergence&) {
            if (mode == SweepMode::TrainOnly) throw;
            for (double d : job.eval_distances) {
                CellResult row;
                row.key = {job.setting, d, job.policy, job.seed};
                const double nan = std::numeric_limits<double>::quiet_NaN();
                row.metrics = {nan, nan, nan, nan, nan, nan, 0};
                row.status = "diverged";
                out.rows.push_back(row);
            }
            return out;
        }
        out.trained = true;
        if (cfg.output.save_checkpoints || mode == SweepMode::TrainOnly)
            save_checkpoint({net, tc, norm,
                             std::vector<double>(grid.alpha_values().begin(), grid.alpha_values().end()),
                             grid.slots_per_frame()},
                            cfg.output.directory / "checkpoints" / (name + ".json"));
    }
    if (mode == SweepMode::TrainOnly) return out;

    DqnPolicy policy(std::move(net), grid, norm);
    for (double d : job.eval_distances) out.rows.push_back(evaluate_cell(cfg, job, d, policy, sys, rp));
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json array_or_null(const std::vector<double>& xs) {
    json a = json::array();
    for (double v : xs) a.push_back(number_or_null(v));
    return a;
}

}  // namespace

bool SeedAudit::disjoint() const {
    std::set<std::uint64_t> train(train_seeds.begin(), train_seeds.end());
    return std::none_of(eval_seeds.begin(), eval_seeds.end(),
                        [&](auto s) { return train.count(s) > 0; });
}

std::uint64_t eval_traffic_seed(std::uint64_t seed) { return derive_seed(seed, "eval-traffic"); }
std::uint64_t eval_channel_seed(std::uint64_t seed) { return derive_seed(seed, "eval-channel"); }

std::vector<Setting> settings_of(const ExperimentConfig& cfg) {
    std::vector<Setting> out;
    for (double b : cfg.sweep.bandwidths)
        for (double k : cfg.sweep.loc_capability_scales)
            for (double s : cfg.sweep.sigmas) out.push_back({b, k, s});
    return out;
}

SystemParams system_for(const ExperimentConfig& cfg, const Setting& s) {
    SystemParams sys = cfg.system;
    sys.radio.bandwidth = s.bandwidth;
    sys.headset.loc_capability_scale = s.loc_capability_scale;
    return sys;
}

RewardParams reward_for(const ExperimentConfig& cfg, const Setting& s) {
    RewardParams rp = cfg.reward;
    rp.sigma = s.sigma;
    if (rp.e_max <= 0.0)
        rp.e_max = e_max_default(cfg.system.slots, system_for(cfg, s).headset, cfg.traffic);
    return rp;
}

std::string agent_name(const Setting& s, const std::string& policy, std::uint64_t seed,
                       std::optional<double> distance) {
    std::string name = "bw" + detail::format_double(s.bandwidth) + "_k" +
                       detail::format_double(s.loc_capability_scale) + "_s" +
                       detail::format_double(s.sigma);
    if (distance) name += "_d" + detail::format_double(*distance);
    return name + "_" + policy + "_seed" + std::to_string(seed);
}

SweepOutcome run_sweep(const ExperimentConfig& cfg, SweepMode mode) {
    cfg.validate();
    const auto jobs = plan_jobs(cfg);
    if (cfg.output.frame_logs && mode == SweepMode::Full)
        std::filesystem::create_directories(cfg.output.directory / "frames");
    if (cfg.output.save_checkpoints || mode == SweepMode::TrainOnly)
        std::filesystem::create_directories(cfg.output.directory / "checkpoints");

    std::vector<JobOutput> outputs(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            try {
                outputs[i] = run_job(cfg, jobs[i], mode);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    SweepOutcome outcome;
    for (auto& o : outputs) {
        outcome.rows.insert(outcome.rows.end(), o.rows.begin(), o.rows.end());
        outcome.audit.train_seeds.insert(outcome.audit.train_seeds.end(), o.train_seeds.begin(),
                                         o.train_seeds.end());
        outcome.agents_trained += o.trained;
        outcome.agents_loaded += o.loaded;
    }
    std::sort(outcome.rows.begin(), outcome.rows.end(),
              [](const auto& a, const auto& b) { return a.key < b.key; });

    auto& a = outcome.audit;
    for (auto seed : cfg.sweep.seeds) {
        a.eval_seeds.push_back(eval_traffic_seed(seed));
        a.eval_seeds.push_back(eval_channel_seed(seed));
    }
    for (auto* v : {&a.train_seeds, &a.eval_seeds}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    return outcome;
}

PolicyCurve policy_curve(const std::vector<CellResult>& rows, const Setting& setting,
                         const std::string& policy, std::optional<std::uint64_t> seed) {
    std::map<double, std::vector<const EpisodeMetrics*>> by_distance;
    for (const auto& r : rows) {
        if (r.key.setting != setting || r.key.policy != policy) continue;
        if (seed && r.key.seed != *seed) continue;
        auto& bucket = by_distance[r.key.distance];
        if (r.status == "ok") bucket.push_back(&r.metrics);
    }
    PolicyCurve c;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [d, ms] : by_distance) {
        c.distances.push_back(d);
        c.samples.push_back(ms.size());
        double flr = 0, e = 0, a = 0, r = 0;
        for (const auto* m : ms) {
            flr += m->flr_total;
            e += m->mean_energy;
            a += m->mean_offload_ratio;
            r += m->mean_reward;
        }
        const double n = static_cast<double>(ms.size());
        c.flr_total.push_back(ms.empty() ? nan : flr / n);
        c.mean_energy.push_back(ms.empty() ? nan : e / n);
        c.mean_offload_ratio.push_back(ms.empty() ? nan : a / n);
        c.mean_reward.push_back(ms.empty() ? nan : r / n);
    }
    return c;
}

std::optional<double> coverage_distance(const std::vector<double>& distances,
                                        const std::vector<double>& flr_total, double flr_limit) {
    if (distances.size() != flr_total.size())
        throw std::invalid_argument("distance and FLR series differ in length");
    if (!std::is_sorted(distances.begin(), distances.end()))
        throw std::invalid_argument("distances must be increasing");
    std::optional<double> reach;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (!(flr_total[i] <= flr_limit)) break;  // NaN also stops the walk
        reach = distances[i];
    }
    return reach;
}

const char* region_name(Region r) {
    switch (r) {
        case Region::Never: return "never";
        case Region::Partial: return "partial";
        case Region::Always: return "always";
    }
    return "?";
}

RegionTable decision_regions(const std::vector<double>& distances,
                             const std::vector<double>& mean_offload_ratio,
                             double always_threshold, double never_threshold) {
    if (distances.size() != mean_offload_ratio.size())
        throw std::invalid_argument("distance and offload series differ in length");
    RegionTable t;
    t.distances = distances;
    for (double a : mean_offload_ratio) {
        if (a >= always_threshold) t.labels.push_back(Region::Always);
        else if (a <= never_threshold) t.labels.push_back(Region::Never);
        else t.labels.push_back(Region::Partial);
    }
    for (std::size_t i = 1; i < t.labels.size(); ++i)
        if (t.labels[i] != t.labels[i - 1])
            t.boundaries.push_back(0.5 * (distances[i - 1] + distances[i]));
    return t;
}

void write_results_csv(const std::vector<CellResult>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < kResultColumns.size(); ++i)
        out << (i ? "," : "") << kResultColumns[i];
    out << '\n';
    using detail::format_double;
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out << format_double(r.key.distance) << ',' << format_double(r.key.setting.bandwidth) << ','
            << format_double(r.key.setting.loc_capability_scale) << ','
            << format_double(r.key.setting.sigma) << ',' << r.key.policy << ',' << r.key.seed << ','
            << format_double(m.flr_ul) << ',' << format_double(m.flr_dl) << ','
            << format_double(m.flr_total) << ',' << format_double(m.mean_energy) << ','
            << format_double(m.mean_offload_ratio) << ',' << format_double(m.mean_reward) << ','
            << (r.covered ? 1 : 0) << ',' << r.status << '\n';
    }
}

std::vector<CellResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    const auto header = detail::split_row(line);
    if (header.size() != kResultColumns.size() ||
        !std::equal(header.begin(), header.end(), kResultColumns.begin()))
        throw std::runtime_error(path.string() + ": unexpected header");

    std::vector<CellResult> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_row(line);
        if (f.size() != kResultColumns.size())
            throw std::runtime_error(path.string() + ": wrong field count in '" + line + "'");
        CellResult r;
        auto num = [&](std::size_t i) { return detail::parse_double(f[i]); };
        r.key.distance = num(0);
        r.key.setting = {num(1), num(2), num(3)};
        r.key.policy = std::string(f[4]);
        r.key.seed = std::stoull(std::string(f[5]));
        r.metrics.flr_ul = num(6);
        r.metrics.flr_dl = num(7);
        r.metrics.flr_total = num(8);
        r.metrics.mean_energy = num(9);
        r.metrics.mean_offload_ratio = num(10);
        r.metrics.mean_reward = num(11);
        r.covered = f[12] == "1";
        r.status = std::string(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string summary_json(const ExperimentConfig& cfg, const std::vector<CellResult>& rows) {
    const auto& sw = cfg.sweep;
    std::set<std::string> present;
    for (const auto& r : rows) present.insert(r.key.policy);

    json j;
    j["config_hash"] = config_hash(cfg);
    j["flr_limit"] = sw.flr_limit;
    j["settings"] = json::array();
    for (const auto& s : settings_of(cfg)) {
        json js = {{"bandwidth_hz", s.bandwidth},
                   {"loc_capability_scale", s.loc_capability_scale},
                   {"sigma", s.sigma}};
        std::map<std::string, PolicyCurve> curves;
        for (const auto& p : sw.policies) {
            if (!present.count(p)) continue;
            const auto c = policy_curve(rows, s, p);
            curves[p] = c;
            const auto cov = coverage_distance(c.distances, c.flr_total, sw.flr_limit);
            const auto reg = decision_regions(c.distances, c.mean_offload_ratio, sw.always_threshold,
                                              sw.never_threshold);
            json labels = json::array();
            for (auto l : reg.labels) labels.push_back(region_name(l));
            js["policies"][p] = {
                {"distances_m", c.distances},
                {"flr_total", array_or_null(c.flr_total)},
                {"mean_energy_j", array_or_null(c.mean_energy)},
                {"mean_offload_ratio", array_or_null(c.mean_offload_ratio)},
                {"mean_reward", array_or_null(c.mean_reward)},
                {"samples", c.samples},
                {"coverage_distance_m", cov ? json(*cov) : json("below minimum grid point")},
                {"regions", {{"labels", labels}, {"boundaries_m", reg.boundaries}}}};
        }
        // Energy saving of partial offloading where both it and never-offload meet the FLR limit.
        if (curves.count("partial") && curves.count("never")) {
            const auto& p = curves["partial"];
            const auto& n = curves["never"];
            double best = -std::numeric_limits<double>::infinity();
            json at = nullptr;
            for (std::size_t i = 0; i < p.distances.size() && i < n.distances.size(); ++i) {
                if (!(p.flr_total[i] <= sw.flr_limit && n.flr_total[i] <= sw.flr_limit)) continue;
                const double saving = (n.mean_energy[i] - p.mean_energy[i]) / n.mean_energy[i];
                if (saving > best) {
                    best = saving;
                    at = p.distances[i];
                }
            }
            js["partial_vs_never"] = {{"max_energy_saving", at.is_null() ? json(nullptr) : json(best)},
                                      {"at_distance_m", at}};
        }
        j["settings"].push_back(js);
    }
    return j.dump(2);
}

std::string manifest_json(const ExperimentConfig& cfg, const SweepOutcome& outcome,
                          const std::string& command) {
    json j;
    j["tool"] = "xrsim";
    j["version"] = kVersion;
    j["compiler"] = __VERSION__;
    j["command"] = command;
    j["config_hash"] = config_hash(cfg);
    j["seeds"] = cfg.sweep.seeds;
    j["seed_streams"] = {{"train", {"train-traffic", "train-channel", "train-distance", "agent"}},
                         {"eval", {"eval-traffic", "eval-channel"}}};
    j["train_seed_count"] = outcome.audit.train_seeds.size();
    j["eval_seed_count"] = outcome.audit.eval_seeds.size();
    j["eval_train_disjoint"] = outcome.audit.disjoint();
    j["agents_trained"] = outcome.agents_trained;
    j["agents_loaded"] = outcome.agents_loaded;
    j["rows"] = outcome.rows.size();
    std::size_t diverged = 0;
    for (const auto& r : outcome.rows) diverged += r.status != "ok";
    j["diverged_rows"] = diverged;
    j["config"] = json::parse(dump_config(cfg));
    return j.dump(2);
}

void write_outputs(const ExperimentConfig& cfg, const SweepOutcome& outcome,
                   const std::string& command) {
    const auto& dir = cfg.output.directory;
    std::filesystem::create_directories(dir);
    write_results_csv(outcome.rows, dir / "results.csv");
    auto write_text = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << text << '\n';
    };
    write_text("summary.json", summary_json(cfg, outcome.rows));
    write_text("manifest.json", manifest_json(cfg, outcome, command));
}

}  // namespace xrsim
