#include "xrsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "xrsim/seeding.hpp"

namespace xrsim {

using json = nlohmann::json;

namespace {

const std::vector<std::string> kPolicies = {"partial", "always", "never",
                                            "oracle", "oracle_always", "oracle_never"};

// Reads object members into fields, rejecting keys nobody consumed.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) throw std::invalid_argument(where_ + ": unknown key '" + k + "'");
    }
    template <typename T>
    void operator()(const char* key, T& field) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            field = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(where_ + "." + key + ": " + e.what());
        }
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

const char* scope_name(TrainScope s) { return s == TrainScope::Cell ? "cell" : "pooled"; }

const char* rule_name(DlPayloadRule r) {
    return r == DlPayloadRule::EdgePortion ? "edge_portion" : "full_frame";
}

json to_json(const ExperimentConfig& c) {
    const auto& r = c.system.radio;
    const auto& h = c.system.headset;
    const auto& s = c.system.slots;
    const auto& t = c.training.dqn;
    json j;
    j["radio"] = {{"carrier_frequency", r.carrier_frequency},
                  {"bandwidth", r.bandwidth},
                  {"bs_height", r.bs_height},
                  {"ue_height", r.ue_height},
                  {"bs_tx_power_density", r.bs_tx_power_density},
                  {"noise_figure", r.noise_figure},
                  {"thermal_noise_density", r.thermal_noise_density},
                  {"bs_array_elements", r.bs_array_elements},
                  {"ue_array_elements", r.ue_array_elements},
                  {"ue_speed", r.ue_speed},
                  {"shadowing_sigma", r.shadowing_sigma},
                  {"fading_paths", r.fading_paths},
                  {"sinusoids_per_path", r.sinusoids_per_path}};
    j["headset"] = {{"p_loc", h.p_loc},       {"p_dec", h.p_dec},   {"p_ul_max", h.p_ul_max},
                    {"p_dl", h.p_dl},         {"p_idle", h.p_idle}, {"f_loc", h.f_loc},
                    {"f_dec", h.f_dec},       {"f_edge", h.f_edge}, {"f_enc", h.f_enc},
                    {"loc_capability_scale", h.loc_capability_scale}};
    j["slots"] = {{"slot_time", s.slot_time},
                  {"slots_per_frame", s.slots_per_frame},
                  {"latency_threshold", s.latency_threshold}};
    j["model"] = {{"beta_grid", c.system.beta_grid}, {"dl_payload_rule", rule_name(c.system.dl_rule)}};
    j["traffic"] = {{"dl_rate", c.traffic.dl_rate},
                    {"ul_rate", c.traffic.ul_rate},
                    {"fps", c.traffic.fps},
                    {"std_fraction", c.traffic.std_fraction},
                    {"low_fraction", c.traffic.low_fraction},
                    {"high_fraction", c.traffic.high_fraction}};
    j["reward"] = {{"sigma", c.reward.sigma}, {"e_max", c.reward.e_max}, {"window", c.reward.window}};
    j["alpha_values"] = c.alpha_values;
    j["training"] = {{"learning_rate", t.learning_rate},
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
                     {"frames_per_episode", c.training.frames_per_episode},
                     {"scope", scope_name(c.training.scope)},
                     {"distance_exponent", c.training.distance_exponent},
                     {"reference_distance", c.training.reference_distance},
                     {"db_span", c.training.db_span},
                     {"load_from", c.training.load_from.string()}};
    j["sweep"] = {{"distances", c.sweep.distances},
                  {"bandwidths", c.sweep.bandwidths},
                  {"loc_capability_scales", c.sweep.loc_capability_scales},
                  {"sigmas", c.sweep.sigmas},
                  {"seeds", c.sweep.seeds},
                  {"policies", c.sweep.policies},
                  {"eval_frames", c.sweep.eval_frames},
                  {"flr_limit", c.sweep.flr_limit},
                  {"always_threshold", c.sweep.always_threshold},
                  {"never_threshold", c.sweep.never_threshold}};
    j["output"] = {{"directory", c.output.directory.string()},
                   {"frame_logs", c.output.frame_logs},
                   {"save_checkpoints", c.output.save_checkpoints}};
    j["workers"] = c.workers;
    return j;
}

void from_json_into(const json& j, ExperimentConfig& c) {
    Reader top(j, "config");
    if (const auto* n = top.child("radio")) {
        Reader rd(*n, "radio");
        auto& r = c.system.radio;
        rd("carrier_frequency", r.carrier_frequency);
        rd("bandwidth", r.bandwidth);
        rd("bs_height", r.bs_height);
        rd("ue_height", r.ue_height);
        rd("bs_tx_power_density", r.bs_tx_power_density);
        rd("noise_figure", r.noise_figure);
        rd("thermal_noise_density", r.thermal_noise_density);
        rd("bs_array_elements", r.bs_array_elements);
        rd("ue_array_elements", r.ue_array_elements);
        rd("ue_speed", r.ue_speed);
        rd("shadowing_sigma", r.shadowing_sigma);
        rd("fading_paths", r.fading_paths);
        rd("sinusoids_per_path", r.sinusoids_per_path);
    }
    if (const auto* n = top.child("headset")) {
        Reader rd(*n, "headset");
        auto& h = c.system.headset;
        rd("p_loc", h.p_loc);
        rd("p_dec", h.p_dec);
        rd("p_ul_max", h.p_ul_max);
        rd("p_dl", h.p_dl);
        rd("p_idle", h.p_idle);
        rd("f_loc", h.f_loc);
        rd("f_dec", h.f_dec);
        rd("f_edge", h.f_edge);
        rd("f_enc", h.f_enc);
        rd("loc_capability_scale", h.loc_capability_scale);
    }
    if (const auto* n = top.child("slots")) {
        Reader rd(*n, "slots");
        rd("slot_time", c.system.slots.slot_time);
        rd("slots_per_frame", c.system.slots.slots_per_frame);
        rd("latency_threshold", c.system.slots.latency_threshold);
    }
    if (const auto* n = top.child("model")) {
        Reader rd(*n, "model");
        rd("beta_grid", c.system.beta_grid);
        std::string rule = rule_name(c.system.dl_rule);
        rd("dl_payload_rule", rule);
        if (rule == "edge_portion") c.system.dl_rule = DlPayloadRule::EdgePortion;
        else if (rule == "full_frame") c.system.dl_rule = DlPayloadRule::FullFrame;
        else throw std::invalid_argument("model.dl_payload_rule: expected edge_portion or full_frame");
    }
    if (const auto* n = top.child("traffic")) {
        Reader rd(*n, "traffic");
        rd("dl_rate", c.traffic.dl_rate);
        rd("ul_rate", c.traffic.ul_rate);
        rd("fps", c.traffic.fps);
        rd("std_fraction", c.traffic.std_fraction);
        rd("low_fraction", c.traffic.low_fraction);
        rd("high_fraction", c.traffic.high_fraction);
    }
    if (const auto* n = top.child("reward")) {
        Reader rd(*n, "reward");
        rd("sigma", c.reward.sigma);
        rd("e_max", c.reward.e_max);
        rd("window", c.reward.window);
    }
    top("alpha_values", c.alpha_values);
    if (const auto* n = top.child("training")) {
        Reader rd(*n, "training");
        auto& t = c.training.dqn;
        rd("learning_rate", t.learning_rate);
        rd("learning_rate_end", t.learning_rate_end);
        rd("learning_rate_decay_steps", t.learning_rate_decay_steps);
        rd("gamma", t.gamma);
        rd("epsilon_start", t.epsilon_start);
        rd("epsilon_end", t.epsilon_end);
        rd("epsilon_decay_steps", t.epsilon_decay_steps);
        rd("replay_capacity", t.replay_capacity);
        rd("batch_size", t.batch_size);
        rd("target_sync", t.target_sync);
        rd("train_every", t.train_every);
        rd("episodes", t.episodes);
        rd("hidden", t.hidden);
        rd("reward_scale", t.reward_scale);
        rd("head_init_scale", t.head_init_scale);
        rd("frames_per_episode", c.training.frames_per_episode);
        std::string scope = scope_name(c.training.scope);
        rd("scope", scope);
        if (scope == "cell") c.training.scope = TrainScope::Cell;
        else if (scope == "pooled") c.training.scope = TrainScope::Pooled;
        else throw std::invalid_argument("training.scope: expected cell or pooled");
        rd("distance_exponent", c.training.distance_exponent);
        rd("reference_distance", c.training.reference_distance);
        rd("db_span", c.training.db_span);
        std::string load_from = c.training.load_from.string();
        rd("load_from", load_from);
        c.training.load_from = load_from;
    }
    if (const auto* n = top.child("sweep")) {
        Reader rd(*n, "sweep");
        rd("distances", c.sweep.distances);
        rd("bandwidths", c.sweep.bandwidths);
        rd("loc_capability_scales", c.sweep.loc_capability_scales);
        rd("sigmas", c.sweep.sigmas);
        rd("seeds", c.sweep.seeds);
        rd("policies", c.sweep.policies);
        rd("eval_frames", c.sweep.eval_frames);
        rd("flr_limit", c.sweep.flr_limit);
        rd("always_threshold", c.sweep.always_threshold);
        rd("never_threshold", c.sweep.never_threshold);
    }
    if (const auto* n = top.child("output")) {
        Reader rd(*n, "output");
        std::string dir = c.output.directory.string();
        rd("directory", dir);
        c.output.directory = dir;
        rd("frame_logs", c.output.frame_logs);
        rd("save_checkpoints", c.output.save_checkpoints);
    }
    top("workers", c.workers);
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    for (double d = 100.0; d <= 700.0; d += 50.0) sweep.distances.push_back(d);
    sweep.bandwidths = {system.radio.bandwidth};
    sweep.loc_capability_scales = {1.0};
    sweep.sigmas = {reward.sigma};
    sweep.seeds = {1, 2, 3};
    sweep.policies = {"partial", "always", "never"};
    reward.e_max = 0.0;
}

bool is_known_policy(const std::string& name) {
    return std::find(kPolicies.begin(), kPolicies.end(), name) != kPolicies.end();
}

bool is_learning_policy(const std::string& name) {
    return name == "partial" || name == "always" || name == "never";
}

void ExperimentConfig::validate() const {
    system.validate();
    traffic.validate();
    RewardParams r = reward;
    if (r.e_max <= 0.0) r.e_max = 1.0;  // derived later
    r.validate();
    training.dqn.validate();
    ActionGrid grid(alpha_values, system.slots.slots_per_frame);
    if (!grid.spans_offload_extremes())
        throw std::invalid_argument("alpha_values must include 0 and 1");
    if (training.frames_per_episode < 1)
        throw std::invalid_argument("training.frames_per_episode must be >= 1");
    if (!(training.reference_distance >= 10.0) || !(training.db_span > 0.0))
        throw std::invalid_argument("training normalization parameters out of range");
    if (!std::isfinite(training.distance_exponent))
        throw std::invalid_argument("training.distance_exponent must be finite");

    const auto& s = sweep;
    if (s.distances.empty() || s.bandwidths.empty() || s.loc_capability_scales.empty() ||
        s.sigmas.empty() || s.seeds.empty() || s.policies.empty())
        throw std::invalid_argument("sweep axes, seeds and policies must be non-empty");
    if (!std::is_sorted(s.distances.begin(), s.distances.end()) ||
        std::adjacent_find(s.distances.begin(), s.distances.end()) != s.distances.end())
        throw std::invalid_argument("sweep.distances must be strictly increasing");
    for (double d : s.distances)
        if (!(d >= 10.0)) throw std::invalid_argument("sweep.distances must be >= 10 m");
    for (double b : s.bandwidths)
        if (!(b > 0.0)) throw std::invalid_argument("sweep.bandwidths must be > 0");
    for (double k : s.loc_capability_scales)
        if (!(k > 0.0)) throw std::invalid_argument("sweep.loc_capability_scales must be > 0");
    for (double sg : s.sigmas)
        if (!(sg > 0.0 && sg <= 1.0)) throw std::invalid_argument("sweep.sigmas must be in (0, 1]");
    for (const auto& p : s.policies)
        if (!is_known_policy(p)) throw std::invalid_argument("unknown policy '" + p + "'");
    if (s.eval_frames < 1) throw std::invalid_argument("sweep.eval_frames must be >= 1");
    if (!(s.flr_limit >= 0.0 && s.flr_limit <= 1.0))
        throw std::invalid_argument("sweep.flr_limit must be in [0, 1]");
    if (!(s.never_threshold < s.always_threshold))
        throw std::invalid_argument("sweep.never_threshold must be below always_threshold");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    from_json_into(j, c);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::string config_hash(const ExperimentConfig& cfg) {
    // Where results go and how many threads compute them does not change them.
    auto j = to_json(cfg);
    j["output"].erase("directory");
    j.erase("workers");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

}  // namespace xrsim
