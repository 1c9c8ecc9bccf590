#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xrsim/channel.hpp"
#include "xrsim/config.hpp"
#include "xrsim/harness.hpp"
#include "xrsim/policies.hpp"
#include "xrsim/stats.hpp"
#include "xrsim/traffic.hpp"

namespace py = pybind11;
using namespace xrsim;

PYBIND11_MODULE(_core, m) {
    m.doc() = "XR slot allocation and partial offloading simulator";

    py::class_<RadioParams>(m, "RadioParams")
        .def(py::init<>())
        .def_readwrite("carrier_frequency", &RadioParams::carrier_frequency)
        .def_readwrite("bandwidth", &RadioParams::bandwidth)
        .def_readwrite("shadowing_sigma", &RadioParams::shadowing_sigma)
        .def_readwrite("ue_speed", &RadioParams::ue_speed)
        .def("bs_tx_power", &RadioParams::bs_tx_power)
        .def("noise_power", &RadioParams::noise_power)
        .def("antenna_gain", &RadioParams::antenna_gain);

    py::class_<HeadsetParams>(m, "HeadsetParams")
        .def(py::init<>())
        .def_readwrite("p_loc", &HeadsetParams::p_loc)
        .def_readwrite("p_dec", &HeadsetParams::p_dec)
        .def_readwrite("p_ul_max", &HeadsetParams::p_ul_max)
        .def_readwrite("p_dl", &HeadsetParams::p_dl)
        .def_readwrite("p_idle", &HeadsetParams::p_idle)
        .def_readwrite("f_loc", &HeadsetParams::f_loc)
        .def_readwrite("f_dec", &HeadsetParams::f_dec)
        .def_readwrite("f_edge", &HeadsetParams::f_edge)
        .def_readwrite("f_enc", &HeadsetParams::f_enc)
        .def_readwrite("loc_capability_scale", &HeadsetParams::loc_capability_scale);

    py::class_<SlotConfig>(m, "SlotConfig")
        .def(py::init<>())
        .def_readwrite("slot_time", &SlotConfig::slot_time)
        .def_readwrite("slots_per_frame", &SlotConfig::slots_per_frame)
        .def_readwrite("latency_threshold", &SlotConfig::latency_threshold);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def_readwrite("radio", &SystemParams::radio)
        .def_readwrite("headset", &SystemParams::headset)
        .def_readwrite("slots", &SystemParams::slots)
        .def_readwrite("beta_grid", &SystemParams::beta_grid);

    py::class_<TrafficParams>(m, "TrafficParams")
        .def(py::init<>())
        .def_readwrite("dl_rate", &TrafficParams::dl_rate)
        .def_readwrite("ul_rate", &TrafficParams::ul_rate)
        .def_readwrite("fps", &TrafficParams::fps)
        .def_readwrite("std_fraction", &TrafficParams::std_fraction);

    py::class_<FramePair>(m, "FramePair")
        .def(py::init([](double d_ul, double d_dl) { return FramePair{d_ul, d_dl, 0}; }),
             py::arg("d_ul"), py::arg("d_dl"))
        .def_readwrite("d_ul", &FramePair::d_ul)
        .def_readwrite("d_dl", &FramePair::d_dl)
        .def_readwrite("frame_index", &FramePair::frame_index);

    py::class_<Action>(m, "Action")
        .def(py::init([](int n_ul, int n_dl, double alpha) { return Action{n_ul, n_dl, alpha}; }),
             py::arg("n_ul"), py::arg("n_dl"), py::arg("alpha"))
        .def_readwrite("n_ul", &Action::n_ul)
        .def_readwrite("n_dl", &Action::n_dl)
        .def_readwrite("alpha", &Action::alpha)
        .def("__eq__", [](const Action& a, const Action& b) { return a == b; })
        .def("__repr__", [](const Action& a) {
            return "Action(" + std::to_string(a.n_ul) + ", " + std::to_string(a.n_dl) + ", " +
                   py::repr(py::float_(a.alpha)).cast<std::string>() + ")";
        });

    py::class_<EnergyBreakdown>(m, "EnergyBreakdown")
        .def_readonly("e_ul", &EnergyBreakdown::e_ul)
        .def_readonly("e_ul_edge", &EnergyBreakdown::e_ul_edge)
        .def_readonly("e_dl", &EnergyBreakdown::e_dl)
        .def_readonly("e_dec", &EnergyBreakdown::e_dec)
        .def_readonly("e_loc", &EnergyBreakdown::e_loc)
        .def_readonly("e_total", &EnergyBreakdown::e_total);

    py::class_<LatencyBreakdown>(m, "LatencyBreakdown")
        .def_readonly("l_ul", &LatencyBreakdown::l_ul)
        .def_readonly("l_dl_comm", &LatencyBreakdown::l_dl_comm)
        .def_readonly("l_edge", &LatencyBreakdown::l_edge)
        .def_readonly("l_dec", &LatencyBreakdown::l_dec)
        .def_readonly("l_loc", &LatencyBreakdown::l_loc)
        .def_readonly("l_total", &LatencyBreakdown::l_total);

    py::class_<FrameOutcome>(m, "FrameOutcome")
        .def_readonly("latency", &FrameOutcome::latency)
        .def_readonly("energy", &FrameOutcome::energy)
        .def_readonly("fli_ul", &FrameOutcome::fli_ul)
        .def_readonly("fli_dl", &FrameOutcome::fli_dl)
        .def_readonly("d_ul_sent", &FrameOutcome::d_ul_sent)
        .def_readonly("d_dl_sent", &FrameOutcome::d_dl_sent)
        .def_readonly("ul_power_used", &FrameOutcome::ul_power_used)
        .def_readonly("displaced_dl_slots", &FrameOutcome::displaced_dl_slots);

    py::class_<RewardParams>(m, "RewardParams")
        .def(py::init([](double sigma, double e_max, int window) {
                 RewardParams rp{sigma, e_max, window};
                 rp.validate();
                 return rp;
             }),
             py::arg("sigma") = 0.7, py::arg("e_max") = 1.0, py::arg("window") = 1)
        .def_readwrite("sigma", &RewardParams::sigma)
        .def_readwrite("e_max", &RewardParams::e_max)
        .def_readwrite("window", &RewardParams::window);

    m.def("path_loss_db", &path_loss_db, py::arg("distance"), py::arg("radio") = RadioParams{});
    m.def("mean_large_scale_gain", &mean_large_scale_gain, py::arg("distance"),
          py::arg("radio") = RadioParams{});
    m.def(
        "generate_trace",
        [](double distance, std::size_t n_slots, const RadioParams& r, std::uint64_t seed,
           double slot_time) { return generate_trace(distance, n_slots, r, seed, slot_time).gains; },
        py::arg("distance"), py::arg("n_slots"), py::arg("radio") = RadioParams{},
        py::arg("seed") = 1, py::arg("slot_time") = 1e-3,
        "Per-slot linear channel power gains.");
    m.def("generate_frames", &generate_frames, py::arg("traffic"), py::arg("n_frames"),
          py::arg("seed"));
    m.def(
        "simulate_frame",
        [](const FramePair& f, const Action& a, const std::vector<double>& slice,
           const SystemParams& sys) { return simulate_frame(f, a, slice, sys); },
        py::arg("frame"), py::arg("action"), py::arg("gains"), py::arg("system") = SystemParams{});
    m.def("reward", &reward, py::arg("outcome"), py::arg("params"));
    m.def(
        "e_max_default",
        [](const SystemParams& sys, const TrafficParams& tp) {
            return e_max_default(sys.slots, sys.headset, tp);
        },
        py::arg("system") = SystemParams{}, py::arg("traffic") = TrafficParams{});

    py::class_<ActionGrid>(m, "ActionGrid")
        .def(py::init<std::vector<double>, int>(), py::arg("alpha_values"), py::arg("slots_per_frame"))
        .def_static("standard", &ActionGrid::standard, py::arg("slots_per_frame") = 16)
        .def("restricted_to", &ActionGrid::restricted_to)
        .def("index_of", &ActionGrid::index_of)
        .def("__len__", &ActionGrid::size)
        .def("__getitem__", [](const ActionGrid& g, std::size_t i) {
            if (i >= g.size()) throw py::index_error();
            return g[i];
        });

    py::class_<OracleChoice>(m, "OracleChoice")
        .def_readonly("action", &OracleChoice::action)
        .def_readonly("index", &OracleChoice::index)
        .def_readonly("reward", &OracleChoice::reward);
    m.def(
        "greedy_oracle",
        [](const FramePair& f, const std::vector<double>& slice, const SystemParams& sys,
           const ActionGrid& grid, const RewardParams& rp) {
            return greedy_oracle(f, slice, sys, grid, rp);
        },
        py::arg("frame"), py::arg("gains"), py::arg("system"), py::arg("grid"), py::arg("reward"));

    m.def("coverage_distance", &coverage_distance, py::arg("distances"), py::arg("flr_total"),
          py::arg("flr_limit") = 0.1);
    m.def(
        "decision_regions",
        [](const std::vector<double>& d, const std::vector<double>& alpha, double hi, double lo) {
            const auto t = decision_regions(d, alpha, hi, lo);
            std::vector<std::string> labels;
            for (auto r : t.labels) labels.emplace_back(region_name(r));
            return py::make_tuple(labels, t.boundaries);
        },
        py::arg("distances"), py::arg("mean_offload_ratio"), py::arg("always_threshold") = 0.9,
        py::arg("never_threshold") = 0.1, "Returns (labels, boundaries).");
    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));

    m.def(
        "config_json",
        [](const std::string& text) { return dump_config(parse_config(text)); },
        py::arg("text") = "{}", "Canonical JSON of a (partial) config with every default filled in.");
    m.def(
        "run_sweep",
        [](const std::string& config_text, bool write) {
            const auto cfg = parse_config(config_text);
            SweepOutcome out;
            {
                py::gil_scoped_release release;
                out = run_sweep(cfg);
                if (write) write_outputs(cfg, out, "python");
            }
            py::list rows;
            for (const auto& r : out.rows) {
                py::dict d;
                d["distance_m"] = r.key.distance;
                d["bandwidth_hz"] = r.key.setting.bandwidth;
                d["loc_capability_scale"] = r.key.setting.loc_capability_scale;
                d["sigma"] = r.key.setting.sigma;
                d["policy"] = r.key.policy;
                d["seed"] = r.key.seed;
                d["flr_ul"] = r.metrics.flr_ul;
                d["flr_dl"] = r.metrics.flr_dl;
                d["flr_total"] = r.metrics.flr_total;
                d["mean_energy_j"] = r.metrics.mean_energy;
                d["mean_offload_ratio"] = r.metrics.mean_offload_ratio;
                d["mean_reward"] = r.metrics.mean_reward;
                d["covered"] = r.covered;
                d["status"] = r.status;
                rows.append(d);
            }
            return rows;
        },
        py::arg("config_json"), py::arg("write_outputs") = false,
        "Runs a sweep from JSON config text and returns one dict per results.csv row.");
}
