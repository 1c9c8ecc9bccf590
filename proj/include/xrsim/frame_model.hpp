#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xrsim/channel.hpp"
#include "xrsim/traffic.hpp"

namespace xrsim {

/// Headset power draw and processing speeds.
struct HeadsetParams {
    double p_loc = 0.5;     // W, local rendering
    double p_dec = 0.1;     // W, decoding
    double p_ul_max = 0.2;  // W
    double p_dl = 0.3;      // W, DL reception
    double p_idle = 0.001;  // W
    double f_loc = 200e6;   // bit/s
    double f_dec = 3e9;
    double f_edge = 600e9;
    double f_enc = 3e9;
    double loc_capability_scale = 1.0;  // multiplies f_loc only

    void validate() const;
    [[nodiscard]] double effective_f_loc() const { return f_loc * loc_capability_scale; }
};

struct SlotConfig {
    double slot_time = 1e-3;          // s
    int slots_per_frame = 16;
    double latency_threshold = 20e-3; // s

    void validate() const;
};

/// What the DL must carry for the frame to count as delivered.
enum class DlPayloadRule {
    EdgePortion,  // alpha * d_dl, the pre-rendered part only
    FullFrame,    // d_dl regardless of alpha
};

/// Everything the per-frame model needs besides the frame, action and channel.
struct SystemParams {
    RadioParams radio;
    HeadsetParams headset;
    SlotConfig slots;
    std::vector<double> beta_grid{0.25, 0.5, 0.75, 1.0};
    DlPayloadRule dl_rule = DlPayloadRule::EdgePortion;

    void validate() const;
};

struct Action {
    int n_ul = 1;
    int n_dl = 0;
    double alpha = 0.0;  // offload ratio

    friend bool operator==(const Action&, const Action&) = default;
};

/// Throws std::invalid_argument unless n_ul >= 1, n_dl >= 0, n_ul + n_dl <= slots and alpha in [0, 1].
void validate_action(const Action& action, const SlotConfig& cfg);

struct LatencyBreakdown {
    double l_ul = 0.0;
    double l_dl_comm = 0.0;
    double l_edge = 0.0;
    double l_dec = 0.0;
    double l_loc = 0.0;
    double l_total = 0.0;
};

struct EnergyBreakdown {
    double e_ul = 0.0;
    double e_ul_edge = 0.0;
    double e_dl = 0.0;
    double e_dec = 0.0;
    double e_loc = 0.0;
    double e_total = 0.0;
};

struct FrameOutcome {
    LatencyBreakdown latency;
    EnergyBreakdown energy;
    int fli_ul = 0;
    int fli_dl = 0;
    double d_ul_sent = 0.0;
    double d_dl_sent = 0.0;
    double ul_power_used = 0.0;
    int displaced_dl_slots = 0;
};

struct DataSplit {
    double d_edge = 0.0;
    double d_loc = 0.0;
};

struct DataSent {
    double d_ul_sent = 0.0;
    double d_dl_sent = 0.0;
};

struct LossIndicators {
    int fli_ul = 0;
    int fli_dl = 0;
};

/// B log2(1 + SNR); zero transmit power gives zero rate.
[[nodiscard]] double shannon_rate(double gain, double tx_power, const RadioParams& params);

[[nodiscard]] DataSplit split_frame(double d_dl, double alpha);

[[nodiscard]] LatencyBreakdown compute_latencies(const FramePair& frame, const Action& action,
                                                 const SlotConfig& cfg, const HeadsetParams& hp);

/// DL slots that pass while the edge is still rendering after the UL has finished.
[[nodiscard]] int displaced_dl_slots(double l_ul, double l_edge, double slot_time);

[[nodiscard]] EnergyBreakdown compute_energy(const FramePair& frame, const Action& action,
                                             const LatencyBreakdown& lat, const SlotConfig& cfg,
                                             const HeadsetParams& hp, double ul_power);

/// Bits carried in the frame's UL slots (first n_ul) and in its usable DL slots
/// (the last n_dl - displaced of the following n_dl). Throws std::out_of_range
/// ("trace underrun") if the slice is shorter than n_ul + n_dl.
[[nodiscard]] DataSent data_sent(std::span<const double> trace_slice, const Action& action,
                                 double ul_power, double p_bs, int displaced,
                                 const RadioParams& params, double slot_time);

[[nodiscard]] LossIndicators frame_loss(const FramePair& frame, const DataSent& sent,
                                        const LatencyBreakdown& lat, const SlotConfig& cfg,
                                        double alpha,
                                        DlPayloadRule rule = DlPayloadRule::EdgePortion);

/// Smallest beta * p_ul_max in the grid whose predicted UL throughput over n_ul slots
/// covers the frame; p_ul_max when no level does.
[[nodiscard]] double adjust_ul_power(const FramePair& frame, const Action& action,
                                     double predicted_gain, const RadioParams& params,
                                     std::span<const double> beta_grid, double p_ul_max,
                                     double slot_time);

/// One frame interval end to end. `trace_slice` starts at the frame's first slot;
/// its first gain is the one the headset predicts the UL power from.
[[nodiscard]] FrameOutcome simulate_frame(const FramePair& frame, const Action& action,
                                          std::span<const double> trace_slice,
                                          const SystemParams& sys);

}  // namespace xrsim
