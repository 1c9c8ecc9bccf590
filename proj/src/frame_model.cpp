#include "xrsim/frame_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xrsim {

void HeadsetParams::validate() const {
    for (double v : {p_loc, p_dec, p_ul_max, p_dl, p_idle, f_loc, f_dec, f_edge, f_enc,
                     loc_capability_scale})
        if (!(v > 0.0)) throw std::invalid_argument("headset parameters must be > 0");
}

void SlotConfig::validate() const {
    if (!(slot_time > 0.0)) throw std::invalid_argument("slot_time must be > 0");
    if (slots_per_frame < 2) throw std::invalid_argument("slots_per_frame must be >= 2");
    if (!(latency_threshold >= slot_time))
        throw std::invalid_argument("latency_threshold must be >= slot_time");
}

void SystemParams::validate() const {
    radio.validate();
    headset.validate();
    slots.validate();
    if (beta_grid.empty()) throw std::invalid_argument("beta_grid must not be empty");
    bool has_one = false;
    for (double b : beta_grid) {
        if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("beta values must be in (0, 1]");
        has_one = has_one || b == 1.0;
    }
    if (!has_one) throw std::invalid_argument("beta_grid must contain 1.0");
}

void validate_action(const Action& action, const SlotConfig& cfg) {
    if (action.n_ul < 1) throw std::invalid_argument("action needs at least one UL slot");
    if (action.n_dl < 0) throw std::invalid_argument("negative DL slot count");
    if (action.n_ul + action.n_dl > cfg.slots_per_frame)
        throw std::invalid_argument("action exceeds " + std::to_string(cfg.slots_per_frame) +
                                    " slots per frame");
    if (!(action.alpha >= 0.0 && action.alpha <= 1.0))
        throw std::invalid_argument("offload ratio outside [0, 1]");
}

double shannon_rate(double gain, double tx_power, const RadioParams& params) {
    if (tx_power <= 0.0) return 0.0;
    return params.bandwidth * std::log2(1.0 + snr(gain, tx_power, params));
}

DataSplit split_frame(double d_dl, double alpha) {
    // Scale the larger share and subtract for the smaller one: the subtraction is then
    // exact (Sterbenz), so d_edge + d_loc reproduces d_dl bit for bit.
    DataSplit s;
    if (alpha >= 0.5) {
        s.d_edge = alpha * d_dl;
        s.d_loc = d_dl - s.d_edge;
    } else {
        s.d_loc = (1.0 - alpha) * d_dl;
        s.d_edge = d_dl - s.d_loc;
    }
    return s;
}

LatencyBreakdown compute_latencies(const FramePair& frame, const Action& action,
                                   const SlotConfig& cfg, const HeadsetParams& hp) {
    const auto split = split_frame(frame.d_dl, action.alpha);
    LatencyBreakdown lat;
    lat.l_ul = action.n_ul * cfg.slot_time;
    lat.l_dl_comm = action.n_dl * cfg.slot_time;
    lat.l_edge = split.d_edge / hp.f_edge + split.d_edge / hp.f_enc;
    lat.l_dec = split.d_edge / hp.f_dec;
    lat.l_loc = split.d_loc / hp.effective_f_loc();
    // Edge rendering overlaps the UL; its overrun shows up as displaced DL slots.
    lat.l_total = lat.l_ul + lat.l_dl_comm + lat.l_dec + lat.l_loc;
    return lat;
}

int displaced_dl_slots(double l_ul, double l_edge, double slot_time) {
    if (l_ul >= l_edge) return 0;
    return static_cast<int>(std::ceil((l_edge - l_ul) / slot_time));
}

EnergyBreakdown compute_energy(const FramePair& frame, const Action& action,
                               const LatencyBreakdown& lat, const SlotConfig& cfg,
                               const HeadsetParams& hp, double ul_power) {
    const int displaced = displaced_dl_slots(lat.l_ul, lat.l_edge, cfg.slot_time);
    const auto split = split_frame(frame.d_dl, action.alpha);

    EnergyBreakdown e;
    e.e_ul = lat.l_ul * ul_power;
    e.e_ul_edge = e.e_ul + displaced * cfg.slot_time * hp.p_idle;
    e.e_dl = std::max(action.n_dl - displaced, 0) * cfg.slot_time * hp.p_dl;
    e.e_dec = split.d_edge / hp.f_dec * hp.p_dec;
    e.e_loc = lat.l_loc * hp.p_loc;
    e.e_total = e.e_ul_edge + e.e_dl + e.e_dec + e.e_loc;
    return e;
}

DataSent data_sent(std::span<const double> trace_slice, const Action& action, double ul_power,
                   double p_bs, int displaced, const RadioParams& params, double slot_time) {
    const auto n_ul = static_cast<std::size_t>(action.n_ul);
    const auto n_dl = static_cast<std::size_t>(std::max(action.n_dl, 0));
    if (trace_slice.size() < n_ul + n_dl) throw std::out_of_range("trace underrun");

    DataSent sent;
    for (std::size_t t = 0; t < n_ul; ++t)
        sent.d_ul_sent += shannon_rate(trace_slice[t], ul_power, params) * slot_time;
    const std::size_t skip = std::min(n_dl, static_cast<std::size_t>(std::max(displaced, 0)));
    for (std::size_t t = n_ul + skip; t < n_ul + n_dl; ++t)
        sent.d_dl_sent += shannon_rate(trace_slice[t], p_bs, params) * slot_time;
    return sent;
}

LossIndicators frame_loss(const FramePair& frame, const DataSent& sent,
                          const LatencyBreakdown& lat, const SlotConfig& cfg, double alpha,
                          DlPayloadRule rule) {
    LossIndicators fli;
    fli.fli_ul = sent.d_ul_sent < frame.d_ul ? 1 : 0;
    const double dl_required = rule == DlPayloadRule::EdgePortion ? alpha * frame.d_dl : frame.d_dl;
    const bool dl_short = sent.d_dl_sent < dl_required;
    const bool too_late = lat.l_total > cfg.latency_threshold;
    // No uploaded camera frame, nothing to render downstream.
    fli.fli_dl = (dl_short || too_late || fli.fli_ul == 1) ? 1 : 0;
    return fli;
}

double adjust_ul_power(const FramePair& frame, const Action& action, double predicted_gain,
                       const RadioParams& params, std::span<const double> beta_grid,
                       double p_ul_max, double slot_time) {
    double best = p_ul_max;
    for (double beta : beta_grid) {
        const double power = beta * p_ul_max;
        if (power >= best) continue;
        const double bits = action.n_ul * shannon_rate(predicted_gain, power, params) * slot_time;
        if (bits >= frame.d_ul) best = power;
    }
    return best;
}

FrameOutcome simulate_frame(const FramePair& frame, const Action& action,
                            std::span<const double> trace_slice, const SystemParams& sys) {
    validate_action(action, sys.slots);
    if (trace_slice.empty()) throw std::out_of_range("trace underrun");

    FrameOutcome out;
    out.ul_power_used = adjust_ul_power(frame, action, trace_slice.front(), sys.radio,
                                        sys.beta_grid, sys.headset.p_ul_max, sys.slots.slot_time);
    out.latency = compute_latencies(frame, action, sys.slots, sys.headset);
    out.displaced_dl_slots =
        displaced_dl_slots(out.latency.l_ul, out.latency.l_edge, sys.slots.slot_time);
    const auto sent = data_sent(trace_slice, action, out.ul_power_used, sys.radio.bs_tx_power(),
                                out.displaced_dl_slots, sys.radio, sys.slots.slot_time);
    out.d_ul_sent = sent.d_ul_sent;
    out.d_dl_sent = sent.d_dl_sent;
    out.energy = compute_energy(frame, action, out.latency, sys.slots, sys.headset,
                                out.ul_power_used);
    const auto fli = frame_loss(frame, sent, out.latency, sys.slots, action.alpha, sys.dl_rule);
    out.fli_ul = fli.fli_ul;
    out.fli_dl = fli.fli_dl;
    return out;
}

}  // namespace xrsim
