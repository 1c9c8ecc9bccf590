#include "xrsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "csv_util.hpp"
#include "xrsim/seeding.hpp"

namespace xrsim {

namespace {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Floor keeping gains strictly positive when every sinusoid cancels.
constexpr double kMinFadingPower = 1e-12;

}  // namespace

void RadioParams::validate() const {
    if (!(carrier_frequency > 0.0)) throw std::invalid_argument("carrier_frequency must be > 0");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
    if (!(bs_height > 0.0) || !(ue_height > 0.0))
        throw std::invalid_argument("antenna heights must be > 0");
    if (!(noise_figure >= 0.0)) throw std::invalid_argument("noise_figure must be >= 0");
    if (bs_array_elements < 1 || ue_array_elements < 1)
        throw std::invalid_argument("array element counts must be >= 1");
    if (!(ue_speed >= 0.0)) throw std::invalid_argument("ue_speed must be >= 0");
    if (!(shadowing_sigma >= 0.0)) throw std::invalid_argument("shadowing_sigma must be >= 0");
    if (fading_paths < 1 || sinusoids_per_path < 1)
        throw std::invalid_argument("fading_paths and sinusoids_per_path must be >= 1");
}

double RadioParams::bs_tx_power() const {
    return dbm_to_watt(bs_tx_power_density + 10.0 * std::log10(bandwidth / 1e6));
}

double RadioParams::noise_power() const {
    return dbm_to_watt(thermal_noise_density + 10.0 * std::log10(bandwidth) + noise_figure);
}

double RadioParams::antenna_gain() const {
    return static_cast<double>(bs_array_elements) * static_cast<double>(ue_array_elements);
}

double RadioParams::max_doppler() const { return ue_speed * carrier_frequency / kSpeedOfLight; }

double path_loss_db(double distance, const RadioParams& params) {
    if (!(distance >= 10.0)) throw std::out_of_range("distance out of model range");

    const double h_bs = params.bs_height;
    const double h_ut = params.ue_height;
    const double d3d = std::hypot(distance, h_bs - h_ut);
    const double fc_ghz = params.carrier_frequency / 1e9;

    // LOS branch with effective environment height 1 m; NLOS is floored by it.
    const double d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * params.carrier_frequency / kSpeedOfLight;
    double pl_los;
    if (distance <= d_bp) {
        pl_los = 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
    } else {
        pl_los = 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
                 9.0 * std::log10(d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut));
    }
    const double pl_nlos =
        13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (h_ut - 1.5);
    return std::max(pl_los, pl_nlos);
}

double mean_large_scale_gain(double distance, const RadioParams& params) {
    return params.antenna_gain() * std::pow(10.0, -path_loss_db(distance, params) / 10.0);
}

std::vector<double> small_scale_fading(std::size_t n_slots, double slot_time,
                                       const RadioParams& params, std::uint64_t seed) {
    const int paths = params.fading_paths;
    const int sinusoids = params.sinusoids_per_path;
    const double two_pi = 2.0 * std::numbers::pi;
    const double omega_max = two_pi * params.max_doppler();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-std::numbers::pi, std::numbers::pi);

    // Zheng-Xiao style: arrival angles spread evenly with a random offset per path,
    // independent random phase per sinusoid.
    std::vector<double> omega(static_cast<std::size_t>(paths * sinusoids));
    std::vector<double> phase(omega.size());
    for (int p = 0; p < paths; ++p) {
        const double offset = uniform(rng);
        for (int m = 0; m < sinusoids; ++m) {
            const double angle = (two_pi * (m + 1) - std::numbers::pi + offset) / sinusoids;
            const auto i = static_cast<std::size_t>(p * sinusoids + m);
            omega[i] = omega_max * std::cos(angle);
            phase[i] = uniform(rng);
        }
    }

    // Advance each sinusoid by a fixed rotation per slot; re-anchor periodically so
    // rounding drift stays negligible on long traces. Plain real arithmetic: the
    // std::complex product carries NaN recovery that costs more than the rest.
    constexpr std::size_t kResync = 1024;
    const std::size_t n = omega.size();
    std::vector<double> re(n), im(n), step_re(n), step_im(n);
    for (std::size_t i = 0; i < n; ++i) {
        step_re[i] = std::cos(omega[i] * slot_time);
        step_im[i] = std::sin(omega[i] * slot_time);
    }

    const double tap_norm = 1.0 / (static_cast<double>(sinusoids) * paths);
    std::vector<double> power(n_slots);
    for (std::size_t t = 0; t < n_slots; ++t) {
        if (t % kResync == 0) {
            const double time = static_cast<double>(t) * slot_time;
            for (std::size_t i = 0; i < n; ++i) {
                re[i] = std::cos(omega[i] * time + phase[i]);
                im[i] = std::sin(omega[i] * time + phase[i]);
            }
        }
        double total = 0.0;
        for (int p = 0; p < paths; ++p) {
            double tr = 0.0, ti = 0.0;
            const auto base = static_cast<std::size_t>(p * sinusoids);
            for (std::size_t m = base; m < base + static_cast<std::size_t>(sinusoids); ++m) {
                tr += re[m];
                ti += im[m];
            }
            total += tr * tr + ti * ti;
        }
        power[t] = std::max(total * tap_norm, kMinFadingPower);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = re[i] * step_re[i] - im[i] * step_im[i];
            im[i] = re[i] * step_im[i] + im[i] * step_re[i];
            re[i] = r;
        }
    }
    return power;
}

ChannelTrace generate_trace(double distance, std::size_t n_slots, const RadioParams& params,
                            std::uint64_t seed, double slot_time) {
    if (n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
    if (!(slot_time > 0.0)) throw std::invalid_argument("slot_time must be > 0");
    params.validate();

    std::mt19937_64 rng(derive_seed(seed, "shadowing"));
    double shadow_db = 0.0;
    if (params.shadowing_sigma > 0.0) {
        std::normal_distribution<double> normal(0.0, params.shadowing_sigma);
        shadow_db = normal(rng);
    }
    const double large_scale =
        params.antenna_gain() * std::pow(10.0, -(path_loss_db(distance, params) + shadow_db) / 10.0);

    ChannelTrace trace;
    trace.distance = distance;
    trace.seed = seed;
    trace.gains = small_scale_fading(n_slots, slot_time, params, derive_seed(seed, "fading"));
    for (double& g : trace.gains) g *= large_scale;
    return trace;
}

double snr(double gain, double tx_power, const RadioParams& params) {
    return gain * tx_power / params.noise_power();
}

void write_trace_csv(const ChannelTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "slot_index,gain_linear\n";
    for (std::size_t t = 0; t < trace.gains.size(); ++t)
        out << t << ',' << detail::format_double(trace.gains[t]) << '\n';
}

ChannelTrace read_trace_csv(const std::filesystem::path& path) {
    auto rows = detail::read_numeric_csv(path, {"slot_index", "gain_linear"});
    ChannelTrace trace;
    trace.gains.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][0] != static_cast<double>(i))
            throw std::runtime_error(path.string() + ": slot_index out of sequence");
        if (!(rows[i][1] > 0.0) || !std::isfinite(rows[i][1]))
            throw std::runtime_error(path.string() + ": gains must be positive and finite");
        trace.gains.push_back(rows[i][1]);
    }
    if (trace.gains.empty()) throw std::runtime_error(path.string() + ": no slots");
    return trace;
}

}  // namespace xrsim
