#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace xrsim {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Link-budget and propagation parameters for one UE/BS pair.
///
/// Defaults are the 7 GHz urban-macro evaluation setup: 20 MHz carrier,
/// 25 m mast, 1.8 m headset, 23 dBm/MHz at the BS, 8x8 and 2x2 arrays.
struct RadioParams {
    double carrier_frequency = 7e9;           // Hz
    double bandwidth = 20e6;                  // Hz
    double bs_height = 25.0;                  // m
    double ue_height = 1.8;                   // m
    double bs_tx_power_density = 23.0;        // dBm/MHz
    double noise_figure = 7.0;                // dB
    double thermal_noise_density = -174.0;    // dBm/Hz
    int bs_array_elements = 64;
    int ue_array_elements = 4;
    double ue_speed = 5.0 / 3.6;              // m/s
    double shadowing_sigma = 6.0;             // dB
    int fading_paths = 8;                     // taps summed into the MFB gain
    int sinusoids_per_path = 16;

    void validate() const;

    /// Total BS transmit power in W (density times bandwidth in MHz).
    [[nodiscard]] double bs_tx_power() const;
    /// B * N0 including the receiver noise figure, in W.
    [[nodiscard]] double noise_power() const;
    /// Boresight array gain, linear (product of element counts).
    [[nodiscard]] double antenna_gain() const;
    [[nodiscard]] double max_doppler() const;
};

struct ChannelTrace {
    double distance = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> gains;  // linear power gain per slot
};

/// TR 38.901 UMa NLOS path loss in dB for ground distance `distance`.
/// Throws std::out_of_range below 10 m.
[[nodiscard]] double path_loss_db(double distance, const RadioParams& params);

/// Large-scale gain (antenna gain over path loss, no shadowing), linear.
[[nodiscard]] double mean_large_scale_gain(double distance, const RadioParams& params);

/// Unit-mean correlated Rayleigh power sequence. Each of `fading_paths` taps is a
/// sum-of-sinusoids Jakes process; the returned value is the mean tap power, so the
/// matched-filter bound over the taps has unit expectation.
[[nodiscard]] std::vector<double> small_scale_fading(std::size_t n_slots, double slot_time,
                                                     const RadioParams& params,
                                                     std::uint64_t seed);

/// Per-slot MFB gains at `distance`: antenna gain, path loss, one log-normal
/// shadowing draw for the whole trace and small-scale fading.
[[nodiscard]] ChannelTrace generate_trace(double distance, std::size_t n_slots,
                                          const RadioParams& params, std::uint64_t seed,
                                          double slot_time = 1e-3);

/// Received SNR for `gain` and `tx_power`, linear.
[[nodiscard]] double snr(double gain, double tx_power, const RadioParams& params);

void write_trace_csv(const ChannelTrace& trace, const std::filesystem::path& path);
[[nodiscard]] ChannelTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace xrsim
