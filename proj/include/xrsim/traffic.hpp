#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace xrsim {

/// XR video traffic: per-frame sizes drawn from a truncated Gaussian around rate / fps.
struct TrafficParams {
    double dl_rate = 28e6;  // bit/s
    double ul_rate = 8.5e6; // bit/s
    double fps = 60.0;
    double std_fraction = 0.105;
    double low_fraction = 0.5;
    double high_fraction = 1.5;

    void validate() const;
    [[nodiscard]] double mean_ul_bits() const { return ul_rate / fps; }
    [[nodiscard]] double mean_dl_bits() const { return dl_rate / fps; }
    [[nodiscard]] double max_dl_bits() const { return high_fraction * mean_dl_bits(); }
};

struct FramePair {
    double d_ul = 0.0;  // bits
    double d_dl = 0.0;  // bits
    std::size_t frame_index = 0;
};

/// i.i.d. frame sizes, rejection-sampled into [low, high] x mean per direction.
[[nodiscard]] std::vector<FramePair> generate_frames(const TrafficParams& params,
                                                     std::size_t n_frames, std::uint64_t seed);

void write_frames_csv(const std::vector<FramePair>& frames, const std::filesystem::path& path);
[[nodiscard]] std::vector<FramePair> read_frames_csv(const std::filesystem::path& path);

}  // namespace xrsim
