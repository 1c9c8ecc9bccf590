#include "xrsim/traffic.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include "csv_util.hpp"

namespace xrsim {

void TrafficParams::validate() const {
    if (!(dl_rate > 0.0) || !(ul_rate > 0.0)) throw std::invalid_argument("traffic rates must be > 0");
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be > 0");
    if (!(std_fraction >= 0.0)) throw std::invalid_argument("std_fraction must be >= 0");
    if (!(low_fraction > 0.0 && low_fraction < 1.0 && high_fraction > 1.0))
        throw std::invalid_argument("truncation must satisfy 0 < low < 1 < high");
}

namespace {

double truncated_gaussian(std::mt19937_64& rng, double mean, double std_fraction, double low,
                          double high) {
    if (std_fraction == 0.0) return mean;
    std::normal_distribution<double> normal(mean, std_fraction * mean);
    while (true) {
        const double x = normal(rng);
        if (x >= low * mean && x <= high * mean) return x;
    }
}

}  // namespace

std::vector<FramePair> generate_frames(const TrafficParams& params, std::size_t n_frames,
                                       std::uint64_t seed) {
    if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
    params.validate();
    std::mt19937_64 rng(seed);
    std::vector<FramePair> frames(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        frames[f].frame_index = f;
        frames[f].d_ul = truncated_gaussian(rng, params.mean_ul_bits(), params.std_fraction,
                                            params.low_fraction, params.high_fraction);
        frames[f].d_dl = truncated_gaussian(rng, params.mean_dl_bits(), params.std_fraction,
                                            params.low_fraction, params.high_fraction);
    }
    return frames;
}

void write_frames_csv(const std::vector<FramePair>& frames, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "frame_index,d_ul_bits,d_dl_bits\n";
    for (const auto& f : frames)
        out << f.frame_index << ',' << detail::format_double(f.d_ul) << ','
            << detail::format_double(f.d_dl) << '\n';
}

std::vector<FramePair> read_frames_csv(const std::filesystem::path& path) {
    auto rows = detail::read_numeric_csv(path, {"frame_index", "d_ul_bits", "d_dl_bits"});
    std::vector<FramePair> frames;
    frames.reserve(rows.size());
    for (const auto& r : rows) {
        if (r[0] < 0.0 || r[1] < 0.0 || r[2] < 0.0)
            throw std::runtime_error(path.string() + ": negative value");
        frames.push_back({r[1], r[2], static_cast<std::size_t>(r[0])});
    }
    if (frames.empty()) throw std::runtime_error(path.string() + ": no frames");
    return frames;
}

}  // namespace xrsim
