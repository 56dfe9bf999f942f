#include "fieldrec/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fieldrec/data.hpp"

namespace fieldrec {

std::string heatmap_mode_name(HeatmapMode m) {
    switch (m) {
        case HeatmapMode::value: return "value";
        case HeatmapMode::abs_error: return "abs-error";
    }
    throw std::invalid_argument("unknown heatmap mode id");
}

HeatmapMode heatmap_mode_from_name(const std::string& s) {
    if (s == "value") return HeatmapMode::value;
    if (s == "abs-error") return HeatmapMode::abs_error;
    throw std::invalid_argument("unknown heatmap mode '" + s + "'");
}

std::string render_pgm(const Tensor& slice, HeatmapMode mode) {
    if (slice.shape().size() != 2 || slice.size() == 0)
        throw std::invalid_argument("heatmap wants a non-empty 2-d slice, got shape " +
                                    shape_to_string(slice.shape()));
    for (double v : slice.values())
        if (!std::isfinite(v)) throw std::invalid_argument("heatmap slice has a non-finite value");

    char header[48];
    std::snprintf(header, sizeof header, "P5\n%zu %zu\n255\n", slice.cols(), slice.rows());
    std::string out(header);
    out.reserve(out.size() + slice.size());

    const auto v = slice.values();
    if (mode == HeatmapMode::abs_error) {
        double peak = 0.0;
        for (double x : v) peak = std::max(peak, std::fabs(x));
        for (double x : v) {
            const long byte = peak == 0.0 ? 0 : std::lround(255.0 * std::fabs(x) / peak);
            out.push_back(char(std::clamp(byte, 0L, 255L)));
        }
        return out;
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    for (double x : v) {
        const long byte = lo == hi ? 128 : std::lround(255.0 * (x - lo) / (hi - lo));
        out.push_back(char(std::clamp(byte, 0L, 255L)));
    }
    return out;
}

void render_heatmap(const Tensor& slice, HeatmapMode mode, const std::string& path) {
    write_file_atomic(path, render_pgm(slice, mode));
}

}  // namespace fieldrec
