#pragma once

#include <cstdint>
#include <string>

#include "fieldrec/tensor.hpp"

namespace fieldrec {

enum class HeatmapMode : std::uint8_t { value, abs_error };

std::string heatmap_mode_name(HeatmapMode m);
HeatmapMode heatmap_mode_from_name(const std::string& s);

// 8-bit grayscale PGM, header "P5\n<w> <h>\n255\n" byte for byte. Value mode
// stretches min to black and max to white; a constant slice renders mid-gray
// (128). Abs-error mode takes |v| and anchors zero at black so darker means
// lower error; an all-zero slice renders black.
std::string render_pgm(const Tensor& slice, HeatmapMode mode);

void render_heatmap(const Tensor& slice, HeatmapMode mode, const std::string& path);

}  // namespace fieldrec
