#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fieldrec/tensor.hpp"

namespace fieldrec {

// Dense scalar field on a (time, height, width) lattice. Values are 64-bit in
// memory and 32-bit in the on-disk FGRD format.
struct GridField {
    std::size_t n_t = 0, n_h = 0, n_w = 0;
    std::array<double, 4> coord_range{-1.0, 1.0, -1.0, 1.0};  // x_min, x_max, y_min, y_max
    std::vector<double> stamps;                               // n_t entries
    std::vector<double> values;                               // [t][h][w]

    std::size_t frame_size() const { return n_h * n_w; }
    double& at(std::size_t t, std::size_t h, std::size_t w) {
        return values[(t * n_h + h) * n_w + w];
    }
    double at(std::size_t t, std::size_t h, std::size_t w) const {
        return values[(t * n_h + h) * n_w + w];
    }
};

struct FieldStats {
    double mean = 0.0, variance = 0.0, min = 0.0, max = 0.0;
};

FieldStats compute_field_stats(const GridField& field);

enum class SyntheticKind : std::uint8_t { traveling_blobs, spectral_grf };

std::string synthetic_kind_name(SyntheticKind k);
SyntheticKind synthetic_kind_from_name(const std::string& s);

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::traveling_blobs;
    std::size_t n_t = 50, n_h = 64, n_w = 64;
    std::uint64_t seed = 0;
    double drift = 1.0;         // scales every time-dependent term; 0 freezes the field
    std::size_t components = 6; // blob count or spectral mode count
};

// Smooth seeded test cubes, exactly normalized to zero mean and unit variance
// over the whole cube as the last step.
GridField generate_synthetic(const SyntheticSpec& spec);

// The n_h x n_w lattice over [-1,1]^2, row-major over (h, w); column 0
// follows w, column 1 follows h, corners mapped exactly. A single-site
// extent maps to 0.
Tensor lattice_coords(std::size_t n_h, std::size_t n_w);

Tensor normalize_coords(const GridField& field);

// Normalized lattice coordinates of one site.
double norm_coord_x(const GridField& field, std::size_t w);
double norm_coord_y(const GridField& field, std::size_t h);

// Physical coordinates for a normalized pair, using coord_range.
std::pair<double, double> denormalize_coords(const GridField& field, double xn, double yn);

struct ObsPoint {
    double x = 0.0, y = 0.0;  // normalized coordinates
    double u = 0.0;
};

// Sparse samples of one time instance; the only view of the field that
// training is allowed to see.
struct ObservationSet {
    std::size_t time_index = 0;
    std::vector<ObsPoint> points;
};

Tensor observation_coords(const ObservationSet& set);  // (n, 2)
Tensor observation_values(const ObservationSet& set);  // (n, 1)

// task 1: fixed count, fixed sites; 2: varying count from a fixed base grid;
// 3: fixed count, fresh sites per step; 4: varying count, fresh sites.
struct SamplingSpec {
    int task = 1;
    double ratio = 0.05;
    std::uint64_t seed = 0;
    double count_multiplier_max = 5.0;
};

std::vector<ObservationSet> sample_task(const GridField& field, const SamplingSpec& spec);

struct NoiseSpec {
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

// Adds i.i.d. Gaussian noise with standard deviation ratio * field_std to the
// observation values; coordinates pass through untouched.
std::vector<ObservationSet> add_noise(const std::vector<ObservationSet>& observations,
                                      double field_std, const NoiseSpec& spec);

// FGRD container: magic "FGRD\0\0\0\1", little-endian u32 n_t/n_h/n_w, four
// f64 coord_range values, n_t f64 stamps, then n_t*n_h*n_w f32 values in
// [t][h][w] order. Writes go to a temp file and are renamed into place.
void write_field(const GridField& field, const std::string& path);
GridField read_field(const std::string& path);

// Observation CSV with header `t_index,x,y,value`; floats carry 17 significant
// digits so the text roundtrip is value-exact.
void write_observations(const std::vector<ObservationSet>& observations, const std::string& path);
std::vector<ObservationSet> read_observations(const std::string& path);

// Shared file plumbing: atomic whole-file write (temp + rename, parent
// directories created) and whole-file read.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace fieldrec
