#pragma once

#include <array>
#include <memory>
#include <string>

#include "fieldrec/models.hpp"

namespace fieldrec {

// Everything needed to regenerate fields from a trained run: the resolved
// model recipe, every parameter array including frozen buffers, the latent
// table (stamps only for latent-free baselines), and the training lattice.
struct Checkpoint {
    ModelSpec spec;
    std::unique_ptr<FieldModel> model;
    LatentTable latents;
    std::size_t n_h = 0, n_w = 0;
    std::array<double, 4> coord_range{-1.0, 1.0, -1.0, 1.0};
};

// FRCP v1 container, all fields little-endian:
//   magic "FRCP\0\0\0\1"
//   u8 arch id, u8 filter kind id
//   u32 d_x, d_z, width, depth (resolved), freq number, encode size
//   f64 input scale, gamma alpha, gamma beta, w0, freq constant, sigma
//   u32 array count, then per parameter array in params() order:
//     u32 name length, name bytes, u8 trainable, u32 rank, u32 dims, f64 data
//   u32 latent rows, u32 latent dim, f64 stamps, f64 codes row-major
//   u32 n_h, u32 n_w, f64 coord_range[4]
// Writes go to a temp file and are renamed into place.
void save_checkpoint(Checkpoint& ckpt, const std::string& path);

// Rebuilds the model from the stored recipe, then overwrites every parameter
// array by name with shape checking. Models come back in inference mode.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fieldrec
