#pragma once

#include <cstdint>
#include <string>

#include "fieldrec/data.hpp"
#include "fieldrec/models.hpp"

namespace fieldrec {

enum class InferInit : uint8_t { zeros, nearest };

std::string infer_init_name(InferInit init);
InferInit infer_init_from_name(const std::string& s);

std::string infer_init_name(InferInit k);
InferInit infer_init_from_name(const std::string& s);

struct InferConfig {
    int steps = 300;
    double lr = 1e-2;
    double latent_reg = 1e-4;
    InferInit init = InferInit::zeros;
};

// MAP estimate of the latent code for one observation set on a frozen
// decoder: cfg.steps AdamW steps on z alone; parameters are read through
// graph constants and stay bit-identical. Nearest-neighbor initialization
// copies the stored code whose stamp is closest to `stamp`.
Tensor infer_latent(FieldModel& model, const ObservationSet& observations, const InferConfig& cfg,
                    const LatentTable& table = LatentTable(), double stamp = 0.0);

// Predictions at arbitrary normalized coordinates, shape (n).
Tensor evaluate_points(FieldModel& model, const Tensor& z, const Tensor& coords,
                       double t_norm = 0.0);

// One dense frame over the n_h x n_w normalized lattice, shape (n_h, n_w).
// Any resolution is accepted; the representation is continuous in x.
Tensor evaluate_field(FieldModel& model, const Tensor& z, size_t n_h, size_t n_w,
                      double t_norm = 0.0);

// Linear interpolation between the two bracketing codes; exact at stored
// stamps. Times outside the stamp range are forecasting and rejected.
Tensor interpolate_latent(const LatentTable& table, double t);

}  // namespace fieldrec
