#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fieldrec/data.hpp"
#include "fieldrec/models.hpp"

namespace fieldrec {

struct MetricReport {
    std::vector<double> mse_per_step;
    std::vector<double> psnr_per_step;
    std::vector<double> ssim_per_step;
    double mse = 0.0;         // mean over the whole cube
    double psnr = 0.0;        // from cube MSE and data_range
    double ssim = 0.0;        // mean of per-frame values
    double data_range = 0.0;  // truth max - min, shared by psnr and ssim
};

// PSNR = 10 log10(range^2 / MSE), capped at +-1e9 (exact match and zero range
// hit the caps). SSIM uses global per-frame statistics with K1=0.01, K2=0.03;
// a 0/0 factor (identical constant frames) counts as a perfect match.
MetricReport compute_metrics(const GridField& truth, const GridField& pred);

void write_metric_report(const MetricReport& report, const std::string& path);

struct PromotionReport {
    std::string best_name;
    std::string second_name;
    double best = 0.0;
    double second = 0.0;
    double promotion_pct = 0.0;  // (second - best) / second * 100
};

PromotionReport promotion(const std::vector<std::pair<std::string, double>>& errors);

struct CorrelationStat {
    double value = 0.0;
    size_t degenerate = 0;  // zero-variance inputs whose correlations were forced to 0
};

// Population standard deviation of the Pearson correlations over every
// unordered pair of codes (rows of the table).
CorrelationStat latent_dissimilarity(const LatentTable& codes);

// MSE between the n_t x n_t pairwise Pearson matrix of the codes and that of
// the flattened truth frames.
CorrelationStat autodecoder_diagnosis(const LatentTable& codes, const GridField& truth);

// Per-dimension percentage increase in reconstruction MSE when that latent
// coordinate is zeroed in every code. Requires a strictly positive full MSE.
std::vector<double> ablation_nmse(FieldModel& model, const LatentTable& latents,
                                  const GridField& truth);

// Codes from several runs side by side: rows stay the time instances, columns
// stack every table's dimensions. All tables must agree on stamps.
LatentTable assemble_latent_matrix(const std::vector<const LatentTable*>& tables);

struct PodResult {
    std::vector<double> eigenvalues;        // descending, clamped at >= 0
    std::vector<double> cumulative_energy;  // nondecreasing, ends at 1

    // Smallest k with cumulative_energy(k) >= threshold.
    size_t modes_for(double threshold) const;
};

// Snapshot method: eigendecomposition of the time-centered n_t x n_t Gram
// matrix. Eigenvalues below -1e-10 * lambda_max are an error; small negative
// noise is clamped to zero.
PodResult snapshot_pod(const GridField& field);

void write_pod_spectrum(const PodResult& pod, const std::string& path);

}  // namespace fieldrec
