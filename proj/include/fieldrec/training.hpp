#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fieldrec/data.hpp"
#include "fieldrec/models.hpp"

namespace fieldrec {

enum class LatentInit : uint8_t { zeros, gaussian };

std::string latent_init_name(LatentInit init);
LatentInit latent_init_from_name(const std::string& s);

std::string latent_init_name(LatentInit k);
LatentInit latent_init_from_name(const std::string& s);

struct TrainConfig {
    int epochs = 200;
    double lr0 = 1e-3;
    double lr_decay = 0.99;       // multiplicative, per epoch
    int batch_size = 16;          // time instances per optimization step
    double latent_reg = 1e-4;
    double weight_decay = 1e-2;   // decoder parameters only; codes are exempt
    uint64_t seed = 0;
    LatentInit latent_init = LatentInit::zeros;
    double latent_init_sigma = 0.01;
};

// Independent deterministic streams from one master seed (splitmix64 of
// master xor salt * golden ratio). Salts used by training: 1 model init,
// 2 latent init, 3 epoch shuffle.
uint64_t derive_seed(uint64_t master, uint64_t salt);

double lr_at_epoch(double lr0, double decay, int epoch);

// First/second moment pair shaped like its parameter array.
struct AdamwSlot {
    Tensor m;
    Tensor v;
};

// Moments for one parameter group advancing on a shared step count.
struct OptimizerState {
    std::vector<AdamwSlot> slots;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Decoupled AdamW on one contiguous array: p *= 1 - lr*wd first, then the
// bias-corrected moment step with step_count as the 1-based step number.
// Throws on non-finite gradient entries, naming the parameter.
void adamw_span(double* p, const double* g, double* m, double* v, size_t n,
                long step_count, double lr, double weight_decay,
                const OptimizerState& hp, const std::string& name);

// One update over a parameter group; grads align with params, frozen entries
// are skipped. Slots are allocated on first use.
void adamw_step(OptimizerState& state, const std::vector<ParamRef>& params,
                const std::vector<Tensor>& grads, double lr, double weight_decay);

struct LossBuild {
    NodeId loss;                       // scalar node
    std::vector<NodeId> param_nodes;   // aligned with model.params()
    std::vector<NodeId> latent_nodes;  // aligned with batch; empty for latent-free models
};

// Builds sum over batch instances of [ mean_i (pred_i - u_i)^2
// + latent_reg * ||z_k||^2 ]. rows[j] selects the latent row (and stamp) for
// batch[j]; when empty, the instance's time index is used directly.
LossBuild loss_objective(Graph& g, FieldModel& model, const LatentTable& latents,
                         const std::vector<ObservationSet>& batch, double latent_reg,
                         const std::vector<size_t>& rows = {});

struct TrainResult {
    std::unique_ptr<FieldModel> model;
    LatentTable latents;
    std::vector<double> loss_history;  // per-epoch mean per-instance loss
};

// Joint auto-decoding: decoder parameters and one latent row per dataset
// entry are optimized together with AdamW under a decayed learning rate.
// stamps[k] is the physical time of dataset[k]; latent rows follow dataset
// order. Rows outside a step's batch are untouched, and their moments advance
// on per-row step counts so sparse updates stay unbiased.
TrainResult train_joint(const std::vector<ObservationSet>& dataset,
                        const std::vector<double>& stamps, const ModelSpec& spec,
                        const TrainConfig& cfg);

// CSV with header epoch,mean_loss,lr; one row per epoch.
void write_loss_history(const std::vector<double>& history, const TrainConfig& cfg,
                        const std::string& path);

}  // namespace fieldrec
