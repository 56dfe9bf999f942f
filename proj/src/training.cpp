#include "fieldrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fieldrec {

std::string latent_init_name(LatentInit k) {
    return k == LatentInit::zeros ? "zeros" : "gaussian";
}

LatentInit latent_init_from_name(const std::string& s) {
    if (s == "zeros") return LatentInit::zeros;
    if (s == "gaussian") return LatentInit::gaussian;
    throw std::invalid_argument("unknown latent init '" + s + "'");
}

uint64_t derive_seed(uint64_t master, uint64_t salt) {
    uint64_t x = master ^ (salt * 0x9E3779B97F4A7C15ull);
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double lr_at_epoch(double lr0, double decay, int epoch) {
    if (epoch < 0) throw std::invalid_argument("epoch must be nonnegative");
    return lr0 * std::pow(decay, double(epoch));
}

void adamw_span(double* p, const double* g, double* m, double* v, std::size_t n,
                long step_count, double lr, double weight_decay,
                const OptimizerState& hp, const std::string& name) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(g[i]))
            throw std::runtime_error("non-finite gradient for parameter '" + name + "'");
    const double decay_factor = 1.0 - lr * weight_decay;
    const double bc1 = 1.0 - std::pow(hp.beta1, double(step_count));
    const double bc2 = 1.0 - std::pow(hp.beta2, double(step_count));
    for (std::size_t i = 0; i < n; ++i) {
        p[i] *= decay_factor;
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
}

void adamw_step(OptimizerState& state, const std::vector<ParamRef>& params,
                const std::vector<Tensor>& grads, double lr, double weight_decay) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adamw_step needs one gradient per parameter");
    if (state.slots.empty()) {
        state.slots.reserve(params.size());
        for (const auto& ref : params)
            state.slots.push_back({Tensor::zeros(ref.tensor->shape()), Tensor::zeros(ref.tensor->shape())});
    }
    if (state.slots.size() != params.size())
        throw std::invalid_argument("optimizer state does not match the parameter list");
    ++state.step;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        Tensor& p = *params[i].tensor;
        if (!p.same_shape(grads[i]))
            throw std::invalid_argument("gradient shape mismatch for '" + params[i].name + "'");
        adamw_span(p.data(), grads[i].data(), state.slots[i].m.data(), state.slots[i].v.data(),
                   p.size(), state.step, lr, weight_decay, state, params[i].name);
    }
}

LossBuild loss_objective(Graph& g, FieldModel& model, const LatentTable& latents,
                         const std::vector<ObservationSet>& batch, double latent_reg,
                         const std::vector<size_t>& rows) {
    if (batch.empty()) throw std::invalid_argument("loss needs at least one time instance");
    if (!rows.empty() && rows.size() != batch.size())
        throw std::invalid_argument("row map must align with the batch");
    const bool has_latent = model.latent_dim() > 0;

    LossBuild out;
    auto refs = model.params();
    out.param_nodes.reserve(refs.size());
    for (auto& ref : refs)
        out.param_nodes.push_back(ref.trainable ? g.input(*ref.tensor, true)
                                                : g.constant(*ref.tensor));

    NodeId total;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const ObservationSet& set = batch[j];
        if (set.points.empty())
            throw std::invalid_argument("empty observation set at time index " +
                                        std::to_string(set.time_index));
        const std::size_t row = rows.empty() ? set.time_index : rows[j];
        if (row >= latents.size())
            throw std::invalid_argument("latent row " + std::to_string(row) +
                                        " out of range for table of " +
                                        std::to_string(latents.size()));
        NodeId z;
        if (has_latent) {
            z = g.input(latents.row(row), true);
            out.latent_nodes.push_back(z);
        }
        const double t_norm = latents.t_norm(latents.stamps[row]);
        NodeId pred = model.build_forward(g, out.param_nodes, observation_coords(set), z, t_norm);
        NodeId targets = g.constant(observation_values(set));
        NodeId mse = g.mean_all(g.square(g.sub(pred, targets)));
        NodeId term = mse;
        if (has_latent && latent_reg != 0.0)
            term = g.add(mse, g.scale(g.sum_all(g.square(z)), latent_reg));
        total = total.valid() ? g.add(total, term) : term;
    }
    out.loss = total;
    return out;
}

namespace {

// Per-row moments and step counts for sparse latent updates.
struct LatentOptState {
    Tensor m;
    Tensor v;
    std::vector<long> steps;
};

LatentTable make_latent_table(std::size_t n_t, std::size_t d_z, std::vector<double> stamps,
                              const TrainConfig& cfg) {
    LatentTable table(n_t, d_z, std::move(stamps));
    if (d_z > 0 && cfg.latent_init == LatentInit::gaussian) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 2));
        std::normal_distribution<double> dist(0.0, cfg.latent_init_sigma);
        for (std::size_t i = 0; i < table.codes.size(); ++i) table.codes.at(i) = dist(rng);
    }
    return table;
}

}  // namespace

TrainResult train_joint(const std::vector<ObservationSet>& dataset,
                        const std::vector<double>& stamps, const ModelSpec& spec,
                        const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    if (stamps.size() != dataset.size())
        throw std::invalid_argument("need one time stamp per dataset entry");
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (!(cfg.lr_decay > 0.0) || cfg.lr_decay > 1.0)
        throw std::invalid_argument("lr_decay must lie in (0, 1]");
    if (cfg.latent_reg < 0.0) throw std::invalid_argument("latent_reg must be nonnegative");
    for (const auto& set : dataset)
        if (set.points.empty())
            throw std::invalid_argument("empty observation set at time index " +
                                        std::to_string(set.time_index));

    TrainResult result;
    result.model = make_model(spec, derive_seed(cfg.seed, 1));
    FieldModel& model = *result.model;
    model.set_training(true);
    const std::size_t d_z = model.latent_dim();
    result.latents = make_latent_table(dataset.size(), d_z, stamps, cfg);
    LatentTable& latents = result.latents;

    auto refs = model.params();
    OptimizerState opt;
    LatentOptState lat_opt;
    if (d_z > 0) {
        lat_opt.m = Tensor::zeros(latents.codes.shape());
        lat_opt.v = Tensor::zeros(latents.codes.shape());
        lat_opt.steps.assign(latents.size(), 0);
    }

    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 3));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch_size = std::size_t(cfg.batch_size);

    result.loss_history.reserve(std::size_t(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg.lr0, cfg.lr_decay, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += batch_size) {
                const std::size_t stop = std::min(order.size(), start + batch_size);
                std::vector<ObservationSet> batch;
                std::vector<std::size_t> rows(order.begin() + long(start), order.begin() + long(stop));
                batch.reserve(rows.size());
                for (std::size_t r : rows) batch.push_back(dataset[r]);

                Graph g;
                LossBuild build = loss_objective(g, model, latents, batch, cfg.latent_reg, rows);
                epoch_loss += g.value(build.loss).item();
                g.backward(build.loss);
                model.post_forward(g);

                std::vector<Tensor> grads;
                grads.reserve(refs.size());
                for (std::size_t i = 0; i < refs.size(); ++i)
                    grads.push_back(refs[i].trainable ? g.grad(build.param_nodes[i])
                                                      : Tensor::zeros(refs[i].tensor->shape()));
                adamw_step(opt, refs, grads, lr, cfg.weight_decay);

                if (d_z > 0) {
                    for (std::size_t j = 0; j < rows.size(); ++j) {
                        const std::size_t r = rows[j];
                        const Tensor zg = g.grad(build.latent_nodes[j]);
                        adamw_span(latents.codes.data() + r * d_z, zg.data(),
                                   lat_opt.m.data() + r * d_z, lat_opt.v.data() + r * d_z, d_z,
                                   ++lat_opt.steps[r], lr, 0.0, opt,
                                   "latents.row" + std::to_string(r));
                    }
                }
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                     " (lr " + std::to_string(lr) + "): " + e.what());
        }
        const double mean_loss = epoch_loss / double(dataset.size());
        if (!std::isfinite(mean_loss))
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                     " (lr " + std::to_string(lr) + "): non-finite loss");
        result.loss_history.push_back(mean_loss);
    }
    model.set_training(false);
    return result;
}

void write_loss_history(const std::vector<double>& history, const TrainConfig& cfg,
                        const std::string& path) {
    std::string buf = "epoch,mean_loss,lr\n";
    char line[96];
    for (std::size_t e = 0; e < history.size(); ++e) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", e, history[e],
                      lr_at_epoch(cfg.lr0, cfg.lr_decay, int(e)));
        buf += line;
    }
    write_file_atomic(path, buf);
}

}  // namespace fieldrec
