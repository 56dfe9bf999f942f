#include "fieldrec/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "fieldrec/training.hpp"

namespace fieldrec {

std::string infer_init_name(InferInit k) {
    return k == InferInit::zeros ? "zeros" : "nearest";
}

InferInit infer_init_from_name(const std::string& s) {
    if (s == "zeros") return InferInit::zeros;
    if (s == "nearest") return InferInit::nearest;
    throw std::invalid_argument("unknown inference init '" + s + "'");
}

Tensor infer_latent(FieldModel& model, const ObservationSet& observations, const InferConfig& cfg,
                    const LatentTable& table, double stamp) {
    const std::size_t d_z = model.latent_dim();
    if (d_z == 0) throw std::invalid_argument("model has no latent code to infer");
    if (observations.points.empty())
        throw std::invalid_argument("latent inference needs at least one observation");
    if (cfg.steps < 1) throw std::invalid_argument("inference needs at least one step");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("inference learning rate must be positive");
    if (cfg.latent_reg < 0.0) throw std::invalid_argument("latent_reg must be nonnegative");

    Tensor z = Tensor::zeros({d_z});
    if (cfg.init == InferInit::nearest) {
        if (table.size() == 0)
            throw std::invalid_argument("nearest-neighbor init needs a latent table");
        if (table.dim() != d_z)
            throw std::invalid_argument("latent table dimension does not match the model");
        std::size_t best = 0;
        for (std::size_t k = 1; k < table.size(); ++k)
            if (std::abs(table.stamps[k] - stamp) < std::abs(table.stamps[best] - stamp)) best = k;
        z = table.row(best);
    }

    const Tensor coords = observation_coords(observations);
    const Tensor targets = observation_values(observations);
    auto refs = model.params();
    OptimizerState hp;
    Tensor m = Tensor::zeros({d_z}), v = Tensor::zeros({d_z});

    for (int step = 0; step < cfg.steps; ++step) {
        try {
            Graph g;
            std::vector<NodeId> nodes;
            nodes.reserve(refs.size());
            for (auto& r : refs) nodes.push_back(g.constant(*r.tensor));
            NodeId zn = g.input(z, true);
            NodeId pred = model.build_forward(g, nodes, coords, zn, 0.0);
            NodeId loss = g.mean_all(g.square(g.sub(pred, g.constant(targets))));
            if (cfg.latent_reg != 0.0)
                loss = g.add(loss, g.scale(g.sum_all(g.square(zn)), cfg.latent_reg));
            g.backward(loss);
            const Tensor zg = g.grad(zn);
            adamw_span(z.data(), zg.data(), m.data(), v.data(), d_z, step + 1, cfg.lr, 0.0, hp,
                       "latent");
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("latent inference diverged at step " +
                                     std::to_string(step) + ": " + e.what());
        }
    }
    return z;
}

Tensor evaluate_points(FieldModel& model, const Tensor& z, const Tensor& coords, double t_norm) {
    return model.predict(coords, z, t_norm);
}

Tensor evaluate_field(FieldModel& model, const Tensor& z, std::size_t n_h, std::size_t n_w,
                      double t_norm) {
    Tensor flat = model.predict(lattice_coords(n_h, n_w), z, t_norm);
    return flat.reshaped(Shape{n_h, n_w});
}

Tensor interpolate_latent(const LatentTable& table, double t) {
    if (table.size() < 2)
        throw std::invalid_argument("interpolation needs at least two stored codes");
    for (std::size_t k = 0; k + 1 < table.size(); ++k)
        if (table.stamps[k + 1] < table.stamps[k])
            throw std::invalid_argument("latent table stamps must be nondecreasing");
    const double lo = table.stamps.front(), hi = table.stamps.back();
    if (t < lo || t > hi)
        throw std::invalid_argument("time " + std::to_string(t) + " outside the stamp range [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) +
                                    "]; extrapolation is not supported");
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table.stamps[k] == t) return table.row(k);

    std::size_t k = 0;
    while (table.stamps[k + 1] < t) ++k;
    const double span = table.stamps[k + 1] - table.stamps[k];
    const double alpha = (t - table.stamps[k]) / span;
    Tensor a = table.row(k), b = table.row(k + 1);
    Tensor out(Shape{table.dim()});
    for (std::size_t i = 0; i < table.dim(); ++i)
        out.at(i) = (1.0 - alpha) * a.at(i) + alpha * b.at(i);
    return out;
}

}  // namespace fieldrec
