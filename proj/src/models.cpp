#include "fieldrec/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fieldrec {

namespace {

const double kPi = 3.14159265358979323846;

void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = dist(rng);
}

void fill_normal(Tensor& t, std::mt19937_64& rng, double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = dist(rng);
}

Tensor linear_weight(std::size_t out, std::size_t in, std::mt19937_64& rng, double scale = 1.0) {
    Tensor w(Shape{out, in});
    const double bound = scale * std::sqrt(6.0 / double(in));
    fill_uniform(w, rng, -bound, bound);
    return w;
}

// Framework-default bias range, uniform in +-1/sqrt(fan_in).
Tensor linear_bias(std::size_t out, std::size_t in, std::mt19937_64& rng) {
    Tensor b(Shape{out});
    const double bound = 1.0 / std::sqrt(double(in));
    fill_uniform(b, rng, -bound, bound);
    return b;
}

// E ||v|| for v ~ N(0, I_d): sqrt(2) * Gamma((d+1)/2) / Gamma(d/2).
double expected_gaussian_norm(std::size_t d) {
    return std::sqrt(2.0) * std::exp(std::lgamma((double(d) + 1.0) / 2.0) - std::lgamma(double(d) / 2.0));
}

void check_coords(const Tensor& coords, std::size_t d_x) {
    if (coords.rank() != 2 || coords.cols() != d_x)
        throw std::invalid_argument("coordinate batch must be (n, " + std::to_string(d_x) +
                                    "), got " + shape_to_string(coords.shape()));
}

// Baselines take time as an extra input column.
Tensor with_time_column(const Tensor& coords, double t_norm) {
    Tensor xt(Shape{coords.rows(), coords.cols() + 1});
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        for (std::size_t d = 0; d < coords.cols(); ++d) xt(i, d) = coords(i, d);
        xt(i, coords.cols()) = t_norm;
    }
    return xt;
}

NodeId linear_node(Graph& g, NodeId a, NodeId w, NodeId b) {
    return g.add(g.matmul(a, g.transpose(w)), b);
}

}  // namespace

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::mmgn: return "mmgn";
        case Arch::resmlp: return "resmlp";
        case Arch::siren: return "siren";
        case Arch::ffn_p: return "ffn_p";
        case Arch::ffn_g: return "ffn_g";
    }
    throw std::invalid_argument("unknown architecture id");
}

Arch arch_from_name(const std::string& s) {
    if (s == "mmgn") return Arch::mmgn;
    if (s == "resmlp") return Arch::resmlp;
    if (s == "siren") return Arch::siren;
    if (s == "ffn_p") return Arch::ffn_p;
    if (s == "ffn_g") return Arch::ffn_g;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

std::string filter_kind_name(FilterKind k) {
    switch (k) {
        case FilterKind::gabor: return "gabor";
        case FilterKind::fourier: return "fourier";
        case FilterKind::none: return "none";
    }
    throw std::invalid_argument("unknown filter kind id");
}

FilterKind filter_kind_from_name(const std::string& s) {
    if (s == "gabor") return FilterKind::gabor;
    if (s == "fourier") return FilterKind::fourier;
    if (s == "none") return FilterKind::none;
    throw std::invalid_argument("unknown filter kind '" + s + "'");
}

double gabor_term_eval(const GaborTerm& t, const Tensor& x) {
    if (x.size() != t.mu.size())
        throw std::invalid_argument("gabor term expects " + std::to_string(t.mu.size()) +
                                    " coordinates, got " + std::to_string(x.size()));
    double d2 = 0.0, arg = t.phase;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x.at(d) - t.mu.at(d);
        d2 += diff * diff;
        arg += t.w.at(d) * x.at(d);
    }
    const double env = t.gamma == 0.0 ? 1.0 : std::exp(-0.5 * t.gamma * d2);
    return env * (t.cosine ? std::cos(arg) : std::sin(arg));
}

GaborExpansion gabor_product_expand(const GaborTerm& g1, const GaborTerm& g2) {
    const std::size_t d = g1.mu.size();
    if (g2.mu.size() != d)
        throw std::invalid_argument("gabor terms disagree on coordinate dimension: " +
                                    std::to_string(d) + " vs " + std::to_string(g2.mu.size()));

    GaborExpansion e;
    const double gamma_bar = g1.gamma + g2.gamma;
    Tensor mu_bar = Tensor::zeros({d});
    if (gamma_bar > 0.0) {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            mu_bar.at(i) = (g1.gamma * g1.mu.at(i) + g2.gamma * g2.mu.at(i)) / gamma_bar;
            const double diff = g1.mu.at(i) - g2.mu.at(i);
            dist2 += diff * diff;
        }
        e.coeff = std::exp(-0.5 * g1.gamma * g2.gamma / gamma_bar * dist2);
    }

    Tensor w_minus(Shape{d}), w_plus(Shape{d});
    for (std::size_t i = 0; i < d; ++i) {
        w_minus.at(i) = g1.w.at(i) - g2.w.at(i);
        w_plus.at(i) = g1.w.at(i) + g2.w.at(i);
    }
    const double p_minus = g1.phase - g2.phase;
    const double p_plus = g1.phase + g2.phase;

    auto term = [&](Tensor w, double phase, bool cosine) {
        return GaborTerm{mu_bar, gamma_bar, std::move(w), phase, cosine};
    };
    // product-to-sum identities, with sign flips folded into +pi phase shifts
    // so the result is always coeff/2 * (a - b)
    if (!g1.cosine && !g2.cosine) {  // sin sin = [cos(A-B) - cos(A+B)] / 2
        e.a = term(w_minus, p_minus, true);
        e.b = term(w_plus, p_plus, true);
    } else if (g1.cosine && g2.cosine) {  // cos cos = [cos(A-B) + cos(A+B)] / 2
        e.a = term(w_minus, p_minus, true);
        e.b = term(w_plus, p_plus + kPi, true);
    } else if (!g1.cosine && g2.cosine) {  // sin cos = [sin(A-B) + sin(A+B)] / 2
        e.a = term(w_minus, p_minus, false);
        e.b = term(w_plus, p_plus + kPi, false);
    } else {  // cos sin = [sin(A+B) - sin(A-B)] / 2
        e.a = term(w_plus, p_plus, false);
        e.b = term(w_minus, p_minus, false);
    }
    return e;
}

GaborTerm GaborFilterBank::term(std::size_t unit) const {
    const std::size_t d = coord_dim();
    GaborTerm t;
    t.mu = Tensor(Shape{d});
    t.w = Tensor(Shape{d});
    for (std::size_t i = 0; i < d; ++i) {
        t.mu.at(i) = mu(unit, i);
        t.w.at(i) = w_g(unit, i);
    }
    t.gamma = gamma.at(unit);
    t.phase = b_g.at(unit);
    t.cosine = false;
    return t;
}

Tensor gabor_apply(const GaborFilterBank& bank, const Tensor& x) {
    if (x.size() != bank.coord_dim())
        throw std::invalid_argument("gabor bank expects " + std::to_string(bank.coord_dim()) +
                                    " coordinates, got " + std::to_string(x.size()));
    Tensor out(Shape{bank.units()});
    for (std::size_t j = 0; j < bank.units(); ++j) {
        double d2 = 0.0, arg = bank.b_g.at(j);
        for (std::size_t d = 0; d < x.size(); ++d) {
            const double diff = x.at(d) - bank.mu(j, d);
            d2 += diff * diff;
            arg += bank.w_g(j, d) * x.at(d);
        }
        out.at(j) = std::exp(-0.5 * bank.gamma.at(j) * d2) * std::sin(arg);
    }
    return out;
}

LatentTable::LatentTable(std::size_t n_t, std::size_t d_z, std::vector<double> time_stamps)
    : codes(Shape{n_t, d_z}), stamps(std::move(time_stamps)) {
    if (stamps.size() != n_t)
        throw std::invalid_argument("latent table needs one stamp per code: " + std::to_string(n_t) +
                                    " codes, " + std::to_string(stamps.size()) + " stamps");
}

Tensor LatentTable::row(std::size_t k) const {
    Tensor r(Shape{dim()});
    for (std::size_t i = 0; i < dim(); ++i) r.at(i) = codes(k, i);
    return r;
}

void LatentTable::set_row(std::size_t k, const Tensor& v) {
    if (v.size() != dim()) throw std::invalid_argument("latent row dimension mismatch");
    for (std::size_t i = 0; i < dim(); ++i) codes(k, i) = v.at(i);
}

double LatentTable::t_norm(double stamp) const {
    double lo = stamps.front(), hi = stamps.front();
    for (double s : stamps) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (hi == lo) return 0.0;
    return -1.0 + 2.0 * (stamp - lo) / (hi - lo);
}

Tensor FieldModel::predict(const Tensor& coords, const Tensor& z, double t_norm) {
    Graph g;
    auto refs = params();
    std::vector<NodeId> nodes;
    nodes.reserve(refs.size());
    for (auto& r : refs) nodes.push_back(g.constant(*r.tensor));
    NodeId zn;
    if (latent_dim() > 0) {
        if (z.size() != latent_dim())
            throw std::invalid_argument("latent vector must have " + std::to_string(latent_dim()) +
                                        " entries, got " + std::to_string(z.size()));
        zn = g.constant(z);
    } else if (!z.empty()) {
        throw std::invalid_argument("model takes no latent code");
    }
    NodeId out = build_forward(g, nodes, coords, zn, t_norm);
    const Tensor& v = g.value(out);
    return v.reshaped(Shape{v.rows()});
}

std::size_t param_count(FieldModel& model, bool trainable_only) {
    std::size_t n = 0;
    for (const auto& r : model.params())
        if (!trainable_only || r.trainable) n += r.tensor->size();
    return n;
}

MmgnModel::MmgnModel(const MmgnDims& dims, double input_scale, std::uint64_t seed, FilterKind kind,
                     double gamma_alpha, double gamma_beta)
    : w_out(Shape{dims.d_h, 1}), b_out(Tensor::zeros({1})), dims_(dims), kind_(kind) {
    if (dims.d_x < 1 || dims.d_z < 1 || dims.d_h < 1 || dims.L < 1)
        throw std::invalid_argument("all decoder dimensions must be >= 1");
    if (!(input_scale > 0.0)) throw std::invalid_argument("input_scale must be positive");
    if (!(gamma_alpha > 0.0) || !(gamma_beta > 0.0))
        throw std::invalid_argument("gamma distribution parameters must be positive");

    std::mt19937_64 rng(seed);
    // Gamma(alpha, beta) with beta a rate parameter
    std::gamma_distribution<double> gamma_dist(gamma_alpha, 1.0 / gamma_beta);
    const double freq_scale = (input_scale / double(dims.L)) / expected_gaussian_norm(dims.d_x);

    // Draw order is part of the determinism contract: per bank mu, gamma,
    // w_g, b_g; then per layer w_h, w_z; then the output map.
    banks.resize(dims.L);
    for (auto& bank : banks) {
        bank.mu = Tensor(Shape{dims.d_h, dims.d_x});
        fill_uniform(bank.mu, rng, -1.0, 1.0);
        bank.gamma = Tensor(Shape{dims.d_h});
        for (std::size_t j = 0; j < dims.d_h; ++j) bank.gamma.at(j) = gamma_dist(rng);
        bank.w_g = Tensor(Shape{dims.d_h, dims.d_x});
        fill_normal(bank.w_g, rng, 0.0, 1.0);
        for (std::size_t i = 0; i < bank.w_g.size(); ++i) bank.w_g.at(i) *= freq_scale;
        bank.b_g = Tensor(Shape{dims.d_h});
        fill_uniform(bank.b_g, rng, -kPi, kPi);
    }
    for (std::size_t i = 0; i + 1 < dims.L; ++i) {
        w_h.push_back(linear_weight(dims.d_h, dims.d_h, rng));
        w_z.push_back(linear_weight(dims.d_h, dims.d_z, rng));
        b_h.push_back(Tensor::zeros({dims.d_h}));
    }
    {
        Tensor w = linear_weight(1, dims.d_h, rng);
        for (std::size_t j = 0; j < dims.d_h; ++j) w_out(j, 0) = w.at(j);
    }
}

std::vector<ParamRef> MmgnModel::params() {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < banks.size(); ++i) {
        const std::string p = "filters." + std::to_string(i) + ".";
        out.push_back({p + "mu", &banks[i].mu, true});
        out.push_back({p + "gamma", &banks[i].gamma, true});
        out.push_back({p + "w_g", &banks[i].w_g, true});
        out.push_back({p + "b_g", &banks[i].b_g, true});
    }
    for (std::size_t i = 0; i < w_h.size(); ++i) {
        const std::string p = "layers." + std::to_string(i) + ".";
        out.push_back({p + "w_h", &w_h[i], true});
        out.push_back({p + "w_z", &w_z[i], true});
        out.push_back({p + "b_h", &b_h[i], true});
    }
    out.push_back({"out.w", &w_out, true});
    out.push_back({"out.b", &b_out, true});
    return out;
}

NodeId MmgnModel::build_forward(Graph& g, const std::vector<NodeId>& p, const Tensor& coords,
                                NodeId z, double) {
    check_coords(coords, dims_.d_x);
    if (!z.valid() || g.value(z).size() != dims_.d_z)
        throw std::invalid_argument("decoder expects a latent vector with " +
                                    std::to_string(dims_.d_z) + " entries");
    const std::size_t n = coords.rows();
    const std::size_t base_layers = 4 * dims_.L;
    NodeId x = g.constant(coords);

    auto bank_node = [&](std::size_t i) -> NodeId {
        if (kind_ == FilterKind::none) return g.constant(Tensor::full({n, dims_.d_h}, 1.0));
        NodeId s = g.sin(g.add(g.matmul(x, g.transpose(p[4 * i + 2])), p[4 * i + 3]));
        if (kind_ == FilterKind::fourier) return s;
        NodeId xr = g.reshape(x, {n, 1, dims_.d_x});
        NodeId d2 = g.reshape(g.sum_axis(g.square(g.sub(xr, p[4 * i])), 2), {n, dims_.d_h});
        NodeId env = g.exp(g.scale(g.mul(d2, p[4 * i + 1]), -0.5));
        return g.mul(env, s);
    };

    NodeId h = bank_node(0);
    NodeId z_row = g.reshape(z, {1, dims_.d_z});
    for (std::size_t i = 0; i + 1 < dims_.L; ++i) {
        NodeId pre = g.add(g.add(g.matmul(h, g.transpose(p[base_layers + 3 * i])),
                                 g.matmul(z_row, g.transpose(p[base_layers + 3 * i + 1]))),
                           p[base_layers + 3 * i + 2]);
        h = g.mul(bank_node(i + 1), pre);
    }
    const std::size_t out_base = base_layers + 3 * (dims_.L - 1);
    return g.add(g.matmul(h, p[out_base]), p[out_base + 1]);
}

Tensor mmgn_forward(MmgnModel& model, const Tensor& z, const Tensor& coords) {
    return model.predict(coords, z);
}

ResMlpModel::ResMlpModel(std::size_t d_in, std::size_t width, std::size_t blocks, std::uint64_t seed)
    : d_in_(d_in), width_(width) {
    if (d_in < 1 || width < 1 || blocks < 1)
        throw std::invalid_argument("resmlp dimensions must be >= 1");
    std::mt19937_64 rng(seed);
    w_stem = linear_weight(width, d_in, rng);
    b_stem = linear_bias(width, d_in, rng);
    blocks_.resize(blocks);
    for (auto& blk : blocks_) {
        blk.w1 = linear_weight(width, width, rng);
        blk.b1 = linear_bias(width, width, rng);
        blk.bn_gamma = Tensor::full({width}, 1.0);
        blk.bn_beta = Tensor::zeros({width});
        blk.bn_mean = Tensor::zeros({width});
        blk.bn_var = Tensor::full({width}, 1.0);
        blk.w2 = linear_weight(width, width, rng);
        blk.b2 = linear_bias(width, width, rng);
    }
    w_out = Tensor(Shape{width, 1});
    {
        Tensor w = linear_weight(1, width, rng);
        for (std::size_t j = 0; j < width; ++j) w_out(j, 0) = w.at(j);
    }
    b_out = linear_bias(1, width, rng);
}

std::vector<ParamRef> ResMlpModel::params() {
    std::vector<ParamRef> out;
    out.push_back({"stem.w", &w_stem, true});
    out.push_back({"stem.b", &b_stem, true});
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const std::string p = "blocks." + std::to_string(i) + ".";
        auto& blk = blocks_[i];
        out.push_back({p + "fc1.w", &blk.w1, true});
        out.push_back({p + "fc1.b", &blk.b1, true});
        out.push_back({p + "bn.gamma", &blk.bn_gamma, true});
        out.push_back({p + "bn.beta", &blk.bn_beta, true});
        out.push_back({p + "bn.running_mean", &blk.bn_mean, false});
        out.push_back({p + "bn.running_var", &blk.bn_var, false});
        out.push_back({p + "fc2.w", &blk.w2, true});
        out.push_back({p + "fc2.b", &blk.b2, true});
    }
    out.push_back({"out.w", &w_out, true});
    out.push_back({"out.b", &b_out, true});
    return out;
}

NodeId ResMlpModel::build_forward(Graph& g, const std::vector<NodeId>& p, const Tensor& coords,
                                  NodeId z, double t_norm) {
    check_coords(coords, d_in_ - 1);
    if (z.valid()) throw std::invalid_argument("resmlp takes no latent code");
    const std::size_t n = coords.rows();
    const double eps = 1e-5;
    if (bn_graph_ != &g) {
        bn_mean_nodes_.clear();
        bn_var_nodes_.clear();
        bn_graph_ = &g;
    }

    NodeId a = g.constant(with_time_column(coords, t_norm));
    NodeId h = linear_node(g, a, p[0], p[1]);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const std::size_t base = 2 + 8 * i;
        NodeId t1 = linear_node(g, h, p[base], p[base + 1]);
        NodeId norm;
        if (training_) {
            NodeId mean = g.scale(g.sum_axis(t1, 0), 1.0 / double(n));
            NodeId centered = g.sub(t1, mean);
            NodeId var = g.scale(g.sum_axis(g.square(centered), 0), 1.0 / double(n));
            norm = g.div(centered, g.sqrt(g.add_scalar(var, eps)));
            bn_mean_nodes_.push_back(mean);
            bn_var_nodes_.push_back(var);
        } else {
            norm = g.div(g.sub(t1, p[base + 4]), g.sqrt(g.add_scalar(p[base + 5], eps)));
        }
        NodeId y = g.add(g.mul(norm, p[base + 2]), p[base + 3]);
        NodeId t2 = linear_node(g, g.gelu(y), p[base + 6], p[base + 7]);
        h = g.add(h, t2);
    }
    const std::size_t out_base = 2 + 8 * blocks_.size();
    return g.add(g.matmul(h, p[out_base]), p[out_base + 1]);
}

void ResMlpModel::post_forward(Graph& g) {
    if (!training_ || bn_graph_ != &g) return;
    const double momentum = 0.1;
    // one (mean, var) pair per block per recorded forward, in build order
    for (std::size_t k = 0; k < bn_mean_nodes_.size(); ++k) {
        Block& blk = blocks_[k % blocks_.size()];
        const Tensor& m = g.value(bn_mean_nodes_[k]);
        const Tensor& v = g.value(bn_var_nodes_[k]);
        for (std::size_t j = 0; j < width_; ++j) {
            blk.bn_mean.at(j) = (1.0 - momentum) * blk.bn_mean.at(j) + momentum * m.at(j);
            blk.bn_var.at(j) = (1.0 - momentum) * blk.bn_var.at(j) + momentum * v.at(j);
        }
    }
    bn_mean_nodes_.clear();
    bn_var_nodes_.clear();
    bn_graph_ = nullptr;
}

SirenModel::SirenModel(std::size_t d_in, std::size_t width, std::size_t layers, double w0,
                       std::uint64_t seed)
    : d_in_(d_in), w0_(w0) {
    if (d_in < 1 || width < 1 || layers < 2)
        throw std::invalid_argument("siren needs at least two layers");
    if (!(w0 > 0.0)) throw std::invalid_argument("w0 must be positive");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> dims_in, dims_out;
    for (std::size_t i = 0; i < layers; ++i) {
        dims_in.push_back(i == 0 ? d_in : width);
        dims_out.push_back(i + 1 == layers ? 1 : width);
    }
    for (std::size_t i = 0; i < layers; ++i) {
        Tensor w(Shape{dims_out[i], dims_in[i]});
        if (i == 0) {
            // first layer spans one period over the input box
            const double bound = 1.0 / double(dims_in[i]);
            fill_uniform(w, rng, -bound, bound);
        } else {
            const double bound = std::sqrt(6.0 / double(dims_in[i])) / w0;
            fill_uniform(w, rng, -bound, bound);
        }
        weights.push_back(std::move(w));
        biases.push_back(linear_bias(dims_out[i], dims_in[i], rng));
    }
}

std::vector<ParamRef> SirenModel::params() {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::string p = "layers." + std::to_string(i) + ".";
        out.push_back({p + "w", &weights[i], true});
        out.push_back({p + "b", &biases[i], true});
    }
    return out;
}

NodeId SirenModel::build_forward(Graph& g, const std::vector<NodeId>& p, const Tensor& coords,
                                 NodeId z, double t_norm) {
    check_coords(coords, d_in_ - 1);
    if (z.valid()) throw std::invalid_argument("siren takes no latent code");
    NodeId a = g.constant(with_time_column(coords, t_norm));
    for (std::size_t i = 0; i + 1 < weights.size(); ++i)
        a = g.sin(g.scale(linear_node(g, a, p[2 * i], p[2 * i + 1]), w0_));
    const std::size_t last = weights.size() - 1;
    return linear_node(g, a, p[2 * last], p[2 * last + 1]);
}

FfnModel::FfnModel(Arch which, std::size_t d_in, std::size_t width, std::size_t layers,
                   std::size_t encode_size, double encode_param, std::uint64_t seed)
    : which_(which), d_in_(d_in), encode_size_(encode_size), encode_param_(encode_param) {
    if (which != Arch::ffn_p && which != Arch::ffn_g)
        throw std::invalid_argument("ffn model must be ffn_p or ffn_g");
    if (d_in < 1 || width < 1 || layers < 2 || encode_size < 1)
        throw std::invalid_argument("ffn dimensions must be >= 1 with at least two layers");
    if (!(encode_param > 0.0)) throw std::invalid_argument("encoding parameter must be positive");
    std::mt19937_64 rng(seed);
    if (which == Arch::ffn_g) {
        gaussian_b = Tensor(Shape{encode_size, d_in});
        fill_normal(gaussian_b, rng, 0.0, encode_param);
    }
    const std::size_t enc = encoded_dim();
    for (std::size_t i = 0; i < layers; ++i) {
        const std::size_t in = i == 0 ? enc : width;
        const std::size_t out = i + 1 == layers ? 1 : width;
        weights.push_back(linear_weight(out, in, rng));
        biases.push_back(linear_bias(out, in, rng));
    }
}

std::size_t FfnModel::encoded_dim() const {
    return which_ == Arch::ffn_p ? 2 * encode_size_ * d_in_ : 2 * encode_size_;
}

Tensor FfnModel::encode(const Tensor& xt) const {
    if (xt.rank() != 2 || xt.cols() != d_in_)
        throw std::invalid_argument("ffn input must be (n, " + std::to_string(d_in_) + "), got " +
                                    shape_to_string(xt.shape()));
    const std::size_t n = xt.rows();
    Tensor out(Shape{n, encoded_dim()});
    if (which_ == Arch::ffn_p) {
        // per input dimension: sin(pi f_j v), cos(pi f_j v) with geometric f_j
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t c = 0;
            for (std::size_t d = 0; d < d_in_; ++d) {
                for (std::size_t j = 0; j < encode_size_; ++j) {
                    const double f =
                        encode_size_ == 1
                            ? 1.0
                            : std::pow(encode_param_, double(j) / double(encode_size_ - 1));
                    const double arg = kPi * f * xt(i, d);
                    out(i, c++) = std::sin(arg);
                    out(i, c++) = std::cos(arg);
                }
            }
        }
    } else {
        // sin block then cos block of 2 pi B x
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < encode_size_; ++j) {
                double dot = 0.0;
                for (std::size_t d = 0; d < d_in_; ++d) dot += gaussian_b(j, d) * xt(i, d);
                out(i, j) = std::sin(2.0 * kPi * dot);
                out(i, encode_size_ + j) = std::cos(2.0 * kPi * dot);
            }
        }
    }
    return out;
}

std::vector<ParamRef> FfnModel::params() {
    std::vector<ParamRef> out;
    if (which_ == Arch::ffn_g) out.push_back({"encode.b_matrix", &gaussian_b, false});
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::string p = "layers." + std::to_string(i) + ".";
        out.push_back({p + "w", &weights[i], true});
        out.push_back({p + "b", &biases[i], true});
    }
    return out;
}

NodeId FfnModel::build_forward(Graph& g, const std::vector<NodeId>& p, const Tensor& coords,
                               NodeId z, double t_norm) {
    check_coords(coords, d_in_ - 1);
    if (z.valid()) throw std::invalid_argument("ffn takes no latent code");
    const std::size_t first = which_ == Arch::ffn_g ? 1 : 0;  // skip the frozen B matrix
    NodeId a = g.constant(encode(with_time_column(coords, t_norm)));
    for (std::size_t i = 0; i + 1 < weights.size(); ++i)
        a = g.gelu(linear_node(g, a, p[first + 2 * i], p[first + 2 * i + 1]));
    const std::size_t last = weights.size() - 1;
    return linear_node(g, a, p[first + 2 * last], p[first + 2 * last + 1]);
}

std::size_t resolved_depth(const ModelSpec& spec) {
    if (spec.depth > 0) return spec.depth;
    switch (spec.arch) {
        case Arch::mmgn: return 3;
        case Arch::resmlp: return 6;
        case Arch::siren: return 5;
        case Arch::ffn_p:
        case Arch::ffn_g: return 4;
    }
    throw std::invalid_argument("unknown architecture id");
}

std::unique_ptr<FieldModel> make_model(const ModelSpec& spec, std::uint64_t seed) {
    const std::size_t depth = resolved_depth(spec);
    const std::size_t d_in = spec.d_x + 1;
    switch (spec.arch) {
        case Arch::mmgn:
            return std::make_unique<MmgnModel>(MmgnDims{spec.d_x, spec.d_z, spec.width, depth},
                                               spec.input_scale, seed, spec.filter_kind,
                                               spec.gamma_alpha, spec.gamma_beta);
        case Arch::resmlp:
            return std::make_unique<ResMlpModel>(d_in, spec.width, depth, seed);
        case Arch::siren:
            return std::make_unique<SirenModel>(d_in, spec.width, depth, spec.w0, seed);
        case Arch::ffn_p:
            return std::make_unique<FfnModel>(Arch::ffn_p, d_in, spec.width, depth,
                                              spec.ffn_freq_number, spec.ffn_freq_constant, seed);
        case Arch::ffn_g:
            return std::make_unique<FfnModel>(Arch::ffn_g, d_in, spec.width, depth,
                                              spec.ffn_encode_size, spec.ffn_sigma, seed);
    }
    throw std::invalid_argument("unknown architecture id");
}

}  // namespace fieldrec
