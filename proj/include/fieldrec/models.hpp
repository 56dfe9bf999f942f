#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fieldrec/autograd.hpp"

namespace fieldrec {

enum class Arch : uint8_t { mmgn, resmlp, siren, ffn_p, ffn_g };
enum class FilterKind : uint8_t { gabor, fourier, none };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);
std::string filter_kind_name(FilterKind k);
FilterKind filter_kind_from_name(const std::string& s);

// One Gabor atom: exp(-gamma/2 ||x-mu||^2) * trig(w.x + phase).
// Products of atoms stay in this family, which is what makes the
// network output expressible as a linear combination of atoms.
struct GaborTerm {
    Tensor mu;      // (d_x)
    double gamma = 0.0;
    Tensor w;       // (d_x)
    double phase = 0.0;
    bool cosine = false;  // false: sin parity, true: cos parity
};

double gabor_term_eval(const GaborTerm& t, const Tensor& x);

// g1(x)*g2(x) == coeff/2 * (a(x) - b(x)) pointwise.
struct GaborExpansion {
    double coeff = 1.0;
    GaborTerm a;
    GaborTerm b;
};

GaborExpansion gabor_product_expand(const GaborTerm& g1, const GaborTerm& g2);

struct GaborFilterBank {
    Tensor mu;     // (d_h, d_x)
    Tensor gamma;  // (d_h), strictly positive at init
    Tensor w_g;    // (d_h, d_x)
    Tensor b_g;    // (d_h)

    size_t units() const { return gamma.size(); }
    size_t coord_dim() const { return mu.cols(); }
    GaborTerm term(size_t unit) const;
};

// exp(-gamma_j/2 ||x - mu_j||^2) * sin(w_j.x + b_j) for each unit j.
Tensor gabor_apply(const GaborFilterBank& bank, const Tensor& x);

// Trainable codes, one row per training time instance.
struct LatentTable {
    Tensor codes;  // (n_t, d_z)
    std::vector<double> stamps;

    LatentTable() : codes(Shape{0, 0}) {}
    LatentTable(size_t n_t, size_t d_z, std::vector<double> time_stamps);

    size_t size() const { return stamps.size(); }
    size_t dim() const { return codes.cols(); }
    Tensor row(size_t k) const;
    void set_row(size_t k, const Tensor& v);
    // Affine map of the stamp range onto [-1, 1]; a single-instance table maps to 0.
    double t_norm(double stamp) const;
};

struct ParamRef {
    std::string name;
    Tensor* tensor = nullptr;
    bool trainable = true;
};

// Common surface for the decoder and the baselines. Parameters are owned by the
// model; the training loop is the only writer. build_forward only appends to the
// graph, so concurrent read-only evaluation on separate graphs is safe.
class FieldModel {
public:
    virtual ~FieldModel() = default;

    virtual Arch arch() const = 0;
    virtual size_t coord_dim() const = 0;
    virtual size_t latent_dim() const = 0;  // 0 for latent-free baselines

    virtual std::vector<ParamRef> params() = 0;

    // Appends the forward pass for one time instance. param_nodes aligns with
    // params(). coords is (n, d_x) in [-1,1]^d_x. Latent models read z (a d_z
    // vector node) and ignore t_norm; baselines take t_norm as a third input
    // column and require z to be invalid. Returns the (n, 1) prediction node.
    virtual NodeId build_forward(Graph& g, const std::vector<NodeId>& param_nodes,
                                 const Tensor& coords, NodeId z, double t_norm) = 0;

    // Called by the training loop after each forward on the same graph
    // (ResMLP uses it to fold batch statistics into its running averages).
    virtual void post_forward(Graph&) {}
    virtual void set_training(bool) {}

    // Plain evaluation: same graph primitives in the same order as training,
    // so identical inputs reproduce training-time predictions bit for bit.
    Tensor predict(const Tensor& coords, const Tensor& z, double t_norm = 0.0);
};

size_t param_count(FieldModel& model, bool trainable_only = true);

struct MmgnDims {
    size_t d_x = 2;
    size_t d_z = 32;
    size_t d_h = 128;
    size_t L = 3;
};

class MmgnModel : public FieldModel {
public:
    // gamma ~ Gamma(alpha, beta), mu uniform over [-1,1]^d_x, frequency rows
    // scaled so the expected row norm is input_scale / L, linear maps uniform
    // in +-sqrt(6/fan_in), phases uniform in [-pi, pi].
    MmgnModel(const MmgnDims& dims, double input_scale, uint64_t seed,
              FilterKind kind = FilterKind::gabor, double gamma_alpha = 6.0,
              double gamma_beta = 1.0);

    Arch arch() const override { return Arch::mmgn; }
    size_t coord_dim() const override { return dims_.d_x; }
    size_t latent_dim() const override { return dims_.d_z; }
    const MmgnDims& dims() const { return dims_; }
    FilterKind filter_kind() const { return kind_; }
    void set_filter_kind(FilterKind k) { kind_ = k; }

    std::vector<ParamRef> params() override;
    NodeId build_forward(Graph& g, const std::vector<NodeId>& param_nodes,
                         const Tensor& coords, NodeId z, double t_norm) override;

    std::vector<GaborFilterBank> banks;  // L entries; layer i+1 applies banks[i+1]
    std::vector<Tensor> w_h;             // L-1 entries, (d_h, d_h)
    std::vector<Tensor> w_z;             // L-1 entries, (d_h, d_z)
    std::vector<Tensor> b_h;             // L-1 entries, (d_h)
    Tensor w_out;                        // (d_h, 1)
    Tensor b_out;                        // (1)

private:
    MmgnDims dims_;
    FilterKind kind_;
};

// h = g(x); h <- g_next(x) * (W_h h + W_z z + b); out = W_out h + b_out.
Tensor mmgn_forward(MmgnModel& model, const Tensor& z, const Tensor& coords);

class ResMlpModel : public FieldModel {
public:
    ResMlpModel(size_t d_in, size_t width, size_t blocks, uint64_t seed);

    Arch arch() const override { return Arch::resmlp; }
    size_t coord_dim() const override { return d_in_ - 1; }
    size_t latent_dim() const override { return 0; }
    size_t width() const { return width_; }
    size_t block_count() const { return blocks_.size(); }

    std::vector<ParamRef> params() override;
    NodeId build_forward(Graph& g, const std::vector<NodeId>& param_nodes,
                         const Tensor& coords, NodeId z, double t_norm) override;
    void post_forward(Graph& g) override;
    void set_training(bool on) override { training_ = on; }
    bool training() const { return training_; }

    // block(h) = h + fc2(gelu(bn(fc1(h)))); batch statistics in-graph while
    // training, running averages (momentum 0.1, biased variance) at inference.
    struct Block {
        Tensor w1, b1;
        Tensor bn_gamma, bn_beta;
        Tensor bn_mean, bn_var;  // running buffers, not trained
        Tensor w2, b2;
    };

    Tensor w_stem, b_stem;
    std::vector<Block> blocks_;
    Tensor w_out, b_out;

private:
    size_t d_in_, width_;
    bool training_ = true;
    // batch statistics recorded per forward; consumed by post_forward on the
    // same graph, so a step may stack several instance forwards before folding
    std::vector<NodeId> bn_mean_nodes_, bn_var_nodes_;
    Graph* bn_graph_ = nullptr;
};

class SirenModel : public FieldModel {
public:
    // layers-1 sine layers then a linear read-out; every sine layer computes
    // sin(w0 * (W a + b)). First layer weights uniform in +-1/fan_in, the rest
    // in +-sqrt(6/fan_in)/w0.
    SirenModel(size_t d_in, size_t width, size_t layers, double w0, uint64_t seed);

    Arch arch() const override { return Arch::siren; }
    size_t coord_dim() const override { return d_in_ - 1; }
    size_t latent_dim() const override { return 0; }
    double w0() const { return w0_; }

    std::vector<ParamRef> params() override;
    NodeId build_forward(Graph& g, const std::vector<NodeId>& param_nodes,
                         const Tensor& coords, NodeId z, double t_norm) override;

    std::vector<Tensor> weights;  // (out, in) per layer
    std::vector<Tensor> biases;   // (out) per layer

private:
    size_t d_in_;
    double w0_;
};

// Fourier feature network: a fixed element-wise encoding of (x, y, t) followed
// by a GELU MLP. The encoding is computed outside the graph (it has no
// trainable parameters and no gradient is ever needed with respect to it).
class FfnModel : public FieldModel {
public:
    // Positional mode: per input dimension, frequencies freq_constant^(j/(m-1))
    // for j < m, features sin(pi f v), cos(pi f v).
    // Gaussian mode: B is (m, d_in) with entries N(0, sigma^2), features
    // sin(2 pi B x), cos(2 pi B x); B is stored as a frozen buffer.
    FfnModel(Arch which, size_t d_in, size_t width, size_t layers, size_t encode_size,
             double encode_param, uint64_t seed);

    Arch arch() const override { return which_; }
    size_t coord_dim() const override { return d_in_ - 1; }
    size_t latent_dim() const override { return 0; }
    size_t encode_size() const { return encode_size_; }
    size_t encoded_dim() const;

    Tensor encode(const Tensor& xt) const;

    std::vector<ParamRef> params() override;
    NodeId build_forward(Graph& g, const std::vector<NodeId>& param_nodes,
                         const Tensor& coords, NodeId z, double t_norm) override;

    Tensor gaussian_b;            // (m, d_in), frozen; empty in positional mode
    std::vector<Tensor> weights;  // MLP layers after the encoding
    std::vector<Tensor> biases;

private:
    Arch which_;
    size_t d_in_, encode_size_;
    double encode_param_;
};

// Everything the factory needs to build any of the five architectures.
// depth 0 picks the architecture's published default (MMGN 3, ResMLP 6 blocks,
// SIREN 5 layers, FFN 4 layers).
struct ModelSpec {
    Arch arch = Arch::mmgn;
    size_t d_x = 2;
    size_t d_z = 32;
    size_t width = 128;
    size_t depth = 0;
    double input_scale = 256.0;
    FilterKind filter_kind = FilterKind::gabor;
    double gamma_alpha = 6.0;
    double gamma_beta = 1.0;
    double w0 = 30.0;
    size_t ffn_freq_number = 150;    // positional feature count per input dim
    double ffn_freq_constant = 30.0; // positional frequency base
    size_t ffn_encode_size = 128;    // Gaussian feature count
    double ffn_sigma = 10.0;         // Gaussian frequency std
};

size_t resolved_depth(const ModelSpec& spec);
std::unique_ptr<FieldModel> make_model(const ModelSpec& spec, uint64_t seed);

}  // namespace fieldrec
