#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fieldrec/tensor.hpp"

namespace fieldrec {

/// Primitive operations recorded on the tape. The set is exactly what the
/// models in this project need; each entry has a hand-written adjoint rule.
enum class Op : std::uint8_t {
    Input,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Transpose,
    Reshape,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Square,
    Gelu,
    Scale,      // c * x, c a fixed attribute
    AddScalar,  // x + c
    SumAll,
    MeanAll,
    SumAxis,  // keeps the reduced axis with extent 1
};

const char* op_name(Op op);
Op op_from_name(const std::string& name);  // throws on unknown id

struct NodeId {
    std::int32_t v = -1;
    bool valid() const { return v >= 0; }
};

/// Define-by-run tape. Nodes are appended in evaluation order, so the
/// sequence is topologically sorted by construction and one reverse sweep
/// visits every node exactly once. Single-writer; build and read from one
/// thread. Distinct graphs are independent.
class Graph {
public:
    struct Node {
        Op op;
        std::int32_t in0 = -1;
        std::int32_t in1 = -1;
        Tensor value;
        Tensor grad;  // empty until touched by backward
        double scalar = 0.0;
        std::size_t axis = 0;
        Shape attr_shape;  // Reshape target
        bool requires_grad = false;
    };

    NodeId input(Tensor value, bool requires_grad = true);
    NodeId constant(Tensor value) { return input(std::move(value), false); }

    /// Generic primitive application: validates shapes, computes the forward
    /// value, checks it is finite, and records the node.
    NodeId apply(Op op, const std::vector<NodeId>& inputs, double scalar = 0.0, std::size_t axis = 0,
                 Shape attr_shape = {});

    NodeId add(NodeId a, NodeId b) { return apply(Op::Add, {a, b}); }
    NodeId sub(NodeId a, NodeId b) { return apply(Op::Sub, {a, b}); }
    NodeId mul(NodeId a, NodeId b) { return apply(Op::Mul, {a, b}); }
    NodeId div(NodeId a, NodeId b) { return apply(Op::Div, {a, b}); }
    NodeId matmul(NodeId a, NodeId b) { return apply(Op::MatMul, {a, b}); }
    NodeId transpose(NodeId a) { return apply(Op::Transpose, {a}); }
    NodeId reshape(NodeId a, Shape s) { return apply(Op::Reshape, {a}, 0.0, 0, std::move(s)); }
    NodeId sin(NodeId a) { return apply(Op::Sin, {a}); }
    NodeId cos(NodeId a) { return apply(Op::Cos, {a}); }
    NodeId exp(NodeId a) { return apply(Op::Exp, {a}); }
    NodeId sqrt(NodeId a) { return apply(Op::Sqrt, {a}); }
    NodeId square(NodeId a) { return apply(Op::Square, {a}); }
    NodeId gelu(NodeId a) { return apply(Op::Gelu, {a}); }
    NodeId scale(NodeId a, double c) { return apply(Op::Scale, {a}, c); }
    NodeId add_scalar(NodeId a, double c) { return apply(Op::AddScalar, {a}, c); }
    NodeId sum_all(NodeId a) { return apply(Op::SumAll, {a}); }
    NodeId mean_all(NodeId a) { return apply(Op::MeanAll, {a}); }
    NodeId sum_axis(NodeId a, std::size_t axis) { return apply(Op::SumAxis, {a}, 0.0, axis); }

    const Tensor& value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss node. Adjoints are accumulated for
    /// every node that (transitively) requires grad; leaves that were never
    /// reached keep an empty grad, which grad() reports as zeros.
    void backward(NodeId loss);

    /// Adjoint of `id` after backward(); zeros if the node was not reached.
    Tensor grad(NodeId id) const;

private:
    const Node& node(NodeId id) const;
    std::vector<Node> nodes_;
};

struct GradientCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;  // index into the parameter list
    std::size_t worst_entry = 0;  // flat index within that parameter
};

/// Builds a scalar loss from parameter leaves; must be deterministic in the
/// parameter values (same builder, same params, same loss).
using GraphBuilder = std::function<NodeId(Graph&, const std::vector<NodeId>&)>;

/// Central-difference check of reverse-mode gradients for every entry of
/// every parameter. Returns max_i |g_ad - g_fd| / max(1e-12, |g_ad| + |g_fd|).
GradientCheckReport gradient_check(const GraphBuilder& f, const std::vector<Tensor>& params, double step);

}  // namespace fieldrec
