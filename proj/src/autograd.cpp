#include "fieldrec/autograd.hpp"

#include <cmath>
#include <stdexcept>

namespace fieldrec {

namespace k = kernels;

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::Reshape: return "reshape";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Sqrt: return "sqrt";
        case Op::Square: return "square";
        case Op::Gelu: return "gelu";
        case Op::Scale: return "scale";
        case Op::AddScalar: return "add_scalar";
        case Op::SumAll: return "sum_all";
        case Op::MeanAll: return "mean_all";
        case Op::SumAxis: return "sum_axis";
    }
    return "?";
}

Op op_from_name(const std::string& name) {
    static const Op all[] = {Op::Input,  Op::Add,  Op::Sub,  Op::Mul,    Op::Div,       Op::MatMul, Op::Transpose,
                             Op::Reshape, Op::Sin, Op::Cos,  Op::Exp,    Op::Sqrt,      Op::Square, Op::Gelu,
                             Op::Scale,  Op::AddScalar, Op::SumAll, Op::MeanAll, Op::SumAxis};
    for (Op op : all) {
        if (name == op_name(op)) return op;
    }
    throw std::invalid_argument("unknown primitive id: " + name);
}

namespace {

std::size_t arity(Op op) {
    switch (op) {
        case Op::Input: return 0;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::MatMul: return 2;
        default: return 1;
    }
}

}  // namespace

NodeId Graph::input(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(NodeId id) const {
    if (!id.valid() || static_cast<std::size_t>(id.v) >= nodes_.size()) {
        throw std::invalid_argument("Graph: invalid node id");
    }
    return nodes_[static_cast<std::size_t>(id.v)];
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

NodeId Graph::apply(Op op, const std::vector<NodeId>& inputs, double scalar, std::size_t axis, Shape attr_shape) {
    if (op == Op::Input) throw std::invalid_argument("apply: use Graph::input for leaves");
    if (inputs.size() != arity(op)) {
        throw std::invalid_argument(std::string("apply: ") + op_name(op) + " expects " + std::to_string(arity(op)) +
                                    " inputs, got " + std::to_string(inputs.size()));
    }
    for (NodeId id : inputs) (void)node(id);  // validates

    const Tensor& a = nodes_[inputs[0].v].value;
    Tensor out;
    switch (op) {
        case Op::Add: out = k::add(a, nodes_[inputs[1].v].value); break;
        case Op::Sub: out = k::sub(a, nodes_[inputs[1].v].value); break;
        case Op::Mul: out = k::mul(a, nodes_[inputs[1].v].value); break;
        case Op::Div: out = k::div(a, nodes_[inputs[1].v].value); break;
        case Op::MatMul: out = k::matmul(a, nodes_[inputs[1].v].value); break;
        case Op::Transpose: out = k::transpose(a); break;
        case Op::Reshape: out = a.reshaped(attr_shape); break;
        case Op::Sin: out = k::sin(a); break;
        case Op::Cos: out = k::cos(a); break;
        case Op::Exp: out = k::exp(a); break;
        case Op::Sqrt: out = k::sqrt(a); break;
        case Op::Square: out = k::square(a); break;
        case Op::Gelu: out = k::gelu(a); break;
        case Op::Scale: out = k::scale(a, scalar); break;
        case Op::AddScalar: out = k::add_scalar(a, scalar); break;
        case Op::SumAll: out = k::sum_all(a); break;
        case Op::MeanAll: out = k::mean_all(a); break;
        case Op::SumAxis: out = k::sum_axis(a, axis); break;
        case Op::Input: break;
    }
    if (!out.all_finite()) {
        throw std::runtime_error(std::string("non-finite value produced by primitive '") + op_name(op) + "'");
    }

    Node n;
    n.op = op;
    n.in0 = inputs[0].v;
    n.in1 = inputs.size() > 1 ? inputs[1].v : -1;
    n.value = std::move(out);
    n.scalar = scalar;
    n.axis = axis;
    n.attr_shape = std::move(attr_shape);
    n.requires_grad = nodes_[inputs[0].v].requires_grad || (inputs.size() > 1 && nodes_[inputs[1].v].requires_grad);
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<std::int32_t>(nodes_.size() - 1)};
}

namespace {

void add_into(Tensor& grad, const Tensor& contribution, const Shape& shape) {
    Tensor reduced = k::reduce_to_shape(contribution, shape);
    if (grad.empty() && shape_size(shape) > 0) grad = Tensor::zeros(shape);
    k::accumulate(grad, reduced);
}

}  // namespace

void Graph::backward(NodeId loss) {
    const Node& ln = node(loss);
    if (ln.value.size() != 1) {
        throw std::invalid_argument("backward: loss node must be scalar-shaped, got " +
                                    shape_to_string(ln.value.shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor();
    nodes_[loss.v].grad = Tensor::full(ln.value.shape(), 1.0);

    for (std::int32_t i = loss.v; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.op == Op::Input || n.grad.empty() || !n.requires_grad) continue;
        const Tensor& dy = n.grad;
        Node& a = nodes_[static_cast<std::size_t>(n.in0)];
        Node* b = n.in1 >= 0 ? &nodes_[static_cast<std::size_t>(n.in1)] : nullptr;
        const bool need_a = a.requires_grad;
        const bool need_b = b && b->requires_grad;

        switch (n.op) {
            case Op::Add:
                if (need_a) add_into(a.grad, dy, a.value.shape());
                if (need_b) add_into(b->grad, dy, b->value.shape());
                break;
            case Op::Sub:
                if (need_a) add_into(a.grad, dy, a.value.shape());
                if (need_b) add_into(b->grad, k::scale(dy, -1.0), b->value.shape());
                break;
            case Op::Mul:
                if (need_a) add_into(a.grad, k::mul(dy, b->value), a.value.shape());
                if (need_b) add_into(b->grad, k::mul(dy, a.value), b->value.shape());
                break;
            case Op::Div:
                if (need_a) add_into(a.grad, k::div(dy, b->value), a.value.shape());
                if (need_b) {
                    // d(a/b)/db = -a / b^2
                    Tensor t = k::div(k::mul(dy, a.value), k::square(b->value));
                    add_into(b->grad, k::scale(t, -1.0), b->value.shape());
                }
                break;
            case Op::MatMul:
                if (need_a) add_into(a.grad, k::matmul(dy, k::transpose(b->value)), a.value.shape());
                if (need_b) add_into(b->grad, k::matmul(k::transpose(a.value), dy), b->value.shape());
                break;
            case Op::Transpose:
                if (need_a) add_into(a.grad, k::transpose(dy), a.value.shape());
                break;
            case Op::Reshape:
                if (need_a) add_into(a.grad, dy.reshaped(a.value.shape()), a.value.shape());
                break;
            case Op::Sin:
                if (need_a) add_into(a.grad, k::mul(dy, k::cos(a.value)), a.value.shape());
                break;
            case Op::Cos:
                if (need_a) add_into(a.grad, k::scale(k::mul(dy, k::sin(a.value)), -1.0), a.value.shape());
                break;
            case Op::Exp:
                if (need_a) add_into(a.grad, k::mul(dy, n.value), a.value.shape());
                break;
            case Op::Sqrt:
                if (need_a) add_into(a.grad, k::div(k::scale(dy, 0.5), n.value), a.value.shape());
                break;
            case Op::Square:
                if (need_a) add_into(a.grad, k::mul(dy, k::scale(a.value, 2.0)), a.value.shape());
                break;
            case Op::Gelu:
                if (need_a) add_into(a.grad, k::mul(dy, k::gelu_grad(a.value)), a.value.shape());
                break;
            case Op::Scale:
                if (need_a) add_into(a.grad, k::scale(dy, n.scalar), a.value.shape());
                break;
            case Op::AddScalar:
                if (need_a) add_into(a.grad, dy, a.value.shape());
                break;
            case Op::SumAll:
                if (need_a) add_into(a.grad, Tensor::full(a.value.shape(), dy.item()), a.value.shape());
                break;
            case Op::MeanAll:
                if (need_a) {
                    const double g = dy.item() / static_cast<double>(a.value.size());
                    add_into(a.grad, Tensor::full(a.value.shape(), g), a.value.shape());
                }
                break;
            case Op::SumAxis:
                if (need_a) add_into(a.grad, k::add(dy, Tensor::zeros(a.value.shape())), a.value.shape());
                break;
            case Op::Input: break;
        }
    }
}

Tensor Graph::grad(NodeId id) const {
    const Node& n = node(id);
    if (n.grad.empty()) return Tensor::zeros(n.value.shape());
    return n.grad;
}

GradientCheckReport gradient_check(const GraphBuilder& f, const std::vector<Tensor>& params, double step) {
    if (step <= 0.0) throw std::invalid_argument("gradient_check: step must be positive");

    auto eval = [&](const std::vector<Tensor>& p, std::vector<Tensor>* grads) -> double {
        Graph g;
        std::vector<NodeId> leaves;
        leaves.reserve(p.size());
        for (const Tensor& t : p) leaves.push_back(g.input(t));
        NodeId loss = f(g, leaves);
        if (g.value(loss).size() != 1) throw std::invalid_argument("gradient_check: builder must return a scalar loss");
        if (grads) {
            g.backward(loss);
            grads->clear();
            for (NodeId id : leaves) grads->push_back(g.grad(id));
        }
        return g.value(loss).item();
    };

    std::vector<Tensor> ad_grads;
    eval(params, &ad_grads);

    GradientCheckReport report;
    std::vector<Tensor> probe = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t ei = 0; ei < params[pi].size(); ++ei) {
            const double orig = probe[pi].at(ei);
            probe[pi].at(ei) = orig + step;
            const double lp = eval(probe, nullptr);
            probe[pi].at(ei) = orig - step;
            const double lm = eval(probe, nullptr);
            probe[pi].at(ei) = orig;
            if (!std::isfinite(lp) || !std::isfinite(lm)) {
                throw std::runtime_error("gradient_check: non-finite loss while probing parameter " +
                                         std::to_string(pi) + " entry " + std::to_string(ei));
            }
            const double fd = (lp - lm) / (2.0 * step);
            const double ad = ad_grads[pi].at(ei);
            const double rel = std::abs(ad - fd) / std::max(1e-12, std::abs(ad) + std::abs(fd));
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = pi;
                report.worst_entry = ei;
            }
        }
    }
    return report;
}

}  // namespace fieldrec
