#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fieldrec/autograd.hpp"

using namespace fieldrec;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = dist(rng);
    return t;
}

}  // namespace

TEST_CASE("generic apply validates primitive id and shapes") {
    Graph g;
    NodeId a = g.input(Tensor({2, 3}));
    NodeId b = g.input(Tensor({4}));
    CHECK_THROWS_AS(g.apply(Op::Add, {a, b}), std::invalid_argument);
    CHECK_THROWS_AS(g.apply(Op::Sin, {a, b}), std::invalid_argument);
    CHECK_THROWS_AS(op_from_name("frobnicate"), std::invalid_argument);
    CHECK(op_from_name("matmul") == Op::MatMul);
    NodeId s = g.apply(op_from_name("sin"), {a});
    CHECK(g.value(s).same_shape(g.value(a)));
}

TEST_CASE("product rule: d(x*y) at (3,5)") {
    Graph g;
    NodeId x = g.input(Tensor::scalar(3.0));
    NodeId y = g.input(Tensor::scalar(5.0));
    NodeId loss = g.sum_all(g.mul(x, y));
    g.backward(loss);
    CHECK(g.grad(x).item() == 5.0);
    CHECK(g.grad(y).item() == 3.0);
}

TEST_CASE("chain rule: d sum(sin(x^2)) at x=1 is 2 cos(1)") {
    Graph g;
    NodeId x = g.input(Tensor::scalar(1.0));
    NodeId loss = g.sum_all(g.sin(g.square(x)));
    g.backward(loss);
    CHECK(g.grad(x).item() == doctest::Approx(2.0 * std::cos(1.0)).epsilon(1e-12));
    CHECK(g.grad(x).item() == doctest::Approx(1.08060).epsilon(1e-5));
}

TEST_CASE("backward requires a scalar loss") {
    Graph g;
    NodeId x = g.input(Tensor({2}, {1.0, 2.0}));
    NodeId y = g.square(x);
    CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
}

TEST_CASE("non-finite forward values surface as errors") {
    Graph g;
    NodeId x = g.input(Tensor::scalar(1000.0));
    CHECK_THROWS_AS(g.exp(x), std::runtime_error);
    NodeId z = g.input(Tensor::scalar(0.0));
    NodeId one = g.input(Tensor::scalar(1.0));
    CHECK_THROWS_AS(g.div(one, z), std::runtime_error);
}

TEST_CASE("quadratic gradient check is near-exact") {
    // f(w) = ||w||^2 has exact central differences
    std::mt19937_64 rng(1);
    std::vector<Tensor> params = {random_tensor({5}, rng)};
    auto builder = [](Graph& g, const std::vector<NodeId>& p) { return g.sum_all(g.square(p[0])); };
    auto report = gradient_check(builder, params, 1e-6);
    CHECK(report.max_rel_error <= 1e-9);
}

TEST_CASE("every primitive passes a finite-difference check on random inputs") {
    std::mt19937_64 rng(42);

    auto check_unary = [&](const char* name, auto&& apply_fn, double lo, double hi) {
        std::vector<Tensor> params = {random_tensor({3, 4}, rng, lo, hi)};
        auto builder = [&](Graph& g, const std::vector<NodeId>& p) { return g.mean_all(apply_fn(g, p[0])); };
        auto report = gradient_check(builder, params, 1e-6);
        INFO("primitive ", name);
        CHECK(report.max_rel_error <= 1e-5);
    };

    check_unary("sin", [](Graph& g, NodeId a) { return g.sin(a); }, -2, 2);
    check_unary("cos", [](Graph& g, NodeId a) { return g.cos(a); }, -2, 2);
    check_unary("exp", [](Graph& g, NodeId a) { return g.exp(a); }, -2, 2);
    check_unary("sqrt", [](Graph& g, NodeId a) { return g.sqrt(a); }, 0.5, 2);
    check_unary("square", [](Graph& g, NodeId a) { return g.square(a); }, -2, 2);
    check_unary("gelu", [](Graph& g, NodeId a) { return g.gelu(a); }, -2, 2);
    check_unary("scale", [](Graph& g, NodeId a) { return g.scale(a, -1.7); }, -2, 2);
    check_unary("add_scalar", [](Graph& g, NodeId a) { return g.add_scalar(a, 0.3); }, -2, 2);
    check_unary("transpose", [](Graph& g, NodeId a) { return g.transpose(a); }, -2, 2);
    check_unary("reshape", [](Graph& g, NodeId a) { return g.reshape(a, {2, 6}); }, -2, 2);
    check_unary("sum_axis", [](Graph& g, NodeId a) { return g.sum_axis(a, 1); }, -2, 2);

    auto check_binary = [&](const char* name, Op op, Shape sa, Shape sb) {
        std::vector<Tensor> params = {random_tensor(sa, rng), random_tensor(sb, rng, 0.5, 2.0)};
        auto builder = [op](Graph& g, const std::vector<NodeId>& p) {
            return g.mean_all(g.square(g.apply(op, {p[0], p[1]})));
        };
        auto report = gradient_check(builder, params, 1e-6);
        INFO("primitive ", name, " shapes ", shape_to_string(sa), shape_to_string(sb));
        CHECK(report.max_rel_error <= 1e-5);
    };

    check_binary("add", Op::Add, {3, 4}, {4});
    check_binary("sub", Op::Sub, {3, 4}, {3, 1});
    check_binary("mul", Op::Mul, {2, 3, 4}, {3, 4});
    check_binary("div", Op::Div, {3, 4}, {4});
    check_binary("matmul", Op::MatMul, {3, 4}, {4, 2});
}

TEST_CASE("adjoint linearity: backward of a sum equals sum of backwards") {
    std::mt19937_64 rng(7);
    Tensor x0 = random_tensor({6}, rng);

    auto grad_of = [&](bool use_sin, bool use_sq, bool combined) {
        Graph g;
        NodeId x = g.input(x0);
        NodeId l1 = g.sum_all(g.sin(x));
        NodeId l2 = g.sum_all(g.square(x));
        NodeId loss = combined ? g.add(l1, l2) : (use_sin ? l1 : l2);
        (void)use_sq;
        g.backward(loss);
        return g.grad(x);
    };

    Tensor g1 = grad_of(true, false, false);
    Tensor g2 = grad_of(false, true, false);
    Tensor gc = grad_of(false, false, true);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(gc.at(i) == g1.at(i) + g2.at(i));  // exact
}

TEST_CASE("repeated forward is bit-identical") {
    std::mt19937_64 rng(9);
    Tensor a = random_tensor({4, 4}, rng);
    Tensor b = random_tensor({4, 4}, rng);
    auto run = [&]() {
        Graph g;
        NodeId loss = g.mean_all(g.gelu(g.matmul(g.input(a), g.input(b))));
        return g.value(loss).item();
    };
    const double v1 = run();
    const double v2 = run();
    CHECK(v1 == v2);
}

TEST_CASE("no-grad leaves receive no adjoint work but report zeros") {
    Graph g;
    NodeId x = g.input(Tensor::scalar(2.0));
    NodeId c = g.constant(Tensor::scalar(3.0));
    NodeId loss = g.sum_all(g.mul(x, c));
    g.backward(loss);
    CHECK(g.grad(x).item() == 3.0);
    CHECK(g.grad(c).item() == 0.0);
}

TEST_CASE("gradient_check flags non-finite probes with the parameter index") {
    std::vector<Tensor> params = {Tensor({1}, {710.0})};
    auto builder = [](Graph& g, const std::vector<NodeId>& p) { return g.sum_all(g.exp(p[0])); };
    CHECK_THROWS_AS(gradient_check(builder, params, 1e-6), std::runtime_error);
}
