#include "fieldrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fieldrec {

std::string shape_to_string(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << ")";
    return os.str();
}

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: shape " + shape_to_string(shape_) + " does not match data length " +
                                    std::to_string(data_.size()));
    }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw std::invalid_argument("Tensor::dim: axis " + std::to_string(axis) + " out of range for " +
                                    shape_to_string(shape_));
    }
    return shape_[axis];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw std::invalid_argument("Tensor::item: tensor has shape " + shape_to_string(shape_));
    }
    return data_[0];
}

Tensor Tensor::reshaped(Shape new_shape) const {
    if (shape_size(new_shape) != data_.size()) {
        throw std::invalid_argument("Tensor::reshaped: cannot view " + shape_to_string(shape_) + " as " +
                                    shape_to_string(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) {
            throw std::invalid_argument("broadcast: incompatible shapes " + shape_to_string(a) + " and " +
                                        shape_to_string(b));
        }
        out[rank - 1 - i] = std::max(da, db);
    }
    return out;
}

namespace kernels {
namespace {

std::vector<std::size_t> row_major_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

// Strides of `s` viewed in an `out`-rank broadcast frame; stretched or missing
// dimensions get stride 0.
std::vector<std::size_t> broadcast_strides(const Shape& s, const Shape& out) {
    const auto native = row_major_strides(s);
    std::vector<std::size_t> st(out.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t oi = out.size() - s.size() + i;
        st[oi] = (s[i] == 1 && out[oi] != 1) ? 0 : native[i];
    }
    return st;
}

template <typename F>
Tensor binary_broadcast(const Tensor& a, const Tensor& b, F&& f) {
    if (a.same_shape(b)) {  // fast path, no index bookkeeping
        Tensor out(a.shape());
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.data();
        const std::size_t n = a.size();
        for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
        return out;
    }
    const Shape os = broadcast_shape(a.shape(), b.shape());
    Tensor out(os);
    const auto sa = broadcast_strides(a.shape(), os);
    const auto sb = broadcast_strides(b.shape(), os);
    const std::size_t rank = os.size();
    std::vector<std::size_t> idx(rank, 0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    std::size_t ia = 0, ib = 0;
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        po[i] = f(pa[ia], pb[ib]);
        // odometer increment
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < os[d]) break;
            ia -= sa[d] * os[d];
            ib -= sb[d] * os[d];
            idx[d] = 0;
        }
    }
    return out;
}

template <typename F>
Tensor unary(const Tensor& a, F&& f) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, [](double x, double y) { return x * y; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_broadcast(a, b, [](double x, double y) { return x / y; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument("matmul: expected rank-2 operands, got " + shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()));
    }
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // ikj order: inner loop streams contiguously over B and C rows.
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw std::invalid_argument("transpose: expected rank-2 operand, got " + shape_to_string(a.shape()));
    }
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
    return out;
}

Tensor sin(const Tensor& a) {
    return unary(a, [](double x) { return std::sin(x); });
}

Tensor cos(const Tensor& a) {
    return unary(a, [](double x) { return std::cos(x); });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); });
}

Tensor sqrt(const Tensor& a) {
    return unary(a, [](double x) { return std::sqrt(x); });
}

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tensor gelu(const Tensor& a) {
    return unary(a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
}

Tensor gelu_grad(const Tensor& a) {
    return unary(a, [](double x) {
        const double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return phi + x * pdf;
    });
}

Tensor scale(const Tensor& a, double c) {
    return unary(a, [c](double x) { return c * x; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary(a, [c](double x) { return x + c; });
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return Tensor::scalar(s);
}

Tensor mean_all(const Tensor& a) {
    if (a.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    return Tensor::scalar(sum_all(a).item() / static_cast<double>(a.size()));
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
    if (axis >= a.rank()) {
        throw std::invalid_argument("sum_axis: axis " + std::to_string(axis) + " out of range for " +
                                    shape_to_string(a.shape()));
    }
    Shape os = a.shape();
    os[axis] = 1;
    Tensor out(os);
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.shape()[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.shape()[i];
    const std::size_t extent = a.shape()[axis];
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        double* orow = po + o * inner;
        for (std::size_t e = 0; e < extent; ++e) {
            const double* arow = pa + (o * extent + e) * inner;
            for (std::size_t i = 0; i < inner; ++i) orow[i] += arow[i];
        }
    }
    return out;
}

Tensor reduce_to_shape(const Tensor& src, const Shape& target_shape) {
    if (src.shape() == target_shape) return src;
    Tensor out(target_shape);
    const auto st = broadcast_strides(target_shape, src.shape());
    const std::size_t rank = src.rank();
    std::vector<std::size_t> idx(rank, 0);
    const double* ps = src.data();
    double* po = out.data();
    std::size_t io = 0;
    const std::size_t n = src.size();
    for (std::size_t i = 0; i < n; ++i) {
        po[io] += ps[i];
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            io += st[d];
            if (idx[d] < src.shape()[d]) break;
            io -= st[d] * src.shape()[d];
            idx[d] = 0;
        }
    }
    return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
    if (!dst.same_shape(src)) {
        throw std::invalid_argument("accumulate: shape mismatch " + shape_to_string(dst.shape()) + " vs " +
                                    shape_to_string(src.shape()));
    }
    double* pd = dst.data();
    const double* ps = src.data();
    const std::size_t n = dst.size();
    for (std::size_t i = 0; i < n; ++i) pd[i] += ps[i];
}

}  // namespace kernels
}  // namespace fieldrec
