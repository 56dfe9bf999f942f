#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldrec {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& s);

/// Dense row-major array of 64-bit floats. The single numeric container for
/// parameters, activations and gradients.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t dim(std::size_t axis) const;
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    double& at(std::size_t i) { return data_[i]; }
    double at(std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    double item() const;  // throws unless size() == 1

    Tensor reshaped(Shape new_shape) const;  // same element count

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t shape_size(const Shape& s);

/// numpy-style trailing-dimension broadcast of two shapes; throws on mismatch.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Elementwise kernels used by the autograd engine. All broadcasting follows
// the trailing-dimension rule; no implicit transposes.
namespace kernels {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);  // rank-2 only
Tensor transpose(const Tensor& a);                // rank-2 only

Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor gelu(const Tensor& a);       // exact erf form
Tensor gelu_grad(const Tensor& a);  // d gelu / dx, used by the adjoint rule
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor sum_all(const Tensor& a);   // -> scalar shape {1}
Tensor mean_all(const Tensor& a);  // -> scalar shape {1}
Tensor sum_axis(const Tensor& a, std::size_t axis);  // keeps the axis with extent 1

/// Sum `src` down to `target_shape` (inverse of broadcasting); used when
/// accumulating adjoints of broadcast operands.
Tensor reduce_to_shape(const Tensor& src, const Shape& target_shape);

/// dst += src, shapes must match exactly.
void accumulate(Tensor& dst, const Tensor& src);

}  // namespace kernels

}  // namespace fieldrec
