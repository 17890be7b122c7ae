#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgtn {

using Index = std::size_t;

/// Raised for every shape, mode or extent mismatch. No operation in this
/// library broadcasts implicitly.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered mode extents (I1, ..., IN). Order 0 is a scalar.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<Index> dims);
    explicit Shape(std::vector<Index> dims);

    Index order() const { return dims_.size(); }
    Index size() const;
    /// Extent of the 0-based axis `axis`.
    Index operator[](Index axis) const { return dims_[axis]; }
    /// Extent of the 1-based mode `mode`.
    Index mode(Index mode) const;
    const std::vector<Index>& dims() const { return dims_; }

    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<Index> dims_;
};

/// Dense order-N array of doubles stored in Little-Endian order: the first
/// mode varies fastest, so entry (i1, ..., iN) lives at
/// i1 + i2*I1 + i3*I1*I2 + ... (0-based element indices).
class Tensor {
public:
    /// Scalar zero.
    Tensor();
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);
    static Tensor filled(Shape shape, double value);
    static Tensor identity(Index n);

    const Shape& shape() const { return shape_; }
    Index order() const { return shape_.order(); }
    Index size() const { return data_.size(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](Index flat) { return data_[flat]; }
    double operator[](Index flat) const { return data_[flat]; }

    /// Element access by 0-based multi-index. Bounds are checked.
    double& at(std::initializer_list<Index> index);
    double at(std::initializer_list<Index> index) const;
    double& at(std::span<const Index> index);
    double at(std::span<const Index> index) const;

    /// Matrix shorthand for order-2 tensors.
    double& operator()(Index i, Index j) { return data_[i + shape_[0] * j]; }
    double operator()(Index i, Index j) const { return data_[i + shape_[0] * j]; }

    /// Scalar value of an order-0 (or single-element) tensor.
    double item() const;

private:
    Index flat_index(std::span<const Index> index) const;

    Shape shape_;
    std::vector<double> data_;
};

/// Little-Endian strides of `shape`.
std::vector<Index> strides(const Shape& shape);

Tensor make_tensor(Shape shape, std::vector<double> values);

/// Order-1 tensor holding the entries in Little-Endian order.
Tensor vectorize(const Tensor& t);

/// Inverse of vectorize for an order-1 input.
Tensor tensorize(const Tensor& v, const Shape& target);

/// Reinterpret the Little-Endian buffer with a new shape of equal size.
Tensor reshape(const Tensor& t, const Shape& target);

/// Mode permutation; result mode k is input mode perm[k] (1-based).
Tensor permute(const Tensor& t, const std::vector<Index>& perm);

/// (m,n)-contraction: sums mode `mode_a` of `a` against mode `mode_b` of `b`
/// (both 1-based). The result keeps a's remaining modes, then b's.
Tensor contract(const Tensor& a, const Tensor& b, Index mode_a, Index mode_b);

/// Simultaneous contraction over paired modes a_modes[k] <-> b_modes[k].
Tensor contract_multi(const Tensor& a, const Tensor& b,
                      const std::vector<Index>& a_modes,
                      const std::vector<Index>& b_modes);

/// Left Kronecker product. The lower-order operand is promoted with trailing
/// size-1 modes.
Tensor kronecker(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor hadamard(const Tensor& a, const Tensor& b);

/// Matrix product of two order-2 tensors, i.e. contract(a, b, 2, 1).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);
/// A^k with A^0 = I.
Tensor matrix_power(const Tensor& a, Index k);

double frobenius_norm(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);
/// ||a - b||_F / ||b||_F, or ||a - b||_F when b is zero.
double relative_error(const Tensor& a, const Tensor& b);

}  // namespace rgtn
