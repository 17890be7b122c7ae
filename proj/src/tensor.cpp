#include "rgtn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

namespace rgtn {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    }
}

void check_matrix(const Tensor& t, const char* op) {
    if (t.order() != 2) {
        throw ShapeError(std::string(op) + ": expected a matrix, got shape " + t.shape().str());
    }
}

// Validates a 1-based mode list against `order`; returns 0-based axes.
std::vector<Index> to_axes(const std::vector<Index>& modes, Index order, const char* what) {
    std::vector<Index> axes;
    axes.reserve(modes.size());
    std::vector<bool> seen(order, false);
    for (Index m : modes) {
        if (m < 1 || m > order) {
            throw ShapeError(std::string(what) + ": mode " + std::to_string(m) +
                             " out of range for order " + std::to_string(order));
        }
        if (seen[m - 1]) {
            throw ShapeError(std::string(what) + ": duplicate mode " + std::to_string(m));
        }
        seen[m - 1] = true;
        axes.push_back(m - 1);
    }
    return axes;
}

}  // namespace

Shape::Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}

Shape::Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    for (Index d : dims_) {
        if (d == 0) throw ShapeError("shape extents must be >= 1, got " + str());
    }
}

Index Shape::size() const {
    return std::accumulate(dims_.begin(), dims_.end(), Index{1}, std::multiplies<>());
}

Index Shape::mode(Index mode) const {
    if (mode < 1 || mode > dims_.size()) {
        throw ShapeError("mode " + std::to_string(mode) + " out of range for shape " + str());
    }
    return dims_[mode - 1];
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '(';
    for (Index i = 0; i < dims_.size(); ++i) {
        if (i) os << ',';
        os << dims_[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_.size(), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_.size()) {
        throw ShapeError("tensor of shape " + shape_.str() + " needs " +
                         std::to_string(shape_.size()) + " values, got " +
                         std::to_string(data_.size()));
    }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::filled(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::identity(Index n) {
    Tensor t(Shape{n, n});
    for (Index i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Index Tensor::flat_index(std::span<const Index> index) const {
    if (index.size() != order()) {
        throw ShapeError("index of length " + std::to_string(index.size()) +
                         " for tensor of shape " + shape_.str());
    }
    Index flat = 0;
    Index stride = 1;
    for (Index k = 0; k < index.size(); ++k) {
        if (index[k] >= shape_[k]) {
            throw std::out_of_range("index " + std::to_string(index[k]) + " out of range in mode " +
                                    std::to_string(k + 1) + " of shape " + shape_.str());
        }
        flat += index[k] * stride;
        stride *= shape_[k];
    }
    return flat;
}

double& Tensor::at(std::initializer_list<Index> index) {
    return data_[flat_index(std::span<const Index>(index.begin(), index.size()))];
}
double Tensor::at(std::initializer_list<Index> index) const {
    return data_[flat_index(std::span<const Index>(index.begin(), index.size()))];
}
double& Tensor::at(std::span<const Index> index) { return data_[flat_index(index)]; }
double Tensor::at(std::span<const Index> index) const { return data_[flat_index(index)]; }

double Tensor::item() const {
    if (data_.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_.str());
    }
    return data_[0];
}

std::vector<Index> strides(const Shape& shape) {
    std::vector<Index> s(shape.order());
    Index stride = 1;
    for (Index k = 0; k < shape.order(); ++k) {
        s[k] = stride;
        stride *= shape[k];
    }
    return s;
}

Tensor make_tensor(Shape shape, std::vector<double> values) {
    return Tensor(std::move(shape), std::move(values));
}

Tensor vectorize(const Tensor& t) {
    return Tensor(Shape{t.size()}, t.values());
}

Tensor tensorize(const Tensor& v, const Shape& target) {
    if (v.order() != 1) {
        throw ShapeError("tensorize expects an order-1 tensor, got " + v.shape().str());
    }
    return reshape(v, target);
}

Tensor reshape(const Tensor& t, const Shape& target) {
    if (target.size() != t.size()) {
        throw ShapeError("cannot reshape " + t.shape().str() + " to " + target.str());
    }
    return Tensor(target, t.values());
}

Tensor permute(const Tensor& t, const std::vector<Index>& perm) {
    if (perm.size() != t.order()) {
        throw ShapeError("permutation of length " + std::to_string(perm.size()) +
                         " for shape " + t.shape().str());
    }
    const auto axes = to_axes(perm, t.order(), "permute");
    const Index n = t.order();
    std::vector<Index> out_dims(n);
    for (Index k = 0; k < n; ++k) out_dims[k] = t.shape()[axes[k]];
    Tensor out{Shape(out_dims)};

    const auto in_strides = strides(t.shape());
    // Stride in the input buffer for each output mode.
    std::vector<Index> step(n);
    for (Index k = 0; k < n; ++k) step[k] = in_strides[axes[k]];

    std::vector<Index> counter(n, 0);
    Index src = 0;
    const Index total = out.size();
    auto in = t.data();
    auto dst = out.data();
    for (Index flat = 0; flat < total; ++flat) {
        dst[flat] = in[src];
        for (Index k = 0; k < n; ++k) {
            if (++counter[k] < out_dims[k]) {
                src += step[k];
                break;
            }
            src -= step[k] * (out_dims[k] - 1);
            counter[k] = 0;
        }
    }
    return out;
}

Tensor contract(const Tensor& a, const Tensor& b, Index mode_a, Index mode_b) {
    return contract_multi(a, b, {mode_a}, {mode_b});
}

Tensor contract_multi(const Tensor& a, const Tensor& b, const std::vector<Index>& a_modes,
                      const std::vector<Index>& b_modes) {
    if (a_modes.size() != b_modes.size()) {
        throw ShapeError("contract: mode lists differ in length");
    }
    const auto a_axes = to_axes(a_modes, a.order(), "contract (first operand)");
    const auto b_axes = to_axes(b_modes, b.order(), "contract (second operand)");
    for (Index k = 0; k < a_axes.size(); ++k) {
        if (a.shape()[a_axes[k]] != b.shape()[b_axes[k]]) {
            throw ShapeError("contract: mode " + std::to_string(a_modes[k]) + " of " +
                             a.shape().str() + " has extent " +
                             std::to_string(a.shape()[a_axes[k]]) + " but mode " +
                             std::to_string(b_modes[k]) + " of " + b.shape().str() + " has " +
                             std::to_string(b.shape()[b_axes[k]]));
        }
    }

    // Bring a to (free..., contracted...) and b to (contracted..., free...);
    // in Little-Endian storage both are column-major matrices.
    std::vector<Index> a_perm, b_perm, out_dims;
    Index free_a = 1, free_b = 1, inner = 1;
    for (Index ax = 0; ax < a.order(); ++ax) {
        if (std::find(a_axes.begin(), a_axes.end(), ax) == a_axes.end()) {
            a_perm.push_back(ax + 1);
            out_dims.push_back(a.shape()[ax]);
            free_a *= a.shape()[ax];
        }
    }
    for (Index ax : a_axes) {
        a_perm.push_back(ax + 1);
        inner *= a.shape()[ax];
    }
    for (Index ax : b_axes) b_perm.push_back(ax + 1);
    for (Index ax = 0; ax < b.order(); ++ax) {
        if (std::find(b_axes.begin(), b_axes.end(), ax) == b_axes.end()) {
            b_perm.push_back(ax + 1);
            out_dims.push_back(b.shape()[ax]);
            free_b *= b.shape()[ax];
        }
    }

    auto is_identity = [](const std::vector<Index>& p) {
        for (Index k = 0; k < p.size(); ++k)
            if (p[k] != k + 1) return false;
        return true;
    };
    const Tensor ap = is_identity(a_perm) ? a : permute(a, a_perm);
    const Tensor bp = is_identity(b_perm) ? b : permute(b, b_perm);

    Tensor out{Shape(out_dims)};
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
    Eigen::Map<const Mat> am(ap.data().data(), static_cast<Eigen::Index>(free_a),
                             static_cast<Eigen::Index>(inner));
    Eigen::Map<const Mat> bm(bp.data().data(), static_cast<Eigen::Index>(inner),
                             static_cast<Eigen::Index>(free_b));
    Eigen::Map<Mat> cm(out.data().data(), static_cast<Eigen::Index>(free_a),
                       static_cast<Eigen::Index>(free_b));
    cm.noalias() = am * bm;
    return out;
}

Tensor kronecker(const Tensor& a, const Tensor& b) {
    const Index n = std::max(a.order(), b.order());
    std::vector<Index> ad = a.shape().dims(), bd = b.shape().dims();
    ad.resize(n, 1);
    bd.resize(n, 1);
    std::vector<Index> cd(n);
    for (Index k = 0; k < n; ++k) cd[k] = ad[k] * bd[k];
    Tensor out{Shape(cd)};
    const auto cs = strides(out.shape());

    // Entry (i, j) of the pair index maps to j + i * J per mode.
    std::vector<Index> ai(n, 0), bi(n, 0);
    for (Index fa = 0; fa < a.size(); ++fa) {
        const double av = a[fa];
        std::fill(bi.begin(), bi.end(), 0);
        for (Index fb = 0; fb < b.size(); ++fb) {
            Index flat = 0;
            for (Index k = 0; k < n; ++k) flat += (bi[k] + ai[k] * bd[k]) * cs[k];
            out[flat] = av * b[fb];
            for (Index k = 0; k < n; ++k) {
                if (++bi[k] < bd[k]) break;
                bi[k] = 0;
            }
        }
        for (Index k = 0; k < n; ++k) {
            if (++ai[k] < ad[k]) break;
            ai[k] = 0;
        }
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = a;
    for (Index i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "subtract");
    Tensor out = a;
    for (Index i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out = a;
    for (double& v : out.data()) v *= factor;
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (Index i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matrix(a, "matmul");
    check_matrix(b, "matmul");
    return contract(a, b, 2, 1);
}

Tensor transpose(const Tensor& m) {
    check_matrix(m, "transpose");
    return permute(m, {2, 1});
}

Tensor matrix_power(const Tensor& a, Index k) {
    check_matrix(a, "matrix_power");
    if (a.shape()[0] != a.shape()[1]) {
        throw ShapeError("matrix_power: matrix must be square, got " + a.shape().str());
    }
    Tensor result = Tensor::identity(a.shape()[0]);
    for (Index i = 0; i < k; ++i) result = matmul(result, a);
    return result;
}

double frobenius_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double relative_error(const Tensor& a, const Tensor& b) {
    const double diff = frobenius_norm(subtract(a, b));
    const double ref = frobenius_norm(b);
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace rgtn
