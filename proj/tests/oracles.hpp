#pragma once

// Brute-force reference implementations used by the tests. Everything here
// is written with explicit index loops and shares no code path with the
// library beyond the Tensor container.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/QR>

#include "rgtn/autodiff.hpp"
#include "rgtn/param_store.hpp"
#include "rgtn/random.hpp"
#include "rgtn/tensor.hpp"

namespace oracle {

using rgtn::Index;
using rgtn::Shape;
using rgtn::Tensor;

inline std::vector<Index> unravel(Index flat, const Shape& shape) {
    std::vector<Index> idx(shape.order());
    for (Index k = 0; k < shape.order(); ++k) {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    return idx;
}

inline Index ravel(const std::vector<Index>& idx, const Shape& shape) {
    Index flat = 0, stride = 1;
    for (Index k = 0; k < shape.order(); ++k) {
        flat += idx[k] * stride;
        stride *= shape[k];
    }
    return flat;
}

/// Sum over paired (1-based) modes, result modes: a's free then b's free.
inline Tensor contract(const Tensor& a, const Tensor& b, const std::vector<Index>& am,
                       const std::vector<Index>& bm) {
    std::vector<Index> a_free, b_free, out_dims;
    for (Index k = 1; k <= a.order(); ++k)
        if (std::find(am.begin(), am.end(), k) == am.end()) a_free.push_back(k);
    for (Index k = 1; k <= b.order(); ++k)
        if (std::find(bm.begin(), bm.end(), k) == bm.end()) b_free.push_back(k);
    for (Index k : a_free) out_dims.push_back(a.shape().mode(k));
    for (Index k : b_free) out_dims.push_back(b.shape().mode(k));
    std::vector<Index> sum_dims;
    for (Index k : am) sum_dims.push_back(a.shape().mode(k));
    const Shape out_shape(out_dims), sum_shape(sum_dims);
    Tensor out(out_shape);
    std::vector<Index> ia(a.order()), ib(b.order());
    for (Index o = 0; o < out_shape.size(); ++o) {
        const auto oi = unravel(o, out_shape);
        for (Index k = 0; k < a_free.size(); ++k) ia[a_free[k] - 1] = oi[k];
        for (Index k = 0; k < b_free.size(); ++k) ib[b_free[k] - 1] = oi[a_free.size() + k];
        double acc = 0.0;
        for (Index s = 0; s < sum_shape.size(); ++s) {
            const auto si = unravel(s, sum_shape);
            for (Index k = 0; k < am.size(); ++k) {
                ia[am[k] - 1] = si[k];
                ib[bm[k] - 1] = si[k];
            }
            acc += a.at(std::span<const Index>(ia)) * b.at(std::span<const Index>(ib));
        }
        out[o] = acc;
    }
    return out;
}

/// Kronecker product with pair index j + i * J per mode (b fastest).
inline Tensor kronecker(const Tensor& a, const Tensor& b) {
    const Index n = std::max(a.order(), b.order());
    std::vector<Index> da(n, 1), db(n, 1), dout(n);
    for (Index k = 0; k < a.order(); ++k) da[k] = a.shape()[k];
    for (Index k = 0; k < b.order(); ++k) db[k] = b.shape()[k];
    for (Index k = 0; k < n; ++k) dout[k] = da[k] * db[k];
    const Shape sa(da), sb(db), so(dout);
    Tensor out(so);
    for (Index i = 0; i < sa.size(); ++i)
        for (Index j = 0; j < sb.size(); ++j) {
            const auto ii = unravel(i, sa), jj = unravel(j, sb);
            std::vector<Index> oi(n);
            for (Index k = 0; k < n; ++k) oi[k] = jj[k] + ii[k] * db[k];
            out[ravel(oi, so)] = a[i] * b[j];
        }
    return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    const Index n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    Tensor out(Shape{n, m});
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
            double s = 0.0;
            for (Index l = 0; l < k; ++l) s += a(i, l) * b(l, j);
            out(i, j) = s;
        }
    return out;
}

/// Orthogonal projector Q Q^T onto a random subspace of dimension `rank`.
inline Tensor random_projection(rgtn::Rng& rng, Index m, Index rank) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(rank));
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    const Eigen::MatrixXd p = q * q.transpose();
    Tensor out(Shape{m, m});
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i)
            out(i, j) = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

/// h_t = c W_r h_{t-1} + W_x x_t with h_0 = 0, X is (tau, N), returns (tau, M).
inline Tensor unrolled_recurrence(const Tensor& X, const Tensor& W_x, const Tensor& W_r,
                                  double c) {
    const Index tau = X.shape()[0], n = X.shape()[1], m = W_x.shape()[0];
    Tensor H(Shape{tau, m});
    std::vector<double> prev(m, 0.0);
    for (Index t = 0; t < tau; ++t) {
        std::vector<double> h(m, 0.0);
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < m; ++j) h[i] += c * W_r(i, j) * prev[j];
            for (Index j = 0; j < n; ++j) h[i] += W_x(i, j) * X(t, j);
        }
        for (Index i = 0; i < m; ++i) H(t, i) = h[i];
        prev = h;
    }
    return H;
}

/// Dense weight of a TT layer: W[(i1..iN), (o1..oN)] = prod_k G_k[:, i_k + I_k o_k, :].
inline Tensor tt_dense_weight(const std::vector<Tensor>& cores, const Shape& in,
                              const Shape& out) {
    Tensor W(Shape{in.size(), out.size()});
    for (Index i = 0; i < in.size(); ++i)
        for (Index o = 0; o < out.size(); ++o) {
            const auto ii = unravel(i, in), oo = unravel(o, out);
            std::vector<double> row{1.0};
            for (Index k = 0; k < cores.size(); ++k) {
                const Tensor& g = cores[k];
                const Index r0 = g.shape()[0], r1 = g.shape()[2];
                const Index mid = ii[k] + in[k] * oo[k];
                std::vector<double> next(r1, 0.0);
                for (Index b = 0; b < r1; ++b)
                    for (Index a = 0; a < r0; ++a) next[b] += row[a] * g.at({a, mid, b});
                row = next;
            }
            W(i, o) = row[0];
        }
    return W;
}

/// Normwise relative error between backward() gradients and central
/// differences, maximized over parameter tensors. `loss` re-evaluates the
/// scalar objective from the current parameter values.
inline double gradient_check(rgtn::ParamStore& store, const std::function<rgtn::ad::Var()>& loss,
                             double h = 1e-6) {
    store.zero_grad();
    rgtn::ad::backward(loss());
    double worst = 0.0;
    for (auto& p : store.entries()) {
        const Tensor analytic = p.var.grad();
        Tensor numeric(analytic.shape());
        for (Index i = 0; i < numeric.size(); ++i) {
            double& theta = p.var.mutable_value()[i];
            const double saved = theta;
            theta = saved + h;
            const double up = loss().value().item();
            theta = saved - h;
            const double down = loss().value().item();
            theta = saved;
            numeric[i] = (up - down) / (2.0 * h);
        }
        const double diff = rgtn::frobenius_norm(rgtn::subtract(analytic, numeric));
        const double ref = std::max(rgtn::frobenius_norm(numeric), rgtn::frobenius_norm(analytic));
        worst = std::max(worst, ref > 0.0 ? diff / ref : diff);
    }
    return worst;
}

}  // namespace oracle
