#include "rgtn/tensor_train.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "rgtn/detail/tt_chain.hpp"

namespace rgtn {

std::vector<Index> TTNetwork::ranks() const {
    std::vector<Index> r;
    if (cores.empty()) return r;
    r.push_back(cores.front().shape()[0]);
    for (const auto& core : cores) r.push_back(core.shape()[2]);
    return r;
}

std::vector<Index> TTNetwork::mode_sizes() const {
    std::vector<Index> sizes;
    for (const auto& core : cores) sizes.push_back(core.shape()[1]);
    return sizes;
}

void TTNetwork::validate() const {
    if (cores.empty()) throw ShapeError("TT network has no cores");
    for (Index k = 0; k < cores.size(); ++k) {
        if (cores[k].order() != 3) {
            throw ShapeError("TT core " + std::to_string(k + 1) + " must be order-3, got " +
                             cores[k].shape().str());
        }
        if (k > 0 && cores[k - 1].shape()[2] != cores[k].shape()[0]) {
            throw ShapeError("TT rank mismatch between cores " + std::to_string(k) + " and " +
                             std::to_string(k + 1) + ": " + cores[k - 1].shape().str() + " vs " +
                             cores[k].shape().str());
        }
    }
    if (cores.front().shape()[0] != 1 || cores.back().shape()[2] != 1) {
        throw ShapeError("TT boundary ranks must be 1");
    }
}

TTNetwork tt_svd(const Tensor& x, const TTSvdOptions& options) {
    if (x.order() < 1) throw ShapeError("tt_svd needs a tensor of order >= 1");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("tt_svd: input has non-finite entries");
    }
    if (options.rel_tolerance < 0.0) throw std::invalid_argument("tt_svd: negative tolerance");
    if (options.max_rank && *options.max_rank == 0) {
        throw std::invalid_argument("tt_svd: max_rank must be >= 1");
    }

    using Mat = Eigen::MatrixXd;
    const Index n = x.order();
    const auto& dims = x.shape().dims();
    TTNetwork tt;
    if (n == 1) {
        tt.cores.push_back(reshape(x, Shape{1, dims[0], 1}));
        return tt;
    }

    const double norm = frobenius_norm(x);
    if (norm == 0.0) {
        for (Index k = 0; k < n; ++k) tt.cores.emplace_back(Shape{1, dims[k], 1});
        return tt;
    }
    const double delta =
        options.rel_tolerance * norm / std::sqrt(static_cast<double>(n - 1));
    const double delta_sq = delta * delta;

    // Little-Endian storage makes the first unfolding a column-major matrix.
    Mat c = Eigen::Map<const Mat>(x.data().data(), static_cast<Eigen::Index>(dims[0]),
                                  static_cast<Eigen::Index>(x.size() / dims[0]));
    Index rank_prev = 1;
    for (Index k = 0; k + 1 < n; ++k) {
        const Eigen::Index rows = static_cast<Eigen::Index>(rank_prev * dims[k]);
        const Eigen::Index cols = c.size() / rows;
        c.resize(rows, cols);
        Eigen::BDCSVD<Mat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        const Index full = static_cast<Index>(s.size());

        // Smallest rank whose discarded tail stays within delta.
        Index rank = full;
        double tail = 0.0;
        while (rank > 1) {
            const double next = tail + s(static_cast<Eigen::Index>(rank - 1)) *
                                           s(static_cast<Eigen::Index>(rank - 1));
            if (next > delta_sq) break;
            tail = next;
            --rank;
        }
        if (options.max_rank) rank = std::min(rank, *options.max_rank);

        const auto r = static_cast<Eigen::Index>(rank);
        Mat u = svd.matrixU().leftCols(r);
        tt.cores.emplace_back(Shape{rank_prev, dims[k], rank},
                              std::vector<double>(u.data(), u.data() + u.size()));
        c = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        rank_prev = rank;
    }
    tt.cores.emplace_back(Shape{rank_prev, dims[n - 1], 1},
                          std::vector<double>(c.data(), c.data() + c.size()));
    return tt;
}

Tensor tt_reconstruct(const TTNetwork& tt) {
    tt.validate();
    // Running result has modes (I1, ..., Ik, Rk) after absorbing k cores.
    Tensor acc = reshape(tt.cores.front(), Shape{tt.cores.front().shape()[1],
                                                 tt.cores.front().shape()[2]});
    for (Index k = 1; k < tt.cores.size(); ++k) {
        acc = contract(acc, tt.cores[k], acc.order(), 1);
    }
    return reshape(acc, Shape(tt.mode_sizes()));
}

Index tt_param_count(const TTNetwork& tt) {
    Index total = 0;
    for (const auto& core : tt.cores) total += core.size();
    return total;
}

Index tt_param_count(const std::vector<Index>& mode_sizes, const std::vector<Index>& ranks) {
    if (ranks.size() != mode_sizes.size() + 1) {
        throw ShapeError("tt_param_count: need N+1 ranks for N modes");
    }
    Index total = 0;
    for (Index k = 0; k < mode_sizes.size(); ++k) total += ranks[k] * mode_sizes[k] * ranks[k + 1];
    return total;
}

Index dense_param_count(const Shape& shape) { return shape.size(); }

void TTLinearLayer::validate() const {
    tt.validate();
    if (in_shape.order() != tt.order() || out_shape.order() != tt.order()) {
        throw ShapeError("TT layer: in/out shapes " + in_shape.str() + "/" + out_shape.str() +
                         " do not match " + std::to_string(tt.order()) + " cores");
    }
    for (Index k = 0; k < tt.order(); ++k) {
        if (tt.cores[k].shape()[1] != in_shape[k] * out_shape[k]) {
            throw ShapeError("TT layer: core " + std::to_string(k + 1) + " has mode extent " +
                             std::to_string(tt.cores[k].shape()[1]) + ", expected " +
                             std::to_string(in_shape[k] * out_shape[k]));
        }
    }
    if (bias && bias->shape() != out_shape) {
        throw ShapeError("TT layer: bias shape " + bias->shape().str() + " != " + out_shape.str());
    }
}

Tensor TTLinearLayer::dense_weight() const {
    validate();
    const Index n = tt.order();
    std::vector<Index> paired;
    for (Index k = 0; k < n; ++k) {
        paired.push_back(in_shape[k]);
        paired.push_back(out_shape[k]);
    }
    std::vector<Index> perm;
    for (Index k = 0; k < n; ++k) perm.push_back(2 * k + 1);
    for (Index k = 0; k < n; ++k) perm.push_back(2 * k + 2);
    const Tensor w = permute(reshape(tt_reconstruct(tt), Shape(paired)), perm);
    return reshape(w, Shape{in_shape.size(), out_shape.size()});
}

Tensor tt_chain_apply(const std::vector<Tensor>& cores, const Shape& in_shape,
                      const Shape& out_shape, const Tensor& x) {
    if (x.order() != in_shape.order() + 1) {
        throw ShapeError("TT chain: input " + x.shape().str() + " is not a batch of " +
                         in_shape.str());
    }
    for (Index k = 0; k < in_shape.order(); ++k) {
        if (x.shape()[k + 1] != in_shape[k]) {
            throw ShapeError("TT chain: input " + x.shape().str() + " is not a batch of " +
                             in_shape.str());
        }
    }
    std::vector<Index> ranks{1};
    for (const auto& core : cores) ranks.push_back(core.shape()[2]);
    return detail::tt_chain(cores, ranks, in_shape, out_shape, x, x.shape()[0]);
}

Tensor tt_layer_forward(const TTLinearLayer& layer, const Tensor& x) {
    layer.validate();
    if (x.shape() != layer.in_shape) {
        throw ShapeError("TT layer: input shape " + x.shape().str() + " != " +
                         layer.in_shape.str());
    }
    std::vector<Index> batched{1};
    batched.insert(batched.end(), x.shape().dims().begin(), x.shape().dims().end());
    Tensor y = reshape(tt_chain_apply(layer.tt.cores, layer.in_shape, layer.out_shape,
                                      reshape(x, Shape(batched))),
                       layer.out_shape);
    if (layer.bias) y = add(y, *layer.bias);
    return y;
}

}  // namespace rgtn
