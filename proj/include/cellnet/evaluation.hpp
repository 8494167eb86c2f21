#pragma once

#include "cellnet/geometry.hpp"

#include <cassert>
#include <cmath>
#include <vector>

namespace cellnet {

class ModeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename Scalar, typename Derived>
Scalar linear_value(const CellularNetwork<Scalar>& net, Eigen::Index cell, const Eigen::MatrixBase<Derived>& point) {
    if (point.size() != net.dimensions()) throw std::invalid_argument("point dimension mismatch");
    return net.betas(0, cell) + net.betas.col(cell).tail(net.dimensions()).dot(point);
}

template <typename Scalar>
struct EvalBreakdown {
    Vector<Scalar> raw_weights;
    Vector<Scalar> weights;
    Vector<Scalar> cell_values;
    Scalar value = Scalar(0);
};

/// Blended value at one point, computed with explicit seed differences.
template <typename Scalar, typename Derived>
EvalBreakdown<Scalar> evaluate(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& point) {
    if (point.size() != net.dimensions()) throw std::invalid_argument("point dimension mismatch");
    const auto k = net.cells();
    EvalBreakdown<Scalar> out;
    out.raw_weights.resize(k);
    out.cell_values.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        out.raw_weights[i] = relative_weight(net, i, point);
        out.cell_values[i] = linear_value(net, i, point);
    }
    const Scalar total = out.raw_weights.sum();
    assert(total >= Scalar(1) - Scalar(1e-12));
    out.weights = out.raw_weights / total;
    out.value = out.weights.dot(out.cell_values);
    return out;
}

/// 1 / (1 + exp(-z)) without overflow for large |z|.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

/// log(1 + exp(z)), stable for either sign.
template <typename Scalar>
Scalar softplus(Scalar z) {
    return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar, typename Derived>
Scalar probability(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& point) {
    if (net.mode != Mode::binary) throw ModeMismatch("model is not a classifier");
    return sigmoid(evaluate(net, point).value);
}

/// Forward pass over a batch of points (one per column), keeping what the
/// gradient needs: per-pair pieces, cell values and weight sums.
template <typename Scalar>
struct BatchForward {
    Eigen::Index cells = 0;
    Matrix<Scalar> projections;  // C^T P, k x m
    Matrix<Scalar> cell_values;  // L_i(p), k x m
    Vector<Scalar> weight_sums;  // sum_i w_rel, m
    Vector<Scalar> values;       // f(p), m
    std::vector<CellPiece<Scalar>> pieces;  // k * m, point-major

    const CellPiece<Scalar>& piece(Eigen::Index point, Eigen::Index cell) const {
        return pieces[static_cast<std::size_t>(point * cells + cell)];
    }
};

template <typename Scalar, typename Derived>
BatchForward<Scalar> forward(const CellularNetwork<Scalar>& net, const NetworkGeometry<Scalar>& geo,
                             const Eigen::MatrixBase<Derived>& points) {
    if (points.rows() != net.dimensions()) throw std::invalid_argument("point dimension mismatch");
    const auto k = net.cells();
    const auto m = points.cols();
    const auto d = net.dimensions();

    BatchForward<Scalar> fw;
    fw.cells = k;
    fw.projections.noalias() = net.centers.transpose() * points;
    fw.cell_values.noalias() = net.betas.bottomRows(d).transpose() * points;
    fw.cell_values.colwise() += net.betas.row(0).transpose();
    fw.weight_sums.resize(m);
    fw.values.resize(m);
    fw.pieces.resize(static_cast<std::size_t>(k * m));

    for (Eigen::Index n = 0; n < m; ++n) {
        CellPiece<Scalar>* pieces = fw.pieces.data() + n * k;
        relative_weights_from_projection(net, geo, fw.projections.col(n), pieces);
        Scalar total = Scalar(0);
        Scalar blended = Scalar(0);
        for (Eigen::Index i = 0; i < k; ++i) {
            total += pieces[i].weight;
            blended += pieces[i].weight * fw.cell_values(i, n);
        }
        fw.weight_sums[n] = total;
        fw.values[n] = blended / total;
    }
    return fw;
}

/// Blended values at every column of `points`.
template <typename Scalar, typename Derived>
Vector<Scalar> evaluate_batch(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points) {
    const NetworkGeometry<Scalar> geo(net);
    return forward(net, geo, points).values;
}

template <typename Scalar, typename Derived>
Vector<Scalar> probability_batch(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points) {
    if (net.mode != Mode::binary) throw ModeMismatch("model is not a classifier");
    return evaluate_batch(net, points).unaryExpr([](Scalar z) { return sigmoid(z); });
}

}  // namespace cellnet
