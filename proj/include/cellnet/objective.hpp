#pragma once

#include "cellnet/evaluation.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace cellnet {

/// Partials of a scalar objective, shaped like the network they came from.
template <typename Scalar>
struct GradientBuffer {
    Matrix<Scalar> d_centers;  // d x k
    Matrix<Scalar> d_betas;    // (d+1) x k
    Vector<Scalar> d_alphas;   // k

    GradientBuffer() = default;
    GradientBuffer(Eigen::Index dims, Eigen::Index cells)
        : d_centers(Matrix<Scalar>::Zero(dims, cells)),
          d_betas(Matrix<Scalar>::Zero(dims + 1, cells)),
          d_alphas(Vector<Scalar>::Zero(cells)) {}

    static GradientBuffer zeros_like(const CellularNetwork<Scalar>& net) {
        return GradientBuffer(net.dimensions(), net.cells());
    }

    GradientBuffer& operator+=(const GradientBuffer& other) {
        d_centers += other.d_centers;
        d_betas += other.d_betas;
        d_alphas += other.d_alphas;
        return *this;
    }

    GradientBuffer& operator*=(Scalar s) {
        d_centers *= s;
        d_betas *= s;
        d_alphas *= s;
        return *this;
    }

    bool allFinite() const { return d_centers.allFinite() && d_betas.allFinite() && d_alphas.allFinite(); }
};

class ObjectiveError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename Derived, typename TargetDerived>
void check_batch(Eigen::Index dims, const Eigen::MatrixBase<Derived>& points,
                 const Eigen::MatrixBase<TargetDerived>& targets) {
    if (points.cols() == 0) throw ObjectiveError("empty batch");
    if (points.rows() != dims) throw ObjectiveError("point dimension mismatch");
    if (targets.size() != points.cols()) throw ObjectiveError("targets size does not match points");
}

template <typename TargetDerived>
void check_binary_targets(const Eigen::MatrixBase<TargetDerived>& targets) {
    for (Eigen::Index n = 0; n < targets.size(); ++n) {
        const auto b = targets(n);
        if (b != 0 && b != 1) throw ObjectiveError("target not in {0,1} at index " + std::to_string(n));
    }
}

}  // namespace detail

template <typename Scalar, typename Derived, typename TargetDerived>
Scalar regression_loss(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points,
                       const Eigen::MatrixBase<TargetDerived>& targets) {
    detail::check_batch(net.dimensions(), points, targets);
    return (evaluate_batch(net, points) - targets).squaredNorm();
}

/// sum_n b_n f(a_n) - log(1 + exp(f(a_n)))
template <typename Scalar, typename Derived, typename TargetDerived>
Scalar log_likelihood(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points,
                      const Eigen::MatrixBase<TargetDerived>& targets) {
    detail::check_batch(net.dimensions(), points, targets);
    detail::check_binary_targets(targets);
    const Vector<Scalar> values = evaluate_batch(net, points);
    Scalar total = Scalar(0);
    for (Eigen::Index n = 0; n < values.size(); ++n) total += targets(n) * values[n] - softplus(values[n]);
    return total;
}

template <typename Scalar>
struct Regularizers {
    Scalar beta = Scalar(0);   // sum of squared coefficients, constant terms included
    Scalar alpha = Scalar(0);  // sum of reciprocal blending parameters
};

template <typename Scalar>
Regularizers<Scalar> regularizers(const CellularNetwork<Scalar>& net) {
    return {net.betas.squaredNorm(), net.alphas.cwiseInverse().sum()};
}

/// Binary: log-likelihood minus penalties (maximized).
/// Regression: squared error plus penalties (minimized).
template <typename Scalar, typename Derived, typename TargetDerived>
Scalar regularized_objective(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points,
                             const Eigen::MatrixBase<TargetDerived>& targets, Scalar lambda_alpha,
                             Scalar lambda_beta) {
    const auto reg = regularizers(net);
    const Scalar penalty = lambda_alpha * reg.alpha + lambda_beta * reg.beta;
    if (net.mode == Mode::binary) return log_likelihood(net, points, targets) - penalty;
    return regression_loss(net, points, targets) + penalty;
}

/// regularized_objective in the orientation the optimizer descends.
template <typename Scalar, typename Derived, typename TargetDerived>
Scalar training_loss(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points,
                     const Eigen::MatrixBase<TargetDerived>& targets, Scalar lambda_alpha, Scalar lambda_beta) {
    const Scalar obj = regularized_objective(net, points, targets, lambda_alpha, lambda_beta);
    return net.mode == Mode::binary ? -obj : obj;
}

inline double training_loss(const CellularNetworkd& net, const Dataset& data, double lambda_alpha,
                            double lambda_beta) {
    return training_loss(net, data.features, data.targets, lambda_alpha, lambda_beta);
}

inline double regularized_objective(const CellularNetworkd& net, const Dataset& data, double lambda_alpha,
                                    double lambda_beta) {
    return regularized_objective(net, data.features, data.targets, lambda_alpha, lambda_beta);
}

/// Accumulates sum_n g_n * d f(p_n) / d theta into `out`, holding every
/// (point, cell) piece fixed at its forward-pass branch.
///
/// Center partials are gathered as coefficients on the seeds and on the
/// points (d_centers = C M + P W) so the d-dimensional work stays in two
/// matrix products.
template <typename Scalar, typename Derived, typename WeightDerived>
void accumulate_value_gradient(const CellularNetwork<Scalar>& net, const BatchForward<Scalar>& fw,
                               const Eigen::MatrixBase<Derived>& points,
                               const Eigen::MatrixBase<WeightDerived>& dloss_dvalue, GradientBuffer<Scalar>& out) {
    const auto k = net.cells();
    const auto m = points.cols();
    const auto d = net.dimensions();

    Matrix<Scalar> beta_coef(m, k);
    Matrix<Scalar> point_coef = Matrix<Scalar>::Zero(m, k);
    Matrix<Scalar> center_coef = Matrix<Scalar>::Zero(k, k);

    for (Eigen::Index n = 0; n < m; ++n) {
        const Scalar g = dloss_dvalue(n);
        const Scalar total = fw.weight_sums[n];
        const Scalar value = fw.values[n];
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto& piece = fw.piece(n, i);
            beta_coef(n, i) = g * piece.weight / total;
            if (piece.state != WeightState::linear || g == Scalar(0)) continue;

            const Scalar dweight = g * (fw.cell_values(i, n) - value) / total;
            const Scalar alpha = net.alphas[i];
            const Scalar t = piece.t_star;
            out.d_alphas[i] += dweight * (Scalar(1) / t - Scalar(1)) / (alpha * alpha);

            // t = |c_j - c_i|^2 / den with den = 2 (c_j - c_i).(p - c_i)
            const Scalar dt = dweight / (alpha * t * t);
            const Scalar dsq = dt / piece.den;
            const Scalar dden = -dt * t / piece.den;
            const Eigen::Index j = piece.neighbor;
            center_coef(j, j) += Scalar(2) * dsq;
            center_coef(i, j) += Scalar(-2) * dsq - Scalar(2) * dden;
            point_coef(n, j) += Scalar(2) * dden;
            center_coef(j, i) += Scalar(-2) * dsq - Scalar(2) * dden;
            center_coef(i, i) += Scalar(2) * dsq + Scalar(4) * dden;
            point_coef(n, i) += Scalar(-2) * dden;
        }
    }

    out.d_betas.row(0) += beta_coef.colwise().sum();
    out.d_betas.bottomRows(d).noalias() += points * beta_coef;
    out.d_centers.noalias() += net.centers * center_coef;
    out.d_centers.noalias() += points * point_coef;
}

template <typename Scalar, typename Derived, typename WeightDerived>
void accumulate_value_gradient(const CellularNetwork<Scalar>& net, const NetworkGeometry<Scalar>& geo,
                               const Eigen::MatrixBase<Derived>& points,
                               const Eigen::MatrixBase<WeightDerived>& dloss_dvalue, GradientBuffer<Scalar>& out) {
    accumulate_value_gradient(net, forward(net, geo, points), points, dloss_dvalue, out);
}

struct GradientOptions {
    int threads = 1;
    /// Reduce per-thread partial gradients in chunk order. When false,
    /// partials are summed in completion order.
    bool deterministic = true;
};

/// d(loss)/d(value) per point, in the minimization orientation.
template <typename Scalar, typename TargetDerived>
Vector<Scalar> loss_value_derivative(Mode mode, const Vector<Scalar>& values,
                                     const Eigen::MatrixBase<TargetDerived>& targets) {
    Vector<Scalar> g(values.size());
    for (Eigen::Index n = 0; n < values.size(); ++n) {
        g[n] = mode == Mode::binary ? sigmoid(values[n]) - Scalar(targets(n))
                                    : Scalar(2) * (values[n] - Scalar(targets(n)));
    }
    return g;
}

/// Gradient of training_loss: the regression loss plus penalties, or the
/// negated regularized log-likelihood for binary networks.
template <typename Scalar, typename Derived, typename TargetDerived>
GradientBuffer<Scalar> gradient(const CellularNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& points,
                                const Eigen::MatrixBase<TargetDerived>& targets, Scalar lambda_alpha,
                                Scalar lambda_beta, const GradientOptions& options = {}) {
    detail::check_batch(net.dimensions(), points, targets);
    if (net.mode == Mode::binary) detail::check_binary_targets(targets);

    const NetworkGeometry<Scalar> geo(net);
    const Eigen::Index m = points.cols();
    const Eigen::Index chunks = std::clamp<Eigen::Index>(options.threads, 1, m);

    auto chunk_gradient = [&](Eigen::Index c) {
        const Eigen::Index begin = m * c / chunks;
        const Eigen::Index end = m * (c + 1) / chunks;
        const auto block = points.middleCols(begin, end - begin);
        const BatchForward<Scalar> fw = forward(net, geo, block);
        const Vector<Scalar> dvalue =
            loss_value_derivative<Scalar>(net.mode, fw.values, targets.segment(begin, end - begin));
        auto part = GradientBuffer<Scalar>::zeros_like(net);
        accumulate_value_gradient(net, fw, block, dvalue, part);
        return part;
    };

    auto total = GradientBuffer<Scalar>::zeros_like(net);
    if (chunks == 1) {
        total = chunk_gradient(0);
    } else if (options.deterministic) {
        std::vector<GradientBuffer<Scalar>> parts(static_cast<std::size_t>(chunks));
        {
            std::vector<std::jthread> workers;
            for (Eigen::Index c = 0; c < chunks; ++c)
                workers.emplace_back([&, c] { parts[static_cast<std::size_t>(c)] = chunk_gradient(c); });
        }
        for (const auto& part : parts) total += part;
    } else {
        std::mutex lock;
        std::vector<std::jthread> workers;
        for (Eigen::Index c = 0; c < chunks; ++c) {
            workers.emplace_back([&, c] {
                auto part = chunk_gradient(c);
                std::scoped_lock guard(lock);
                total += part;
            });
        }
        workers.clear();
    }

    total.d_betas += Scalar(2) * lambda_beta * net.betas;
    total.d_alphas -= lambda_alpha * net.alphas.cwiseAbs2().cwiseInverse();
    return total;
}

inline GradientBuffer<double> gradient(const CellularNetworkd& net, const Dataset& batch, double lambda_alpha,
                                       double lambda_beta, const GradientOptions& options = {}) {
    return gradient(net, batch.features, batch.targets, lambda_alpha, lambda_beta, options);
}

}  // namespace cellnet
