#pragma once

#include "cellnet/objective.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cellnet {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// First and second moment estimates for every network parameter.
template <typename Scalar>
struct AdamState {
    std::int64_t step = 0;
    GradientBuffer<Scalar> first;
    GradientBuffer<Scalar> second;

    AdamState() = default;
    explicit AdamState(const CellularNetwork<Scalar>& net)
        : first(GradientBuffer<Scalar>::zeros_like(net)), second(GradientBuffer<Scalar>::zeros_like(net)) {}
};

namespace detail {

template <typename Scalar, typename ParamDerived, typename GradDerived, typename MomentDerived>
void adam_update_block(Eigen::MatrixBase<ParamDerived>& params, const Eigen::MatrixBase<GradDerived>& grad,
                       Eigen::MatrixBase<MomentDerived>& m, Eigen::MatrixBase<MomentDerived>& v,
                       const AdamConfig& cfg, Scalar first_correction, Scalar second_correction) {
    const auto b1 = static_cast<Scalar>(cfg.beta1);
    const auto b2 = static_cast<Scalar>(cfg.beta2);
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
    const auto lr = static_cast<Scalar>(cfg.learning_rate);
    const auto eps = static_cast<Scalar>(cfg.epsilon);
    params.array() -= lr * (m.array() / first_correction) /
                      ((v.array() / second_correction).sqrt() + eps);
}

}  // namespace detail

/// One bias-corrected Adam step descending `grad`. Leaves alpha clamping to
/// the caller.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, CellularNetwork<Scalar>& params, const GradientBuffer<Scalar>& grad,
               const AdamConfig& cfg) {
    if (grad.d_centers.rows() != params.centers.rows() || grad.d_centers.cols() != params.centers.cols() ||
        grad.d_betas.rows() != params.betas.rows() || grad.d_alphas.size() != params.alphas.size())
        throw std::invalid_argument("gradient shape does not match network");
    if (state.first.d_alphas.size() != params.alphas.size()) state = AdamState<Scalar>(params);
    if (!grad.d_centers.allFinite()) throw NumericalError("non-finite gradient in centers");
    if (!grad.d_betas.allFinite()) throw NumericalError("non-finite gradient in betas");
    if (!grad.d_alphas.allFinite()) throw NumericalError("non-finite gradient in alphas");

    ++state.step;
    const auto t = static_cast<Scalar>(state.step);
    const Scalar first_correction = Scalar(1) - std::pow(static_cast<Scalar>(cfg.beta1), t);
    const Scalar second_correction = Scalar(1) - std::pow(static_cast<Scalar>(cfg.beta2), t);
    detail::adam_update_block(params.centers, grad.d_centers, state.first.d_centers, state.second.d_centers, cfg,
                              first_correction, second_correction);
    detail::adam_update_block(params.betas, grad.d_betas, state.first.d_betas, state.second.d_betas, cfg,
                              first_correction, second_correction);
    detail::adam_update_block(params.alphas, grad.d_alphas, state.first.d_alphas, state.second.d_alphas, cfg,
                              first_correction, second_correction);
}

}  // namespace cellnet
