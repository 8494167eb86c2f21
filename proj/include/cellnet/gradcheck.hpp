#pragma once

#include "cellnet/objective.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace cellnet {

/// Forward branch of every (point, cell) pair; equal signatures mean the
/// objective is one smooth piece across the compared parameter values.
std::vector<std::pair<WeightState, Eigen::Index>> piece_signature(const CellularNetworkd& net,
                                                                  const Eigen::MatrixXd& points);

using GradientFn = std::function<GradientBuffer<double>(const CellularNetworkd&, const Dataset&, double, double)>;

struct GradCheckOptions {
    int trials = 100;  // per mode
    std::uint64_t seed = 1;
    int max_cells = 5;
    int max_dims = 8;
    int batch = 16;
    double tolerance = 1e-4;
    /// Partials smaller than this are compared on an absolute scale.
    double magnitude_floor = 1e-3;
    GradientFn gradient;  // defaults to cellnet::gradient
};

struct BlockError {
    double centers = 0;
    double betas = 0;
    double alphas = 0;
    double max() const { return std::max({centers, betas, alphas}); }
};

struct GradCheckReport {
    int configurations = 0;    // accepted configurations, both modes
    int resampled = 0;         // configurations rejected for sitting on a piece boundary
    BlockError regression;
    BlockError binary;
    double max_error() const { return std::max(regression.max(), binary.max()); }
    bool passed = true;
};

/// Random network + batch + regularization strengths for gradient checks.
struct GradCheckCase {
    CellularNetworkd net;
    Dataset batch;
    double lambda_alpha = 0;
    double lambda_beta = 0;
};

GradCheckCase random_gradcheck_case(Mode mode, std::mt19937_64& rng, int max_cells, int max_dims, int batch);

/// Compares analytic partials against central differences of training_loss
/// with step max(1e-6 |theta|, 1e-6).
GradCheckReport run_gradient_check(const GradCheckOptions& options);

}  // namespace cellnet
