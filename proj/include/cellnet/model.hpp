#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cellnet {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Mode { regression, binary };

inline std::string_view to_string(Mode mode) {
    return mode == Mode::binary ? "binary" : "regression";
}

inline Mode mode_from_string(std::string_view text) {
    if (text == "regression") return Mode::regression;
    if (text == "binary") return Mode::binary;
    throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

/// Smallest blending parameter the trainer lets a cell keep.
inline constexpr double kAlphaFloor = 0.01;

/// A cellular network: k seed vertices in d dimensions, each owning an affine
/// function and a blending parameter.
///
/// Column i of `centers` is seed c_i, column i of `betas` is [b_i0, ..., b_id]
/// with the constant term first, and `alphas[i]` is the blend extent of cell i.
template <typename Scalar>
struct CellularNetwork {
    Mode mode = Mode::regression;
    Matrix<Scalar> centers;  // d x k
    Matrix<Scalar> betas;    // (d+1) x k
    Vector<Scalar> alphas;   // k

    CellularNetwork() = default;
    CellularNetwork(Mode m, Eigen::Index dims, Eigen::Index cells, Scalar alpha_init = Scalar(0.3))
        : mode(m),
          centers(Matrix<Scalar>::Zero(dims, cells)),
          betas(Matrix<Scalar>::Zero(dims + 1, cells)),
          alphas(Vector<Scalar>::Constant(cells, alpha_init)) {}

    Eigen::Index dimensions() const { return centers.rows(); }
    Eigen::Index cells() const { return centers.cols(); }

    template <typename NewScalar>
    CellularNetwork<NewScalar> cast() const {
        CellularNetwork<NewScalar> out;
        out.mode = mode;
        out.centers = centers.template cast<NewScalar>();
        out.betas = betas.template cast<NewScalar>();
        out.alphas = alphas.template cast<NewScalar>();
        return out;
    }

    bool operator==(const CellularNetwork& other) const {
        return mode == other.mode && centers.rows() == other.centers.rows() &&
               centers.cols() == other.centers.cols() && centers == other.centers &&
               betas == other.betas && alphas == other.alphas;
    }
};

using CellularNetworkd = CellularNetwork<double>;
using CellularNetworkf = CellularNetwork<float>;

/// Number of learned scalars: d+1 coefficients, d center coordinates and one
/// blending parameter per cell.
inline std::int64_t parameter_count(std::int64_t cells, std::int64_t dimensions) {
    return cells * 2 * (dimensions + 1);
}

template <typename Scalar>
std::int64_t parameter_count(const CellularNetwork<Scalar>& net) {
    return parameter_count(net.cells(), net.dimensions());
}

/// Throws std::invalid_argument naming the first violated invariant.
template <typename Scalar>
void validate(const CellularNetwork<Scalar>& net) {
    const auto d = net.dimensions();
    const auto k = net.cells();
    if (d < 1) throw std::invalid_argument("dimensions must be positive");
    if (k < 1) throw std::invalid_argument("cells must be positive");
    if (net.betas.rows() != d + 1 || net.betas.cols() != k)
        throw std::invalid_argument("betas shape mismatch: expected k rows of d+1 coefficients");
    if (net.alphas.size() != k) throw std::invalid_argument("alphas shape mismatch: expected k values");
    if (!net.centers.allFinite()) throw std::invalid_argument("centers must be finite");
    if (!net.betas.allFinite()) throw std::invalid_argument("betas must be finite");
    if (!net.alphas.allFinite()) throw std::invalid_argument("alphas must be finite");
    if ((net.alphas.array() <= Scalar(0)).any()) throw std::invalid_argument("alpha must be positive");
}

template <typename Scalar>
void clamp_alphas(CellularNetwork<Scalar>& net, Scalar floor = Scalar(kAlphaFloor)) {
    net.alphas = net.alphas.cwiseMax(floor);
}

/// Scattered samples: one feature vector per column, one target per sample.
template <typename Scalar>
struct BasicDataset {
    Matrix<Scalar> features;  // d x n
    Vector<Scalar> targets;   // n

    Eigen::Index size() const { return features.cols(); }
    Eigen::Index dimensions() const { return features.rows(); }
    bool empty() const { return features.cols() == 0; }

    /// Subset in the order given by `indices`.
    template <typename IndexRange>
    BasicDataset subset(const IndexRange& indices) const {
        BasicDataset out;
        out.features.resize(features.rows(), static_cast<Eigen::Index>(indices.size()));
        out.targets.resize(static_cast<Eigen::Index>(indices.size()));
        Eigen::Index col = 0;
        for (auto idx : indices) {
            out.features.col(col) = features.col(static_cast<Eigen::Index>(idx));
            out.targets[col] = targets[static_cast<Eigen::Index>(idx)];
            ++col;
        }
        return out;
    }
};

using Dataset = BasicDataset<double>;

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
        if (!(beta1 >= 0 && beta1 < 1)) throw std::invalid_argument("beta1 must lie in [0, 1)");
        if (!(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("beta2 must lie in [0, 1)");
        if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    }
};

struct HyperParams {
    int cells = 40;
    double lambda_alpha = 0.0;
    double lambda_beta = 0.0;
    int epochs = 30;
    double batch_fraction = 0.05;
    double alpha_init = 0.3;
    std::uint64_t rng_seed = 0;
    int kmeans_iters = 100;
    int threads = 1;
    bool deterministic = true;
    bool log_progress = false;
    AdamConfig optimizer;

    void validate() const {
        if (cells < 1) throw std::invalid_argument("cells must be positive");
        if (!(lambda_alpha >= 0)) throw std::invalid_argument("lambda_alpha must be non-negative");
        if (!(lambda_beta >= 0)) throw std::invalid_argument("lambda_beta must be non-negative");
        if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
        if (!(batch_fraction > 0 && batch_fraction <= 1))
            throw std::invalid_argument("batch fraction must lie in (0, 1]");
        if (!(alpha_init > 0)) throw std::invalid_argument("alpha_init must be positive");
        if (kmeans_iters < 0) throw std::invalid_argument("kmeans iterations must be non-negative");
        if (threads < 1) throw std::invalid_argument("threads must be positive");
        optimizer.validate();
    }
};

}  // namespace cellnet
