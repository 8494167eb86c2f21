#pragma once

#include "cellnet/model.hpp"

#include <limits>
#include <optional>
#include <stdexcept>

namespace cellnet {

/// Seeds closer than this are treated as coincident and never bound a cell.
inline constexpr double kCoincidentSeedDistance = 1e-12;

class DegenerateRay : public std::domain_error {
public:
    DegenerateRay() : std::domain_error("degenerate ray: point coincides with the cell's seed") {}
};

/// Where the ray x(t) = c_i + t (p - c_i) leaves the Voronoi cell of c_i.
template <typename Scalar>
struct BoundaryCrossing {
    Scalar t_star = std::numeric_limits<Scalar>::infinity();
    std::optional<Eigen::Index> active_neighbor;
};

/// Which branch of the relative-weight formula a (point, cell) pair sits on.
enum class WeightState : unsigned char { interior, linear, clamped };

/// Crossing of the bisector between c_i and c_j along the ray from c_i through
/// p, solved in closed form; candidates behind c_i are discarded.
template <typename Scalar, typename Derived>
BoundaryCrossing<Scalar> boundary_crossing(const CellularNetwork<Scalar>& net, Eigen::Index cell,
                                           const Eigen::MatrixBase<Derived>& point) {
    if (point.size() != net.dimensions()) throw std::invalid_argument("point dimension mismatch");
    const Vector<Scalar> ray = point - net.centers.col(cell);
    if ((ray.array() == Scalar(0)).all()) throw DegenerateRay();

    constexpr auto min_sq = static_cast<Scalar>(kCoincidentSeedDistance * kCoincidentSeedDistance);
    BoundaryCrossing<Scalar> best;
    for (Eigen::Index j = 0; j < net.cells(); ++j) {
        if (j == cell) continue;
        const Vector<Scalar> offset = net.centers.col(j) - net.centers.col(cell);
        const Scalar sq = offset.squaredNorm();
        if (sq < min_sq) continue;
        const Scalar den = offset.dot(ray);
        if (!(den > Scalar(0))) continue;
        const Scalar t = sq / (Scalar(2) * den);
        if (t < best.t_star) {
            best.t_star = t;
            best.active_neighbor = j;
        }
    }
    return best;
}

/// Relative weight from the crossing parameter: 1 on and inside the cell,
/// falling linearly to 0 where |p - q| / |c - q| reaches alpha.
template <typename Scalar>
Scalar weight_from_crossing(Scalar t_star, Scalar alpha, WeightState* state = nullptr) {
    if (t_star >= Scalar(1)) {
        if (state) *state = WeightState::interior;
        return Scalar(1);
    }
    const Scalar ratio = (Scalar(1) - t_star) / t_star;
    const Scalar w = Scalar(1) - ratio / alpha;
    if (w <= Scalar(0)) {
        if (state) *state = WeightState::clamped;
        return Scalar(0);
    }
    if (state) *state = WeightState::linear;
    return w;
}

template <typename Scalar, typename Derived>
Scalar relative_weight(const CellularNetwork<Scalar>& net, Eigen::Index cell,
                       const Eigen::MatrixBase<Derived>& point) {
    if (point.size() != net.dimensions()) throw std::invalid_argument("point dimension mismatch");
    if (point == net.centers.col(cell)) return Scalar(1);
    return weight_from_crossing(boundary_crossing(net, cell, point).t_star, net.alphas[cell]);
}

/// Point-independent pairwise quantities, computed once per parameter update.
///
/// With s = C^T p, the ray denominator (c_j - c_i).(p - c_i) becomes
/// s_j - s_i - G_ij + G_ii, so a whole batch needs one C^T P product plus
/// O(k^2) scalar work per point.
template <typename Scalar>
struct NetworkGeometry {
    Matrix<Scalar> gram;         // C^T C
    Matrix<Scalar> sq_distance;  // |c_i - c_j|^2, from explicit differences

    explicit NetworkGeometry(const CellularNetwork<Scalar>& net) {
        const auto k = net.cells();
        gram = net.centers.transpose() * net.centers;
        sq_distance.resize(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            sq_distance(i, i) = Scalar(0);
            for (Eigen::Index j = i + 1; j < k; ++j) {
                const Scalar sq = (net.centers.col(i) - net.centers.col(j)).squaredNorm();
                sq_distance(i, j) = sq;
                sq_distance(j, i) = sq;
            }
        }
    }
};

/// Per (point, cell) forward quantities, enough to differentiate a piece.
template <typename Scalar>
struct CellPiece {
    WeightState state = WeightState::interior;
    Eigen::Index neighbor = -1;
    Scalar t_star = std::numeric_limits<Scalar>::infinity();
    Scalar den = Scalar(0);  // 2 (c_j - c_i).(p - c_i) for the active neighbor
    Scalar weight = Scalar(1);
};

/// Relative weights of every cell at the point whose projections onto the
/// centers are `proj` (= C^T p). Writes k pieces into `pieces`.
template <typename Scalar, typename ProjDerived>
void relative_weights_from_projection(const CellularNetwork<Scalar>& net, const NetworkGeometry<Scalar>& geo,
                                      const Eigen::MatrixBase<ProjDerived>& proj, CellPiece<Scalar>* pieces) {
    constexpr auto min_sq = static_cast<Scalar>(kCoincidentSeedDistance * kCoincidentSeedDistance);
    const auto k = net.cells();
    for (Eigen::Index i = 0; i < k; ++i) {
        CellPiece<Scalar> piece;
        const Scalar base = proj(i) - geo.gram(i, i);
        for (Eigen::Index j = 0; j < k; ++j) {
            if (j == i) continue;
            const Scalar sq = geo.sq_distance(i, j);
            if (sq < min_sq) continue;
            const Scalar den = Scalar(2) * ((proj(j) - geo.gram(i, j)) - base);
            if (!(den > Scalar(0))) continue;
            const Scalar t = sq / den;
            if (t < piece.t_star) {
                piece.t_star = t;
                piece.neighbor = j;
                piece.den = den;
            }
        }
        piece.weight = weight_from_crossing(piece.t_star, net.alphas[i], &piece.state);
        pieces[i] = piece;
    }
}

}  // namespace cellnet
