#include "cellnet/init.hpp"

#include "cellnet/data.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace cellnet {

SeedingPlan SeedingPlan::stratified(int target, int target_count, int other_count, std::span<const int> classes) {
    SeedingPlan plan;
    plan.strategy = Strategy::stratified;
    for (int c : classes) plan.counts[c] = (c == target) ? target_count : other_count;
    return plan;
}

int SeedingPlan::total() const {
    int sum = 0;
    for (const auto& [label, count] : counts) sum += count;
    return sum;
}

namespace {

std::vector<Eigen::Index> pick_distinct(const Eigen::MatrixXd& points, Eigen::Index k, std::mt19937_64& rng) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Eigen::Index> picked;
    picked.reserve(static_cast<std::size_t>(k));
    for (auto idx : order) {
        const bool duplicate = std::any_of(picked.begin(), picked.end(),
                                           [&](Eigen::Index p) { return points.col(p) == points.col(idx); });
        if (!duplicate) picked.push_back(idx);
        if (static_cast<Eigen::Index>(picked.size()) == k) break;
    }
    if (static_cast<Eigen::Index>(picked.size()) < k)
        throw InitError("too few distinct points: need " + std::to_string(k) + ", found " +
                        std::to_string(picked.size()));
    return picked;
}

/// Squared distance from every point to every center, k x n.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers) {
    Eigen::MatrixXd dist = -2.0 * (centers.transpose() * points);
    dist.colwise() += centers.colwise().squaredNorm().transpose();
    dist.rowwise() += points.colwise().squaredNorm();
    return dist.cwiseMax(0.0);
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, Eigen::Index k, std::uint64_t rng_seed, int max_iters) {
    if (k < 1) throw InitError("k must be positive");
    const Eigen::Index n = points.cols();
    std::mt19937_64 rng(rng_seed);

    KMeansResult result;
    const auto picked = pick_distinct(points, k, rng);
    result.centers = points(Eigen::all, picked);
    result.assignments.assign(static_cast<std::size_t>(n), -1);

    std::vector<Eigen::Index> next(static_cast<std::size_t>(n));
    std::vector<double> best(static_cast<std::size_t>(n));
    for (int iter = 0;; ++iter) {
        const Eigen::MatrixXd dist = squared_distances(points, result.centers);
        double inertia = 0;
        for (Eigen::Index p = 0; p < n; ++p) {
            Eigen::Index arg = 0;
            double val = dist(0, p);
            for (Eigen::Index c = 1; c < k; ++c) {
                if (dist(c, p) < val) {
                    val = dist(c, p);
                    arg = c;
                }
            }
            next[static_cast<std::size_t>(p)] = arg;
            best[static_cast<std::size_t>(p)] = val;
            inertia += val;
        }
        result.inertia.push_back(inertia);
        if (next == result.assignments) {
            result.converged = true;
            break;
        }
        result.assignments = next;
        if (iter >= max_iters) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
        for (Eigen::Index p = 0; p < n; ++p) {
            const auto c = result.assignments[static_cast<std::size_t>(p)];
            sums.col(c) += points.col(p);
            ++counts[c];
        }
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                result.centers.col(c) = sums.col(c) / counts[c];
                continue;
            }
            Eigen::Index far = -1;
            double far_dist = -1;
            for (Eigen::Index p = 0; p < n; ++p) {
                if (!taken[static_cast<std::size_t>(p)] && best[static_cast<std::size_t>(p)] > far_dist) {
                    far_dist = best[static_cast<std::size_t>(p)];
                    far = p;
                }
            }
            taken[static_cast<std::size_t>(far)] = true;
            result.centers.col(c) = points.col(far);
        }
        ++result.iterations;
    }
    return result;
}

CellularNetworkd initialize_network(const Dataset& data, const HyperParams& hp, const SeedingPlan& plan, Mode mode,
                                    std::span<const int> labels) {
    if (data.empty()) throw InitError("empty dataset");
    if (plan.strategy == SeedingPlan::Strategy::uniform) {
        CellularNetworkd net(mode, data.dimensions(), hp.cells, hp.alpha_init);
        net.centers = kmeans(data.features, hp.cells, hp.rng_seed, hp.kmeans_iters).centers;
        return net;
    }

    std::vector<int> owned;
    if (labels.empty()) {
        owned = integer_labels(data);
        labels = owned;
    }
    if (static_cast<Eigen::Index>(labels.size()) != data.size())
        throw InitError("label count does not match dataset size");

    CellularNetworkd net(mode, data.dimensions(), plan.total(), hp.alpha_init);
    Eigen::Index col = 0;
    for (const auto& [label, count] : plan.counts) {
        if (count < 1) throw InitError("seed count for class " + std::to_string(label) + " must be positive");
        std::vector<Eigen::Index> members;
        for (std::size_t p = 0; p < labels.size(); ++p)
            if (labels[p] == label) members.push_back(static_cast<Eigen::Index>(p));
        if (members.empty()) throw InitError("seeding plan references absent class " + std::to_string(label));
        const Eigen::MatrixXd subset = data.features(Eigen::all, members);
        const auto seed = hp.rng_seed + static_cast<std::uint64_t>(label) * 0x9E3779B97F4A7C15ull;
        net.centers.middleCols(col, count) = kmeans(subset, count, seed, hp.kmeans_iters).centers;
        col += count;
    }
    return net;
}

}  // namespace cellnet
