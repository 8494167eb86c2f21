#pragma once

#include "cellnet/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace cellnet {

class InitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// How seed vertices are spread over the training data.
struct SeedingPlan {
    enum class Strategy { uniform, stratified };

    Strategy strategy = Strategy::uniform;
    std::map<int, int> counts;  // stratified: class label -> seed count

    static SeedingPlan uniform() { return {}; }

    /// `target_count` seeds for `target`, `other_count` for every other class.
    static SeedingPlan stratified(int target, int target_count, int other_count, std::span<const int> classes);

    int total() const;
};

struct KMeansResult {
    Eigen::MatrixXd centers;            // d x k
    std::vector<Eigen::Index> assignments;
    int iterations = 0;                 // centroid updates performed
    bool converged = false;
    std::vector<double> inertia;        // after each assignment pass
};

/// Lloyd's algorithm seeded with k distinct points drawn at random.
///
/// Ties in assignment go to the lowest center index. An emptied cluster is
/// re-seeded with the point farthest from its current center. Stops when an
/// assignment pass changes nothing or after `max_iters` updates.
KMeansResult kmeans(const Eigen::MatrixXd& points, Eigen::Index k, std::uint64_t rng_seed, int max_iters = 100);

/// Zero betas, constant alphas, centers from k-means. For a stratified plan,
/// `labels` gives each point's class (falls back to the dataset targets).
CellularNetworkd initialize_network(const Dataset& data, const HyperParams& hp, const SeedingPlan& plan, Mode mode,
                                    std::span<const int> labels = {});

}  // namespace cellnet
