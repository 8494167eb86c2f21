#pragma once

#include "cellnet/init.hpp"
#include "cellnet/optim.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cellnet {

struct TrainReport {
    std::vector<double> epoch_objective;  // regularized objective on the full training set
    std::vector<double> epoch_elapsed_s;
    double elapsed_s = 0;
    std::uint64_t rng_seed = 0;
    std::int64_t steps = 0;
};

struct TrainResult {
    CellularNetworkd network;
    TrainReport report;
};

/// Training produced a non-finite objective or parameter.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, CellularNetworkd last_finite)
        : NumericalError(what), last_finite_(std::move(last_finite)) {}
    const CellularNetworkd& last_finite() const { return last_finite_; }

private:
    CellularNetworkd last_finite_;
};

/// Minibatch Adam on an already initialized network.
///
/// Each epoch shuffles the data and walks it in batches of
/// ceil(batch_fraction * n). The regularizer gradient is scaled by
/// batch_fraction per step, so one epoch applies it about once.
TrainResult fit(CellularNetworkd network, const Dataset& data, const HyperParams& hp);

/// k-means initialization followed by fit().
TrainResult train(const Dataset& data, const HyperParams& hp, const SeedingPlan& plan, Mode mode,
                  std::span<const int> labels = {});

/// Ten (or `classes.size()`) binary networks, one per class.
struct OvrModel {
    std::vector<int> classes;
    std::vector<CellularNetworkd> networks;

    Eigen::Index dimensions() const { return networks.empty() ? 0 : networks.front().dimensions(); }
    std::int64_t parameter_count() const;
};

struct OvrSeeding {
    /// Uniform: one k-means over all data, shared by every classifier.
    /// Stratified: per classifier, `target_count` seeds from its own class
    /// and `other_count` from each other class.
    bool stratified = false;
    int target_count = 10;
    int other_count = 4;
};

std::vector<int> default_classes();

OvrModel train_ovr(const Dataset& data, const HyperParams& hp, const OvrSeeding& seeding,
                   std::vector<int> classes = default_classes(), std::vector<TrainReport>* reports = nullptr);

struct OvrPrediction {
    int label = 0;
    Eigen::VectorXd probabilities;
};

/// Argmax of the per-class probabilities; ties go to the lowest class label.
OvrPrediction predict_ovr(const OvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& point);

/// Raw blended values, one row per class and one column per point.
Eigen::MatrixXd ovr_values(const OvrModel& model, const Eigen::MatrixXd& points);

std::vector<int> predict_ovr_batch(const OvrModel& model, const Eigen::MatrixXd& points);

/// Index of the largest entry, lowest index on ties.
Eigen::Index argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& values);

double evaluate_accuracy(const OvrModel& model, const Dataset& data);

/// Grid of OvR test accuracies: rows follow lambda_alphas, columns
/// lambda_betas. A cell whose run fails holds NaN.
struct GridResult {
    std::vector<double> lambda_alphas;
    std::vector<double> lambda_betas;
    Eigen::MatrixXd accuracy;
};

GridResult grid_search(const Dataset& train_data, const Dataset& test_data, const HyperParams& hp,
                       const OvrSeeding& seeding, const std::vector<double>& lambda_alphas,
                       const std::vector<double>& lambda_betas, std::vector<int> classes = default_classes());

/// RFC 4180 table: header "lambda_alpha\lambda_beta" then the lambda_beta
/// values; one row per lambda_alpha.
std::string grid_to_csv(const GridResult& grid);

}  // namespace cellnet
