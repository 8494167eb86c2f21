#include "cellnet/trainer.hpp"

#include "cellnet/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

namespace cellnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool finite(const CellularNetworkd& net) {
    return net.centers.allFinite() && net.betas.allFinite() && net.alphas.allFinite();
}

}  // namespace

TrainResult fit(CellularNetworkd network, const Dataset& data, const HyperParams& hp) {
    hp.validate();
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (data.dimensions() != network.dimensions()) throw std::invalid_argument("dataset dimension mismatch");
    validate(network);

    const auto start = Clock::now();
    TrainResult result;
    result.report.rng_seed = hp.rng_seed;

    const Eigen::Index n = data.size();
    const auto batch = static_cast<Eigen::Index>(std::ceil(hp.batch_fraction * static_cast<double>(n) - 1e-9));
    const Eigen::Index batch_size = std::clamp<Eigen::Index>(batch, 1, n);
    const double lambda_alpha = hp.lambda_alpha * hp.batch_fraction;
    const double lambda_beta = hp.lambda_beta * hp.batch_fraction;
    const GradientOptions options{hp.threads, hp.deterministic};

    std::mt19937_64 rng(hp.rng_seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    AdamState<double> adam(network);
    CellularNetworkd last_finite = network;
    Eigen::MatrixXd points;
    Eigen::VectorXd targets;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index begin = 0; begin < n; begin += batch_size) {
            const Eigen::Index count = std::min(batch_size, n - begin);
            const auto idx = std::span(order).subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(count));
            points = data.features(Eigen::all, idx);
            targets = data.targets(idx);

            const auto grad = gradient(network, points, targets, lambda_alpha, lambda_beta, options);
            if (!grad.allFinite())
                throw DivergenceError(fmt::format("non-finite gradient in epoch {}", epoch + 1), last_finite);
            adam_step(adam, network, grad, hp.optimizer);
            clamp_alphas(network);
            ++result.report.steps;
            if (!finite(network))
                throw DivergenceError(fmt::format("non-finite parameters in epoch {}", epoch + 1), last_finite);
        }

        const double objective = regularized_objective(network, data, hp.lambda_alpha, hp.lambda_beta);
        if (!std::isfinite(objective))
            throw DivergenceError(fmt::format("objective diverged in epoch {}", epoch + 1), last_finite);
        last_finite = network;
        const double elapsed = seconds_since(start);
        result.report.epoch_objective.push_back(objective);
        result.report.epoch_elapsed_s.push_back(elapsed);
        if (hp.log_progress)
            std::cerr << fmt::format("epoch={} objective={:.10g} elapsed_s={:.3f}\n", epoch + 1, objective, elapsed);
    }

    result.network = std::move(network);
    result.report.elapsed_s = seconds_since(start);
    return result;
}

TrainResult train(const Dataset& data, const HyperParams& hp, const SeedingPlan& plan, Mode mode,
                  std::span<const int> labels) {
    hp.validate();
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (mode == Mode::binary) {
        for (Eigen::Index i = 0; i < data.size(); ++i)
            if (data.targets[i] != 0.0 && data.targets[i] != 1.0)
                throw std::invalid_argument(fmt::format("target not in {{0,1}} at index {}", i));
    }
    return fit(initialize_network(data, hp, plan, mode, labels), data, hp);
}

std::int64_t OvrModel::parameter_count() const {
    std::int64_t total = 0;
    for (const auto& net : networks) total += cellnet::parameter_count(net);
    return total;
}

std::vector<int> default_classes() { return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}; }

OvrModel train_ovr(const Dataset& data, const HyperParams& hp, const OvrSeeding& seeding, std::vector<int> classes,
                   std::vector<TrainReport>* reports) {
    hp.validate();
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (classes.empty()) throw std::invalid_argument("no classes");
    const auto labels = integer_labels(data);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (std::find(classes.begin(), classes.end(), labels[i]) == classes.end())
            throw std::invalid_argument(fmt::format("label {} at index {} is not a known class", labels[i], i));

    std::optional<CellularNetworkd> shared;
    if (!seeding.stratified)
        shared = initialize_network(data, hp, SeedingPlan::uniform(), Mode::binary);

    OvrModel model;
    model.classes = classes;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        Dataset binary{data.features, Eigen::VectorXd(data.size())};
        for (Eigen::Index i = 0; i < data.size(); ++i)
            binary.targets[i] = labels[static_cast<std::size_t>(i)] == classes[c] ? 1.0 : 0.0;

        HyperParams class_hp = hp;
        class_hp.rng_seed = hp.rng_seed + c;
        CellularNetworkd init = shared ? *shared
                                       : initialize_network(data, class_hp,
                                                            SeedingPlan::stratified(classes[c], seeding.target_count,
                                                                                    seeding.other_count, classes),
                                                            Mode::binary, labels);
        if (hp.log_progress) std::cerr << fmt::format("class={} cells={}\n", classes[c], init.cells());
        auto result = fit(std::move(init), binary, class_hp);
        model.networks.push_back(std::move(result.network));
        if (reports) reports->push_back(std::move(result.report));
    }
    return model;
}

Eigen::Index argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& values) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

OvrPrediction predict_ovr(const OvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& point) {
    OvrPrediction out;
    Eigen::VectorXd values(static_cast<Eigen::Index>(model.networks.size()));
    for (std::size_t c = 0; c < model.networks.size(); ++c) {
        if (model.networks[c].mode != Mode::binary) throw ModeMismatch("model is not a classifier");
        values[static_cast<Eigen::Index>(c)] = evaluate(model.networks[c], point).value;
    }
    out.probabilities = values.unaryExpr([](double z) { return sigmoid(z); });
    // Raw values keep their order where the sigmoid saturates to 1.
    out.label = model.classes[static_cast<std::size_t>(argmax_lowest(values))];
    return out;
}

Eigen::MatrixXd ovr_values(const OvrModel& model, const Eigen::MatrixXd& points) {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(model.networks.size()), points.cols());
    for (std::size_t c = 0; c < model.networks.size(); ++c)
        values.row(static_cast<Eigen::Index>(c)) = evaluate_batch(model.networks[c], points).transpose();
    return values;
}

std::vector<int> predict_ovr_batch(const OvrModel& model, const Eigen::MatrixXd& points) {
    const Eigen::MatrixXd values = ovr_values(model, points);
    std::vector<int> labels(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index n = 0; n < points.cols(); ++n)
        labels[static_cast<std::size_t>(n)] = model.classes[static_cast<std::size_t>(argmax_lowest(values.col(n)))];
    return labels;
}

double evaluate_accuracy(const OvrModel& model, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("empty dataset");
    if (data.dimensions() != model.dimensions())
        throw std::invalid_argument(
            fmt::format("data has {} features but model dimensions is {}", data.dimensions(), model.dimensions()));
    const auto predicted = predict_ovr_batch(model, data.features);
    const auto labels = integer_labels(data);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

GridResult grid_search(const Dataset& train_data, const Dataset& test_data, const HyperParams& hp,
                       const OvrSeeding& seeding, const std::vector<double>& lambda_alphas,
                       const std::vector<double>& lambda_betas, std::vector<int> classes) {
    if (lambda_alphas.empty() || lambda_betas.empty()) throw std::invalid_argument("grid axes must be nonempty");
    GridResult grid{lambda_alphas, lambda_betas,
                    Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(lambda_alphas.size()),
                                              static_cast<Eigen::Index>(lambda_betas.size()),
                                              std::numeric_limits<double>::quiet_NaN())};
    for (std::size_t r = 0; r < lambda_alphas.size(); ++r) {
        for (std::size_t c = 0; c < lambda_betas.size(); ++c) {
            HyperParams cell_hp = hp;
            cell_hp.lambda_alpha = lambda_alphas[r];
            cell_hp.lambda_beta = lambda_betas[c];
            try {
                const auto model = train_ovr(train_data, cell_hp, seeding, classes);
                grid.accuracy(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    evaluate_accuracy(model, test_data);
            } catch (const std::exception& e) {
                std::cerr << fmt::format("grid cell lambda_alpha={} lambda_beta={} failed: {}\n", lambda_alphas[r],
                                         lambda_betas[c], e.what());
            }
            if (hp.log_progress)
                std::cerr << fmt::format("grid lambda_alpha={} lambda_beta={} accuracy={}\n", lambda_alphas[r],
                                         lambda_betas[c],
                                         grid.accuracy(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        }
    }
    return grid;
}

std::string grid_to_csv(const GridResult& grid) {
    std::string out = "lambda_alpha\\lambda_beta";
    for (double b : grid.lambda_betas) out += fmt::format(",{}", b);
    out += "\r\n";
    for (std::size_t r = 0; r < grid.lambda_alphas.size(); ++r) {
        out += fmt::format("{}", grid.lambda_alphas[r]);
        for (std::size_t c = 0; c < grid.lambda_betas.size(); ++c) {
            const double acc = grid.accuracy(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            out += std::isnan(acc) ? std::string(",NaN") : fmt::format(",{}", acc);
        }
        out += "\r\n";
    }
    return out;
}

}  // namespace cellnet
