#include "cellnet/gradcheck.hpp"

#include <cmath>

namespace cellnet {

std::vector<std::pair<WeightState, Eigen::Index>> piece_signature(const CellularNetworkd& net,
                                                                  const Eigen::MatrixXd& points) {
    const NetworkGeometry<double> geo(net);
    const auto fw = forward(net, geo, points);
    std::vector<std::pair<WeightState, Eigen::Index>> sig;
    sig.reserve(fw.pieces.size());
    for (const auto& p : fw.pieces) sig.emplace_back(p.state, p.state == WeightState::linear ? p.neighbor : -1);
    return sig;
}

GradCheckCase random_gradcheck_case(Mode mode, std::mt19937_64& rng, int max_cells, int max_dims, int batch) {
    std::uniform_int_distribution<int> cells(1, max_cells);
    std::uniform_int_distribution<int> dims(1, max_dims);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> alpha(0.3, 2.0);
    std::uniform_real_distribution<double> lambda(0.0, 0.5);

    const int k = cells(rng);
    const int d = dims(rng);
    GradCheckCase c;
    c.net = CellularNetworkd(mode, d, k);
    for (auto& v : c.net.centers.reshaped()) v = gauss(rng);
    for (auto& v : c.net.betas.reshaped()) v = gauss(rng);
    for (auto& v : c.net.alphas) v = alpha(rng);

    // points scattered around the seeds so most pairs land in the blend zone
    std::uniform_int_distribution<int> pick(0, k - 1);
    c.batch.features.resize(d, batch);
    c.batch.targets.resize(batch);
    std::bernoulli_distribution coin(0.5);
    for (int n = 0; n < batch; ++n) {
        const int home = pick(rng);
        for (int j = 0; j < d; ++j) c.batch.features(j, n) = c.net.centers(j, home) + 0.8 * gauss(rng);
        c.batch.targets[n] = mode == Mode::binary ? (coin(rng) ? 1.0 : 0.0) : gauss(rng);
    }
    c.lambda_alpha = lambda(rng);
    c.lambda_beta = lambda(rng);
    return c;
}

namespace {

struct Accumulator {
    double worst = 0;
    void add(double analytic, double numeric, double floor) {
        const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    }
};

/// Returns false when some perturbation crosses a piece boundary.
template <typename Access>
bool check_block(GradCheckCase& c, Eigen::Index count, Access param, const std::vector<double>& analytic,
                 const std::vector<std::pair<WeightState, Eigen::Index>>& base_sig, double floor, Accumulator& acc) {
    std::vector<double> numeric(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
        double& theta = param(i);
        const double saved = theta;
        const double h = std::max(1e-6 * std::abs(saved), 1e-6);
        theta = saved + h;
        if (piece_signature(c.net, c.batch.features) != base_sig) {
            theta = saved;
            return false;
        }
        const double up = training_loss(c.net, c.batch, c.lambda_alpha, c.lambda_beta);
        theta = saved - h;
        if (piece_signature(c.net, c.batch.features) != base_sig) {
            theta = saved;
            return false;
        }
        const double down = training_loss(c.net, c.batch, c.lambda_alpha, c.lambda_beta);
        theta = saved;
        numeric[static_cast<std::size_t>(i)] = (up - down) / (2 * h);
    }
    for (Eigen::Index i = 0; i < count; ++i)
        acc.add(analytic[static_cast<std::size_t>(i)], numeric[static_cast<std::size_t>(i)], floor);
    return true;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

GradCheckReport run_gradient_check(const GradCheckOptions& options) {
    GradientFn grad_fn = options.gradient;
    if (!grad_fn) {
        grad_fn = [](const CellularNetworkd& net, const Dataset& batch, double la, double lb) {
            return gradient(net, batch, la, lb);
        };
    }

    GradCheckReport report;
    std::mt19937_64 rng(options.seed);
    for (Mode mode : {Mode::regression, Mode::binary}) {
        Accumulator centers, betas, alphas;
        int accepted = 0;
        int attempts = 0;
        while (accepted < options.trials) {
            if (++attempts > 20 * options.trials + 100) {
                report.passed = false;
                break;
            }
            auto c = random_gradcheck_case(mode, rng, options.max_cells, options.max_dims, options.batch);
            const auto sig = piece_signature(c.net, c.batch.features);
            const auto g = grad_fn(c.net, c.batch, c.lambda_alpha, c.lambda_beta);

            Accumulator trial_centers, trial_betas, trial_alphas;
            const bool stable =
                check_block(c, c.net.centers.size(), [&](Eigen::Index i) -> double& { return c.net.centers.data()[i]; },
                            flatten(g.d_centers), sig, options.magnitude_floor, trial_centers) &&
                check_block(c, c.net.betas.size(), [&](Eigen::Index i) -> double& { return c.net.betas.data()[i]; },
                            flatten(g.d_betas), sig, options.magnitude_floor, trial_betas) &&
                check_block(c, c.net.alphas.size(), [&](Eigen::Index i) -> double& { return c.net.alphas[i]; },
                            flatten(g.d_alphas), sig, options.magnitude_floor, trial_alphas);
            if (!stable) {
                ++report.resampled;
                continue;
            }
            centers.worst = std::max(centers.worst, trial_centers.worst);
            betas.worst = std::max(betas.worst, trial_betas.worst);
            alphas.worst = std::max(alphas.worst, trial_alphas.worst);
            ++accepted;
        }
        auto& block = mode == Mode::binary ? report.binary : report.regression;
        block = {centers.worst, betas.worst, alphas.worst};
        report.configurations += accepted;
    }
    if (report.max_error() >= options.tolerance) report.passed = false;
    return report;
}

}  // namespace cellnet
