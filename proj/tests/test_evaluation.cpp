#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"

#include <numbers>

using namespace cellnet;

TEST_CASE("linear value") {
    CellularNetworkd net(Mode::regression, 2, 1);
    net.betas.col(0) << 1, 2, 3;
    CHECK(linear_value(net, 0, Eigen::Vector2d(10, 100)) == 321.0);

    CellularNetworkd zero(Mode::regression, 4, 2);
    CHECK(linear_value(zero, 1, Eigen::Vector4d(3, -1, 8, 2)) == 0.0);

    CellularNetworkd proj(Mode::regression, 4, 1);
    proj.betas(1, 0) = 1;
    CHECK(linear_value(proj, 0, Eigen::Vector4d(3, -1, 8, 2)) == 3.0);
}

TEST_CASE("single cell evaluates its linear function") {
    std::mt19937_64 rng(2);
    const auto net = testing::random_network(rng, Mode::regression, 3, 1);
    const auto pts = testing::random_points(rng, 3, 50, 5.0);
    for (Eigen::Index n = 0; n < pts.cols(); ++n)
        CHECK(evaluate(net, pts.col(n)).value == linear_value(net, 0, pts.col(n)));
}

TEST_CASE("normalized weights") {
    // cell 1's ratio at p is 0.5 with alpha 1 -> raw weights (1, 0.5)
    CellularNetworkd net(Mode::regression, 1, 2);
    net.centers << 0, 2;
    net.alphas << 1, 1;
    net.betas << 3, 6,
                 0, 0;
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.5);
    const auto out = evaluate(net, p);
    CHECK(out.raw_weights[0] == 1.0);
    CHECK(out.raw_weights[1] == doctest::Approx(0.5));
    CHECK(out.weights[0] == doctest::Approx(2.0 / 3.0));
    CHECK(out.weights[1] == doctest::Approx(1.0 / 3.0));
    CHECK(out.value == doctest::Approx(4.0));
}

TEST_CASE("common coefficients reproduce one affine function") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = testing::random_network(rng, Mode::regression, 3, 7);
        const Eigen::VectorXd beta = net.betas.col(0);
        net.betas.colwise() = beta;
        const auto pts = testing::random_points(rng, 3, 50);
        const Eigen::VectorXd f = evaluate_batch(net, pts);
        for (Eigen::Index n = 0; n < pts.cols(); ++n) {
            const double expected = beta[0] + beta.tail(3).dot(pts.col(n));
            CHECK(std::abs(f[n] - expected) < 1e-12);
        }
    }
}

TEST_CASE("partition of unity") {
    std::mt19937_64 rng(7);
    for (int k : {2, 10, 50})
        for (int d : {2, 20, 100}) {
            const auto net = testing::random_network(rng, Mode::regression, d, k);
            const auto pts = testing::random_points(rng, d, 40);
            for (Eigen::Index n = 0; n < pts.cols(); ++n) {
                const auto out = evaluate(net, pts.col(n));
                CHECK(std::abs(out.weights.sum() - 1) < 1e-9);
                CHECK(out.raw_weights.sum() >= 1 - 1e-12);
                CHECK(std::abs(out.value - out.weights.dot(out.cell_values)) < 1e-12);
            }
        }
}

TEST_CASE("matches the straight-from-definition evaluator") {
    std::mt19937_64 rng(1234);
    const auto net = testing::random_network(rng, Mode::regression, 2, 5);
    const auto pts = testing::random_points(rng, 2, 1000);
    const Eigen::VectorXd batch = evaluate_batch(net, pts);
    double worst = 0;
    for (Eigen::Index n = 0; n < pts.cols(); ++n) {
        const double ref = oracle::blended_value(net.centers, net.betas, net.alphas, pts.col(n));
        worst = std::max(worst, std::abs(evaluate(net, pts.col(n)).value - ref));
        worst = std::max(worst, std::abs(batch[n] - ref));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("deep inside a cell only its function counts") {
    CellularNetworkd net(Mode::regression, 2, 2);
    net.centers << 0, 10,
                   0, 0;
    net.alphas << 0.3, 0.3;
    net.betas << 1, 50,
                 2, -4,
                 3, 7;
    const Eigen::Vector2d p(1, 1);
    CHECK(evaluate(net, p).value == linear_value(net, 0, p));
}

TEST_CASE("value is continuous along segments") {
    std::mt19937_64 rng(77);
    const auto net = testing::random_network(rng, Mode::regression, 2, 6, 0.5, 1.5);
    const Eigen::Vector2d a(-2, -1.5), b(2.5, 1.8);
    auto max_jump = [&](int steps) {
        Eigen::MatrixXd pts(2, steps + 1);
        for (int s = 0; s <= steps; ++s) pts.col(s) = a + (b - a) * (static_cast<double>(s) / steps);
        const Eigen::VectorXd f = evaluate_batch(net, pts);
        return (f.tail(steps) - f.head(steps)).cwiseAbs().maxCoeff();
    };
    const double coarse = max_jump(20000);
    const double fine = max_jump(40000);
    CHECK(coarse > 0);
    CHECK(std::abs(fine / coarse - 0.5) < 0.1);
}

TEST_CASE("sigmoid and probability") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(sigmoid(100.0) <= 1.0);
    CHECK(sigmoid(100.0) > 1.0 - 1e-15);
    CHECK(sigmoid(std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(sigmoid(-1000.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(-1000.0)));
    for (double x : {-40.0, -3.0, -0.2, 0.7, 5.0, 31.0})
        CHECK(sigmoid(-x) == doctest::Approx(1 - sigmoid(x)).epsilon(1e-12));
    CHECK(softplus(0.0) == doctest::Approx(std::numbers::ln2));
    CHECK(softplus(800.0) == 800.0);

    CellularNetworkd net(Mode::binary, 1, 1);
    net.betas(0, 0) = std::log(3.0);
    CHECK(probability(net, Eigen::VectorXd::Zero(1)) == doctest::Approx(0.75));

    net.mode = Mode::regression;
    CHECK_THROWS_WITH_AS(probability(net, Eigen::VectorXd::Zero(1)), "model is not a classifier", ModeMismatch);
    CHECK_THROWS_AS(probability_batch(net, Eigen::MatrixXd::Zero(1, 3)), ModeMismatch);
}

TEST_CASE("float instantiation evaluates close to double") {
    std::mt19937_64 rng(9);
    const auto net = testing::random_network(rng, Mode::regression, 3, 4);
    const auto pts = testing::random_points(rng, 3, 30);
    const Eigen::VectorXd fd = evaluate_batch(net, pts);
    const Eigen::VectorXf ff = evaluate_batch(net.cast<float>(), pts.cast<float>());
    CHECK((ff.cast<double>() - fd).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("dimension mismatch") {
    CellularNetworkd net(Mode::regression, 3, 2);
    CHECK_THROWS_AS(evaluate(net, Eigen::Vector2d(0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_batch(net, Eigen::MatrixXd::Zero(2, 4)), std::invalid_argument);
}
