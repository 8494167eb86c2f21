#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace cellnet;

namespace {

CellularNetworkd figure_two(double alpha0 = 1.4) {
    CellularNetworkd net(Mode::regression, 2, 4);
    net.centers << 0, 0, 1, -1,
                   1, 0, 1, 1;
    net.alphas.setConstant(1.0);
    net.alphas[0] = alpha0;
    return net;
}

}  // namespace

TEST_CASE("figure two crossing") {
    const auto net = figure_two();
    const Eigen::Vector2d p(1, 0.25);
    const auto hit = boundary_crossing(net, 0, p);
    CHECK(hit.t_star == doctest::Approx(0.5).epsilon(1e-15));
    REQUIRE(hit.active_neighbor.has_value());
    CHECK(*hit.active_neighbor == 2);

    const Eigen::Vector2d c0 = net.centers.col(0);
    const Eigen::Vector2d q = c0 + hit.t_star * (p - c0);
    CHECK(std::abs(q.x() - 0.5) < 1e-12);
    CHECK(std::abs(q.y() - 0.625) < 1e-12);
    CHECK(std::abs((p - q).norm() - 0.625) < 1e-12);
    CHECK(std::abs((c0 - q).norm() - 0.625) < 1e-12);

    // c_1 alone would be crossed later, at t = 2/3
    auto only01 = net;
    only01.centers.col(2) = only01.centers.col(3);
    CHECK(boundary_crossing(only01, 0, p).t_star == doctest::Approx(2.0 / 3.0));

    CHECK(std::abs(relative_weight(net, 0, p) - (1 - 1 / 1.4)) < 1e-12);
    for (double a : {1.01, 2.0, 7.5}) CHECK(std::abs(relative_weight(figure_two(a), 0, p) - (1 - 1 / a)) < 1e-12);
    // ratio 1 is past a blend extent below 1
    CHECK(relative_weight(figure_two(0.9), 0, p) == 0.0);
}

TEST_CASE("single cell has no boundary") {
    CellularNetworkd net(Mode::regression, 3, 1);
    net.centers.col(0) << 1, 2, 3;
    const Eigen::Vector3d p(-4, 0, 9);
    const auto hit = boundary_crossing(net, 0, p);
    CHECK(std::isinf(hit.t_star));
    CHECK_FALSE(hit.active_neighbor.has_value());
    CHECK(relative_weight(net, 0, p) == 1.0);
}

TEST_CASE("degenerate ray") {
    const auto net = figure_two();
    const Eigen::Vector2d c0 = net.centers.col(0);
    CHECK_THROWS_AS(boundary_crossing(net, 0, c0), DegenerateRay);
    CHECK(relative_weight(net, 0, c0) == 1.0);
    CHECK_THROWS_AS(relative_weight(net, 0, Eigen::Vector3d(0, 0, 0)), std::invalid_argument);
}

TEST_CASE("boundary point and clamped point") {
    CellularNetworkd net(Mode::regression, 2, 2);
    net.centers << 0, 2,
                   0, 0;
    net.alphas << 0.5, 0.5;
    CHECK(boundary_crossing(net, 0, Eigen::Vector2d(1, 0.5)).t_star == 1.0);
    CHECK(relative_weight(net, 0, Eigen::Vector2d(1, 0.5)) == 1.0);
    CHECK(relative_weight(net, 1, Eigen::Vector2d(1, 0.5)) == 1.0);
    // ratio 1 > alpha
    CHECK(relative_weight(net, 0, Eigen::Vector2d(2, 0)) == 0.0);
    // ratio 0.25 < alpha
    CHECK(relative_weight(net, 0, Eigen::Vector2d(1.25, 0)) == doctest::Approx(0.5));
}

TEST_CASE("coincident seeds never bound a cell") {
    CellularNetworkd net(Mode::regression, 2, 3);
    net.centers << 0, 0, 2,
                   0, 0, 0;
    const auto hit = boundary_crossing(net, 0, Eigen::Vector2d(3, 0));
    REQUIRE(hit.active_neighbor.has_value());
    CHECK(*hit.active_neighbor == 2);
    CHECK(relative_weight(net, 1, Eigen::Vector2d(-3, 1)) == 1.0);
}

TEST_CASE("ties on the first bisector go to the lowest index") {
    CellularNetworkd net(Mode::regression, 2, 3);
    // c_1 and c_2 mirror each other across the ray along +x
    net.centers << 0, 1, 1,
                   0, 1, -1;
    const auto hit = boundary_crossing(net, 0, Eigen::Vector2d(5, 0));
    REQUIRE(hit.active_neighbor.has_value());
    CHECK(*hit.active_neighbor == 1);
}

TEST_CASE("weight is one exactly on the nearest seed's cell") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> kdist(2, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = testing::random_network(rng, Mode::regression, 2, kdist(rng));
        const auto pts = testing::random_points(rng, 2, 10);
        for (Eigen::Index n = 0; n < pts.cols(); ++n) {
            const Eigen::VectorXd p = pts.col(n);
            for (Eigen::Index i = 0; i < net.cells(); ++i) {
                const double w = relative_weight(net, i, p);
                CHECK(w >= 0.0);
                CHECK(w <= 1.0);
                CHECK((w == 1.0) == oracle::is_nearest(net.centers, i, p));
            }
        }
    }
}

TEST_CASE("bisector-plane oracle agrees on weights") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + trial % 5;
        const auto net = testing::random_network(rng, Mode::regression, d, 6);
        const auto pts = testing::random_points(rng, d, 20);
        for (Eigen::Index n = 0; n < pts.cols(); ++n)
            for (Eigen::Index i = 0; i < net.cells(); ++i) {
                const auto ref = oracle::cell_weight(net.centers, net.alphas, i, pts.col(n));
                CHECK(std::abs(relative_weight(net, i, pts.col(n)) - ref.weight) < 1e-12);
            }
    }
}

TEST_CASE("crossing matches a dense scan along the segment") {
    std::mt19937_64 rng(99);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto net = testing::random_network(rng, Mode::regression, 3, 8);
        const auto pts = testing::random_points(rng, 3, 4, 2.0);
        for (Eigen::Index n = 0; n < pts.cols(); ++n)
            for (Eigen::Index i = 0; i < net.cells(); ++i) {
                const auto hit = boundary_crossing(net, i, pts.col(n));
                const double scan = oracle::dense_scan_crossing(net.centers, i, pts.col(n), 4.0);
                if (hit.t_star <= 3.99) {
                    CHECK(std::abs(scan - hit.t_star) < 1e-4);
                    ++compared;
                } else {
                    CHECK(scan > 3.98);
                }
            }
    }
    CHECK(compared > 500);
}

TEST_CASE("weight is non-decreasing in alpha") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto net = testing::random_network(rng, Mode::regression, 3, 5);
        const auto pts = testing::random_points(rng, 3, 10);
        for (Eigen::Index n = 0; n < pts.cols(); ++n) {
            Eigen::VectorXd before(5);
            for (int i = 0; i < 5; ++i) before[i] = relative_weight(net, i, pts.col(n));
            auto grown = net;
            grown.alphas *= 1.7;
            for (int i = 0; i < 5; ++i) CHECK(relative_weight(grown, i, pts.col(n)) >= before[i]);
        }
    }
}

TEST_CASE("translation leaves weights unchanged") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto net = testing::random_network(rng, Mode::regression, 4, 6);
        const auto pts = testing::random_points(rng, 4, 10);
        const Eigen::VectorXd shift = testing::random_points(rng, 4, 1, 3.0);
        auto moved = net;
        moved.centers.colwise() += shift;
        for (Eigen::Index n = 0; n < pts.cols(); ++n) {
            const Eigen::VectorXd q = pts.col(n) + shift;
            for (int i = 0; i < 6; ++i)
                CHECK(std::abs(relative_weight(net, i, pts.col(n)) - relative_weight(moved, i, q)) < 1e-12);
        }
    }
}

TEST_CASE("weight is continuous along segments") {
    std::mt19937_64 rng(31);
    int tested = 0;
    for (int trial = 0; trial < 60 && tested < 20; ++trial) {
        const auto net = testing::random_network(rng, Mode::regression, 2, 5, 0.5, 1.5);
        const Eigen::VectorXd a = testing::random_points(rng, 2, 1, 2.0);
        const Eigen::VectorXd b = testing::random_points(rng, 2, 1, 2.0);
        const int cell = trial % 5;
        auto max_jump = [&](int steps) {
            double worst = 0;
            double prev = relative_weight(net, cell, a);
            for (int s = 1; s <= steps; ++s) {
                const Eigen::VectorXd x = a + (b - a) * (static_cast<double>(s) / steps);
                const double w = relative_weight(net, cell, x);
                worst = std::max(worst, std::abs(w - prev));
                prev = w;
            }
            return worst;
        };
        const double coarse = max_jump(4000);
        if (coarse < 1e-9) continue;
        const double fine = max_jump(8000);
        CHECK(std::abs(fine / coarse - 0.5) < 0.1);
        ++tested;
    }
    CHECK(tested >= 10);
}

TEST_CASE("projection route matches explicit differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + trial % 7;
        const int k = 1 + trial % 6;
        const auto net = testing::random_network(rng, Mode::regression, d, k);
        const NetworkGeometry<double> geo(net);
        const auto pts = testing::random_points(rng, d, 20);
        std::vector<CellPiece<double>> pieces(static_cast<std::size_t>(k));
        for (Eigen::Index n = 0; n < pts.cols(); ++n) {
            const Eigen::VectorXd proj = net.centers.transpose() * pts.col(n);
            relative_weights_from_projection(net, geo, proj, pieces.data());
            for (int i = 0; i < k; ++i) {
                const auto hit = boundary_crossing(net, i, pts.col(n));
                CHECK(std::abs(pieces[i].weight - relative_weight(net, i, pts.col(n))) < 1e-10);
                if (pieces[i].state == WeightState::linear) {
                    REQUIRE(hit.active_neighbor.has_value());
                    CHECK(pieces[i].neighbor == *hit.active_neighbor);
                    CHECK(pieces[i].t_star == doctest::Approx(hit.t_star).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("weight from crossing branches") {
    WeightState state{};
    CHECK(weight_from_crossing(1.0, 0.3, &state) == 1.0);
    CHECK(state == WeightState::interior);
    CHECK(weight_from_crossing(std::numeric_limits<double>::infinity(), 0.3, &state) == 1.0);
    CHECK(weight_from_crossing(0.8, 1.0, &state) == doctest::Approx(0.75));
    CHECK(state == WeightState::linear);
    CHECK(weight_from_crossing(0.1, 1.0, &state) == 0.0);
    CHECK(state == WeightState::clamped);
    CHECK(weight_from_crossing(0.5f, 2.0f) == doctest::Approx(0.5));
}
