#pragma once

#include "cellnet/cellnet.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline cellnet::CellularNetworkd random_network(std::mt19937_64& rng, cellnet::Mode mode, int d, int k,
                                                double alpha_lo = 0.3, double alpha_hi = 2.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> alpha(alpha_lo, alpha_hi);
    cellnet::CellularNetworkd net(mode, d, k);
    for (auto& v : net.centers.reshaped()) v = gauss(rng);
    for (auto& v : net.betas.reshaped()) v = gauss(rng);
    for (auto& v : net.alphas) v = alpha(rng);
    return net;
}

inline Eigen::MatrixXd random_points(std::mt19937_64& rng, int d, int n, double spread = 1.5) {
    std::normal_distribution<double> gauss(0.0, spread);
    Eigen::MatrixXd p(d, n);
    for (auto& v : p.reshaped()) v = gauss(rng);
    return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("cellnet-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testing
