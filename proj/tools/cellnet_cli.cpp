// Command-line driver: train, train-ovr, evaluate, predict, grid, gradcheck, synth.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include "cellnet/cellnet.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cellnet;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataFlags {
    std::string images;
    std::string labels;
    std::string csv;
    std::string label_col = "target";

    void add(CLI::App& cmd, const std::string& prefix = "", const std::string& what = "training") {
        cmd.add_option("--" + prefix + "data", images, "IDX image file (" + what + ")");
        cmd.add_option("--" + prefix + "labels", labels, "IDX label file (" + what + ")");
        cmd.add_option("--" + prefix + "csv", csv, "CSV file with header (" + what + ")");
        if (prefix.empty()) cmd.add_option("--label-col", label_col, "CSV label column")->capture_default_str();
    }

    Dataset load(const std::string& label_column) const {
        if (!csv.empty() && !images.empty()) throw UsageError("give either IDX files or a CSV file, not both");
        if (!csv.empty()) return load_csv(csv, label_column).data;
        if (images.empty() || labels.empty()) throw UsageError("data flags required: --data and --labels, or --csv");
        return load_mnist(images, labels);
    }
};

struct HyperFlags {
    int cells = 40;
    std::string stratified;
    double lambda_alpha = 0;
    double lambda_beta = 0;
    int epochs = 30;
    double batch_fraction = 0.05;
    double alpha_init = 0.3;
    double lr = 0.001;
    std::uint64_t seed = 0;
    int threads = 1;
    bool deterministic = false;
    int kmeans_iters = 100;
    bool quiet = false;
    CLI::Option* cells_opt = nullptr;

    void add(CLI::App& cmd, bool with_lambdas = true) {
        cells_opt = cmd.add_option("--cells", cells, "number of cells k")->capture_default_str();
        auto* strat = cmd.add_option("--stratified", stratified,
                                     "T,O: T seeds from the target class, O from each other class");
        strat->excludes(cells_opt);
        if (with_lambdas) {
            cmd.add_option("--lambda-alpha", lambda_alpha, "blending regularization strength")->capture_default_str();
            cmd.add_option("--lambda-beta", lambda_beta, "coefficient L2 regularization strength")
                ->capture_default_str();
        }
        cmd.add_option("--epochs", epochs)->capture_default_str();
        cmd.add_option("--batch-fraction", batch_fraction, "minibatch share of the data")->capture_default_str();
        cmd.add_option("--alpha-init", alpha_init)->capture_default_str();
        cmd.add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        cmd.add_option("--seed", seed)->capture_default_str();
        cmd.add_option("--threads", threads)->capture_default_str();
        cmd.add_flag("--deterministic", deterministic, "ordered gradient reduction");
        cmd.add_option("--kmeans-iters", kmeans_iters)->capture_default_str();
        cmd.add_flag("--quiet", quiet, "suppress per-epoch progress");
    }

    HyperParams params() const {
        HyperParams hp;
        hp.cells = cells;
        hp.lambda_alpha = lambda_alpha;
        hp.lambda_beta = lambda_beta;
        hp.epochs = epochs;
        hp.batch_fraction = batch_fraction;
        hp.alpha_init = alpha_init;
        hp.optimizer.learning_rate = lr;
        hp.rng_seed = seed;
        hp.threads = threads;
        hp.deterministic = deterministic;
        hp.kmeans_iters = kmeans_iters;
        hp.log_progress = !quiet;
        try {
            hp.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return hp;
    }

    OvrSeeding seeding() const {
        OvrSeeding s;
        if (stratified.empty()) return s;
        s.stratified = true;
        char comma = 0;
        std::istringstream in(stratified);
        if (!(in >> s.target_count >> comma >> s.other_count) || comma != ',' || !in.eof() || s.target_count < 1 ||
            s.other_count < 1)
            throw UsageError("--stratified expects T,O with positive integers, got '" + stratified + "'");
        return s;
    }
};

std::vector<int> class_range(int count) {
    std::vector<int> classes(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) classes[static_cast<std::size_t>(c)] = c;
    return classes;
}

void require_dims(Eigen::Index model_dims, const Dataset& data) {
    if (data.dimensions() != model_dims)
        throw DataError(fmt::format("dimension mismatch: model dimensions is {}, data has {} features", model_dims,
                                    data.dimensions()));
}

double binary_accuracy(const CellularNetworkd& net, const Dataset& data) {
    const auto values = evaluate_batch(net, data.features);
    std::size_t correct = 0;
    for (Eigen::Index n = 0; n < data.size(); ++n) correct += ((values[n] > 0) ? 1.0 : 0.0) == data.targets[n];
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise-linear regression and classification over implicit Voronoi cells"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train one regression or binary network");
    DataFlags train_data;
    HyperFlags train_hp;
    std::string mode_text = "regression";
    std::optional<int> target_class;
    std::string out_path;
    train_data.add(*train_cmd);
    train_hp.add(*train_cmd);
    train_cmd->add_option("--mode", mode_text, "regression or binary")
        ->check(CLI::IsMember({"regression", "binary"}))
        ->capture_default_str();
    train_cmd->add_option("--target-class", target_class, "binary mode: label treated as the positive class");
    train_cmd->add_option("--out", out_path, "model file to write")->required();

    // train-ovr
    auto* ovr_cmd = app.add_subcommand("train-ovr", "train one-vs-rest classifiers");
    DataFlags ovr_data;
    HyperFlags ovr_hp;
    int num_classes = 10;
    std::string ovr_out;
    ovr_data.add(*ovr_cmd);
    ovr_hp.add(*ovr_cmd);
    ovr_cmd->add_option("--classes", num_classes, "labels are 0..N-1")->capture_default_str();
    ovr_cmd->add_option("--out", ovr_out, "bundle file to write")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "print accuracy or mse of a model on data");
    DataFlags eval_data;
    std::string eval_model;
    eval_data.add(*eval_cmd, "", "evaluation");
    eval_cmd->add_option("--model", eval_model)->required();

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "print one prediction per data point");
    DataFlags predict_data;
    std::string predict_model;
    predict_data.add(*predict_cmd, "", "query");
    predict_cmd->add_option("--model", predict_model)->required();

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "OvR test accuracy over a lambda_alpha x lambda_beta grid");
    DataFlags grid_train;
    DataFlags grid_test;
    HyperFlags grid_hp;
    std::vector<double> grid_alphas;
    std::vector<double> grid_betas;
    int grid_classes = 10;
    std::string grid_out;
    grid_train.add(*grid_cmd);
    grid_test.add(*grid_cmd, "test-", "test");
    grid_hp.add(*grid_cmd, false);
    grid_cmd->add_option("--lambda-alphas", grid_alphas, "row values")->required()->delimiter(',');
    grid_cmd->add_option("--lambda-betas", grid_betas, "column values")->required()->delimiter(',');
    grid_cmd->add_option("--classes", grid_classes, "labels are 0..N-1")->capture_default_str();
    grid_cmd->add_option("--out", grid_out, "CSV file (default: stdout)");

    // gradcheck
    auto* check_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    GradCheckOptions check_opts;
    bool inject_fault = false;
    check_cmd->add_option("--trials", check_opts.trials, "random configurations per mode")->capture_default_str();
    check_cmd->add_option("--seed", check_opts.seed)->capture_default_str();
    check_cmd->add_option("--tolerance", check_opts.tolerance)->capture_default_str();
    check_cmd->add_flag("--inject-fault", inject_fault, "perturb the analytic gradient (negative control)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
    SynthOptions synth_opts;
    std::string synth_kind = "linear";
    std::string synth_out;
    synth_cmd->add_option("--kind", synth_kind)
        ->check(CLI::IsMember({"linear", "piecewise_linear", "two_gaussians", "xor_blobs"}))
        ->capture_default_str();
    synth_cmd->add_option("--n", synth_opts.n)->capture_default_str();
    synth_cmd->add_option("--d", synth_opts.d)->capture_default_str();
    synth_cmd->add_option("--noise", synth_opts.noise_sigma)->capture_default_str();
    synth_cmd->add_option("--seed", synth_opts.rng_seed)->capture_default_str();
    synth_cmd->add_option("--regions", synth_opts.regions)->capture_default_str();
    synth_cmd->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd) {
            const auto hp = train_hp.params();
            const Mode mode = mode_from_string(mode_text);
            Dataset data = train_data.load(train_data.label_col);
            std::vector<int> labels;
            SeedingPlan plan = SeedingPlan::uniform();
            if (target_class) {
                if (mode != Mode::binary) throw UsageError("--target-class requires --mode binary");
                labels = integer_labels(data);
                for (Eigen::Index i = 0; i < data.size(); ++i)
                    data.targets[i] = labels[static_cast<std::size_t>(i)] == *target_class ? 1.0 : 0.0;
            }
            if (!train_hp.stratified.empty()) {
                if (!target_class) throw UsageError("--stratified for a single network needs --target-class");
                const auto s = train_hp.seeding();
                std::vector<int> classes = labels;
                std::sort(classes.begin(), classes.end());
                classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
                plan = SeedingPlan::stratified(*target_class, s.target_count, s.other_count, classes);
            }
            try {
                const auto result = train(data, hp, plan, mode, labels);
                save_model(out_path, result.network);
                const double final_obj = result.report.epoch_objective.empty()
                                             ? regularized_objective(result.network, data, hp.lambda_alpha,
                                                                     hp.lambda_beta)
                                             : result.report.epoch_objective.back();
                std::cout << fmt::format("objective={} elapsed_s={:.3f} parameters={}\n", final_obj,
                                         result.report.elapsed_s, parameter_count(result.network));
            } catch (const DivergenceError& e) {
                save_model(out_path + ".last_finite.json", e.last_finite());
                throw;
            }
        } else if (*ovr_cmd) {
            const auto hp = ovr_hp.params();
            const auto seeding = ovr_hp.seeding();
            const Dataset data = ovr_data.load(ovr_data.label_col);
            std::vector<TrainReport> reports;
            const auto model = train_ovr(data, hp, seeding, class_range(num_classes), &reports);
            save_model(ovr_out, model);
            double elapsed = 0;
            for (const auto& r : reports) elapsed += r.elapsed_s;
            std::cout << fmt::format("train_accuracy={} elapsed_s={:.3f} parameters={}\n",
                                     evaluate_accuracy(model, data), elapsed, model.parameter_count());
        } else if (*eval_cmd) {
            const auto model = load_model(eval_model);
            const Dataset data = eval_data.load(eval_data.label_col);
            if (const auto* ovr = std::get_if<OvrModel>(&model)) {
                require_dims(ovr->dimensions(), data);
                std::cout << fmt::format("accuracy={} n={}\n", evaluate_accuracy(*ovr, data), data.size());
            } else {
                const auto& net = std::get<CellularNetworkd>(model);
                require_dims(net.dimensions(), data);
                if (net.mode == Mode::binary) {
                    std::cout << fmt::format("accuracy={} n={}\n", binary_accuracy(net, data), data.size());
                } else {
                    const double mse = regression_loss(net, data.features, data.targets) /
                                       static_cast<double>(data.size());
                    std::cout << fmt::format("mse={} n={}\n", mse, data.size());
                }
            }
        } else if (*predict_cmd) {
            const auto model = load_model(predict_model);
            const Dataset data = predict_data.load(predict_data.label_col);
            if (const auto* ovr = std::get_if<OvrModel>(&model)) {
                require_dims(ovr->dimensions(), data);
                for (Eigen::Index n = 0; n < data.size(); ++n) {
                    const auto pred = predict_ovr(*ovr, data.features.col(n));
                    std::string line = fmt::format("label={}", pred.label);
                    for (Eigen::Index c = 0; c < pred.probabilities.size(); ++c)
                        line += fmt::format(" p{}={}", ovr->classes[static_cast<std::size_t>(c)],
                                            pred.probabilities[c]);
                    std::cout << line << '\n';
                }
            } else {
                const auto& net = std::get<CellularNetworkd>(model);
                require_dims(net.dimensions(), data);
                const auto values = evaluate_batch(net, data.features);
                for (Eigen::Index n = 0; n < data.size(); ++n) {
                    if (net.mode == Mode::binary)
                        std::cout << fmt::format("probability={}\n", sigmoid(values[n]));
                    else
                        std::cout << fmt::format("value={}\n", values[n]);
                }
            }
        } else if (*grid_cmd) {
            const auto hp = grid_hp.params();
            const auto seeding = grid_hp.seeding();
            const Dataset train_set = grid_train.load(grid_train.label_col);
            const Dataset test_set = grid_test.load(grid_train.label_col);
            require_dims(train_set.dimensions(), test_set);
            const auto grid =
                grid_search(train_set, test_set, hp, seeding, grid_alphas, grid_betas, class_range(grid_classes));
            const auto csv = grid_to_csv(grid);
            if (grid_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(grid_out, std::ios::binary);
                if (!out) throw DataError("cannot write " + grid_out);
                out << csv;
            }
        } else if (*check_cmd) {
            if (inject_fault) {
                check_opts.gradient = [](const CellularNetworkd& net, const Dataset& batch, double la, double lb) {
                    auto g = gradient(net, batch, la, lb);
                    g.d_alphas *= 1.01;
                    g.d_centers *= 1.01;
                    return g;
                };
            }
            const auto report = run_gradient_check(check_opts);
            std::cout << fmt::format("configurations={} resampled={}\n", report.configurations, report.resampled);
            std::cout << fmt::format("regression centers={:.3e} betas={:.3e} alphas={:.3e}\n",
                                     report.regression.centers, report.regression.betas, report.regression.alphas);
            std::cout << fmt::format("binary centers={:.3e} betas={:.3e} alphas={:.3e}\n", report.binary.centers,
                                     report.binary.betas, report.binary.alphas);
            std::cout << fmt::format("max_relative_error={:.3e} tolerance={:.1e} result={}\n", report.max_error(),
                                     check_opts.tolerance, report.passed ? "pass" : "fail");
            return report.passed ? 0 : kExitNumerical;
        } else if (*synth_cmd) {
            synth_opts.kind = synth_kind_from_string(synth_kind);
            write_csv(synth_out, synth(synth_opts));
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
