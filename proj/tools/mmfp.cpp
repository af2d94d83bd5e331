// SPDX-License-Identifier: Apache-2.0
//
// mmfp command-line pipeline: generate (environment + datasets), train,
// evaluate, benchmark (CNN vs correlation baseline over grid spacings) and
// sweep (accuracy vs network parameterization).
//
// Exit codes: 0 ok, 2 I/O failure, 3 shape/config error, 4 provenance
// mismatch, 5 training divergence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "mmfp/config.hpp"

namespace fs = std::filesystem;
using namespace mmfp;

namespace {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<std::string> profile;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool deterministic = false;
    std::optional<std::string> out;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--profile", f.profile, "parameter profile")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", f.seed, "environment realization seed");
    cmd->add_option("--threads", f.threads, "worker thread cap (0 = all cores)");
    cmd->add_flag("--deterministic", f.deterministic,
                  "single-threaded, bit-reproducible execution");
    cmd->add_option("--out", f.out, "output directory (fallback: $MMFP_OUT, then ./out)");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig c = f.config_path ? RunConfig::from_file(*f.config_path, f.profile)
                                : RunConfig::profile_defaults(f.profile.value_or("desk"));
    if (f.seed) c.seed = *f.seed;
    if (f.threads) c.threads = *f.threads;
    if (f.deterministic) c.deterministic = true;
    if (f.out)
        c.out_dir = *f.out;
    else if (c.out_dir.empty()) {
        const char* env = std::getenv("MMFP_OUT");
        c.out_dir = env && *env ? env : "out";
    }
    return c;
}

fs::path prepare_out_dir(const RunConfig& c) {
    fs::path dir(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir.string());
    return dir;
}

void cmd_generate(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const fs::path dir = prepare_out_dir(cfg);
    const int threads = cfg.resolved_threads();

    const Environment env = build_environment(cfg.seed, cfg.environment);
    save_environment(env, (dir / "env.mmenv").string(), cfg.to_json_string());

    LabeledDataset train =
        make_training_grid(env, cfg.grid_spacing, cfg.representation, threads);
    save_dataset(train, (dir / "train.mmds").string(), cfg.to_json_string());

    LabeledDataset test =
        make_test_set(env, cfg.num_test, cfg.test_seed, cfg.representation, threads);
    save_dataset(test, (dir / "test.mmds").string(), cfg.to_json_string());

    double sparsity = 0.0;
    const std::size_t probe = std::min<std::size_t>(train.samples.size(), 50);
    for (std::size_t i = 0; i < probe; ++i)
        sparsity += energy_bin_fraction(train.samples[i].fingerprint);
    sparsity /= static_cast<double>(probe);

    std::printf("environment   %s  (hash %016llx, %zu clusters, LOS %s)\n",
                (dir / "env.mmenv").c_str(),
                static_cast<unsigned long long>(env.id()), env.clusters.size(),
                env.los_enabled ? "on" : "off");
    std::printf("training set  %s  N_train=%zu  spacing=%.6g lambda  repr=%s\n",
                (dir / "train.mmds").c_str(), train.samples.size(), train.grid_spacing,
                to_string(train.representation));
    std::printf("test set      %s  N_test=%zu\n", (dir / "test.mmds").c_str(),
                test.samples.size());
    std::printf("sparsity      mean fraction of bins holding 95%% energy: %.4f\n",
                sparsity);
}

void cmd_train(const CommonFlags& flags, const std::string& data_path_arg) {
    const RunConfig cfg = resolve_config(flags);
    const fs::path dir = prepare_out_dir(cfg);
    const std::string data_path =
        data_path_arg.empty() ? (dir / "train.mmds").string() : data_path_arg;

    LabeledDataset train = load_dataset(data_path);
    if (train.rows() != cfg.environment.array.num_antennas ||
        train.cols() != cfg.environment.radio.num_freq_points)
        throw shape_error("dataset dimensions do not match the configured array/radio");

    CnnModel model(cfg.resolved_training(), train.rows(), train.cols(), cfg.init_mode());
    model.env_hash = train.environment_id;

    const FitResult fit = sgd_fit(model, train.samples, cfg.resolved_threads());
    save_model(model, (dir / "model.mmcnn").string(), cfg.to_json_string(),
               hash_file(data_path));

    std::ofstream loss_csv(dir / "loss.csv", std::ios::trunc);
    if (!loss_csv) throw io_error("cannot write loss trace");
    loss_csv << "epoch,loss\n";
    for (std::size_t e = 0; e < fit.epoch_loss.size(); ++e)
        loss_csv << e << "," << fit.epoch_loss[e] << "\n";

    std::printf("model         %s  (%zu parameters)\n", (dir / "model.mmcnn").c_str(),
                model.theta.size());
    std::printf("final J       %.9g  (%d epochs)\n", fit.final_loss,
                static_cast<int>(fit.epoch_loss.size()));
}

void cmd_evaluate(const CommonFlags& flags, const std::string& model_path_arg,
                  const std::string& test_path_arg) {
    const RunConfig cfg = resolve_config(flags);
    const fs::path dir = prepare_out_dir(cfg);
    const std::string model_path =
        model_path_arg.empty() ? (dir / "model.mmcnn").string() : model_path_arg;
    const std::string test_path =
        test_path_arg.empty() ? (dir / "test.mmds").string() : test_path_arg;

    const CnnModel model = load_model(model_path);
    const LabeledDataset test = load_dataset(test_path);
    const EvalReport rep = evaluate_model(model, test, cfg.resolved_threads());

    ExperimentRow row;
    row.config = "evaluate";
    row.num_cap_layers = model.hyper().num_cap_layers;
    row.kernels_per_layer = model.hyper().kernels_per_layer;
    row.representation = to_string(test.representation);
    row.spacing_lambda = test.grid_spacing;
    row.nrmse = rep.nrmse;
    row.nrmse_db = rep.nrmse_db;
    write_report_csv((dir / "eval.csv").string(), {row}, cfg.to_json_string(),
                     {{"model", hash_file(model_path)}, {"test", hash_file(test_path)}});

    std::vector<Vec2> labels(test.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = test.samples[i].position;
    write_estimates_csv((dir / "estimates.csv").string(), labels, rep.estimates);

    std::printf("NRMSE         %.6g  (%.3f dB)  over %zu samples\n", rep.nrmse,
                rep.nrmse_db, test.samples.size());
    std::printf("report        %s\n", (dir / "eval.csv").c_str());
    std::printf("estimates     %s\n", (dir / "estimates.csv").c_str());
}

void cmd_benchmark(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const fs::path dir = prepare_out_dir(cfg);

    const Environment env = build_environment(cfg.seed, cfg.environment);
    ExperimentOptions opt;
    opt.base = cfg.resolved_training();
    opt.n_test = cfg.num_test;
    opt.test_seed = cfg.test_seed;
    opt.threads = cfg.resolved_threads();

    HyperArm arm{cfg.training.num_cap_layers, cfg.training.kernels_per_layer,
                 Representation::kTransformed, "cnn"};
    const auto rows = run_spacing_experiment(env, cfg.spacings, arm, opt);
    write_report_csv((dir / "benchmark.csv").string(), rows, cfg.to_json_string(),
                     {{"environment", env.id()}});

    std::printf("%-10s %-14s %-10s %-10s\n", "spacing", "config", "nrmse", "nrmse_db");
    for (const auto& r : rows)
        std::printf("%-10.4g %-14s %-10.4g %-10.3f\n", r.spacing_lambda,
                    r.config.c_str(), r.nrmse, r.nrmse_db);
    std::printf("report        %s\n", (dir / "benchmark.csv").c_str());
}

void cmd_sweep(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const fs::path dir = prepare_out_dir(cfg);

    const Environment env = build_environment(cfg.seed, cfg.environment);
    ExperimentOptions opt;
    opt.base = cfg.resolved_training();
    opt.n_test = cfg.num_test;
    opt.test_seed = cfg.test_seed;
    opt.threads = cfg.resolved_threads();

    auto rows = run_accuracy_experiment(env, cfg.arms, cfg.grid_spacing, opt);

    ExperimentRow ref;
    ref.config = "reference";
    ref.representation = "none";
    ref.spacing_lambda = cfg.grid_spacing;
    ref.nrmse = reference_nrmse(env.area);
    ref.nrmse_db = nrmse_to_db(ref.nrmse);
    rows.push_back(ref);

    write_report_csv((dir / "sweep.csv").string(), rows, cfg.to_json_string(),
                     {{"environment", env.id()}});
    for (const auto& r : rows) {
        if (r.estimates.empty()) continue;
        write_estimates_csv((dir / ("sweep_" + r.config + "_estimates.csv")).string(),
                            r.labels, r.estimates);
    }

    std::printf("%-26s %-10s %-10s %-10s\n", "config", "nrmse", "nrmse_db", "seconds");
    for (const auto& r : rows)
        std::printf("%-26s %-10.4g %-10.3f %-10.1f\n", r.config.c_str(), r.nrmse,
                    r.nrmse_db, r.train_seconds);
    std::printf("report        %s\n", (dir / "sweep.csv").c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"massive MIMO fingerprint positioning pipeline"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, eval_flags, bench_flags, sweep_flags;
    std::string data_path, model_path, test_path;

    CLI::App* generate =
        app.add_subcommand("generate", "build the environment and datasets");
    add_common_flags(generate, gen_flags);

    CLI::App* train = app.add_subcommand("train", "fit the CNN on a training dataset");
    add_common_flags(train, train_flags);
    train->add_option("--data", data_path, "training dataset (default <out>/train.mmds)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a model on a test dataset");
    add_common_flags(evaluate, eval_flags);
    evaluate->add_option("--model", model_path, "model file (default <out>/model.mmcnn)");
    evaluate->add_option("--test", test_path, "test dataset (default <out>/test.mmds)");

    CLI::App* benchmark =
        app.add_subcommand("benchmark", "CNN vs correlation baseline over grid spacings");
    add_common_flags(benchmark, bench_flags);

    CLI::App* sweep =
        app.add_subcommand("sweep", "accuracy across network parameterizations");
    add_common_flags(sweep, sweep_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (generate->parsed()) cmd_generate(gen_flags);
        if (train->parsed()) cmd_train(train_flags, data_path);
        if (evaluate->parsed()) cmd_evaluate(eval_flags, model_path, test_path);
        if (benchmark->parsed()) cmd_benchmark(bench_flags);
        if (sweep->parsed()) cmd_sweep(sweep_flags);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const provenance_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const divergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::invalid_argument& e) { // config_error, shape_error
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
