// SPDX-License-Identifier: Apache-2.0
//
// Evaluation harness: the wavelength-normalized RMS position error, the
// constant-estimator reference level, model evaluation against datasets, and
// the two benchmark sweeps (accuracy vs parameterization, accuracy vs
// training-grid spacing) with CSV exports.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmfp/baseline.hpp"
#include "mmfp/cnn.hpp"
#include "mmfp/dataset.hpp"

namespace mmfp {

// (1/lambda) sqrt(mean ||x_i - t_i||^2); coordinates are already in
// wavelengths so the normalization is by 1, kept explicit for unit hygiene.
inline double nrmse(std::span<const Vec2> estimates, std::span<const Vec2> labels) {
    if (estimates.size() != labels.size() || estimates.empty())
        throw config_error("nrmse needs equally sized, nonempty estimate/label lists");
    double s = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const Vec2 e = estimates[i] - labels[i];
        s += e.x * e.x + e.y * e.y;
    }
    const double lambda = 1.0; // coordinate unit
    return std::sqrt(s / static_cast<double>(estimates.size())) / lambda;
}

inline double nrmse_to_db(double v) { return 20.0 * std::log10(v); }

// NRMSE of the best constant estimator E{x}: the RMS distance of a uniform
// draw over the area from the area mean. For a centered square of side a
// this is sqrt(2 a^2 / 12) ~= 10.2 at a = 25.
inline double reference_nrmse(const Area& area) {
    area.validate();
    const double vx = area.side_x() * area.side_x() / 12.0;
    const double vy = area.side_y() * area.side_y() / 12.0;
    return std::sqrt(vx + vy);
}

struct EvalReport {
    double nrmse = 0.0;
    double nrmse_db = 0.0;
    std::vector<double> per_sample_errors;
    std::vector<Vec2> estimates;
    std::string config_snapshot;
    double wall_time_s = 0.0;
};

inline EvalReport evaluate_model(const CnnModel& model, const LabeledDataset& test,
                                 int threads = 1) {
    if (test.samples.empty()) throw config_error("test dataset is empty");
    if (model.env_hash != 0 && test.environment_id != 0 &&
        model.env_hash != test.environment_id)
        throw provenance_error("train/test environments differ");

    const auto t0 = std::chrono::steady_clock::now();
    EvalReport rep;
    rep.estimates.resize(test.samples.size());
    parallel_for(test.samples.size(), threads, [&](std::size_t i) {
        rep.estimates[i] = model.forward(test.samples[i].fingerprint);
    });
    rep.per_sample_errors.resize(test.samples.size());
    for (std::size_t i = 0; i < test.samples.size(); ++i)
        rep.per_sample_errors[i] = (rep.estimates[i] - test.samples[i].position).norm();
    std::vector<Vec2> labels(test.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = test.samples[i].position;
    rep.nrmse = nrmse(rep.estimates, labels);
    rep.nrmse_db = nrmse_to_db(rep.nrmse);
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// --- experiment sweeps ------------------------------------------------------

struct HyperArm {
    int num_cap_layers = 2;
    int kernels_per_layer = 8;
    Representation representation = Representation::kTransformed;
    std::string label;
};

struct ExperimentOptions {
    Hyperparams base;    // kernel/pool sizes, beta, schedule; L and K come per arm
    int n_test = 2000;
    std::uint64_t test_seed = 7;
    int threads = 1;
};

struct ExperimentRow {
    std::string config;
    int num_cap_layers = 0;
    int kernels_per_layer = 0;
    std::string representation;
    double spacing_lambda = 0.0;
    double nrmse = 0.0;
    double nrmse_db = 0.0;
    double train_seconds = 0.0;
    bool diverged = false;
    std::vector<Vec2> estimates;
    std::vector<Vec2> labels;
};

namespace detail {

inline ExperimentRow train_and_eval_cnn(const Environment& env,
                                        const LabeledDataset& train,
                                        const LabeledDataset& test, const HyperArm& arm,
                                        const ExperimentOptions& opt) {
    ExperimentRow row;
    row.config = arm.label.empty()
                     ? "cnn_L" + std::to_string(arm.num_cap_layers) + "_K" +
                           std::to_string(arm.kernels_per_layer) + "_" +
                           to_string(arm.representation)
                     : arm.label;
    row.num_cap_layers = arm.num_cap_layers;
    row.kernels_per_layer = arm.kernels_per_layer;
    row.representation = to_string(arm.representation);
    row.spacing_lambda = train.grid_spacing;

    Hyperparams hp = opt.base;
    hp.num_cap_layers = arm.num_cap_layers;
    hp.kernels_per_layer = arm.kernels_per_layer;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        CnnModel model(hp, train.rows(), train.cols());
        model.env_hash = env.id();
        sgd_fit(model, train.samples, opt.threads);
        row.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        EvalReport rep = evaluate_model(model, test, opt.threads);
        row.nrmse = rep.nrmse;
        row.nrmse_db = rep.nrmse_db;
        row.estimates = std::move(rep.estimates);
    } catch (const divergence_error&) {
        row.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.diverged = true;
        row.nrmse = std::numeric_limits<double>::infinity();
        row.nrmse_db = std::numeric_limits<double>::infinity();
    }
    row.labels.reserve(test.samples.size());
    for (const auto& s : test.samples) row.labels.push_back(s.position);
    return row;
}

} // namespace detail

// One CNN per (L, K, representation) arm, all trained on the same grid and
// scored on one shared random test set.
inline std::vector<ExperimentRow> run_accuracy_experiment(
    const Environment& env, const std::vector<HyperArm>& arms, double spacing,
    const ExperimentOptions& opt) {
    std::vector<ExperimentRow> rows;
    if (arms.empty()) return rows;

    bool want_raw = false, want_transformed = false;
    for (const auto& a : arms) {
        want_raw |= a.representation == Representation::kRaw;
        want_transformed |= a.representation == Representation::kTransformed;
    }
    LabeledDataset train_raw, train_tf, test_raw, test_tf;
    if (want_raw) {
        train_raw = make_training_grid(env, spacing, Representation::kRaw, opt.threads);
        test_raw = make_test_set(env, opt.n_test, opt.test_seed, Representation::kRaw,
                                 opt.threads);
    }
    if (want_transformed) {
        train_tf =
            make_training_grid(env, spacing, Representation::kTransformed, opt.threads);
        test_tf = make_test_set(env, opt.n_test, opt.test_seed,
                                Representation::kTransformed, opt.threads);
    }
    for (const auto& arm : arms) {
        const bool raw = arm.representation == Representation::kRaw;
        rows.push_back(detail::train_and_eval_cnn(env, raw ? train_raw : train_tf,
                                                  raw ? test_raw : test_tf, arm, opt));
    }
    return rows;
}

// For each grid spacing: train the CNN arm and build the correlation
// baseline on the same grid, score both on one shared test set. Emits a CNN
// row followed by a baseline row per spacing.
inline std::vector<ExperimentRow> run_spacing_experiment(const Environment& env,
                                                         const std::vector<double>& spacings,
                                                         const HyperArm& arm,
                                                         const ExperimentOptions& opt) {
    for (std::size_t i = 1; i < spacings.size(); ++i)
        if (spacings[i] <= spacings[i - 1])
            throw config_error("spacings must be positive and ascending");

    std::vector<ExperimentRow> rows;
    const LabeledDataset test_tf = make_test_set(
        env, opt.n_test, opt.test_seed, Representation::kTransformed, opt.threads);
    const LabeledDataset test_raw =
        make_test_set(env, opt.n_test, opt.test_seed, Representation::kRaw, opt.threads);

    for (double spacing : spacings) {
        const LabeledDataset train_tf =
            make_training_grid(env, spacing, Representation::kTransformed, opt.threads);
        rows.push_back(detail::train_and_eval_cnn(env, train_tf, test_tf, arm, opt));

        ExperimentRow brow;
        brow.config = "baseline";
        brow.representation = "raw";
        brow.spacing_lambda = train_tf.grid_spacing;
        const auto t0 = std::chrono::steady_clock::now();
        const LabeledDataset train_raw =
            make_training_grid(env, spacing, Representation::kRaw, opt.threads);
        FingerprintDatabase db = to_database(train_raw);
        db.validate();
        if (db.environment_id != test_raw.environment_id)
            throw provenance_error("baseline database/test environments differ");
        brow.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        brow.estimates.resize(test_raw.samples.size());
        std::vector<ChannelSnapshot> queries(test_raw.samples.size());
        parallel_for(test_raw.samples.size(), opt.threads, [&](std::size_t i) {
            const auto& fp = test_raw.samples[i].fingerprint;
            ChannelSnapshot y(fp.rows(), fp.cols());
            for (int r = 0; r < y.rows(); ++r)
                for (int c = 0; c < y.cols(); ++c) y(r, c) = {fp(r, c, 0), fp(r, c, 1)};
            brow.estimates[i] = classify(db, y);
        });
        std::vector<Vec2> labels(test_raw.samples.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = test_raw.samples[i].position;
        brow.labels = labels;
        brow.nrmse = nrmse(brow.estimates, labels);
        brow.nrmse_db = nrmse_to_db(brow.nrmse);
        rows.push_back(std::move(brow));
    }
    return rows;
}

// --- CSV export -------------------------------------------------------------

inline void write_report_csv(const std::string& path,
                             const std::vector<ExperimentRow>& rows,
                             const std::string& config_json = "",
                             const std::map<std::string, std::uint64_t>& input_hashes = {}) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    if (!config_json.empty()) f << "# config " << config_json << "\n";
    for (const auto& [name, hash] : input_hashes) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
        f << "# input_hash " << name << "=" << buf << "\n";
    }
    f << "config,L,K,representation,spacing_lambda,nrmse,nrmse_db,train_seconds\n";
    for (const auto& r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%s,%.9g,%.9g,%.9g,%.3f\n",
                      r.config.c_str(), r.num_cap_layers, r.kernels_per_layer,
                      r.representation.c_str(), r.spacing_lambda, r.nrmse, r.nrmse_db,
                      r.train_seconds);
        f << buf;
    }
    if (!f) throw io_error("write failed: " + path);
}

// Per-test-point dump for scatter renderings: true position vs estimate.
inline void write_estimates_csv(const std::string& path, std::span<const Vec2> labels,
                                std::span<const Vec2> estimates) {
    if (labels.size() != estimates.size())
        throw config_error("label/estimate count mismatch");
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "x,y,est_x,est_y,error\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", labels[i].x,
                      labels[i].y, estimates[i].x, estimates[i].y,
                      (estimates[i] - labels[i]).norm());
        f << buf;
    }
    if (!f) throw io_error("write failed: " + path);
}

} // namespace mmfp
