// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: one JSON document mirroring every environment,
// dataset, training and experiment knob. Unknown keys are rejected, and the
// full resolved configuration is embedded into every artifact the pipeline
// writes, so a result file always carries the settings that produced it.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmfp/channel.hpp"
#include "mmfp/cnn.hpp"
#include "mmfp/dataset.hpp"
#include "mmfp/harness.hpp"

namespace mmfp {

struct RunConfig {
    std::string profile = "desk";
    std::uint64_t seed = 1; // environment realization seed
    int threads = 0;        // 0 = all hardware threads
    bool deterministic = false;
    std::string out_dir; // empty = resolve via --out / MMFP_OUT / "./out"

    EnvironmentConfig environment;

    // dataset
    double grid_spacing = 0.25;
    Representation representation = Representation::kTransformed;
    int num_test = 2000;
    std::uint64_t test_seed = 7;

    // training; kernel_rows/cols = 0 means derive from the physical lengths
    Hyperparams training;
    double kernel_angular_deg = 9.8;
    double kernel_delay_us = 0.175;
    std::string init = "gaussian";

    // experiments
    std::vector<double> spacings = {0.25, 1.0, 4.0};
    std::vector<HyperArm> arms;

    static RunConfig profile_defaults(const std::string& name) {
        RunConfig c;
        c.profile = name;
        if (name == "desk") {
            // EnvironmentConfig defaults are the desk profile already.
            c.training.num_cap_layers = 2;
            c.training.kernels_per_layer = 12;
            c.training.kernel_rows = 0;
            c.training.kernel_cols = 0;
            c.training.learning_rate = 3e-3;
            c.training.epochs = 150;
            c.arms = {{2, 12, Representation::kTransformed, ""},
                      {2, 12, Representation::kRaw, ""}};
        } else if (name == "paper") {
            c.environment.area = {{-12.5, -12.5}, {12.5, 12.5}};
            c.environment.array = {128, 0.5, {-200.0, -200.0}, {-200.0, -136.5}};
            c.environment.radio = {300e6, 20e6, 128};
            c.environment.annulus_inner = 20.0;
            c.environment.annulus_outer = 60.0;
            c.training.num_cap_layers = 4;
            c.training.kernels_per_layer = 20;
            c.training.kernel_rows = 0;
            c.training.kernel_cols = 0;
            c.training.learning_rate = 1e-3;
            c.training.epochs = 50;
            c.arms = {{4, 20, Representation::kTransformed, ""},
                      {4, 20, Representation::kRaw, ""}};
        } else {
            throw config_error("unknown profile '" + name + "' (expected desk or paper)");
        }
        return c;
    }

    // Kernel sizes with the physical-length rule applied.
    Hyperparams resolved_training() const {
        Hyperparams hp = training;
        if (hp.kernel_rows <= 0 || hp.kernel_cols <= 0) {
            const auto [s1, s2] = kernel_bins_from_physics(
                environment.radio, environment.array, kernel_angular_deg, kernel_delay_us);
            hp.kernel_rows = s1;
            hp.kernel_cols = s2;
        }
        return hp;
    }

    InitMode init_mode() const {
        if (init == "gaussian") return InitMode::kGaussian;
        if (init == "zeros") return InitMode::kZeros;
        throw config_error("training.init must be 'gaussian' or 'zeros'");
    }

    int resolved_threads() const { return deterministic ? 1 : resolve_threads(threads); }

    nlohmann::json to_json() const;
    std::string to_json_string() const { return to_json().dump(); }

    static RunConfig from_json(const nlohmann::json& j,
                               const std::optional<std::string>& profile_override = {});
    static RunConfig from_file(const std::string& path,
                               const std::optional<std::string>& profile_override = {});
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw config_error(std::string("unknown key '") + it.key() + "' in " + where);
    }
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

inline void get_vec2(const nlohmann::json& j, const char* key, Vec2& out) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2)
        throw config_error(std::string(key) + " must be a [x, y] pair");
    out.x = a[0].get<double>();
    out.y = a[1].get<double>();
}

inline Representation parse_representation(const std::string& s) {
    if (s == "raw") return Representation::kRaw;
    if (s == "transformed") return Representation::kTransformed;
    throw config_error("representation must be 'raw' or 'transformed'");
}

} // namespace detail

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["profile"] = profile;
    j["seed"] = seed;
    j["threads"] = threads;
    j["deterministic"] = deterministic;
    j["out_dir"] = out_dir;
    j["environment"] = {{"num_clusters", environment.num_clusters},
                        {"mpcs_per_cluster", environment.mpcs_per_cluster},
                        {"vr_radius_min", environment.vr_radius_min},
                        {"vr_radius_max", environment.vr_radius_max},
                        {"cluster_spread", environment.cluster_spread},
                        {"annulus_inner", environment.annulus_inner},
                        {"annulus_outer", environment.annulus_outer},
                        {"shadow_sigma_db", environment.shadow_sigma_db},
                        {"path_loss_exponent", environment.path_loss_exponent},
                        {"los_enabled", environment.los_enabled}};
    j["area"] = {{"u_c", {environment.area.u_c.x, environment.area.u_c.y}},
                 {"u_f", {environment.area.u_f.x, environment.area.u_f.y}}};
    j["array"] = {{"num_antennas", environment.array.num_antennas},
                  {"first", {environment.array.first_antenna.x,
                             environment.array.first_antenna.y}},
                  {"last", {environment.array.last_antenna.x,
                            environment.array.last_antenna.y}}};
    j["radio"] = {{"carrier_frequency_hz", environment.radio.carrier_frequency_hz},
                  {"bandwidth_hz", environment.radio.bandwidth_hz},
                  {"num_freq_points", environment.radio.num_freq_points}};
    j["dataset"] = {{"grid_spacing", grid_spacing},
                    {"representation", to_string(representation)},
                    {"num_test", num_test},
                    {"test_seed", test_seed}};
    j["training"] = {{"num_cap_layers", training.num_cap_layers},
                     {"kernels_per_layer", training.kernels_per_layer},
                     {"kernel_rows", training.kernel_rows},
                     {"kernel_cols", training.kernel_cols},
                     {"kernel_angular_deg", kernel_angular_deg},
                     {"kernel_delay_us", kernel_delay_us},
                     {"pool_rows", training.pool_rows},
                     {"pool_cols", training.pool_cols},
                     {"tikhonov", training.tikhonov},
                     {"learning_rate", training.learning_rate},
                     {"batch_size", training.batch_size},
                     {"epochs", training.epochs},
                     {"rng_seed", training.rng_seed},
                     {"init", init}};
    nlohmann::json arms_json = nlohmann::json::array();
    for (const auto& a : arms)
        arms_json.push_back({{"L", a.num_cap_layers},
                             {"K", a.kernels_per_layer},
                             {"representation", to_string(a.representation)},
                             {"label", a.label}});
    j["experiment"] = {{"spacings", spacings}, {"arms", arms_json}};
    return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j,
                                      const std::optional<std::string>& profile_override) {
    using detail::get_if;
    using detail::get_vec2;
    using detail::reject_unknown_keys;

    reject_unknown_keys(j,
                        {"profile", "seed", "threads", "deterministic", "out_dir",
                         "environment", "area", "array", "radio", "dataset", "training",
                         "experiment"},
                        "config");

    std::string profile = "desk";
    if (profile_override)
        profile = *profile_override;
    else if (j.contains("profile"))
        j.at("profile").get_to(profile);
    RunConfig c = profile_defaults(profile);

    get_if(j, "seed", c.seed);
    get_if(j, "threads", c.threads);
    get_if(j, "deterministic", c.deterministic);
    get_if(j, "out_dir", c.out_dir);

    if (j.contains("environment")) {
        const auto& e = j.at("environment");
        reject_unknown_keys(e,
                            {"num_clusters", "mpcs_per_cluster", "vr_radius_min",
                             "vr_radius_max", "cluster_spread", "annulus_inner",
                             "annulus_outer", "shadow_sigma_db", "path_loss_exponent",
                             "los_enabled"},
                            "environment");
        get_if(e, "num_clusters", c.environment.num_clusters);
        get_if(e, "mpcs_per_cluster", c.environment.mpcs_per_cluster);
        get_if(e, "vr_radius_min", c.environment.vr_radius_min);
        get_if(e, "vr_radius_max", c.environment.vr_radius_max);
        get_if(e, "cluster_spread", c.environment.cluster_spread);
        get_if(e, "annulus_inner", c.environment.annulus_inner);
        get_if(e, "annulus_outer", c.environment.annulus_outer);
        get_if(e, "shadow_sigma_db", c.environment.shadow_sigma_db);
        get_if(e, "path_loss_exponent", c.environment.path_loss_exponent);
        get_if(e, "los_enabled", c.environment.los_enabled);
    }
    if (j.contains("area")) {
        const auto& a = j.at("area");
        reject_unknown_keys(a, {"u_c", "u_f"}, "area");
        get_vec2(a, "u_c", c.environment.area.u_c);
        get_vec2(a, "u_f", c.environment.area.u_f);
    }
    if (j.contains("array")) {
        const auto& a = j.at("array");
        reject_unknown_keys(a, {"num_antennas", "first", "last"}, "array");
        get_if(a, "num_antennas", c.environment.array.num_antennas);
        get_vec2(a, "first", c.environment.array.first_antenna);
        get_vec2(a, "last", c.environment.array.last_antenna);
    }
    if (j.contains("radio")) {
        const auto& r = j.at("radio");
        reject_unknown_keys(
            r, {"carrier_frequency_hz", "bandwidth_hz", "num_freq_points"}, "radio");
        get_if(r, "carrier_frequency_hz", c.environment.radio.carrier_frequency_hz);
        get_if(r, "bandwidth_hz", c.environment.radio.bandwidth_hz);
        get_if(r, "num_freq_points", c.environment.radio.num_freq_points);
    }
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown_keys(d, {"grid_spacing", "representation", "num_test", "test_seed"},
                            "dataset");
        get_if(d, "grid_spacing", c.grid_spacing);
        if (d.contains("representation"))
            c.representation =
                detail::parse_representation(d.at("representation").get<std::string>());
        get_if(d, "num_test", c.num_test);
        get_if(d, "test_seed", c.test_seed);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        reject_unknown_keys(t,
                            {"num_cap_layers", "kernels_per_layer", "kernel_rows",
                             "kernel_cols", "kernel_angular_deg", "kernel_delay_us",
                             "pool_rows", "pool_cols", "tikhonov", "learning_rate",
                             "batch_size", "epochs", "rng_seed", "init"},
                            "training");
        get_if(t, "num_cap_layers", c.training.num_cap_layers);
        get_if(t, "kernels_per_layer", c.training.kernels_per_layer);
        get_if(t, "kernel_rows", c.training.kernel_rows);
        get_if(t, "kernel_cols", c.training.kernel_cols);
        get_if(t, "kernel_angular_deg", c.kernel_angular_deg);
        get_if(t, "kernel_delay_us", c.kernel_delay_us);
        get_if(t, "pool_rows", c.training.pool_rows);
        get_if(t, "pool_cols", c.training.pool_cols);
        get_if(t, "tikhonov", c.training.tikhonov);
        get_if(t, "learning_rate", c.training.learning_rate);
        get_if(t, "batch_size", c.training.batch_size);
        get_if(t, "epochs", c.training.epochs);
        get_if(t, "rng_seed", c.training.rng_seed);
        get_if(t, "init", c.init);
        c.init_mode(); // validates
    }
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        reject_unknown_keys(e, {"spacings", "arms"}, "experiment");
        if (e.contains("spacings")) e.at("spacings").get_to(c.spacings);
        if (e.contains("arms")) {
            c.arms.clear();
            for (const auto& a : e.at("arms")) {
                reject_unknown_keys(a, {"L", "K", "representation", "label"},
                                    "experiment.arms");
                HyperArm arm;
                get_if(a, "L", arm.num_cap_layers);
                get_if(a, "K", arm.kernels_per_layer);
                if (a.contains("representation"))
                    arm.representation = detail::parse_representation(
                        a.at("representation").get<std::string>());
                get_if(a, "label", arm.label);
                c.arms.push_back(std::move(arm));
            }
        }
    }
    return c;
}

inline RunConfig RunConfig::from_file(const std::string& path,
                                      const std::optional<std::string>& profile_override) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    return from_json(j, profile_override);
}

} // namespace mmfp
