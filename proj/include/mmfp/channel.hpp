// SPDX-License-Identifier: Apache-2.0
//
// Deterministic clustered-multipath channel simulator. An Environment is a
// frozen realization of scattering clusters with circular visibility regions;
// every terminal position inside the area maps to exactly one snapshot, so
// training and test sets built from the same Environment provably share one
// propagation geometry.
//
// Each multipath component is a single-bounce specular path BS -> scatterer
// -> terminal. A cluster contributes only where the terminal lies inside its
// visibility region. Arrivals are far-field plane waves at the array:
//
//   Y[m,k] = sum_p a_p * d_p^(-alpha/2)
//            * exp(-j 2 pi (f_c + f_k) tau_p) * exp(+j pi m sin(phi_p))
//
// with tau_p the total path length over c and sin(phi_p) the arrival
// direction projected on the array axis.

#pragma once

#include <cmath>
#include <complex>
#include <iostream>
#include <string>
#include <vector>

#include "mmfp/binio.hpp"
#include "mmfp/geometry.hpp"
#include "mmfp/rng.hpp"
#include "mmfp/tensor.hpp"

namespace mmfp {

struct Cluster {
    std::vector<Vec2> scatterer_positions;        // one per MPC, wavelengths
    std::vector<std::complex<double>> mpc_gains;  // complex amplitude per MPC
    Vec2 vr_center;
    double vr_radius = 0.0;

    bool visible_from(const Vec2& x) const {
        return (x - vr_center).norm() <= vr_radius;
    }
};

struct EnvironmentConfig {
    int num_clusters = 10;
    int mpcs_per_cluster = 20;
    double vr_radius_min = 10.0;   // wavelengths
    double vr_radius_max = 30.0;
    double cluster_spread = 1.5;   // scatterer stddev around the cluster centroid
    double annulus_inner = 12.0;   // centroid distance range from the area center
    double annulus_outer = 35.0;
    double shadow_sigma_db = 3.0;  // per-cluster lognormal shadowing
    double path_loss_exponent = 2.0;
    bool los_enabled = true;

    Area area{{-5.0, -5.0}, {5.0, 5.0}};
    ArrayGeometry array{32, 0.5, {-40.0, -40.0}, {-40.0, -24.5}};
    RadioConfig radio{300e6, 20e6, 32};

    void validate() const {
        area.validate();
        array.validate();
        radio.validate();
        if (num_clusters < 0) throw config_error("cluster count must be >= 0");
        if (mpcs_per_cluster < 1) throw config_error("need at least 1 MPC per cluster");
        if (!(vr_radius_min > 0.0) || vr_radius_max < vr_radius_min)
            throw config_error("invalid visibility-region radius range");
        if (!(annulus_inner > 0.0) || annulus_outer < annulus_inner)
            throw config_error("invalid scatterer annulus");
        if (!(cluster_spread >= 0.0)) throw config_error("cluster spread must be >= 0");
        if (path_loss_exponent < 0.0) throw config_error("path loss exponent must be >= 0");
    }
};

struct Environment {
    std::uint64_t seed = 0;
    std::vector<Cluster> clusters;
    bool los_enabled = true;
    double path_loss_exponent = 2.0;
    Area area;
    ArrayGeometry array;
    RadioConfig radio;

    void serialize(BinWriter& w) const {
        w.magic("MMENV1");
        w.u64(seed);
        w.u8(los_enabled ? 1 : 0);
        w.f64(path_loss_exponent);
        w.f64(area.u_c.x); w.f64(area.u_c.y);
        w.f64(area.u_f.x); w.f64(area.u_f.y);
        w.u32(static_cast<std::uint32_t>(array.num_antennas));
        w.f64(array.element_spacing);
        w.f64(array.first_antenna.x); w.f64(array.first_antenna.y);
        w.f64(array.last_antenna.x); w.f64(array.last_antenna.y);
        w.f64(radio.carrier_frequency_hz);
        w.f64(radio.bandwidth_hz);
        w.u32(static_cast<std::uint32_t>(radio.num_freq_points));
        w.u32(static_cast<std::uint32_t>(clusters.size()));
        for (const auto& cl : clusters) {
            w.f64(cl.vr_center.x); w.f64(cl.vr_center.y);
            w.f64(cl.vr_radius);
            w.u32(static_cast<std::uint32_t>(cl.scatterer_positions.size()));
            for (std::size_t p = 0; p < cl.scatterer_positions.size(); ++p) {
                w.f64(cl.scatterer_positions[p].x);
                w.f64(cl.scatterer_positions[p].y);
                w.f64(cl.mpc_gains[p].real());
                w.f64(cl.mpc_gains[p].imag());
            }
        }
    }

    static Environment deserialize(BinReader& r) {
        r.expect_magic("MMENV1");
        Environment e;
        e.seed = r.u64();
        e.los_enabled = r.u8() != 0;
        e.path_loss_exponent = r.f64();
        e.area.u_c = {r.f64(), r.f64()};
        e.area.u_f = {r.f64(), r.f64()};
        e.array.num_antennas = static_cast<int>(r.u32());
        e.array.element_spacing = r.f64();
        e.array.first_antenna = {r.f64(), r.f64()};
        e.array.last_antenna = {r.f64(), r.f64()};
        e.radio.carrier_frequency_hz = r.f64();
        e.radio.bandwidth_hz = r.f64();
        e.radio.num_freq_points = static_cast<int>(r.u32());
        const std::uint32_t nc = r.u32();
        e.clusters.resize(nc);
        for (auto& cl : e.clusters) {
            cl.vr_center = {r.f64(), r.f64()};
            cl.vr_radius = r.f64();
            const std::uint32_t np = r.u32();
            cl.scatterer_positions.resize(np);
            cl.mpc_gains.resize(np);
            for (std::uint32_t p = 0; p < np; ++p) {
                cl.scatterer_positions[p] = {r.f64(), r.f64()};
                const double re = r.f64();
                const double im = r.f64();
                cl.mpc_gains[p] = {re, im};
            }
        }
        return e;
    }

    // Content hash of the serialized realization; datasets and models carry
    // it so mixing environments is detectable.
    std::uint64_t id() const {
        BinWriter w;
        serialize(w);
        return w.content_hash();
    }
};

// Frozen stochastic realization: same (seed, config) always yields the same
// Environment, field for field.
inline Environment build_environment(std::uint64_t seed, const EnvironmentConfig& cfg) {
    cfg.validate();
    Environment env;
    env.seed = seed;
    env.los_enabled = cfg.los_enabled;
    env.path_loss_exponent = cfg.path_loss_exponent;
    env.area = cfg.area;
    env.array = cfg.array;
    env.radio = cfg.radio;

    Rng rng(seed);
    const Vec2 center = cfg.area.center();
    const double two_pi = 2.0 * 3.14159265358979323846;
    env.clusters.reserve(cfg.num_clusters);
    for (int c = 0; c < cfg.num_clusters; ++c) {
        Cluster cl;
        // Centroid uniform (by area) over the annulus around the area center.
        const double r2 = rng.uniform(cfg.annulus_inner * cfg.annulus_inner,
                                      cfg.annulus_outer * cfg.annulus_outer);
        const double rad = std::sqrt(r2);
        const double ang = rng.uniform(0.0, two_pi);
        const Vec2 centroid = center + Vec2{rad * std::cos(ang), rad * std::sin(ang)};

        cl.vr_center = {rng.uniform(cfg.area.u_c.x, cfg.area.u_f.x),
                        rng.uniform(cfg.area.u_c.y, cfg.area.u_f.y)};
        cl.vr_radius = rng.uniform(cfg.vr_radius_min, cfg.vr_radius_max);

        const double shadow = std::pow(10.0, rng.normal() * cfg.shadow_sigma_db / 20.0);
        cl.scatterer_positions.resize(cfg.mpcs_per_cluster);
        cl.mpc_gains.resize(cfg.mpcs_per_cluster);
        for (int p = 0; p < cfg.mpcs_per_cluster; ++p) {
            cl.scatterer_positions[p] =
                centroid + Vec2{rng.normal() * cfg.cluster_spread,
                                rng.normal() * cfg.cluster_spread};
            cl.mpc_gains[p] = shadow * rng.complex_normal();
        }
        env.clusters.push_back(std::move(cl));
    }
    return env;
}

namespace detail {

// Rank-1 accumulation of one specular path into the snapshot.
// dist_total in wavelengths; sin_phi is the arrival direction projected on
// the array axis.
inline void add_path(ChannelSnapshot& y, const RadioConfig& radio,
                     std::complex<double> amplitude, double dist_total, double sin_phi) {
    const int m_count = y.rows();
    const int k_count = y.cols();
    const double pi = 3.14159265358979323846;

    // exp(-j 2 pi (f_c + f_k) tau) with tau = dist/f_c (dist in wavelengths)
    // = exp(-j 2 pi dist (1 + f_k/f_c)).
    std::vector<std::complex<double>> col(k_count);
    for (int k = 0; k < k_count; ++k) {
        const double ratio = radio.freq_offset_hz(k) / radio.carrier_frequency_hz;
        col[k] = std::polar(1.0, -2.0 * pi * dist_total * (1.0 + ratio));
    }
    for (int m = 0; m < m_count; ++m) {
        const std::complex<double> row = amplitude * std::polar(1.0, pi * m * sin_phi);
        std::complex<double>* dst = y.data() + static_cast<std::size_t>(m) * k_count;
        for (int k = 0; k < k_count; ++k) dst[k] += row * col[k];
    }
}

} // namespace detail

// Pure function of (env, x); bit-identical output for repeated calls.
inline ChannelSnapshot synthesize_snapshot(const Environment& env, const Vec2& x) {
    if (!env.area.contains(x))
        std::clog << "mmfp: note: synthesizing snapshot outside area at ("
                  << x.x << ", " << x.y << ")\n";

    ChannelSnapshot y(env.array.num_antennas, env.radio.num_freq_points);
    const Vec2 ref = env.array.first_antenna; // phase/delay reference element
    const Vec2 axis = env.array.axis();
    const double alpha = env.path_loss_exponent;
    const double tiny = 1e-9; // keeps colocated endpoints finite

    auto amplitude_scale = [&](double d) { return std::pow(std::max(d, tiny), -alpha / 2.0); };

    if (env.los_enabled) {
        const Vec2 d = x - ref;
        const double dist = std::max(d.norm(), tiny);
        const double sin_phi = axis.dot(d) * (1.0 / dist);
        detail::add_path(y, env.radio, amplitude_scale(dist), dist, sin_phi);
    }
    for (const auto& cl : env.clusters) {
        if (!cl.visible_from(x)) continue;
        for (std::size_t p = 0; p < cl.scatterer_positions.size(); ++p) {
            const Vec2 s = cl.scatterer_positions[p];
            const Vec2 to_s = s - ref;
            const double d_bs = std::max(to_s.norm(), tiny);
            const double d_term = (x - s).norm();
            const double dist = d_bs + d_term;
            const double sin_phi = axis.dot(to_s) * (1.0 / d_bs);
            detail::add_path(y, env.radio, cl.mpc_gains[p] * amplitude_scale(dist),
                             dist, sin_phi);
        }
    }
    return y;
}

inline void save_environment(const Environment& env, const std::string& path,
                             const std::string& config_json = "") {
    BinWriter w;
    env.serialize(w);
    w.str(config_json);
    w.save(path);
}

inline Environment load_environment(const std::string& path, std::string* config_json = nullptr) {
    BinReader r(path);
    Environment env = Environment::deserialize(r);
    if (r.remaining() > 0) {
        std::string cfg = r.str();
        if (config_json) *config_json = std::move(cfg);
    }
    return env;
}

} // namespace mmfp
