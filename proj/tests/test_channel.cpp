// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "mmfp/channel.hpp"
#include "mmfp/transform.hpp"

using namespace mmfp;

namespace {

EnvironmentConfig tiny_config() {
    EnvironmentConfig cfg; // desk-profile defaults
    cfg.num_clusters = 3;
    cfg.mpcs_per_cluster = 4;
    return cfg;
}

std::vector<unsigned char> serialized(const Environment& env) {
    BinWriter w;
    env.serialize(w);
    return w.buffer();
}

} // namespace

TEST_CASE("same seed and config give field-identical environments", "[channel]") {
    const EnvironmentConfig cfg = tiny_config();
    const Environment a = build_environment(42, cfg);
    const Environment b = build_environment(42, cfg);
    REQUIRE(serialized(a) == serialized(b));
    REQUIRE(a.id() == b.id());
}

TEST_CASE("different seeds move at least one scatterer", "[channel]") {
    const EnvironmentConfig cfg = tiny_config();
    const Environment a = build_environment(42, cfg);
    const Environment b = build_environment(43, cfg);
    REQUIRE(serialized(a) != serialized(b));
    bool scatterer_differs = false;
    for (std::size_t c = 0; c < a.clusters.size() && !scatterer_differs; ++c)
        for (std::size_t p = 0; p < a.clusters[c].scatterer_positions.size(); ++p)
            if (!(a.clusters[c].scatterer_positions[p] ==
                  b.clusters[c].scatterer_positions[p])) {
                scatterer_differs = true;
                break;
            }
    REQUIRE(scatterer_differs);
}

TEST_CASE("zero clusters with LOS gives an empty cluster list", "[channel]") {
    EnvironmentConfig cfg = tiny_config();
    cfg.num_clusters = 0;
    cfg.los_enabled = true;
    const Environment env = build_environment(42, cfg);
    REQUIRE(env.clusters.empty());
    REQUIRE(env.los_enabled);
}

TEST_CASE("invalid generation configs are rejected", "[channel]") {
    EnvironmentConfig cfg = tiny_config();
    cfg.array.num_antennas = 0;
    REQUIRE_THROWS_AS(build_environment(1, cfg), config_error);

    cfg = tiny_config();
    cfg.radio.bandwidth_hz = 0.0;
    REQUIRE_THROWS_AS(build_environment(1, cfg), config_error);

    cfg = tiny_config();
    cfg.area.u_f = cfg.area.u_c;
    REQUIRE_THROWS_AS(build_environment(1, cfg), config_error);

    cfg = tiny_config();
    cfg.vr_radius_max = cfg.vr_radius_min / 2.0;
    REQUIRE_THROWS_AS(build_environment(1, cfg), config_error);
}

TEST_CASE("snapshot synthesis is deterministic", "[channel]") {
    const Environment env = build_environment(7, tiny_config());
    const Vec2 x{1.25, -2.5};
    const ChannelSnapshot a = synthesize_snapshot(env, x);
    const ChannelSnapshot b = synthesize_snapshot(env, x);
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) REQUIRE(a(r, c) == b(r, c));
    REQUIRE(a.all_finite());
}

TEST_CASE("LOS-only snapshot at broadside: constant magnitude, phase linear in k",
          "[channel]") {
    EnvironmentConfig cfg = tiny_config();
    cfg.num_clusters = 0;
    cfg.los_enabled = true;
    cfg.path_loss_exponent = 2.0;
    const Environment env = build_environment(1, cfg);

    // Broadside: terminal direction orthogonal to the array axis (the array
    // runs along +y), so sin(phi) = 0 and the steering term is 1 everywhere.
    const Vec2 x{env.array.first_antenna.x + 37.0, env.array.first_antenna.y};
    const ChannelSnapshot y = synthesize_snapshot(env, x);

    const double dist = (x - env.array.first_antenna).norm();
    const double want_mag = std::pow(dist, -1.0); // d^(-alpha/2), alpha = 2
    for (int m = 0; m < y.rows(); ++m)
        for (int k = 0; k < y.cols(); ++k)
            REQUIRE(std::abs(y(m, k)) == Catch::Approx(want_mag).epsilon(1e-12));

    // Single path: adjacent frequency points differ by the constant phase
    // step -2 pi dist df / f_c.
    const double pi = 3.14159265358979323846;
    const double df = env.radio.freq_offset_hz(1) - env.radio.freq_offset_hz(0);
    const double want_step =
        std::remainder(-2.0 * pi * dist * df / env.radio.carrier_frequency_hz, 2 * pi);
    for (int k = 0; k + 1 < y.cols(); ++k) {
        const std::complex<double> ratio = y(0, k + 1) / y(0, k);
        REQUIRE(std::arg(ratio) == Catch::Approx(want_step).margin(1e-10));
    }
    // And the steering term is constant across antennas.
    for (int m = 0; m + 1 < y.rows(); ++m)
        REQUIRE(std::abs(y(m + 1, 0) - y(m, 0)) < 1e-12 * want_mag);
}

TEST_CASE("no visible path and no LOS yields the all-zero snapshot", "[channel]") {
    EnvironmentConfig cfg = tiny_config();
    cfg.los_enabled = false;
    Environment env = build_environment(3, cfg);
    for (auto& cl : env.clusters) { // push every VR far outside the area
        cl.vr_center = {1e6, 1e6};
        cl.vr_radius = 1.0;
    }
    const ChannelSnapshot y = synthesize_snapshot(env, {0.0, 0.0});
    REQUIRE(y.frobenius_norm() == 0.0);
}

TEST_CASE("visibility boundary switches a cluster on and off exactly", "[channel]") {
    EnvironmentConfig cfg = tiny_config();
    cfg.num_clusters = 1;
    cfg.los_enabled = false;
    Environment env = build_environment(5, cfg);
    env.clusters[0].vr_center = {0.0, 0.0};
    env.clusters[0].vr_radius = 2.0;

    const ChannelSnapshot inside = synthesize_snapshot(env, {1.9, 0.0});
    const ChannelSnapshot boundary = synthesize_snapshot(env, {2.0, 0.0});
    const ChannelSnapshot outside = synthesize_snapshot(env, {2.0 + 1e-9, 0.0});

    REQUIRE(inside.frobenius_norm() > 0.0);
    REQUIRE(boundary.frobenius_norm() > 0.0); // ||x - c|| <= r includes the rim
    REQUIRE(outside.frobenius_norm() == 0.0);
}

TEST_CASE("environment serialization round-trips", "[channel]") {
    const Environment env = build_environment(99, tiny_config());
    const std::string path = "/tmp/mmfp_test_env.mmenv";
    save_environment(env, path, "{\"note\":1}");
    std::string cfg_json;
    const Environment back = load_environment(path, &cfg_json);
    REQUIRE(serialized(back) == serialized(env));
    REQUIRE(back.id() == env.id());
    REQUIRE(cfg_json == "{\"note\":1}");
}

TEST_CASE("one aligned path concentrates energy in a single angular-delay bin",
          "[channel]") {
    // Hand-built environment: one MPC whose sine-angle and delay both land
    // exactly on DFT bins, with path loss disabled so the snapshot is an
    // exact steering/delay outer product.
    EnvironmentConfig cfg;
    cfg.num_clusters = 1;
    cfg.mpcs_per_cluster = 1;
    cfg.los_enabled = false;
    cfg.path_loss_exponent = 0.0;
    Environment env = build_environment(1, cfg);

    const int m_n = env.array.num_antennas;    // 32
    const int k_n = env.radio.num_freq_points; // 32
    const double sin_phi = 2.0 * 6 / m_n;      // angular bin 6 exactly

    const double d_bs = 60.0; // scatterer range from the first antenna
    const Vec2 axis = env.array.axis();
    const Vec2 normal{axis.y, -axis.x};
    const Vec2 dir = axis * sin_phi + normal * std::sqrt(1.0 - sin_phi * sin_phi);
    const Vec2 scatterer = env.array.first_antenna + dir * d_bs;

    // Delay aligned with bin q: dist * W / f_c = q (N_F - 1) / N_F.
    const int q = 4;
    const double f_ratio = env.radio.carrier_frequency_hz / env.radio.bandwidth_hz;
    const double dist_total = q * (k_n - 1.0) / k_n * f_ratio;
    const double d_term = dist_total - d_bs;
    REQUIRE(d_term > 0.0);

    env.clusters[0].scatterer_positions = {scatterer};
    env.clusters[0].mpc_gains = {{1.0, 0.0}};
    const Vec2 x = scatterer + dir * d_term; // terminal on the same ray
    env.clusters[0].vr_center = x;
    env.clusters[0].vr_radius = 1.0;

    const ChannelSnapshot y = synthesize_snapshot(env, x);
    const Fingerprint fp = forward_transform(y);

    double total = 0.0, best = -1.0;
    int br = 0, bc = 0;
    for (int r = 0; r < m_n; ++r)
        for (int c = 0; c < k_n; ++c) {
            const double e = fp(r, c, 0) * fp(r, c, 0) + fp(r, c, 1) * fp(r, c, 1);
            total += e;
            if (e > best) {
                best = e;
                br = r;
                bc = c;
            }
        }
    REQUIRE(br == 6);
    REQUIRE(bc == q);
    double near = 0.0;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            const int r = (br + dr + m_n) % m_n, c = (bc + dc + k_n) % k_n;
            near += fp(r, c, 0) * fp(r, c, 0) + fp(r, c, 1) * fp(r, c, 1);
        }
    REQUIRE(near >= 0.90 * total);
}

TEST_CASE("default environment is sparser transformed than raw", "[channel][transform]") {
    const Environment env = build_environment(2026, EnvironmentConfig{});
    Rng rng(55);
    double mean_raw = 0.0, mean_tf = 0.0;
    const int batch = 16;
    for (int i = 0; i < batch; ++i) {
        const Vec2 x{rng.uniform(env.area.u_c.x, env.area.u_f.x),
                     rng.uniform(env.area.u_c.y, env.area.u_f.y)};
        const ChannelSnapshot y = synthesize_snapshot(env, x);
        mean_raw += energy_bin_fraction(identity_passthrough(y));
        mean_tf += energy_bin_fraction(forward_transform(y));
    }
    mean_raw /= batch;
    mean_tf /= batch;
    INFO("raw " << mean_raw << " transformed " << mean_tf);
    REQUIRE(mean_tf < mean_raw);
}

TEST_CASE("lambda/4 grid snapshots are pairwise distinct", "[channel]") {
    // Injectivity at the sampled scale, on a reduced 4x4-wavelength area to
    // keep the pair count manageable.
    EnvironmentConfig cfg; // default desk richness
    cfg.area = {{-2.0, -2.0}, {2.0, 2.0}};
    const Environment env = build_environment(17, cfg);

    std::vector<ChannelSnapshot> snaps;
    for (int iy = 0; iy <= 16; ++iy)
        for (int ix = 0; ix <= 16; ++ix)
            snaps.push_back(synthesize_snapshot(env, {-2.0 + ix * 0.25, -2.0 + iy * 0.25}));

    double min_dist = 1e300;
    for (std::size_t i = 0; i < snaps.size(); ++i)
        for (std::size_t j = i + 1; j < snaps.size(); ++j) {
            double d2 = 0.0;
            const auto* a = snaps[i].data();
            const auto* b = snaps[j].data();
            for (std::size_t e = 0; e < snaps[i].size(); ++e)
                d2 += std::norm(a[e] - b[e]);
            min_dist = std::min(min_dist, std::sqrt(d2));
        }
    INFO("minimum pairwise snapshot distance: " << min_dist);
    REQUIRE(min_dist > 0.0);
}
