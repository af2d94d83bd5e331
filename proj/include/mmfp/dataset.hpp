// SPDX-License-Identifier: Apache-2.0
//
// Labeled dataset construction: deterministic training grids spanning the
// area border to border, and uniformly sampled random test sets, both
// fingerprinted from one frozen Environment. Persisted as MMDS1 so the
// provenance chain (environment hash) survives the filesystem.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmfp/baseline.hpp"
#include "mmfp/binio.hpp"
#include "mmfp/channel.hpp"
#include "mmfp/parallel.hpp"
#include "mmfp/rng.hpp"
#include "mmfp/sample.hpp"
#include "mmfp/transform.hpp"

namespace mmfp {

enum class Representation : std::uint8_t { kRaw = 0, kTransformed = 1 };

inline const char* to_string(Representation r) {
    return r == Representation::kRaw ? "raw" : "transformed";
}

struct LabeledDataset {
    std::vector<LabeledFingerprint> samples;
    Representation representation = Representation::kTransformed;
    double grid_spacing = 0.0; // effective lattice step; 0 for random test sets
    std::uint64_t environment_id = 0;

    bool is_training_grid() const { return grid_spacing > 0.0; }
    int rows() const { return samples.empty() ? 0 : samples.front().fingerprint.rows(); }
    int cols() const { return samples.empty() ? 0 : samples.front().fingerprint.cols(); }
};

namespace detail {

inline Fingerprint make_fingerprint(const Environment& env, const Vec2& x,
                                    Representation repr) {
    const ChannelSnapshot y = synthesize_snapshot(env, x);
    return repr == Representation::kTransformed ? forward_transform(y)
                                                : identity_passthrough(y);
}

// floor(side/spacing)+1 points per axis, border-inclusive; the realized step
// is side/(n-1), equal to the request whenever it divides the side.
inline int lattice_points(double side, double spacing) {
    return static_cast<int>(std::floor(side / spacing + 1e-9)) + 1;
}

} // namespace detail

inline LabeledDataset make_training_grid(const Environment& env, double spacing,
                                         Representation repr, int threads = 1) {
    if (!(spacing > 0.0)) throw config_error("grid spacing must be positive");
    const Area& a = env.area;
    if (spacing > std::min(a.side_x(), a.side_y()) + 1e-12)
        throw config_error("grid spacing exceeds the area side");

    const int nx = detail::lattice_points(a.side_x(), spacing);
    const int ny = detail::lattice_points(a.side_y(), spacing);
    const double dx = a.side_x() / (nx - 1);
    const double dy = a.side_y() / (ny - 1);

    LabeledDataset ds;
    ds.representation = repr;
    ds.grid_spacing = dx;
    ds.environment_id = env.id();
    ds.samples.resize(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            ds.samples[static_cast<std::size_t>(iy) * nx + ix].position = {
                a.u_c.x + ix * dx, a.u_c.y + iy * dy};

    parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
        ds.samples[i].fingerprint =
            detail::make_fingerprint(env, ds.samples[i].position, repr);
    });
    return ds;
}

inline LabeledDataset make_test_set(const Environment& env, int n, std::uint64_t seed,
                                    Representation repr, int threads = 1) {
    if (n < 1) throw config_error("test set needs at least one sample");
    LabeledDataset ds;
    ds.representation = repr;
    ds.grid_spacing = 0.0;
    ds.environment_id = env.id();
    ds.samples.resize(n);
    Rng rng(seed); // positions drawn sequentially so the set is seed-stable
    for (auto& s : ds.samples)
        s.position = {rng.uniform(env.area.u_c.x, env.area.u_f.x),
                      rng.uniform(env.area.u_c.y, env.area.u_f.y)};
    parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
        ds.samples[i].fingerprint =
            detail::make_fingerprint(env, ds.samples[i].position, repr);
    });
    return ds;
}

inline void save_dataset(const LabeledDataset& ds, const std::string& path,
                         const std::string& config_json = "") {
    BinWriter w;
    w.magic("MMDS1");
    w.u32(static_cast<std::uint32_t>(ds.rows()));
    w.u32(static_cast<std::uint32_t>(ds.cols()));
    w.u8(static_cast<std::uint8_t>(ds.representation));
    w.u32(static_cast<std::uint32_t>(ds.samples.size()));
    w.f64(ds.grid_spacing);
    w.u64(ds.environment_id);
    w.str(config_json);
    for (const auto& s : ds.samples) {
        w.f64(s.position.x);
        w.f64(s.position.y);
        const double* p = s.fingerprint.data();
        for (std::size_t i = 0; i < s.fingerprint.size(); ++i) w.f64(p[i]);
    }
    w.save(path);
}

inline LabeledDataset load_dataset(const std::string& path,
                                   std::string* config_json = nullptr) {
    BinReader r(path);
    r.expect_magic("MMDS1");
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    LabeledDataset ds;
    ds.representation = static_cast<Representation>(r.u8());
    const std::uint32_t n = r.u32();
    ds.grid_spacing = r.f64();
    ds.environment_id = r.u64();
    std::string cfg = r.str();
    if (config_json) *config_json = std::move(cfg);
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.position = {r.f64(), r.f64()};
        s.fingerprint = Fingerprint(rows, cols, 2);
        double* p = s.fingerprint.data();
        for (std::size_t i = 0; i < s.fingerprint.size(); ++i) p[i] = r.f64();
    }
    return ds;
}

// Rebuilds complex snapshots from a raw-representation dataset for the
// correlation baseline.
inline FingerprintDatabase to_database(const LabeledDataset& ds) {
    if (ds.representation != Representation::kRaw)
        throw config_error("baseline database requires the raw representation");
    FingerprintDatabase db;
    db.environment_id = ds.environment_id;
    db.entries.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        ChannelSnapshot y(s.fingerprint.rows(), s.fingerprint.cols());
        for (int r = 0; r < y.rows(); ++r)
            for (int c = 0; c < y.cols(); ++c)
                y(r, c) = {s.fingerprint(r, c, 0), s.fingerprint(r, c, 1)};
        db.entries.push_back({std::move(y), s.position});
    }
    return db;
}

} // namespace mmfp
