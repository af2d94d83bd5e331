// SPDX-License-Identifier: Apache-2.0
//
// Non-parametric benchmark: grid search over normalized snapshot
// correlations. The estimate is always one of the stored training positions,
// so its error is floored by the training-grid density.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mmfp/errors.hpp"
#include "mmfp/geometry.hpp"
#include "mmfp/parallel.hpp"
#include "mmfp/tensor.hpp"

namespace mmfp {

struct FingerprintDatabase {
    struct Entry {
        ChannelSnapshot snapshot;
        Vec2 position;
    };
    std::vector<Entry> entries;
    std::uint64_t environment_id = 0;

    void validate() const {
        if (entries.empty()) throw config_error("fingerprint database is empty");
        const int r = entries.front().snapshot.rows();
        const int c = entries.front().snapshot.cols();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].snapshot.rows() != r || entries[i].snapshot.cols() != c)
                throw shape_error("database snapshots must share dimensions");
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                if (entries[i].position == entries[j].position)
                    throw config_error("database positions must be unique");
        }
    }
};

// |Tr(Y_i^H Y_new)| / sqrt(Tr(Y_i^H Y_i) Tr(Y_new^H Y_new)); the trace is
// evaluated as the entrywise inner product, which is the same value at
// O(M N_F) cost.
inline double correlate(const ChannelSnapshot& db_entry, const ChannelSnapshot& y_new) {
    if (db_entry.rows() != y_new.rows() || db_entry.cols() != y_new.cols())
        throw shape_error("snapshot dimensions differ");
    std::complex<double> cross(0.0, 0.0);
    double e_db = 0.0, e_new = 0.0;
    const auto* a = db_entry.data();
    const auto* b = y_new.data();
    for (std::size_t i = 0; i < db_entry.size(); ++i) {
        cross += std::conj(a[i]) * b[i];
        e_db += std::norm(a[i]);
        e_new += std::norm(b[i]);
    }
    if (e_db <= 0.0 || e_new <= 0.0)
        throw config_error("correlation undefined for an all-zero snapshot");
    return std::abs(cross) / std::sqrt(e_db * e_new);
}

// Argmax correlation over the database; ties break to the lowest index.
inline Vec2 classify(const FingerprintDatabase& db, const ChannelSnapshot& y_new,
                     int threads = 1) {
    if (db.entries.empty()) throw config_error("fingerprint database is empty");
    std::vector<double> score(db.entries.size());
    parallel_for(db.entries.size(), threads, [&](std::size_t i) {
        score[i] = correlate(db.entries[i].snapshot, y_new);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < score.size(); ++i)
        if (score[i] > score[best]) best = i;
    return db.entries[best].position;
}

} // namespace mmfp
