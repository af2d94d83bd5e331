// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mmfp {

// Error taxonomy mirrored by the CLI exit codes: io_error -> 2,
// config_error / shape_error -> 3, provenance_error -> 4,
// divergence_error -> 5.

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct provenance_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when the training loss goes non-finite; carries where it happened.
struct divergence_error : std::runtime_error {
    int epoch;
    double learning_rate;

    divergence_error(int epoch_, double lr)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) +
                             " (learning rate " + std::to_string(lr) + ")"),
          epoch(epoch_),
          learning_rate(lr) {}
};

} // namespace mmfp
