// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mmfp/geometry.hpp"
#include "mmfp/tensor.hpp"

namespace mmfp {

// One supervised example: a (possibly transformed) channel fingerprint and
// the terminal position it was synthesized at.
struct LabeledFingerprint {
    Fingerprint fingerprint;
    Vec2 position;
};

} // namespace mmfp
