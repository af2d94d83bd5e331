// SPDX-License-Identifier: Apache-2.0
//
// Angular-delay sparsifying transform: s(Y) = F * Y * F^H with unitary DFT
// matrices on both sides (M-point left, N_F-point right). The left factor
// resolves arrival angle across the array, the right factor resolves delay
// across the frequency grid. Both directions are exact algebraic inverses,
// so the transform is bijective and norm preserving.

#pragma once

#include <algorithm>
#include <complex>
#include <functional>
#include <vector>

#include "mmfp/tensor.hpp"

namespace mmfp {
namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey, unscaled. sign = -1 for the DFT kernel
// exp(-j 2 pi k n / N), +1 for its conjugate.
inline void fft_radix2(std::complex<double>* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * pi / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline void dft_direct(std::complex<double>* a, int n, int sign) {
    const double pi = 3.14159265358979323846;
    std::vector<std::complex<double>> out(n);
    for (int q = 0; q < n; ++q) {
        std::complex<double> s(0.0, 0.0);
        for (int k = 0; k < n; ++k) {
            const double ang = sign * 2.0 * pi * q * k / n;
            s += a[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[q] = s;
    }
    for (int i = 0; i < n; ++i) a[i] = out[i];
}

// Unitary 1-D DFT (sign -1) or inverse DFT (sign +1): 1/sqrt(n) scaling.
inline void dft_unitary(std::complex<double>* a, int n, int sign) {
    if (is_pow2(n))
        fft_radix2(a, n, sign);
    else
        dft_direct(a, n, sign);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) a[i] *= s;
}

// Left-multiplies by unitary F (sign -1) or F^H (sign +1): DFT down columns.
inline void transform_columns(CMat& y, int sign) {
    std::vector<std::complex<double>> col(y.rows());
    for (int c = 0; c < y.cols(); ++c) {
        for (int r = 0; r < y.rows(); ++r) col[r] = y(r, c);
        dft_unitary(col.data(), y.rows(), sign);
        for (int r = 0; r < y.rows(); ++r) y(r, c) = col[r];
    }
}

// Right-multiplies by unitary F^H (sign +1) or F (sign -1): (Y F^H)[m,q]
// = sum_k Y[m,k] conj(F[q,k]), i.e. an inverse DFT along each row.
inline void transform_rows(CMat& y, int sign) {
    for (int r = 0; r < y.rows(); ++r)
        dft_unitary(y.data() + static_cast<std::size_t>(r) * y.cols(), y.cols(), sign);
}

} // namespace detail

// F * Y * F^H, split into Re/Im planes of an M x N_F x 2 tensor.
inline Fingerprint forward_transform(const ChannelSnapshot& y) {
    CMat s = y;
    detail::transform_columns(s, -1);
    detail::transform_rows(s, +1);
    Fingerprint fp(y.rows(), y.cols(), 2);
    for (int r = 0; r < y.rows(); ++r)
        for (int c = 0; c < y.cols(); ++c) {
            fp(r, c, 0) = s(r, c).real();
            fp(r, c, 1) = s(r, c).imag();
        }
    return fp;
}

// Exact algebraic inverse: F^H * S * F on the recombined complex matrix.
inline ChannelSnapshot inverse_transform(const Fingerprint& fp) {
    if (fp.depth() != 2) throw shape_error("fingerprint must have depth 2");
    CMat s(fp.rows(), fp.cols());
    for (int r = 0; r < fp.rows(); ++r)
        for (int c = 0; c < fp.cols(); ++c)
            s(r, c) = {fp(r, c, 0), fp(r, c, 1)};
    detail::transform_columns(s, +1);
    detail::transform_rows(s, -1);
    return s;
}

// Control arm: packs Y without any transform, s(Y) = Y.
inline Fingerprint identity_passthrough(const ChannelSnapshot& y) {
    Fingerprint fp(y.rows(), y.cols(), 2);
    for (int r = 0; r < y.rows(); ++r)
        for (int c = 0; c < y.cols(); ++c) {
            fp(r, c, 0) = y(r, c).real();
            fp(r, c, 1) = y(r, c).imag();
        }
    return fp;
}

// Fraction of complex bins needed to hold `quantile` of the total energy;
// small values mean a sparse representation.
inline double energy_bin_fraction(const Fingerprint& fp, double quantile = 0.95) {
    std::vector<double> e;
    e.reserve(static_cast<std::size_t>(fp.rows()) * fp.cols());
    double total = 0.0;
    for (int r = 0; r < fp.rows(); ++r)
        for (int c = 0; c < fp.cols(); ++c) {
            const double v = fp(r, c, 0) * fp(r, c, 0) + fp(r, c, 1) * fp(r, c, 1);
            e.push_back(v);
            total += v;
        }
    if (total <= 0.0) return 0.0;
    std::sort(e.begin(), e.end(), std::greater<double>());
    double acc = 0.0;
    std::size_t bins = 0;
    while (bins < e.size() && acc < quantile * total) acc += e[bins++];
    return static_cast<double>(bins) / static_cast<double>(e.size());
}

} // namespace mmfp
