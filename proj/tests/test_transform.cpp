// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "mmfp/rng.hpp"
#include "mmfp/transform.hpp"

using namespace mmfp;

namespace {

constexpr double kPi = 3.14159265358979323846;

ChannelSnapshot random_snapshot(int rows, int cols, Rng& rng) {
    ChannelSnapshot y(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) y(r, c) = rng.complex_normal();
    return y;
}

// Direct evaluation of F Y F^H, independent of the FFT code path:
// S[a,b] = (1/sqrt(M N)) sum_{m,k} Y[m,k] exp(-j2pi a m/M) exp(+j2pi k b/N).
CMat dft2_oracle(const ChannelSnapshot& y) {
    const int m_n = y.rows(), k_n = y.cols();
    CMat s(m_n, k_n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_n) * k_n);
    for (int a = 0; a < m_n; ++a)
        for (int b = 0; b < k_n; ++b) {
            std::complex<double> acc(0.0, 0.0);
            for (int m = 0; m < m_n; ++m)
                for (int k = 0; k < k_n; ++k) {
                    const double ang =
                        -2.0 * kPi * a * m / m_n + 2.0 * kPi * k * b / k_n;
                    acc += y(m, k) * std::polar(1.0, ang);
                }
            s(a, b) = acc * scale;
        }
    return s;
}

double rel_frob_error(const CMat& a, const CMat& b) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) {
            num += std::norm(a(r, c) - b(r, c));
            den += std::norm(b(r, c));
        }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("all-zero snapshot maps to all-zero fingerprint", "[transform]") {
    ChannelSnapshot y(8, 16);
    const Fingerprint fp = forward_transform(y);
    REQUIRE(fp.frobenius_norm() == 0.0);
    const ChannelSnapshot back = inverse_transform(fp);
    REQUIRE(back.frobenius_norm() == 0.0);
}

TEST_CASE("forward transform matches the direct 2-D DFT oracle", "[transform]") {
    Rng rng(11);
    for (int trial = 0; trial < 4; ++trial) {
        // both power-of-two and general sizes
        const int rows = trial % 2 == 0 ? 8 : 12;
        const int cols = trial < 2 ? 16 : 10;
        const ChannelSnapshot y = random_snapshot(rows, cols, rng);
        const Fingerprint fp = forward_transform(y);
        const CMat expected = dft2_oracle(y);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                REQUIRE(std::abs(fp(r, c, 0) - expected(r, c).real()) < 1e-12);
                REQUIRE(std::abs(fp(r, c, 1) - expected(r, c).imag()) < 1e-12);
            }
    }
}

TEST_CASE("grid-aligned rank-1 snapshot transforms to a single bin", "[transform]") {
    const int m_n = 16, k_n = 8;
    const int m0 = 5, k0 = 3;
    const std::complex<double> a(0.8, -0.4), b(1.3, 0.7);
    // v = a * (m0-th column of F^H), w = b * (k0-th column of F^H)
    ChannelSnapshot y(m_n, k_n);
    for (int m = 0; m < m_n; ++m)
        for (int k = 0; k < k_n; ++k) {
            const std::complex<double> v =
                a * std::polar(1.0 / std::sqrt(double(m_n)), 2.0 * kPi * m * m0 / m_n);
            const std::complex<double> w =
                b * std::polar(1.0 / std::sqrt(double(k_n)), 2.0 * kPi * k * k0 / k_n);
            y(m, k) = v * std::conj(w);
        }
    const Fingerprint fp = forward_transform(y);
    const std::complex<double> expected = a * std::conj(b);
    for (int r = 0; r < m_n; ++r)
        for (int c = 0; c < k_n; ++c) {
            const std::complex<double> got(fp(r, c, 0), fp(r, c, 1));
            if (r == m0 && c == k0)
                REQUIRE(std::abs(got - expected) < 1e-12);
            else
                REQUIRE(std::abs(got) < 1e-12);
        }
}

TEST_CASE("unitarity: Frobenius norm preserved", "[transform]") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const ChannelSnapshot y = random_snapshot(trial % 2 ? 32 : 24, 32, rng);
        const Fingerprint fp = forward_transform(y);
        const double ny = y.frobenius_norm();
        REQUIRE(std::abs(fp.frobenius_norm() - ny) <= 1e-12 * ny);
    }
}

TEST_CASE("bijectivity: inverse of forward is the identity", "[transform]") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const ChannelSnapshot y = random_snapshot(16, trial % 2 ? 16 : 12, rng);
        const ChannelSnapshot back = inverse_transform(forward_transform(y));
        REQUIRE(rel_frob_error(back, y) <= 1e-10);
    }
}

TEST_CASE("inverse of a unit impulse is a unit-norm rank-1 snapshot", "[transform]") {
    const int m_n = 8, k_n = 8, m0 = 2, k0 = 6;
    Fingerprint fp(m_n, k_n, 2);
    fp(m0, k0, 0) = 1.0;
    const ChannelSnapshot y = inverse_transform(fp);
    REQUIRE(std::abs(y.frobenius_norm() - 1.0) < 1e-12);
    // Y[m,k] = exp(+j2pi m m0/M) exp(-j2pi k0 k/N) / sqrt(M N)
    const double scale = 1.0 / std::sqrt(double(m_n) * k_n);
    for (int m = 0; m < m_n; ++m)
        for (int k = 0; k < k_n; ++k) {
            const std::complex<double> want =
                std::polar(scale, 2.0 * kPi * (m * m0 / double(m_n) -
                                               k0 * k / double(k_n)));
            REQUIRE(std::abs(y(m, k) - want) < 1e-12);
        }
}

TEST_CASE("identity passthrough packs values unchanged", "[transform]") {
    ChannelSnapshot y(4, 4);
    y(0, 0) = {3.0, 4.0};
    y(2, 3) = {-1.5, 0.25};
    const Fingerprint fp = identity_passthrough(y);
    REQUIRE(fp(0, 0, 0) == 3.0);
    REQUIRE(fp(0, 0, 1) == 4.0);
    REQUIRE(fp(2, 3, 0) == -1.5);
    REQUIRE(fp(2, 3, 1) == 0.25);
    REQUIRE(fp.frobenius_norm() == Catch::Approx(y.frobenius_norm()).epsilon(1e-15));

    ChannelSnapshot zeros(3, 5);
    REQUIRE(identity_passthrough(zeros).frobenius_norm() == 0.0);
}
