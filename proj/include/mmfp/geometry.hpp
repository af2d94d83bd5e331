// SPDX-License-Identifier: Apache-2.0
//
// Coordinate, area, array and radio-grid primitives. All positions and
// distances are expressed in carrier wavelengths unless a _hz / _m suffix
// says otherwise.

#pragma once

#include <cmath>
#include <cstdint>

#include "mmfp/errors.hpp"

namespace mmfp {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Axis-aligned square (or rectangle) between the closest corner u_c and the
// furthest corner u_f.
struct Area {
    Vec2 u_c;
    Vec2 u_f;

    double side_x() const { return u_f.x - u_c.x; }
    double side_y() const { return u_f.y - u_c.y; }
    Vec2 center() const { return {(u_c.x + u_f.x) / 2.0, (u_c.y + u_f.y) / 2.0}; }

    bool contains(const Vec2& p) const {
        return p.x >= u_c.x && p.x <= u_f.x && p.y >= u_c.y && p.y <= u_f.y;
    }

    void validate() const {
        if (!(u_c.x < u_f.x) || !(u_c.y < u_f.y))
            throw config_error("area corners must satisfy u_c < u_f componentwise");
    }
};

// Uniform linear array of half-wavelength spaced omnidirectional elements.
// Element m (0-based) sits at first + m/(M-1) * (last - first).
struct ArrayGeometry {
    int num_antennas = 0;          // M
    double element_spacing = 0.5;  // wavelengths, fixed by construction
    Vec2 first_antenna;
    Vec2 last_antenna;

    Vec2 element_position(int m) const {
        const double t = static_cast<double>(m) / (num_antennas - 1);
        return first_antenna + t * (last_antenna - first_antenna);
    }

    // Unit vector along the array, first -> last.
    Vec2 axis() const {
        Vec2 d = last_antenna - first_antenna;
        const double n = d.norm();
        return {d.x / n, d.y / n};
    }

    double aperture() const { return (last_antenna - first_antenna).norm(); }

    void validate() const {
        if (num_antennas < 2)
            throw config_error("array needs at least 2 antennas");
        if (!(element_spacing > 0.0))
            throw config_error("element spacing must be positive");
        const double expected = (num_antennas - 1) * element_spacing;
        const double actual = aperture();
        if (std::abs(actual - expected) > 1e-9 * std::max(1.0, expected))
            throw config_error("array endpoints inconsistent with (M-1)*spacing aperture");
    }
};

// Equidistant frequency grid of N_F points centered on the carrier,
// spanning [-W/2, +W/2].
struct RadioConfig {
    double carrier_frequency_hz = 300e6; // f_c
    double bandwidth_hz = 20e6;          // W
    int num_freq_points = 128;           // N_F

    double freq_offset_hz(int k) const {
        return -bandwidth_hz / 2.0 +
               static_cast<double>(k) * bandwidth_hz / (num_freq_points - 1);
    }

    double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }

    void validate() const {
        if (num_freq_points < 2)
            throw config_error("need at least 2 frequency points");
        if (!(bandwidth_hz > 0.0))
            throw config_error("bandwidth must be positive");
        if (!(carrier_frequency_hz > 0.0))
            throw config_error("carrier frequency must be positive");
    }
};

} // namespace mmfp
