// SPDX-License-Identifier: Apache-2.0
//
// Dense value types used throughout: a real rank-3 tensor (rows x cols x
// depth, depth innermost) and a complex matrix (row-major). A channel
// snapshot is an antennas x frequency-points complex matrix; a fingerprint
// is its M x N_F x 2 real packing.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mmfp/errors.hpp"

namespace mmfp {

class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(int rows, int cols, int depth, double fill = 0.0)
        : rows_(rows), cols_(cols), depth_(depth),
          data_(static_cast<std::size_t>(rows) * cols * depth, fill) {
        if (rows < 1 || cols < 1 || depth < 1)
            throw shape_error("tensor dimensions must be positive");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int depth() const { return depth_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c, int d) {
        return data_[(static_cast<std::size_t>(r) * cols_ + c) * depth_ + d];
    }
    const double& operator()(int r, int c, int d) const {
        return data_[(static_cast<std::size_t>(r) * cols_ + c) * depth_ + d];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor3& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && depth_ == o.depth_;
    }

    double squared_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }
    double frobenius_norm() const { return std::sqrt(squared_norm()); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void scale(double s) {
        for (double& v : data_) v *= s;
    }

  private:
    int rows_ = 0, cols_ = 0, depth_ = 0;
    std::vector<double> data_;
};

class CMat {
  public:
    using value_type = std::complex<double>;

    CMat() = default;
    CMat(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {
        if (rows < 1 || cols < 1)
            throw shape_error("matrix dimensions must be positive");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    value_type& operator()(int r, int c) {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    value_type operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    value_type* data() { return data_.data(); }
    const value_type* data() const { return data_.data(); }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return s;
    }
    double frobenius_norm() const { return std::sqrt(squared_norm()); }

    bool all_finite() const {
        for (const auto& z : data_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<value_type> data_;
};

using ChannelSnapshot = CMat; // antennas x frequency points
using Fingerprint = Tensor3;  // M x N_F x 2, plane 0 = Re, plane 1 = Im

} // namespace mmfp
