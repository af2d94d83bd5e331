// SPDX-License-Identifier: Apache-2.0
//
// From-scratch real-valued CNN for position regression: L cascaded
// convolution -> ReLU -> max-pool blocks followed by a fully-connected head
// mapping the final feature volume to a 2-D coordinate. Training minimizes
// the Tikhonov-regularized mean squared residual
//
//   J(theta) = (beta/2) theta'theta + (1/N) sum_i ||x_i - t_i(theta)||^2
//
// by mini-batch SGD with an analytic hand-derived gradient. Gradient
// accumulation is always in sample-index order, so a fit is bit-reproducible
// for any worker count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmfp/binio.hpp"
#include "mmfp/errors.hpp"
#include "mmfp/geometry.hpp"
#include "mmfp/parallel.hpp"
#include "mmfp/rng.hpp"
#include "mmfp/sample.hpp"
#include "mmfp/tensor.hpp"

namespace mmfp {

struct Hyperparams {
    int num_cap_layers = 2;    // L
    int kernels_per_layer = 8; // K
    int kernel_rows = 3;       // S1 (angular axis)
    int kernel_cols = 3;       // S2 (delay axis)
    int pool_rows = 2;         // N1
    int pool_cols = 2;         // N2
    double tikhonov = 1e-3;    // beta
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 200;
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (num_cap_layers < 1) throw config_error("need at least 1 CAP layer");
        if (kernels_per_layer < 1) throw config_error("need at least 1 kernel per layer");
        if (kernel_rows < 1 || kernel_cols < 1) throw config_error("kernel sizes must be >= 1");
        if (pool_rows < 1 || pool_cols < 1) throw config_error("pooling sizes must be >= 1");
        if (tikhonov < 0.0) throw config_error("tikhonov weight must be >= 0");
        if (!(learning_rate > 0.0)) throw config_error("learning rate must be > 0");
        if (batch_size < 1) throw config_error("batch size must be >= 1");
        if (epochs < 0) throw config_error("epoch count must be >= 0");
    }
};

// Table-driven kernel sizing: an angular extent in degrees spans
// M*sin(angle)/2 DFT bins (bin width 2/M in sine-angle), a delay extent
// spans delay*W bins (bin width 1/W). Rounded up to odd sizes so
// same-padding stays centered.
inline std::pair<int, int> kernel_bins_from_physics(const RadioConfig& radio,
                                                    const ArrayGeometry& array,
                                                    double angular_deg, double delay_us) {
    if (!(angular_deg > 0.0) || !(angular_deg < 90.0))
        throw config_error("kernel angular length must lie in (0, 90) degrees");
    if (!(delay_us > 0.0))
        throw config_error("kernel delay length must be positive");
    auto odd_at_least = [](double x) {
        int k = static_cast<int>(std::ceil(x));
        if (k < 1) k = 1;
        if (k % 2 == 0) ++k;
        return k;
    };
    const double pi = 3.14159265358979323846;
    const double s1 = array.num_antennas * std::sin(angular_deg * pi / 180.0) / 2.0;
    const double s2 = delay_us * 1e-6 * radio.bandwidth_hz;
    return {odd_at_least(s1), odd_at_least(s2)};
}

// --- layer primitives -------------------------------------------------------

namespace detail {

// Same-padded cross-correlation of `in` with `count` kernels, weights laid
// out kernel-major (j, u, v, d). Output entry (r,c,j) = b_j + sum over the
// kernel footprint of w_j elementwise with the zero-padded input patch
// centered at (r,c).
inline void conv_same(const Tensor3& in, const double* weights, const double* biases,
                      int count, int s1, int s2, Tensor3& out) {
    const int rows = in.rows(), cols = in.cols(), depth = in.depth();
    const int o1 = (s1 - 1) / 2, o2 = (s2 - 1) / 2;
    const std::size_t ksz = static_cast<std::size_t>(s1) * s2 * depth;

    // (j,u,v,d) -> (u,v,d,j) so the innermost accumulation runs over a
    // contiguous stretch of kernel index j.
    std::vector<double> wt(ksz * count);
    for (int j = 0; j < count; ++j)
        for (int u = 0; u < s1; ++u)
            for (int v = 0; v < s2; ++v)
                for (int d = 0; d < depth; ++d)
                    wt[((static_cast<std::size_t>(u) * s2 + v) * depth + d) * count + j] =
                        weights[j * ksz + (static_cast<std::size_t>(u) * s2 + v) * depth + d];

    std::vector<double> acc(count);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            for (int j = 0; j < count; ++j) acc[j] = biases[j];
            for (int u = 0; u < s1; ++u) {
                const int rr = r + u - o1;
                if (rr < 0 || rr >= rows) continue;
                for (int v = 0; v < s2; ++v) {
                    const int cc = c + v - o2;
                    if (cc < 0 || cc >= cols) continue;
                    const double* x = &in(rr, cc, 0);
                    const double* w = &wt[(static_cast<std::size_t>(u) * s2 + v) * depth * count];
                    for (int d = 0; d < depth; ++d) {
                        const double xd = x[d];
                        const double* wj = w + static_cast<std::size_t>(d) * count;
                        for (int j = 0; j < count; ++j) acc[j] += xd * wj[j];
                    }
                }
            }
            for (int j = 0; j < count; ++j) out(r, c, j) = acc[j];
        }
    }
}

// Gradients of conv_same. d_out is dJ/d(output); accumulates dJ/d(weights)
// and dJ/d(biases), and (when d_in != nullptr) writes dJ/d(input).
inline void conv_same_backward(const Tensor3& in, const double* weights,
                               const Tensor3& d_out, int count, int s1, int s2,
                               double* d_weights, double* d_biases, Tensor3* d_in) {
    const int rows = in.rows(), cols = in.cols(), depth = in.depth();
    const int o1 = (s1 - 1) / 2, o2 = (s2 - 1) / 2;
    const std::size_t ksz = static_cast<std::size_t>(s1) * s2 * depth;

    std::vector<double> wt; // (u,v,d,j), for the input gradient
    if (d_in) {
        wt.resize(ksz * count);
        for (int j = 0; j < count; ++j)
            for (int u = 0; u < s1; ++u)
                for (int v = 0; v < s2; ++v)
                    for (int d = 0; d < depth; ++d)
                        wt[((static_cast<std::size_t>(u) * s2 + v) * depth + d) * count + j] =
                            weights[j * ksz + (static_cast<std::size_t>(u) * s2 + v) * depth + d];
    }

    std::vector<double> dwt(ksz * count, 0.0); // (u,v,d,j) accumulator
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double* dout = &d_out(r, c, 0);
            for (int j = 0; j < count; ++j) d_biases[j] += dout[j];
            for (int u = 0; u < s1; ++u) {
                const int rr = r + u - o1;
                if (rr < 0 || rr >= rows) continue;
                for (int v = 0; v < s2; ++v) {
                    const int cc = c + v - o2;
                    if (cc < 0 || cc >= cols) continue;
                    const double* x = &in(rr, cc, 0);
                    const std::size_t base = (static_cast<std::size_t>(u) * s2 + v) * depth;
                    for (int d = 0; d < depth; ++d) {
                        const double xd = x[d];
                        double* dw = &dwt[(base + d) * count];
                        for (int j = 0; j < count; ++j) dw[j] += xd * dout[j];
                    }
                    if (d_in) {
                        double* dx = &(*d_in)(rr, cc, 0);
                        const double* w = &wt[base * count];
                        for (int d = 0; d < depth; ++d) {
                            const double* wj = w + static_cast<std::size_t>(d) * count;
                            double s = 0.0;
                            for (int j = 0; j < count; ++j) s += wj[j] * dout[j];
                            dx[d] += s;
                        }
                    }
                }
            }
        }
    }
    for (int j = 0; j < count; ++j)
        for (std::size_t e = 0; e < ksz; ++e)
            d_weights[j * ksz + e] += dwt[e * count + j];
}

} // namespace detail

// Plain-data convolution, spec form: one Tensor3 per kernel plus a bias each.
inline Tensor3 conv_layer(const Tensor3& input, const std::vector<Tensor3>& kernels,
                          const std::vector<double>& biases) {
    if (kernels.empty() || kernels.size() != biases.size())
        throw shape_error("kernel/bias count mismatch");
    const int s1 = kernels[0].rows(), s2 = kernels[0].cols();
    for (const auto& k : kernels) {
        if (k.depth() != input.depth())
            throw shape_error("kernel depth must equal input depth");
        if (k.rows() != s1 || k.cols() != s2)
            throw shape_error("kernels must share one shape");
    }
    std::vector<double> w;
    w.reserve(kernels.size() * kernels[0].size());
    for (const auto& k : kernels) w.insert(w.end(), k.data(), k.data() + k.size());
    Tensor3 out(input.rows(), input.cols(), static_cast<int>(kernels.size()));
    detail::conv_same(input, w.data(), biases.data(), static_cast<int>(kernels.size()),
                      s1, s2, out);
    return out;
}

inline Tensor3 relu(const Tensor3& z) {
    Tensor3 g = z;
    double* p = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] = std::max(p[i], 0.0);
    return g;
}

// Non-overlapping window maximum, channel-wise.
inline Tensor3 max_pool(const Tensor3& g, int n1, int n2) {
    if (g.rows() % n1 != 0 || g.cols() % n2 != 0)
        throw shape_error("pooling window must divide the input dimensions");
    Tensor3 h(g.rows() / n1, g.cols() / n2, g.depth());
    for (int r = 0; r < h.rows(); ++r)
        for (int c = 0; c < h.cols(); ++c)
            for (int d = 0; d < g.depth(); ++d) {
                double m = g(r * n1, c * n2, d);
                for (int u = 0; u < n1; ++u)
                    for (int v = 0; v < n2; ++v)
                        m = std::max(m, g(r * n1 + u, c * n2 + v, d));
                h(r, c, d) = m;
            }
    return h;
}

// --- model ------------------------------------------------------------------

enum class InitMode { kGaussian, kZeros };

// Intermediate activations of one forward pass, kept for backprop.
struct ForwardTrace {
    Fingerprint scaled_input;
    std::vector<Tensor3> act;    // post-ReLU, pre-pool
    std::vector<Tensor3> pooled; // post-pool
    Vec2 estimate;
};

class CnnModel {
  public:
    CnnModel() = default;

    CnnModel(const Hyperparams& hp, int input_rows, int input_cols,
             InitMode init = InitMode::kGaussian)
        : hp_(hp), in_rows_(input_rows), in_cols_(input_cols) {
        hp_.validate();
        int r = input_rows, c = input_cols;
        for (int l = 0; l < hp_.num_cap_layers; ++l) {
            if (r % hp_.pool_rows != 0 || c % hp_.pool_cols != 0 || r == 0 || c == 0)
                throw config_error("input dims must be divisible by the pooling factors "
                                   "through all CAP layers");
            r /= hp_.pool_rows;
            c /= hp_.pool_cols;
        }
        theta.assign(param_count(), 0.0);
        if (init == InitMode::kGaussian) {
            Rng rng(hp_.rng_seed);
            for (int l = 0; l < hp_.num_cap_layers; ++l) {
                const double scale = 1.0 / std::sqrt(static_cast<double>(
                                         hp_.kernel_rows) * hp_.kernel_cols * layer_in_depth(l));
                double* w = theta.data() + kernel_offset(l);
                const std::size_t n = kernel_block_size(l);
                for (std::size_t i = 0; i < n; ++i) w[i] = rng.normal() * scale;
            }
            const double scale = 1.0 / std::sqrt(static_cast<double>(feature_volume()));
            double* w = theta.data() + fc_weight_offset();
            for (std::size_t i = 0; i < 2 * static_cast<std::size_t>(feature_volume()); ++i)
                w[i] = rng.normal() * scale;
            // biases stay zero
        }
    }

    const Hyperparams& hyper() const { return hp_; }
    int input_rows() const { return in_rows_; }
    int input_cols() const { return in_cols_; }

    int layer_in_depth(int l) const { return l == 0 ? 2 : hp_.kernels_per_layer; }
    int rows_after(int layers) const {
        int r = in_rows_;
        for (int l = 0; l < layers; ++l) r /= hp_.pool_rows;
        return r;
    }
    int cols_after(int layers) const {
        int c = in_cols_;
        for (int l = 0; l < layers; ++l) c /= hp_.pool_cols;
        return c;
    }
    int feature_volume() const {
        return rows_after(hp_.num_cap_layers) * cols_after(hp_.num_cap_layers) *
               hp_.kernels_per_layer;
    }

    // theta layout: CAP kernels (layer-major), vec(W), CAP biases
    // (layer-major), FC bias pair.
    std::size_t kernel_block_size(int l) const {
        return static_cast<std::size_t>(hp_.kernels_per_layer) * hp_.kernel_rows *
               hp_.kernel_cols * layer_in_depth(l);
    }
    std::size_t kernel_offset(int l) const {
        std::size_t off = 0;
        for (int i = 0; i < l; ++i) off += kernel_block_size(i);
        return off;
    }
    std::size_t fc_weight_offset() const { return kernel_offset(hp_.num_cap_layers); }
    std::size_t conv_bias_offset(int l) const {
        return fc_weight_offset() + 2 * static_cast<std::size_t>(feature_volume()) +
               static_cast<std::size_t>(l) * hp_.kernels_per_layer;
    }
    std::size_t fc_bias_offset() const { return conv_bias_offset(hp_.num_cap_layers); }
    std::size_t param_count() const { return fc_bias_offset() + 2; }

    // Introspection helpers (also how tests compose the layer oracle).
    std::vector<Tensor3> layer_kernels(int l) const {
        std::vector<Tensor3> ks;
        const double* w = theta.data() + kernel_offset(l);
        const std::size_t per = static_cast<std::size_t>(hp_.kernel_rows) * hp_.kernel_cols *
                                layer_in_depth(l);
        for (int j = 0; j < hp_.kernels_per_layer; ++j) {
            Tensor3 k(hp_.kernel_rows, hp_.kernel_cols, layer_in_depth(l));
            std::copy(w + j * per, w + (j + 1) * per, k.data());
            ks.push_back(std::move(k));
        }
        return ks;
    }
    std::vector<double> layer_biases(int l) const {
        const double* b = theta.data() + conv_bias_offset(l);
        return std::vector<double>(b, b + hp_.kernels_per_layer);
    }

    Vec2 forward(const Fingerprint& fp) const {
        ForwardTrace trace;
        return forward_trace(fp, trace);
    }

    Vec2 forward_trace(const Fingerprint& fp, ForwardTrace& trace) const {
        if (fp.rows() != in_rows_ || fp.cols() != in_cols_ || fp.depth() != 2)
            throw shape_error("fingerprint shape does not match the model input");
        trace.scaled_input = fp;
        if (input_scale != 1.0) trace.scaled_input.scale(1.0 / input_scale);
        trace.act.clear();
        trace.pooled.clear();

        const Tensor3* h = &trace.scaled_input;
        for (int l = 0; l < hp_.num_cap_layers; ++l) {
            Tensor3 c(h->rows(), h->cols(), hp_.kernels_per_layer);
            detail::conv_same(*h, theta.data() + kernel_offset(l),
                              theta.data() + conv_bias_offset(l), hp_.kernels_per_layer,
                              hp_.kernel_rows, hp_.kernel_cols, c);
            double* p = c.data();
            for (std::size_t i = 0; i < c.size(); ++i) p[i] = std::max(p[i], 0.0);
            trace.act.push_back(std::move(c));
            trace.pooled.push_back(max_pool(trace.act.back(), hp_.pool_rows, hp_.pool_cols));
            h = &trace.pooled.back();
        }

        const double* w = theta.data() + fc_weight_offset();
        const double* features = h->data();
        const std::size_t vol = h->size();
        const double* b = theta.data() + fc_bias_offset();
        Vec2 t{b[0], b[1]};
        for (std::size_t v = 0; v < vol; ++v) {
            t.x += w[v] * features[v];
            t.y += w[vol + v] * features[v];
        }
        trace.estimate = t;
        return t;
    }

    std::vector<double> theta;
    double input_scale = 1.0;   // training-set RMS entry magnitude
    std::uint64_t env_hash = 0; // environment the training data came from

  private:
    Hyperparams hp_;
    int in_rows_ = 0, in_cols_ = 0;
};

// --- loss and gradient ------------------------------------------------------

namespace detail {

// Adds weight * d/dtheta ||x - t||^2 for one sample into grad.
inline void accumulate_sample_gradient(const CnnModel& m, const LabeledFingerprint& s,
                                       double weight, std::span<double> grad,
                                       ForwardTrace& trace) {
    const Hyperparams& hp = m.hyper();
    const Vec2 t = m.forward_trace(s.fingerprint, trace);
    const double dt[2] = {2.0 * weight * (t.x - s.position.x),
                          2.0 * weight * (t.y - s.position.y)};

    const int layers = hp.num_cap_layers;
    const Tensor3& last = trace.pooled[layers - 1];
    const std::size_t vol = last.size();

    // FC head
    {
        double* dw = grad.data() + m.fc_weight_offset();
        const double* features = last.data();
        for (std::size_t v = 0; v < vol; ++v) {
            dw[v] += dt[0] * features[v];
            dw[vol + v] += dt[1] * features[v];
        }
        double* db = grad.data() + m.fc_bias_offset();
        db[0] += dt[0];
        db[1] += dt[1];
    }

    // downstream gradient w.r.t. the pooled feature volume
    Tensor3 d_pool(last.rows(), last.cols(), last.depth());
    {
        const double* w = m.theta.data() + m.fc_weight_offset();
        double* dp = d_pool.data();
        for (std::size_t v = 0; v < vol; ++v)
            dp[v] = dt[0] * w[v] + dt[1] * w[vol + v];
    }

    for (int l = layers - 1; l >= 0; --l) {
        const Tensor3& act = trace.act[l];

        // Unpool: route each pooled gradient to the first maximal element of
        // its window in row-major order, then gate through the ReLU
        // (subgradient 0 at exactly 0).
        Tensor3 d_act(act.rows(), act.cols(), act.depth());
        for (int r = 0; r < d_pool.rows(); ++r)
            for (int c = 0; c < d_pool.cols(); ++c)
                for (int d = 0; d < d_pool.depth(); ++d) {
                    int br = r * hp.pool_rows, bc = c * hp.pool_cols;
                    double best = act(br, bc, d);
                    int bu = 0, bv = 0;
                    for (int u = 0; u < hp.pool_rows; ++u)
                        for (int v = 0; v < hp.pool_cols; ++v)
                            if (act(br + u, bc + v, d) > best) {
                                best = act(br + u, bc + v, d);
                                bu = u;
                                bv = v;
                            }
                    if (best > 0.0)
                        d_act(br + bu, bc + bv, d) = d_pool(r, c, d);
                }

        const Tensor3& input = (l == 0) ? trace.scaled_input : trace.pooled[l - 1];
        Tensor3 d_in;
        Tensor3* d_in_ptr = nullptr;
        if (l > 0) {
            d_in = Tensor3(input.rows(), input.cols(), input.depth());
            d_in_ptr = &d_in;
        }
        conv_same_backward(input, m.theta.data() + m.kernel_offset(l), d_act,
                           hp.kernels_per_layer, hp.kernel_rows, hp.kernel_cols,
                           grad.data() + m.kernel_offset(l),
                           grad.data() + m.conv_bias_offset(l), d_in_ptr);
        if (l > 0) d_pool = std::move(d_in);
    }
}

} // namespace detail

// J(theta) over a batch: Tikhonov penalty plus mean squared residual.
inline double loss(const CnnModel& m, std::span<const LabeledFingerprint> batch) {
    if (batch.empty()) throw config_error("loss requires a nonempty batch");
    double j = 0.0;
    for (const auto& s : batch) {
        const Vec2 t = m.forward(s.fingerprint);
        const Vec2 e = t - s.position;
        j += e.x * e.x + e.y * e.y;
    }
    j /= static_cast<double>(batch.size());
    const double beta = m.hyper().tikhonov;
    if (beta > 0.0) {
        double q = 0.0;
        for (double v : m.theta) q += v * v;
        j += 0.5 * beta * q;
    }
    return j;
}

// Exact analytic gradient of loss() w.r.t. every parameter.
inline std::vector<double> backward(const CnnModel& m,
                                    std::span<const LabeledFingerprint> batch) {
    if (batch.empty()) throw config_error("backward requires a nonempty batch");
    std::vector<double> grad(m.theta.size(), 0.0);
    const double beta = m.hyper().tikhonov;
    if (beta > 0.0)
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = beta * m.theta[i];
    ForwardTrace trace;
    const double w = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch)
        detail::accumulate_sample_gradient(m, s, w, grad, trace);
    return grad;
}

// --- training ---------------------------------------------------------------

struct FitResult {
    std::vector<double> epoch_loss; // full-training-set J after each epoch
    double final_loss = 0.0;
};

inline double dataset_rms(const std::vector<LabeledFingerprint>& samples) {
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
        sq += s.fingerprint.squared_norm();
        n += s.fingerprint.size();
    }
    const double rms = n == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(n));
    return rms > 0.0 ? rms : 1.0;
}

// Mini-batch SGD over shuffled batches: theta <- theta - eta * grad_batch.
// Deterministic given the seed; the constant learning rate is halved whenever
// the full-training-set loss increases epoch over epoch.
inline FitResult sgd_fit(CnnModel& m, const std::vector<LabeledFingerprint>& train,
                         int threads = 1) {
    if (train.empty()) throw config_error("training set is empty");
    const Hyperparams& hp = m.hyper();
    m.input_scale = dataset_rms(train);

    const std::size_t n = train.size();
    const std::size_t batch = std::min<std::size_t>(hp.batch_size, n);
    Rng shuffle_rng(hp.rng_seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::vector<double>> sample_grad(batch,
                                                 std::vector<double>(m.theta.size()));
    std::vector<double> grad(m.theta.size());
    std::vector<double> sample_loss(n);

    double eta = hp.learning_rate;
    FitResult result;
    result.epoch_loss.reserve(hp.epochs);

    auto full_loss = [&]() {
        parallel_for(n, threads, [&](std::size_t i) {
            const Vec2 t = m.forward(train[i].fingerprint);
            const Vec2 e = t - train[i].position;
            sample_loss[i] = e.x * e.x + e.y * e.y;
        });
        double j = 0.0;
        for (std::size_t i = 0; i < n; ++i) j += sample_loss[i]; // index order
        j /= static_cast<double>(n);
        if (hp.tikhonov > 0.0) {
            double q = 0.0;
            for (double v : m.theta) q += v * v;
            j += 0.5 * hp.tikhonov * q;
        }
        return j;
    };

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            const double w = 1.0 / static_cast<double>(count);
            parallel_for(count, threads, [&](std::size_t i) {
                auto& g = sample_grad[i];
                std::fill(g.begin(), g.end(), 0.0);
                ForwardTrace tr;
                detail::accumulate_sample_gradient(m, train[order[start + i]], w,
                                                   std::span<double>(g), tr);
            });
            if (hp.tikhonov > 0.0)
                for (std::size_t p = 0; p < grad.size(); ++p)
                    grad[p] = hp.tikhonov * m.theta[p];
            else
                std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = 0; i < count; ++i) { // fixed sample-index order
                const auto& g = sample_grad[i];
                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
            }
            for (std::size_t p = 0; p < m.theta.size(); ++p) m.theta[p] -= eta * grad[p];
        }

        const double j = full_loss();
        if (!std::isfinite(j)) throw divergence_error(epoch, eta);
        if (!result.epoch_loss.empty() && j > result.epoch_loss.back()) eta *= 0.5;
        result.epoch_loss.push_back(j);
    }
    result.final_loss = result.epoch_loss.empty() ? full_loss() : result.epoch_loss.back();
    return result;
}

// Analytic multiply-add count (2 flops each) of the convolution stages of one
// forward pass; the pipeline's dominant cost.
inline std::uint64_t forward_conv_flops(const Hyperparams& hp, int in_rows, int in_cols) {
    std::uint64_t total = 0;
    int r = in_rows, c = in_cols;
    for (int l = 0; l < hp.num_cap_layers; ++l) {
        const int depth = l == 0 ? 2 : hp.kernels_per_layer;
        total += 2ull * r * c * hp.kernels_per_layer * hp.kernel_rows * hp.kernel_cols * depth;
        r /= hp.pool_rows;
        c /= hp.pool_cols;
    }
    total += 2ull * 2 * r * c * hp.kernels_per_layer; // FC head
    return total;
}

// --- persistence ------------------------------------------------------------

inline void save_model(const CnnModel& m, const std::string& path,
                       const std::string& config_json = "",
                       std::uint64_t train_data_hash = 0) {
    const Hyperparams& hp = m.hyper();
    BinWriter w;
    w.magic("MMCNN1");
    w.u32(static_cast<std::uint32_t>(hp.num_cap_layers));
    w.u32(static_cast<std::uint32_t>(hp.kernels_per_layer));
    w.u32(static_cast<std::uint32_t>(hp.kernel_rows));
    w.u32(static_cast<std::uint32_t>(hp.kernel_cols));
    w.u32(static_cast<std::uint32_t>(hp.pool_rows));
    w.u32(static_cast<std::uint32_t>(hp.pool_cols));
    w.f64(hp.tikhonov);
    w.f64(hp.learning_rate);
    w.u32(static_cast<std::uint32_t>(hp.batch_size));
    w.u32(static_cast<std::uint32_t>(hp.epochs));
    w.u64(hp.rng_seed);
    w.u32(static_cast<std::uint32_t>(m.input_rows()));
    w.u32(static_cast<std::uint32_t>(m.input_cols()));
    w.f64(m.input_scale);
    w.u64(m.env_hash);
    w.u64(train_data_hash);
    w.str(config_json);
    w.u64(m.theta.size());
    for (double v : m.theta) w.f64(v);
    w.save(path);
}

inline CnnModel load_model(const std::string& path, std::string* config_json = nullptr,
                           std::uint64_t* train_data_hash = nullptr) {
    BinReader r(path);
    r.expect_magic("MMCNN1");
    Hyperparams hp;
    hp.num_cap_layers = static_cast<int>(r.u32());
    hp.kernels_per_layer = static_cast<int>(r.u32());
    hp.kernel_rows = static_cast<int>(r.u32());
    hp.kernel_cols = static_cast<int>(r.u32());
    hp.pool_rows = static_cast<int>(r.u32());
    hp.pool_cols = static_cast<int>(r.u32());
    hp.tikhonov = r.f64();
    hp.learning_rate = r.f64();
    hp.batch_size = static_cast<int>(r.u32());
    hp.epochs = static_cast<int>(r.u32());
    hp.rng_seed = r.u64();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    CnnModel m(hp, rows, cols, InitMode::kZeros);
    m.input_scale = r.f64();
    m.env_hash = r.u64();
    const std::uint64_t dh = r.u64();
    if (train_data_hash) *train_data_hash = dh;
    std::string cfg = r.str();
    if (config_json) *config_json = std::move(cfg);
    const std::uint64_t count = r.u64();
    if (count != m.theta.size()) throw io_error("model parameter count mismatch");
    for (auto& v : m.theta) v = r.f64();
    return m;
}

} // namespace mmfp
