#include "ecoscale/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ecoscale {

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int stride, int pad_left,
               int pad_right, bool bias_flag, std::string layer_name)
    : in_channels(in_channels),
      out_channels(out_channels),
      kernel(kernel),
      stride(stride),
      pad_left(pad_left),
      pad_right(pad_right),
      has_bias(bias_flag),
      name(std::move(layer_name)) {
    if (kernel < 1 || stride < 1 || pad_left < 0 || pad_right < 0)
        throw std::invalid_argument(name + ": bad conv geometry");
    weight.assign(static_cast<size_t>(out_channels) * in_channels * kernel, 0.0);
    grad_weight.assign(weight.size(), 0.0);
    bias.assign(has_bias ? out_channels : 0, 0.0);
    grad_bias.assign(bias.size(), 0.0);
}

Conv1d Conv1d::same(int in_channels, int out_channels, int kernel, bool bias, std::string name) {
    int pl = (kernel % 2 == 1) ? (kernel - 1) / 2 : kernel / 2 - 1;
    int pr = (kernel % 2 == 1) ? (kernel - 1) / 2 : kernel / 2;
    return Conv1d(in_channels, out_channels, kernel, 1, pl, pr, bias, std::move(name));
}

int Conv1d::out_length(int in_length) const {
    return (in_length + pad_left + pad_right - kernel) / stride + 1;
}

Tensor3 Conv1d::forward(const Tensor3& x) {
    if (x.channels != in_channels)
        throw std::runtime_error(name + ": expected " + std::to_string(in_channels) +
                                 " input channels, got " + std::to_string(x.channels));
    const int out_len = out_length(x.length);
    if (out_len < 1)
        throw std::runtime_error(name + ": output length " + std::to_string(out_len) +
                                 " < 1 for input length " + std::to_string(x.length));
    cached_x_ = x;
    Tensor3 out(x.batch, out_channels, out_len);
    const int L = x.length;

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.batch; ++b) {
        for (int o = 0; o < out_channels; ++o) {
            double* orow = out.row(b, o);
            const double bval = has_bias ? bias[o] : 0.0;
            for (int t = 0; t < out_len; ++t) orow[t] = bval;
            for (int c = 0; c < in_channels; ++c) {
                const double* xrow = x.row(b, c);
                const double* wrow = weight.data() + (static_cast<size_t>(o) * in_channels + c) * kernel;
                for (int j = 0; j < kernel; ++j) {
                    const double w = wrow[j];
                    if (w == 0.0) continue;
                    // valid t range keeps t*stride + j - pad_left inside [0, L)
                    int t0 = 0;
                    if (pad_left - j > 0) t0 = (pad_left - j + stride - 1) / stride;
                    int t1 = (L - 1 + pad_left - j) / stride;
                    if (t1 > out_len - 1) t1 = out_len - 1;
                    const double* xs = xrow + (static_cast<long>(t0) * stride + j - pad_left);
                    if (stride == 1) {
                        for (int t = t0; t <= t1; ++t, ++xs) orow[t] += w * *xs;
                    } else {
                        for (int t = t0; t <= t1; ++t, xs += stride) orow[t] += w * *xs;
                    }
                }
            }
        }
    }
    return out;
}

Tensor3 Conv1d::backward(const Tensor3& grad_out) {
    const Tensor3& x = cached_x_;
    const int out_len = grad_out.length;
    const int L = x.length;

    if (has_bias) {
#pragma omp parallel for schedule(static)
        for (int o = 0; o < out_channels; ++o) {
            double acc = 0.0;
            for (int b = 0; b < x.batch; ++b) {
                const double* grow = grad_out.row(b, o);
                for (int t = 0; t < out_len; ++t) acc += grow[t];
            }
            grad_bias[o] += acc;
        }
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < out_channels; ++o) {
        for (int c = 0; c < in_channels; ++c) {
            double* gw = grad_weight.data() + (static_cast<size_t>(o) * in_channels + c) * kernel;
            for (int j = 0; j < kernel; ++j) {
                int t0 = 0;
                if (pad_left - j > 0) t0 = (pad_left - j + stride - 1) / stride;
                int t1 = (L - 1 + pad_left - j) / stride;
                if (t1 > out_len - 1) t1 = out_len - 1;
                double acc = 0.0;
                for (int b = 0; b < x.batch; ++b) {
                    const double* grow = grad_out.row(b, o);
                    const double* xs = x.row(b, c) + (static_cast<long>(t0) * stride + j - pad_left);
                    if (stride == 1) {
                        for (int t = t0; t <= t1; ++t, ++xs) acc += grow[t] * *xs;
                    } else {
                        for (int t = t0; t <= t1; ++t, xs += stride) acc += grow[t] * *xs;
                    }
                }
                gw[j] += acc;
            }
        }
    }

    Tensor3 grad_x(x.batch, in_channels, L);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.batch; ++b) {
        for (int c = 0; c < in_channels; ++c) {
            double* gx = grad_x.row(b, c);
            for (int o = 0; o < out_channels; ++o) {
                const double* grow = grad_out.row(b, o);
                const double* wrow = weight.data() + (static_cast<size_t>(o) * in_channels + c) * kernel;
                for (int j = 0; j < kernel; ++j) {
                    const double w = wrow[j];
                    if (w == 0.0) continue;
                    int t0 = 0;
                    if (pad_left - j > 0) t0 = (pad_left - j + stride - 1) / stride;
                    int t1 = (L - 1 + pad_left - j) / stride;
                    if (t1 > out_len - 1) t1 = out_len - 1;
                    double* xs = gx + (static_cast<long>(t0) * stride + j - pad_left);
                    if (stride == 1) {
                        for (int t = t0; t <= t1; ++t, ++xs) *xs += w * grow[t];
                    } else {
                        for (int t = t0; t <= t1; ++t, xs += stride) *xs += w * grow[t];
                    }
                }
            }
        }
    }
    return grad_x;
}

void Conv1d::collect(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + "weight", {out_channels, in_channels, kernel}, &weight, &grad_weight, true});
    if (has_bias) reg.push_back({prefix + "bias", {out_channels}, &bias, &grad_bias, true});
}

// ---------------------------------------------------------------------------
// BatchNorm1d
// ---------------------------------------------------------------------------

BatchNorm1d::BatchNorm1d(int channels, double momentum, double epsilon)
    : channels(channels), momentum(momentum), epsilon(epsilon) {
    scale.assign(channels, 1.0);
    shift.assign(channels, 0.0);
    grad_scale.assign(channels, 0.0);
    grad_shift.assign(channels, 0.0);
    running_mean.assign(channels, 0.0);
    running_var.assign(channels, 1.0);
}

Tensor3 BatchNorm1d::forward(const Tensor3& x) {
    if (x.channels != channels)
        throw std::runtime_error("batch_norm: expected " + std::to_string(channels) +
                                 " channels, got " + std::to_string(x.channels));
    Tensor3 out(x.batch, channels, x.length);
    cached_norm_ = Tensor3(x.batch, channels, x.length);
    cached_inv_std_.assign(channels, 0.0);
    const double n = static_cast<double>(x.batch) * x.length;

#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        double mean, var;
        if (mode_ == Mode::Train) {
            double sum = 0.0;
            for (int b = 0; b < x.batch; ++b) {
                const double* row = x.row(b, c);
                for (int t = 0; t < x.length; ++t) sum += row[t];
            }
            mean = sum / n;
            double sq = 0.0;
            for (int b = 0; b < x.batch; ++b) {
                const double* row = x.row(b, c);
                for (int t = 0; t < x.length; ++t) {
                    double d = row[t] - mean;
                    sq += d * d;
                }
            }
            var = sq / n;  // population variance
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + epsilon);
        cached_inv_std_[c] = inv_std;
        const double g = scale[c], s = shift[c];
        for (int b = 0; b < x.batch; ++b) {
            const double* row = x.row(b, c);
            double* nrow = cached_norm_.row(b, c);
            double* orow = out.row(b, c);
            for (int t = 0; t < x.length; ++t) {
                double z = (row[t] - mean) * inv_std;
                nrow[t] = z;
                orow[t] = g * z + s;
            }
        }
    }
    return out;
}

Tensor3 BatchNorm1d::backward(const Tensor3& grad_out) {
    const Tensor3& norm = cached_norm_;
    Tensor3 grad_x(grad_out.batch, channels, grad_out.length);
    const double n = static_cast<double>(grad_out.batch) * grad_out.length;

#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_gz = 0.0;
        for (int b = 0; b < grad_out.batch; ++b) {
            const double* grow = grad_out.row(b, c);
            const double* nrow = norm.row(b, c);
            for (int t = 0; t < grad_out.length; ++t) {
                sum_g += grow[t];
                sum_gz += grow[t] * nrow[t];
            }
        }
        grad_shift[c] += sum_g;
        grad_scale[c] += sum_gz;
        const double k = scale[c] * cached_inv_std_[c];
        if (mode_ == Mode::Train) {
            const double mg = sum_g / n, mgz = sum_gz / n;
            for (int b = 0; b < grad_out.batch; ++b) {
                const double* grow = grad_out.row(b, c);
                const double* nrow = norm.row(b, c);
                double* gx = grad_x.row(b, c);
                for (int t = 0; t < grad_out.length; ++t)
                    gx[t] = k * (grow[t] - mg - nrow[t] * mgz);
            }
        } else {
            for (int b = 0; b < grad_out.batch; ++b) {
                const double* grow = grad_out.row(b, c);
                double* gx = grad_x.row(b, c);
                for (int t = 0; t < grad_out.length; ++t) gx[t] = k * grow[t];
            }
        }
    }
    return grad_x;
}

void BatchNorm1d::collect(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + "scale", {channels}, &scale, &grad_scale, true});
    reg.push_back({prefix + "shift", {channels}, &shift, &grad_shift, true});
    reg.push_back({prefix + "running_mean", {channels}, &running_mean, nullptr, false});
    reg.push_back({prefix + "running_var", {channels}, &running_var, nullptr, false});
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor3 ReLU::forward(const Tensor3& x) {
    cached_x_ = x;
    Tensor3 out = x;
    for (double& v : out.data)
        if (v < 0.0) v = 0.0;
    return out;
}

Tensor3 ReLU::backward(const Tensor3& grad_out) {
    Tensor3 grad_x = grad_out;
    for (size_t i = 0; i < grad_x.data.size(); ++i)
        if (cached_x_.data[i] <= 0.0) grad_x.data[i] = 0.0;
    return grad_x;
}

// ---------------------------------------------------------------------------
// MaxPool1d
// ---------------------------------------------------------------------------

MaxPool1d::MaxPool1d(int kernel, int stride, int pad) : kernel(kernel), stride(stride), pad(pad) {
    if (kernel < 1 || stride < 1 || pad < 0 || pad >= kernel)
        throw std::invalid_argument("max_pool: bad geometry (need 0 <= pad < kernel)");
}

int MaxPool1d::out_length(int in_length) const {
    return (in_length + 2 * pad - kernel) / stride + 1;
}

Tensor3 MaxPool1d::forward(const Tensor3& x) {
    const int out_len = out_length(x.length);
    if (out_len < 1)
        throw std::runtime_error("max_pool: output length < 1 for input length " +
                                 std::to_string(x.length));
    in_length_ = x.length;
    batch_ = x.batch;
    channels_ = x.channels;
    out_len_ = out_len;
    argmax_.assign(static_cast<size_t>(x.batch) * x.channels * out_len, -1);
    Tensor3 out(x.batch, x.channels, out_len);

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < x.batch; ++b) {
        for (int c = 0; c < x.channels; ++c) {
            const double* row = x.row(b, c);
            double* orow = out.row(b, c);
            int* arow = argmax_.data() + (static_cast<size_t>(b) * channels_ + c) * out_len_;
            for (int t = 0; t < out_len; ++t) {
                double best = -std::numeric_limits<double>::infinity();
                int best_u = -1;
                const int u0 = t * stride - pad;
                for (int j = 0; j < kernel; ++j) {
                    const int u = u0 + j;
                    if (u < 0 || u >= x.length) continue;  // padding never wins
                    if (row[u] > best) {                   // first index wins ties
                        best = row[u];
                        best_u = u;
                    }
                }
                orow[t] = best;
                arow[t] = best_u;
            }
        }
    }
    return out;
}

Tensor3 MaxPool1d::backward(const Tensor3& grad_out) {
    Tensor3 grad_x(batch_, channels_, in_length_);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < batch_; ++b) {
        for (int c = 0; c < channels_; ++c) {
            const double* grow = grad_out.row(b, c);
            double* gx = grad_x.row(b, c);
            const int* arow = argmax_.data() + (static_cast<size_t>(b) * channels_ + c) * out_len_;
            for (int t = 0; t < out_len_; ++t)
                if (arow[t] >= 0) gx[arow[t]] += grow[t];
        }
    }
    return grad_x;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool, Linear
// ---------------------------------------------------------------------------

Matrix GlobalAvgPool::forward(const Tensor3& x) {
    batch_ = x.batch;
    channels_ = x.channels;
    length_ = x.length;
    Matrix out(x.batch, x.channels);
    for (int b = 0; b < x.batch; ++b)
        for (int c = 0; c < x.channels; ++c) {
            const double* row = x.row(b, c);
            double sum = 0.0;
            for (int t = 0; t < x.length; ++t) sum += row[t];
            out.at(b, c) = sum / x.length;
        }
    return out;
}

Tensor3 GlobalAvgPool::backward(const Matrix& grad_out) {
    Tensor3 grad_x(batch_, channels_, length_);
    for (int b = 0; b < batch_; ++b)
        for (int c = 0; c < channels_; ++c) {
            const double g = grad_out.at(b, c) / length_;
            double* row = grad_x.row(b, c);
            for (int t = 0; t < length_; ++t) row[t] = g;
        }
    return grad_x;
}

Linear::Linear(int in_features, int out_features, std::string layer_name)
    : in_features(in_features), out_features(out_features), name(std::move(layer_name)) {
    weight.assign(static_cast<size_t>(out_features) * in_features, 0.0);
    grad_weight.assign(weight.size(), 0.0);
    bias.assign(out_features, 0.0);
    grad_bias.assign(out_features, 0.0);
}

Matrix Linear::forward(const Matrix& v) {
    if (v.cols != in_features)
        throw std::runtime_error(name + ": expected " + std::to_string(in_features) +
                                 " features, got " + std::to_string(v.cols));
    cached_v_ = v;
    Matrix out(v.rows, out_features);
    for (int r = 0; r < v.rows; ++r)
        for (int m = 0; m < out_features; ++m) {
            const double* wrow = weight.data() + static_cast<size_t>(m) * in_features;
            double acc = bias[m];
            for (int c = 0; c < in_features; ++c) acc += wrow[c] * v.at(r, c);
            out.at(r, m) = acc;
        }
    return out;
}

Matrix Linear::backward(const Matrix& grad_out) {
    const Matrix& v = cached_v_;
    for (int m = 0; m < out_features; ++m) {
        double* gw = grad_weight.data() + static_cast<size_t>(m) * in_features;
        double gb = 0.0;
        for (int r = 0; r < v.rows; ++r) {
            const double g = grad_out.at(r, m);
            gb += g;
            for (int c = 0; c < in_features; ++c) gw[c] += g * v.at(r, c);
        }
        grad_bias[m] += gb;
    }
    Matrix grad_v(v.rows, in_features);
    for (int r = 0; r < v.rows; ++r)
        for (int m = 0; m < out_features; ++m) {
            const double g = grad_out.at(r, m);
            const double* wrow = weight.data() + static_cast<size_t>(m) * in_features;
            for (int c = 0; c < in_features; ++c) grad_v.at(r, c) += g * wrow[c];
        }
    return grad_v;
}

void Linear::collect(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + "weight", {out_features, in_features}, &weight, &grad_weight, true});
    reg.push_back({prefix + "bias", {out_features}, &bias, &grad_bias, true});
}

void zero_grads(ParamRegistry& reg) {
    for (ParamRef& p : reg)
        if (p.grad) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

}  // namespace ecoscale
