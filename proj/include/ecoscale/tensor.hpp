#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ecoscale {

/// Dense batch x channels x length array of doubles, row-major.
struct Tensor3 {
    int batch = 0;
    int channels = 0;
    int length = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int b, int c, int l) : batch(b), channels(c), length(l), data(static_cast<size_t>(b) * c * l, 0.0) {}

    double& at(int b, int c, int t) {
        return data[(static_cast<size_t>(b) * channels + c) * length + t];
    }
    double at(int b, int c, int t) const {
        return data[(static_cast<size_t>(b) * channels + c) * length + t];
    }
    double* row(int b, int c) { return data.data() + (static_cast<size_t>(b) * channels + c) * length; }
    const double* row(int b, int c) const { return data.data() + (static_cast<size_t>(b) * channels + c) * length; }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor3& o) const {
        return batch == o.batch && channels == o.channels && length == o.length;
    }
    std::string shape_str() const;
};

/// Dense rows x cols matrix of doubles, row-major. Used for pooled features and logits.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return data.size(); }
};

/// Concatenate along the channel axis. Inputs must agree on batch and length.
Tensor3 concat_channels(const std::vector<const Tensor3*>& parts);

/// Copy channels [c0, c1) into a new tensor.
Tensor3 slice_channels(const Tensor3& x, int c0, int c1);

/// Elementwise logistic function.
Matrix sigmoid(const Matrix& v);

bool all_finite(const Tensor3& x);
bool all_finite(const Matrix& x);

}  // namespace ecoscale
