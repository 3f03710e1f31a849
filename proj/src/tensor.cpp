#include "ecoscale/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ecoscale {

std::string Tensor3::shape_str() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," + std::to_string(length) + ")";
}

Tensor3 concat_channels(const std::vector<const Tensor3*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const Tensor3& first = *parts.front();
    int total_c = 0;
    for (const Tensor3* p : parts) {
        if (p->batch != first.batch || p->length != first.length) {
            throw std::runtime_error("concat_channels: shape mismatch, expected batch/length " +
                                     first.shape_str() + " got " + p->shape_str());
        }
        total_c += p->channels;
    }
    Tensor3 out(first.batch, total_c, first.length);
    for (int b = 0; b < out.batch; ++b) {
        int c_off = 0;
        for (const Tensor3* p : parts) {
            for (int c = 0; c < p->channels; ++c) {
                std::memcpy(out.row(b, c_off + c), p->row(b, c), sizeof(double) * first.length);
            }
            c_off += p->channels;
        }
    }
    return out;
}

Tensor3 slice_channels(const Tensor3& x, int c0, int c1) {
    if (c0 < 0 || c1 > x.channels || c0 >= c1) {
        throw std::runtime_error("slice_channels: bad range [" + std::to_string(c0) + "," +
                                 std::to_string(c1) + ") for " + x.shape_str());
    }
    Tensor3 out(x.batch, c1 - c0, x.length);
    for (int b = 0; b < x.batch; ++b)
        for (int c = c0; c < c1; ++c)
            std::memcpy(out.row(b, c - c0), x.row(b, c), sizeof(double) * x.length);
    return out;
}

Matrix sigmoid(const Matrix& v) {
    Matrix out(v.rows, v.cols);
    for (size_t i = 0; i < v.size(); ++i) {
        double z = v.data[i];
        // split by sign so exp never overflows
        out.data[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
}

bool all_finite(const Tensor3& x) {
    for (double v : x.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Matrix& x) {
    for (double v : x.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace ecoscale
