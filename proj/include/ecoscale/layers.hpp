#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ecoscale/tensor.hpp"

namespace ecoscale {

enum class Mode { Train, Infer };

/// Handle to one named parameter (or buffer) array plus its gradient.
struct ParamRef {
    std::string name;
    std::vector<int> shape;
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;   // null for non-trainable buffers
    bool trainable = true;
};

using ParamRegistry = std::vector<ParamRef>;

/// A differentiable signal-to-signal layer. backward() must be called right
/// after the forward() whose activations it consumes; it accumulates parameter
/// gradients and returns the gradient with respect to the input.
class Block {
public:
    virtual ~Block() = default;
    virtual Tensor3 forward(const Tensor3& x) = 0;
    virtual Tensor3 backward(const Tensor3& grad_out) = 0;
    virtual void collect(ParamRegistry&, const std::string&) {}
    virtual void set_mode(Mode) {}
};

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

class Conv1d : public Block {
public:
    Conv1d(int in_channels, int out_channels, int kernel, int stride, int pad_left, int pad_right,
           bool bias = true, std::string name = "conv");

    /// "Same" padding at stride 1: (k-1)/2 both sides for odd k,
    /// k/2-1 left and k/2 right for even k.
    static Conv1d same(int in_channels, int out_channels, int kernel, bool bias = true,
                       std::string name = "conv");

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    void collect(ParamRegistry& reg, const std::string& prefix) override;

    int out_length(int in_length) const;

    int in_channels, out_channels, kernel, stride, pad_left, pad_right;
    bool has_bias;
    std::string name;
    std::vector<double> weight, bias;          // weight [C_out][C_in][k]
    std::vector<double> grad_weight, grad_bias;

private:
    Tensor3 cached_x_;
};

class BatchNorm1d : public Block {
public:
    explicit BatchNorm1d(int channels, double momentum = 0.1, double epsilon = 1e-5);

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    void collect(ParamRegistry& reg, const std::string& prefix) override;
    void set_mode(Mode m) override { mode_ = m; }

    int channels;
    double momentum, epsilon;
    std::vector<double> scale, shift;
    std::vector<double> grad_scale, grad_shift;
    std::vector<double> running_mean, running_var;

private:
    Mode mode_ = Mode::Train;
    Tensor3 cached_norm_;                 // normalized pre-affine values
    std::vector<double> cached_inv_std_;  // per channel
};

class ReLU : public Block {
public:
    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;

private:
    Tensor3 cached_x_;
};

class MaxPool1d : public Block {
public:
    MaxPool1d(int kernel, int stride, int pad);

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;

    int out_length(int in_length) const;

    int kernel, stride, pad;

private:
    int in_length_ = 0;
    std::vector<int> argmax_;   // flat per output element, index into input time axis
    int batch_ = 0, channels_ = 0, out_len_ = 0;
};

/// Mean over the time axis: (B, C, L) -> (B, C).
class GlobalAvgPool {
public:
    Matrix forward(const Tensor3& x);
    Tensor3 backward(const Matrix& grad_out);

private:
    int batch_ = 0, channels_ = 0, length_ = 0;
};

/// Fully connected head: (B, C) -> (B, M).
class Linear {
public:
    Linear(int in_features, int out_features, std::string name = "fc");

    Matrix forward(const Matrix& v);
    Matrix backward(const Matrix& grad_out);
    void collect(ParamRegistry& reg, const std::string& prefix);

    int in_features, out_features;
    std::string name;
    std::vector<double> weight, bias;   // weight [out][in]
    std::vector<double> grad_weight, grad_bias;

private:
    Matrix cached_v_;
};

void zero_grads(ParamRegistry& reg);

}  // namespace ecoscale
