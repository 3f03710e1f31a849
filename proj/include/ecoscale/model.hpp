#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ecoscale/kernel_plan.hpp"
#include "ecoscale/layers.hpp"

namespace ecoscale {

enum class Variant { Full, NoBottleneck, BackboneOnly };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct StemSpec {
    int out_channels = 64;
    int kernel = 7;
    int stride = 2;
    int pool_kernel = 3;
    int pool_stride = 2;
    int pool_pad = 1;
};

struct StageSpec {
    int blocks = 1;    // residual blocks before the stage's omni-scale block
    int channels = 64;
    int stride = 1;    // applied by the stage's first residual block
};

struct ModelSpec {
    int leads = 12;
    int input_length = 4096;
    int num_classes = 6;
    StemSpec stem;
    std::vector<StageSpec> stages;
    Variant variant = Variant::Full;
    int initial_cover = 64;        // cover length at the first stage's resolution
    bool strict_coverage = false;  // escalate primes until the Goldbach-style
                                   // coverage audit reports no gaps
    void validate() const;         // throws std::invalid_argument
};

// ---------------------------------------------------------------------------
// Composite blocks
// ---------------------------------------------------------------------------

/// Entry block: conv(k, stride) -> BN -> ReLU -> max pool.
class Stem : public Block {
  public:
    Stem(int in_channels, const StemSpec& s);

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    void collect(ParamRegistry& reg, const std::string& prefix) override;
    void set_mode(Mode m) override;

    int out_length(int in_length) const;
    int out_channels() const { return conv.out_channels; }

    Conv1d conv;
    BatchNorm1d bn;
    ReLU relu;
    MaxPool1d pool;
};

/// conv(k=3)-BN-ReLU-conv(k=3)-BN plus skip, ReLU after the add. A strided or
/// channel-changing block projects the skip through a strided 1x1 conv + BN.
class ResidualBlock : public Block {
  public:
    ResidualBlock(int in_channels, int out_channels, int stride, std::string name);

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    void collect(ParamRegistry& reg, const std::string& prefix) override;
    void set_mode(Mode m) override;

    int out_length(int in_length) const;
    int out_channels() const { return conv1.out_channels; }

    std::string name;
    Conv1d conv1, conv2;
    BatchNorm1d bn1, bn2;
    ReLU relu1, relu_out;
    std::unique_ptr<Conv1d> proj;
    std::unique_ptr<BatchNorm1d> proj_bn;
};

/// Omni-scale residual block. The full variant bottlenecks to C/2, runs one
/// same-padded conv branch per kernel, concatenates, and restores to C through
/// a second 1x1; the no-bottleneck variant runs full-width branches and fuses
/// them by summation (no 1x1 convs). Both keep the (C, L) shape and wrap an
/// additive skip with ReLU after the add.
class EcoScaleBlock : public Block {
  public:
    EcoScaleBlock(int channels, KernelSet kernel_set, Variant variant, std::string name);

    Tensor3 forward(const Tensor3& x) override;
    Tensor3 backward(const Tensor3& grad_out) override;
    void collect(ParamRegistry& reg, const std::string& prefix) override;
    void set_mode(Mode m) override;

    int out_length(int in_length) const { return in_length; }
    int out_channels() const { return channels; }

    std::string name;
    int channels;
    KernelSet kernel_set;
    Variant variant;
    std::unique_ptr<Conv1d> reduce, restore;
    std::unique_ptr<BatchNorm1d> reduce_bn, restore_bn;
    ReLU reduce_relu, concat_relu, relu_out;
    std::vector<std::unique_ptr<Conv1d>> branches;
    std::vector<std::unique_ptr<BatchNorm1d>> branch_bns;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct LayerShape {
    std::string name;
    int channels = 0;
    int length = 0;
};

class Model {
  public:
    ModelSpec spec;
    KernelPlan plan;  // stage plans; empty for backbone_only
    std::vector<std::unique_ptr<Block>> trunk;
    GlobalAvgPool gap;
    std::unique_ptr<Linear> fc;
    ParamRegistry params;
    std::vector<LayerShape> shapes;  // predicted (C, L) after each trunk block

    Matrix forward(const Tensor3& x);
    /// Gradient of the scalar loss w.r.t. the input, accumulating parameter
    /// gradients along the way. Must follow the matching forward().
    Tensor3 backward(const Matrix& grad_logits);
    /// Per-record label bit-sets: bit m set when sigmoid(logit_m) >= threshold.
    std::vector<uint32_t> predict(const Tensor3& x, double threshold = 0.5);

    void set_mode(Mode m);
    Mode mode() const { return mode_; }

    /// Observed (C, L) after each trunk block on a real forward pass, for
    /// comparison against the statically predicted `shapes`.
    std::vector<LayerShape> probe_shapes(const Tensor3& x);

  private:
    Mode mode_ = Mode::Train;
};

Model build_model(const ModelSpec& spec);

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) on every rank>=2 parameter, in
/// registry order; rank-1 parameters keep their constructed values.
void init_params(Model& model, uint64_t seed);

/// Flat binary weight blob: magic "ECOW", u32 version, u64 count, then per
/// array (u16 name length, name bytes, u8 rank, u32 dims..., f64 data, all
/// little-endian). Buffers (running statistics) are included.
void save_weights(const Model& model, const std::string& path);
/// Strict load: every stored array must match a registry entry by name and
/// shape, and every registry entry must be present.
void load_weights(Model& model, const std::string& path);

}  // namespace ecoscale
