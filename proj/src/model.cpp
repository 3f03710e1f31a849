#include "ecoscale/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "ecoscale/binio.hpp"
#include "ecoscale/rng.hpp"

namespace ecoscale {

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::NoBottleneck: return "no_bottleneck";
        case Variant::BackboneOnly: return "backbone_only";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "full") return Variant::Full;
    if (s == "no_bottleneck") return Variant::NoBottleneck;
    if (s == "backbone_only") return Variant::BackboneOnly;
    throw std::invalid_argument("unknown variant '" + s +
                                "' (expected full, no_bottleneck, or backbone_only)");
}

void ModelSpec::validate() const {
    if (leads < 1) throw std::invalid_argument("model: leads must be >= 1");
    if (input_length < 1) throw std::invalid_argument("model: input_length must be >= 1");
    if (num_classes < 1 || num_classes > 32)
        throw std::invalid_argument("model: num_classes must be in [1, 32] (labels are a u32 bit-mask)");
    if (stem.out_channels < 1 || stem.kernel < 1 || stem.stride < 1)
        throw std::invalid_argument("model: bad stem geometry");
    if (stem.pool_kernel < 1 || stem.pool_stride < 1 || stem.pool_pad < 0 ||
        stem.pool_pad >= stem.pool_kernel)
        throw std::invalid_argument("model: bad stem pool geometry");
    if (stages.empty()) throw std::invalid_argument("model: at least one stage required");
    for (size_t i = 0; i < stages.size(); ++i) {
        const StageSpec& st = stages[i];
        if (st.blocks < 1 || st.channels < 1 || st.stride < 1)
            throw std::invalid_argument("model: bad stage " + std::to_string(i + 1) + " geometry");
        if (i > 0 && st.channels < stages[i - 1].channels)
            throw std::invalid_argument("model: stage channels must be non-decreasing");
    }
    if (stages[0].stride != 1)
        throw std::invalid_argument("model: first stage stride must be 1 (downsampling starts at stage 2)");
    if (initial_cover < 1) throw std::invalid_argument("model: initial_cover must be >= 1");
}

// ---------------------------------------------------------------------------
// Stem
// ---------------------------------------------------------------------------

Stem::Stem(int in_channels, const StemSpec& s)
    : conv(in_channels, s.out_channels, s.kernel, s.stride, (s.kernel - 1) / 2, s.kernel / 2,
           false, "stem.conv"),
      bn(s.out_channels),
      pool(s.pool_kernel, s.pool_stride, s.pool_pad) {}

int Stem::out_length(int in_length) const {
    return pool.out_length(conv.out_length(in_length));
}

Tensor3 Stem::forward(const Tensor3& x) {
    return pool.forward(relu.forward(bn.forward(conv.forward(x))));
}

Tensor3 Stem::backward(const Tensor3& grad_out) {
    return conv.backward(bn.backward(relu.backward(pool.backward(grad_out))));
}

void Stem::collect(ParamRegistry& reg, const std::string& prefix) {
    conv.collect(reg, prefix + "conv.");
    bn.collect(reg, prefix + "bn.");
}

void Stem::set_mode(Mode m) { bn.set_mode(m); }

// ---------------------------------------------------------------------------
// ResidualBlock
// ---------------------------------------------------------------------------

ResidualBlock::ResidualBlock(int in_channels, int out_channels, int stride, std::string block_name)
    : name(std::move(block_name)),
      conv1(in_channels, out_channels, 3, stride, 1, 1, false, name + ".conv1"),
      conv2(out_channels, out_channels, 3, 1, 1, 1, false, name + ".conv2"),
      bn1(out_channels),
      bn2(out_channels) {
    if (stride != 1 || in_channels != out_channels) {
        proj = std::make_unique<Conv1d>(in_channels, out_channels, 1, stride, 0, 0, false,
                                        name + ".proj");
        proj_bn = std::make_unique<BatchNorm1d>(out_channels);
    }
}

int ResidualBlock::out_length(int in_length) const { return conv1.out_length(in_length); }

Tensor3 ResidualBlock::forward(const Tensor3& x) {
    Tensor3 h = conv2.forward(relu1.forward(bn1.forward(conv1.forward(x))));
    h = bn2.forward(h);
    const Tensor3 skip = proj ? proj_bn->forward(proj->forward(x)) : x;
    if (!h.same_shape(skip))
        throw std::runtime_error(name + ": skip shape " + skip.shape_str() +
                                 " does not match main path " + h.shape_str());
    for (size_t i = 0; i < h.data.size(); ++i) h.data[i] += skip.data[i];
    return relu_out.forward(h);
}

Tensor3 ResidualBlock::backward(const Tensor3& grad_out) {
    const Tensor3 gsum = relu_out.backward(grad_out);
    Tensor3 gx = conv1.backward(bn1.backward(relu1.backward(conv2.backward(bn2.backward(gsum)))));
    if (proj) {
        const Tensor3 gskip = proj->backward(proj_bn->backward(gsum));
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gskip.data[i];
    } else {
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gsum.data[i];
    }
    return gx;
}

void ResidualBlock::collect(ParamRegistry& reg, const std::string& prefix) {
    conv1.collect(reg, prefix + "conv1.");
    bn1.collect(reg, prefix + "bn1.");
    conv2.collect(reg, prefix + "conv2.");
    bn2.collect(reg, prefix + "bn2.");
    if (proj) {
        proj->collect(reg, prefix + "proj.");
        proj_bn->collect(reg, prefix + "proj_bn.");
    }
}

void ResidualBlock::set_mode(Mode m) {
    bn1.set_mode(m);
    bn2.set_mode(m);
    if (proj_bn) proj_bn->set_mode(m);
}

// ---------------------------------------------------------------------------
// EcoScaleBlock
// ---------------------------------------------------------------------------

EcoScaleBlock::EcoScaleBlock(int channels_in, KernelSet ks, Variant var, std::string block_name)
    : name(std::move(block_name)), channels(channels_in), kernel_set(std::move(ks)), variant(var) {
    if (variant == Variant::BackboneOnly)
        throw std::invalid_argument(name + ": backbone_only builds no omni-scale blocks");
    if (channels % 2 != 0)
        throw std::invalid_argument(name + ": channel count " + std::to_string(channels) +
                                    " must be even");
    const int branch_in = (variant == Variant::Full) ? channels / 2 : channels;
    const int branch_out = branch_in;
    if (variant == Variant::Full) {
        reduce = std::make_unique<Conv1d>(channels, channels / 2, 1, 1, 0, 0, false,
                                          name + ".reduce");
        reduce_bn = std::make_unique<BatchNorm1d>(channels / 2);
        restore = std::make_unique<Conv1d>(kernel_set.count() * (channels / 2), channels, 1, 1, 0,
                                           0, false, name + ".restore");
        restore_bn = std::make_unique<BatchNorm1d>(channels);
    }
    for (int k : kernel_set.kernels) {
        branches.push_back(std::make_unique<Conv1d>(
            Conv1d::same(branch_in, branch_out, k, false, name + ".branch_k" + std::to_string(k))));
        branch_bns.push_back(std::make_unique<BatchNorm1d>(branch_out));
    }
}

Tensor3 EcoScaleBlock::forward(const Tensor3& x) {
    Tensor3 pre;  // value entering the skip add
    if (variant == Variant::Full) {
        const Tensor3 h = reduce_relu.forward(reduce_bn->forward(reduce->forward(x)));
        std::vector<Tensor3> ys;
        ys.reserve(branches.size());
        for (size_t i = 0; i < branches.size(); ++i)
            ys.push_back(branch_bns[i]->forward(branches[i]->forward(h)));
        std::vector<const Tensor3*> parts;
        parts.reserve(ys.size());
        for (const Tensor3& y : ys) parts.push_back(&y);
        const Tensor3 a = concat_relu.forward(concat_channels(parts));
        pre = restore_bn->forward(restore->forward(a));
    } else {
        for (size_t i = 0; i < branches.size(); ++i) {
            Tensor3 y = branch_bns[i]->forward(branches[i]->forward(x));
            if (i == 0) {
                pre = std::move(y);
            } else {
                for (size_t j = 0; j < pre.data.size(); ++j) pre.data[j] += y.data[j];
            }
        }
    }
    if (!pre.same_shape(x))
        throw std::runtime_error(name + ": expected shape-preserving block, got " +
                                 pre.shape_str() + " from " + x.shape_str());
    for (size_t i = 0; i < pre.data.size(); ++i) pre.data[i] += x.data[i];
    return relu_out.forward(pre);
}

Tensor3 EcoScaleBlock::backward(const Tensor3& grad_out) {
    const Tensor3 gsum = relu_out.backward(grad_out);
    Tensor3 gx = gsum;  // skip path
    if (variant == Variant::Full) {
        const Tensor3 ga = restore->backward(restore_bn->backward(gsum));
        const Tensor3 gcat = concat_relu.backward(ga);
        Tensor3 gh;
        const int half = channels / 2;
        for (size_t i = 0; i < branches.size(); ++i) {
            const Tensor3 gslice =
                slice_channels(gcat, static_cast<int>(i) * half, static_cast<int>(i + 1) * half);
            const Tensor3 gb = branches[i]->backward(branch_bns[i]->backward(gslice));
            if (i == 0) {
                gh = gb;
            } else {
                for (size_t j = 0; j < gh.data.size(); ++j) gh.data[j] += gb.data[j];
            }
        }
        const Tensor3 gmain =
            reduce->backward(reduce_bn->backward(reduce_relu.backward(gh)));
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gmain.data[i];
    } else {
        for (size_t i = 0; i < branches.size(); ++i) {
            const Tensor3 gb = branches[i]->backward(branch_bns[i]->backward(gsum));
            for (size_t j = 0; j < gx.data.size(); ++j) gx.data[j] += gb.data[j];
        }
    }
    return gx;
}

void EcoScaleBlock::collect(ParamRegistry& reg, const std::string& prefix) {
    if (variant == Variant::Full) {
        reduce->collect(reg, prefix + "reduce.");
        reduce_bn->collect(reg, prefix + "reduce_bn.");
    }
    for (size_t i = 0; i < branches.size(); ++i) {
        const std::string k = std::to_string(kernel_set.kernels[i]);
        branches[i]->collect(reg, prefix + "branch_k" + k + ".");
        branch_bns[i]->collect(reg, prefix + "branch_k" + k + "_bn.");
    }
    if (variant == Variant::Full) {
        restore->collect(reg, prefix + "restore.");
        restore_bn->collect(reg, prefix + "restore_bn.");
    }
}

void EcoScaleBlock::set_mode(Mode m) {
    if (reduce_bn) reduce_bn->set_mode(m);
    if (restore_bn) restore_bn->set_mode(m);
    for (auto& bn : branch_bns) bn->set_mode(m);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

namespace {

void check_length(const std::string& layer, int out_len, int in_len) {
    if (out_len < 1)
        throw std::runtime_error("build error at " + layer + ": output length " +
                                 std::to_string(out_len) + " from input length " +
                                 std::to_string(in_len));
}

}  // namespace

Model build_model(const ModelSpec& spec) {
    spec.validate();
    Model m;
    m.spec = spec;

    if (spec.variant != Variant::BackboneOnly) {
        std::vector<int> factors;
        int d = 1;
        for (const StageSpec& st : spec.stages) {
            d *= st.stride;
            factors.push_back(d);
        }
        m.plan = stage_plan(spec.initial_cover, factors, spec.strict_coverage);
    }

    int ch = spec.leads;
    int len = spec.input_length;

    auto stem = std::make_unique<Stem>(ch, spec.stem);
    check_length("stem.conv", stem->conv.out_length(len), len);
    check_length("stem.pool", stem->out_length(len), stem->conv.out_length(len));
    len = stem->out_length(len);
    ch = stem->out_channels();
    m.shapes.push_back({"stem", ch, len});
    m.trunk.push_back(std::move(stem));

    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const StageSpec& st = spec.stages[s];
        const std::string stage = "stage" + std::to_string(s + 1);
        for (int b = 0; b < st.blocks; ++b) {
            const int stride = (b == 0) ? st.stride : 1;
            const std::string bname = stage + ".res" + std::to_string(b);
            auto blk = std::make_unique<ResidualBlock>(ch, st.channels, stride, bname);
            const int out_len = blk->out_length(len);
            check_length(bname, out_len, len);
            len = out_len;
            ch = st.channels;
            m.shapes.push_back({bname, ch, len});
            m.trunk.push_back(std::move(blk));
        }
        if (spec.variant != Variant::BackboneOnly) {
            const std::string ename = stage + ".eco";
            auto eco = std::make_unique<EcoScaleBlock>(ch, m.plan.stages[s].kernel_set,
                                                       spec.variant, ename);
            m.shapes.push_back({ename, ch, len});
            m.trunk.push_back(std::move(eco));
        }
    }

    m.fc = std::make_unique<Linear>(ch, spec.num_classes, "fc");

    for (size_t i = 0; i < m.trunk.size(); ++i)
        m.trunk[i]->collect(m.params, m.shapes[i].name + ".");
    m.fc->collect(m.params, "fc.");
    return m;
}

Matrix Model::forward(const Tensor3& x) {
    if (x.channels != spec.leads || x.length != spec.input_length)
        throw std::runtime_error("shape error: model expects (" + std::to_string(spec.leads) +
                                 ", " + std::to_string(spec.input_length) + "), got (" +
                                 std::to_string(x.channels) + ", " + std::to_string(x.length) +
                                 ")");
    Tensor3 h = x;
    for (auto& blk : trunk) h = blk->forward(h);
    return fc->forward(gap.forward(h));
}

Tensor3 Model::backward(const Matrix& grad_logits) {
    Tensor3 g = gap.backward(fc->backward(grad_logits));
    for (size_t i = trunk.size(); i-- > 0;) g = trunk[i]->backward(g);
    return g;
}

std::vector<uint32_t> Model::predict(const Tensor3& x, double threshold) {
    const Matrix probs = sigmoid(forward(x));
    std::vector<uint32_t> masks(probs.rows, 0);
    for (int r = 0; r < probs.rows; ++r)
        for (int c = 0; c < probs.cols; ++c)
            if (probs.at(r, c) >= threshold) masks[r] |= (1u << c);
    return masks;
}

void Model::set_mode(Mode m) {
    mode_ = m;
    for (auto& blk : trunk) blk->set_mode(m);
}

std::vector<LayerShape> Model::probe_shapes(const Tensor3& x) {
    std::vector<LayerShape> observed;
    Tensor3 h = x;
    for (size_t i = 0; i < trunk.size(); ++i) {
        h = trunk[i]->forward(h);
        observed.push_back({shapes[i].name, h.channels, h.length});
    }
    return observed;
}

void init_params(Model& model, uint64_t seed) {
    Rng rng(seed);
    for (ParamRef& p : model.params) {
        if (!p.trainable || p.shape.size() < 2) continue;
        long fan_in = 1;
        for (size_t i = 1; i < p.shape.size(); ++i) fan_in *= p.shape[i];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : *p.value) v = (2.0 * rng.uniform() - 1.0) * bound;
    }
}

// ---------------------------------------------------------------------------
// Weight blob I/O
// ---------------------------------------------------------------------------

namespace {

constexpr uint32_t kWeightVersion = 1;

std::string shape_to_string(const std::vector<int>& dims) {
    std::string s;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s.empty() ? "scalar" : s;
}

}  // namespace

void save_weights(const Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write("ECOW", 4);
    binio::write_u32(os, kWeightVersion);
    binio::write_u64(os, model.params.size());
    for (const ParamRef& p : model.params) {
        if (p.name.size() > 0xffff) throw std::logic_error("parameter name too long: " + p.name);
        size_t expect = 1;
        for (int d : p.shape) expect *= static_cast<size_t>(d);
        if (expect != p.value->size())
            throw std::logic_error("parameter " + p.name + " shape/storage mismatch");
        binio::write_u16(os, static_cast<uint16_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const unsigned char rank = static_cast<unsigned char>(p.shape.size());
        binio::write_bytes(os, &rank, 1);
        for (int d : p.shape) binio::write_u32(os, static_cast<uint32_t>(d));
        for (double v : *p.value) binio::write_f64(os, v);
    }
    if (!os) throw std::runtime_error("write failure on " + path);
}

void load_weights(Model& model, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    const std::string what = "weight file " + path;

    char magic[4];
    binio::read_bytes(is, magic, 4, what);
    if (std::string(magic, 4) != "ECOW")
        throw std::runtime_error(what + ": bad magic (expected ECOW)");
    const uint32_t version = binio::read_u32(is, what);
    if (version != kWeightVersion)
        throw std::runtime_error(what + ": unsupported version " + std::to_string(version));
    const uint64_t count = binio::read_u64(is, what);

    std::unordered_map<std::string, ParamRef*> by_name;
    for (ParamRef& p : model.params) by_name[p.name] = &p;
    std::unordered_map<std::string, bool> seen;

    for (uint64_t i = 0; i < count; ++i) {
        const uint16_t name_len = binio::read_u16(is, what);
        std::string name(name_len, '\0');
        binio::read_bytes(is, name.data(), name_len, what);
        unsigned char rank_byte;
        binio::read_bytes(is, &rank_byte, 1, what);
        std::vector<int> dims(rank_byte);
        size_t total = 1;
        for (int d = 0; d < rank_byte; ++d) {
            dims[d] = static_cast<int>(binio::read_u32(is, what));
            total *= static_cast<size_t>(dims[d]);
        }
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error(what + ": unknown parameter '" + name + "'");
        ParamRef& p = *it->second;
        if (dims != p.shape)
            throw std::runtime_error(what + ": shape mismatch for '" + name + "' (file " +
                                     shape_to_string(dims) + ", model " + shape_to_string(p.shape) +
                                     ")");
        if (seen[name]) throw std::runtime_error(what + ": duplicate parameter '" + name + "'");
        seen[name] = true;
        for (size_t j = 0; j < total; ++j) (*p.value)[j] = binio::read_f64(is, what);
    }

    for (const ParamRef& p : model.params)
        if (!seen[p.name])
            throw std::runtime_error(what + ": missing parameter '" + p.name + "'");
    if (is.peek() != std::char_traits<char>::eof())
        throw std::runtime_error(what + ": trailing bytes after " + std::to_string(count) +
                                 " arrays");
}

}  // namespace ecoscale
