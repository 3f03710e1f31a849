#include "ecoscale/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ecoscale {

long long conv_param_count(int c_in, int c_out, int kernel, bool bias) {
    long long n = static_cast<long long>(c_out) * c_in * kernel;
    if (bias) n += c_out;
    return n;
}

long long linear_param_count(int c_in, int c_out) {
    return static_cast<long long>(c_in) * c_out + c_out;
}

long long conv_mac_count(int c_in, int c_out, int kernel, int out_length) {
    return static_cast<long long>(out_length) * c_out * c_in * kernel;
}

namespace {

// Mirrors the layer geometry without instantiating layers.
int conv_out_len(int in_len, int kernel, int stride, int pad_total) {
    return (in_len + pad_total - kernel) / stride + 1;
}

struct Walker {
    ComplexityReport report;

    void add(ComplexityRow row) {
        report.totals.params += row.params;
        report.totals.buffers += row.buffers;
        report.totals.macs += row.macs;
        report.totals.element_ops += row.element_ops;
        report.rows.push_back(std::move(row));
    }

    static void add_bn(ComplexityRow& row, int channels, int length) {
        row.params += 2LL * channels;
        row.buffers += 2LL * channels;
        row.element_ops += static_cast<long long>(channels) * length;
    }
};

}  // namespace

ComplexityReport analyze_model(const ModelSpec& spec, int input_length) {
    spec.validate();
    if (input_length < 1) throw std::invalid_argument("analysis: input_length must be >= 1");

    Walker w;
    w.report.input_length = input_length;

    // Kernel plans exactly as the builder derives them.
    KernelPlan plan;
    if (spec.variant != Variant::BackboneOnly) {
        std::vector<int> factors;
        int d = 1;
        for (const StageSpec& st : spec.stages) {
            d *= st.stride;
            factors.push_back(d);
        }
        plan = stage_plan(spec.initial_cover, factors, spec.strict_coverage);
    }

    int ch = spec.leads;
    int len = input_length;

    {  // stem: conv(k, stride, same-style pads) -> BN -> ReLU -> pool
        ComplexityRow row{"stem"};
        const int conv_len = conv_out_len(len, spec.stem.kernel, spec.stem.stride,
                                          (spec.stem.kernel - 1) / 2 + spec.stem.kernel / 2);
        row.params += conv_param_count(ch, spec.stem.out_channels, spec.stem.kernel, false);
        row.macs += conv_mac_count(ch, spec.stem.out_channels, spec.stem.kernel, conv_len);
        Walker::add_bn(row, spec.stem.out_channels, conv_len);
        row.element_ops += static_cast<long long>(spec.stem.out_channels) * conv_len;  // ReLU
        const int pool_len = conv_out_len(conv_len, spec.stem.pool_kernel, spec.stem.pool_stride,
                                          2 * spec.stem.pool_pad);
        row.element_ops += static_cast<long long>(spec.stem.out_channels) * pool_len *
                           spec.stem.pool_kernel;  // pool compares
        ch = spec.stem.out_channels;
        len = pool_len;
        w.add(row);
    }

    for (size_t s = 0; s < spec.stages.size(); ++s) {
        const StageSpec& st = spec.stages[s];
        for (int b = 0; b < st.blocks; ++b) {
            const int stride = (b == 0) ? st.stride : 1;
            ComplexityRow row{"stage" + std::to_string(s + 1) + ".res" + std::to_string(b)};
            const int out_len = conv_out_len(len, 3, stride, 2);
            row.params += conv_param_count(ch, st.channels, 3, false);
            row.macs += conv_mac_count(ch, st.channels, 3, out_len);
            Walker::add_bn(row, st.channels, out_len);
            row.element_ops += static_cast<long long>(st.channels) * out_len;  // ReLU
            row.params += conv_param_count(st.channels, st.channels, 3, false);
            row.macs += conv_mac_count(st.channels, st.channels, 3, out_len);
            Walker::add_bn(row, st.channels, out_len);
            if (stride != 1 || ch != st.channels) {
                row.params += conv_param_count(ch, st.channels, 1, false);
                row.macs += conv_mac_count(ch, st.channels, 1, out_len);
                Walker::add_bn(row, st.channels, out_len);
            }
            // skip add + output ReLU
            row.element_ops += 2LL * st.channels * out_len;
            ch = st.channels;
            len = out_len;
            w.add(row);
        }
        if (spec.variant != Variant::BackboneOnly) {
            ComplexityRow row{"stage" + std::to_string(s + 1) + ".eco"};
            const KernelSet& ks = plan.stages[s].kernel_set;
            const int branch_ch = (spec.variant == Variant::Full) ? ch / 2 : ch;
            if (spec.variant == Variant::Full) {
                row.params += conv_param_count(ch, branch_ch, 1, false);
                row.macs += conv_mac_count(ch, branch_ch, 1, len);
                Walker::add_bn(row, branch_ch, len);
                row.element_ops += static_cast<long long>(branch_ch) * len;  // ReLU
            }
            for (int k : ks.kernels) {
                row.params += conv_param_count(branch_ch, branch_ch, k, false);
                row.macs += conv_mac_count(branch_ch, branch_ch, k, len);
                Walker::add_bn(row, branch_ch, len);
            }
            if (spec.variant == Variant::Full) {
                const int cat = ks.count() * branch_ch;
                row.element_ops += static_cast<long long>(cat) * len;  // concat ReLU
                row.params += conv_param_count(cat, ch, 1, false);
                row.macs += conv_mac_count(cat, ch, 1, len);
                Walker::add_bn(row, ch, len);
            } else {
                // branch summation
                row.element_ops += static_cast<long long>(ks.count() - 1) * ch * len;
            }
            row.element_ops += 2LL * ch * len;  // skip add + output ReLU
            w.add(row);
        }
    }

    {  // classifier: global average pool + fully connected
        ComplexityRow row{"fc"};
        row.element_ops += static_cast<long long>(ch) * len;  // pooling sum
        row.params += linear_param_count(ch, spec.num_classes);
        row.macs += static_cast<long long>(ch) * spec.num_classes;
        w.add(row);
    }

    w.report.totals.name = "total";
    return w.report;
}

ComplexityReport count_params(const ModelSpec& spec) {
    return analyze_model(spec, spec.input_length);
}

ComplexityReport count_flops(const ModelSpec& spec, int input_length) {
    return analyze_model(spec, input_length);
}

// ---------------------------------------------------------------------------
// Stage ratios
// ---------------------------------------------------------------------------

namespace {

std::vector<int> stage_kernels(int p_k) {
    std::vector<int> ks{1, 2};
    for (int p : primes_up_to(p_k))
        if (p > 2) ks.push_back(p);
    return ks;
}

}  // namespace

double first_stage_ratio_exact(int p_k, int channels) {
    if (channels % 2 != 0) throw std::invalid_argument("ratio: channel count must be even");
    const std::vector<int> ks = stage_kernels(p_k);
    long long sum_k = 0;
    for (int k : ks) sum_k += k;
    const double c = static_cast<double>(channels);
    const double eco = c * c / 2.0 + (c * c / 4.0) * static_cast<double>(sum_k);
    const double os = c * c * static_cast<double>(sum_k);
    return eco / os;
}

double ratio_closed_form(int p_k) {
    const double p = static_cast<double>(p_k);
    return (2.0 * std::log(p) + p * p) / (4.0 * p * p);
}

StageComparison compare_oscnn(int p_k, int channels, int input_length, bool include_restore) {
    if (channels % 2 != 0) throw std::invalid_argument("ratio: channel count must be even");
    const std::vector<int> ks = stage_kernels(p_k);
    StageComparison cmp;
    cmp.oscnn.name = "oscnn_stage_p" + std::to_string(p_k);
    cmp.ecoscale.name = "ecoscale_stage_p" + std::to_string(p_k);
    const int half = channels / 2;
    for (int k : ks) {
        cmp.oscnn.params += conv_param_count(channels, channels, k, false);
        cmp.oscnn.macs += conv_mac_count(channels, channels, k, input_length);
        cmp.ecoscale.params += conv_param_count(half, half, k, false);
        cmp.ecoscale.macs += conv_mac_count(half, half, k, input_length);
    }
    cmp.ecoscale.params += conv_param_count(channels, half, 1, false);
    cmp.ecoscale.macs += conv_mac_count(channels, half, 1, input_length);
    if (include_restore) {
        const int cat = static_cast<int>(ks.size()) * half;
        cmp.ecoscale.params += conv_param_count(cat, channels, 1, false);
        cmp.ecoscale.macs += conv_mac_count(cat, channels, 1, input_length);
    }
    cmp.param_ratio = static_cast<double>(cmp.ecoscale.params) / static_cast<double>(cmp.oscnn.params);
    return cmp;
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

std::string format_complexity_table(const ComplexityReport& report) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %12s %10s %14s %14s %14s\n", "layer", "params",
                  "buffers", "macs", "flops", "elem_ops");
    os << line;
    auto emit = [&](const ComplexityRow& r) {
        std::snprintf(line, sizeof(line), "%-16s %12lld %10lld %14lld %14lld %14lld\n",
                      r.name.c_str(), r.params, r.buffers, r.macs, 2 * r.macs, r.element_ops);
        os << line;
    };
    for (const ComplexityRow& r : report.rows) emit(r);
    emit(report.totals);
    std::snprintf(line, sizeof(line),
                  "summary: params %.3fM (+%.3fM buffers), MACs %.3fG, FLOPs %.3fG per record at "
                  "length %d\n",
                  report.totals.params / 1e6, report.totals.buffers / 1e6, report.totals.macs / 1e9,
                  report.flops() / 1e9, report.input_length);
    os << line;
    return os.str();
}

std::string complexity_csv(const ComplexityReport& report) {
    std::ostringstream os;
    os << "layer,params,buffers,macs,flops,element_ops\n";
    auto emit = [&](const ComplexityRow& r) {
        os << r.name << "," << r.params << "," << r.buffers << "," << r.macs << "," << 2 * r.macs
           << "," << r.element_ops << "\n";
    };
    for (const ComplexityRow& r : report.rows) emit(r);
    emit(report.totals);
    return os.str();
}

}  // namespace ecoscale
