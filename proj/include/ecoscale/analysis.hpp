#pragma once

#include <string>
#include <vector>

#include "ecoscale/model.hpp"

namespace ecoscale {

// Analytic complexity accounting. Everything here is computed from the spec
// alone by arithmetic walks — layer objects are never instantiated — so these
// counts serve as an independent oracle for the built model.

struct ComplexityRow {
    std::string name;
    long long params = 0;       // trainable parameter count
    long long buffers = 0;      // running statistics (non-trainable)
    long long macs = 0;         // multiply-accumulates per record
    long long element_ops = 0;  // BN/ReLU/pool/skip elementwise work per record
};

struct ComplexityReport {
    std::vector<ComplexityRow> rows;
    ComplexityRow totals;
    int input_length = 0;
    long long flops() const { return 2 * totals.macs; }
};

// Single-layer count helpers (exposed for direct verification).
long long conv_param_count(int c_in, int c_out, int kernel, bool bias);
long long linear_param_count(int c_in, int c_out);  // bias included
long long conv_mac_count(int c_in, int c_out, int kernel, int out_length);

/// Full walk over the spec: parameters, buffers, MACs, and element ops per
/// block row, at the given input length.
ComplexityReport analyze_model(const ModelSpec& spec, int input_length);

/// Parameter column at the spec's own input length.
ComplexityReport count_params(const ModelSpec& spec);
/// MAC/FLOP columns at an arbitrary input length.
ComplexityReport count_flops(const ModelSpec& spec, int input_length);

/// First-stage parameter ratio of the bottlenecked block (first 1x1 plus
/// branches) to full-width parallel branches, evaluated term by term:
/// (C^2/2 + (C^2/4)*sum(k)) / (C^2*sum(k)). Independent of C.
double first_stage_ratio_exact(int p_k, int channels);
/// Closed-form approximation (2*ln(p_k) + p_k^2) / (4*p_k^2).
double ratio_closed_form(int p_k);

/// Weight/MAC totals for one full-width omni-scale stage vs the bottlenecked
/// stage at the same kernel set (biases and BN excluded — weights only).
/// include_restore adds the second 1x1 of the bottlenecked stage for honest
/// totals; the Eq-style ratio uses include_restore=false.
struct StageComparison {
    ComplexityRow oscnn;
    ComplexityRow ecoscale;
    double param_ratio = 0.0;  // ecoscale.params / oscnn.params
};
StageComparison compare_oscnn(int p_k, int channels, int input_length,
                              bool include_restore = false);

std::string format_complexity_table(const ComplexityReport& report);
std::string complexity_csv(const ComplexityReport& report);

}  // namespace ecoscale
