#pragma once

#include <set>
#include <string>
#include <vector>

namespace ecoscale {

/// A stage's multi-kernel set: {1, 2} plus every prime up to the cap p_k.
struct KernelSet {
    int p_k = 2;                // largest prime in the set
    std::vector<int> kernels;   // ascending, always starts 1, 2

    int sum() const;            // sum of all kernel lengths
    int count() const { return static_cast<int>(kernels.size()); }
};

/// Plan for one stage: the signal length it must cover and the kernel set chosen for it.
struct StagePlan {
    int cover_length = 0;   // l_i, samples remaining after cumulative downsampling
    int downsample = 1;     // d_i, cumulative factor relative to the first stage input
    KernelSet kernel_set;
};

struct KernelPlan {
    int initial_cover = 0;
    std::vector<StagePlan> stages;
};

/// Receptive-field lengths reachable by summing one kernel from each of three
/// stacked sets, audited exhaustively against the target range [1, 2*p_k].
struct CoverageSet {
    std::set<int> achievable;
    int target_max = 0;
    std::set<int> gaps;   // values in [1, target_max] not achievable
};

/// Ascending list of primes <= n (exact sieve; empty for n < 2).
std::vector<int> primes_up_to(int n);

/// Smallest prime p_k with 2*p_k > L, plus the kernel set {1,2} union primes <= p_k.
KernelSet select_kernel_set(int cover_length);

/// Enumerate every a+b+c-2 over the two stage sets and a third layer
/// (defaults to {1,2}), and report gaps up to 2*max(p_k).
CoverageSet coverage_set(const KernelSet& set1, const KernelSet& set2,
                         const std::vector<int>& set3 = {1, 2});

/// Span of input samples feeding one output of a stride-1 kernel chain:
/// sum of lengths minus (count - 1).
int receptive_field(const std::vector<int>& kernel_lengths);

/// Build the per-stage plan: l_i = ceil(initial_cover / d_i), kernel set per l_i.
/// With strict_coverage, p_k is raised until the coverage audit shows no gap in [1, l_i].
KernelPlan stage_plan(int initial_cover, const std::vector<int>& downsample_factors,
                      bool strict_coverage = false);

/// Smallest prime cap >= the Algorithm-1 choice whose coverage has no gap in [1, limit].
int escalate_for_full_coverage(int cover_length);

std::string format_plan_table(const KernelPlan& plan, bool show_gaps = true);
std::string format_plan_kv(const KernelPlan& plan);

}  // namespace ecoscale
