#include "ecoscale/kernel_plan.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ecoscale {

int KernelSet::sum() const {
    return std::accumulate(kernels.begin(), kernels.end(), 0);
}

std::vector<int> primes_up_to(int n) {
    std::vector<int> primes;
    if (n < 2) return primes;
    std::vector<bool> composite(static_cast<size_t>(n) + 1, false);
    for (int p = 2; static_cast<long long>(p) * p <= n; ++p) {
        if (composite[p]) continue;
        for (int m = p * p; m <= n; m += p) composite[m] = true;
    }
    for (int p = 2; p <= n; ++p)
        if (!composite[p]) primes.push_back(p);
    return primes;
}

namespace {

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; static_cast<long long>(d) * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

int next_prime(int n) {
    int p = n + 1;
    while (!is_prime(p)) ++p;
    return p;
}

KernelSet kernel_set_for_prime(int p_k) {
    KernelSet ks;
    ks.p_k = p_k;
    ks.kernels = {1, 2};
    for (int p : primes_up_to(p_k))
        if (p > 2) ks.kernels.push_back(p);
    return ks;
}

}  // namespace

KernelSet select_kernel_set(int cover_length) {
    if (cover_length < 1) throw std::invalid_argument("select_kernel_set: cover length must be >= 1");
    int p = 2;
    while (2 * p <= cover_length) p = next_prime(p);
    return kernel_set_for_prime(p);
}

CoverageSet coverage_set(const KernelSet& set1, const KernelSet& set2,
                         const std::vector<int>& set3) {
    CoverageSet cov;
    cov.target_max = 2 * std::max(set1.p_k, set2.p_k);
    for (int a : set1.kernels)
        for (int b : set2.kernels)
            for (int c : set3) {
                int s = a + b + c - 2;
                if (s >= 1) cov.achievable.insert(s);
            }
    for (int s = 1; s <= cov.target_max; ++s)
        if (!cov.achievable.count(s)) cov.gaps.insert(s);
    return cov;
}

int receptive_field(const std::vector<int>& kernel_lengths) {
    if (kernel_lengths.empty())
        throw std::invalid_argument("receptive_field: empty kernel chain");
    int sum = 0;
    for (int k : kernel_lengths) {
        if (k < 1) throw std::invalid_argument("receptive_field: kernel lengths must be positive");
        sum += k;
    }
    return sum - (static_cast<int>(kernel_lengths.size()) - 1);
}

int escalate_for_full_coverage(int cover_length) {
    KernelSet ks = select_kernel_set(cover_length);
    for (;;) {
        CoverageSet cov = coverage_set(ks, ks);
        bool gap_in_range = false;
        for (int g : cov.gaps) {
            if (g <= cover_length) {
                gap_in_range = true;
                break;
            }
        }
        if (!gap_in_range) return ks.p_k;
        ks = kernel_set_for_prime(next_prime(ks.p_k));
    }
}

KernelPlan stage_plan(int initial_cover, const std::vector<int>& downsample_factors,
                      bool strict_coverage) {
    if (initial_cover < 1) throw std::invalid_argument("stage_plan: initial cover must be >= 1");
    if (downsample_factors.empty()) throw std::invalid_argument("stage_plan: no stages");
    if (downsample_factors.front() != 1)
        throw std::invalid_argument("stage_plan: first downsample factor must be 1");
    for (size_t i = 1; i < downsample_factors.size(); ++i) {
        if (downsample_factors[i] < downsample_factors[i - 1])
            throw std::invalid_argument("stage_plan: downsample factors must be non-decreasing");
    }

    KernelPlan plan;
    plan.initial_cover = initial_cover;
    for (int d : downsample_factors) {
        StagePlan sp;
        sp.downsample = d;
        sp.cover_length = (initial_cover + d - 1) / d;  // ceil, never under-covers
        sp.kernel_set = select_kernel_set(sp.cover_length);
        if (strict_coverage) {
            int raised = escalate_for_full_coverage(sp.cover_length);
            if (raised != sp.kernel_set.p_k) sp.kernel_set = kernel_set_for_prime(raised);
        }
        plan.stages.push_back(std::move(sp));
    }
    return plan;
}

namespace {

std::string join_ints(const std::vector<int>& v, const char* sep) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << sep;
        os << v[i];
    }
    return os.str();
}

std::string gaps_in_range(const StagePlan& sp) {
    CoverageSet cov = coverage_set(sp.kernel_set, sp.kernel_set);
    std::vector<int> in_range;
    for (int g : cov.gaps)
        if (g <= sp.cover_length) in_range.push_back(g);
    return in_range.empty() ? "-" : join_ints(in_range, ",");
}

}  // namespace

std::string format_plan_table(const KernelPlan& plan, bool show_gaps) {
    std::ostringstream os;
    os << "initial cover: " << plan.initial_cover << "\n";
    os << "stage  cover  factor  p_k   kernels";
    if (show_gaps) os << "  |  gaps<=cover";
    os << "\n";
    for (size_t i = 0; i < plan.stages.size(); ++i) {
        const StagePlan& sp = plan.stages[i];
        char line[96];
        std::snprintf(line, sizeof(line), "%-5zu  %-5d  %-6d  %-4d  ", i + 1, sp.cover_length,
                      sp.downsample, sp.kernel_set.p_k);
        os << line << join_ints(sp.kernel_set.kernels, ",");
        if (show_gaps) os << "  |  " << gaps_in_range(sp);
        os << "\n";
    }
    return os.str();
}

std::string format_plan_kv(const KernelPlan& plan) {
    std::ostringstream os;
    os << "initial_cover=" << plan.initial_cover << "\n";
    os << "stages=" << plan.stages.size() << "\n";
    for (size_t i = 0; i < plan.stages.size(); ++i) {
        const StagePlan& sp = plan.stages[i];
        std::string pre = "stage." + std::to_string(i + 1) + ".";
        os << pre << "cover=" << sp.cover_length << "\n";
        os << pre << "factor=" << sp.downsample << "\n";
        os << pre << "p_k=" << sp.kernel_set.p_k << "\n";
        os << pre << "kernels=" << join_ints(sp.kernel_set.kernels, ",") << "\n";
    }
    return os.str();
}

}  // namespace ecoscale
