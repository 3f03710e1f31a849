#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "ecoscale/analysis.hpp"
#include "ecoscale/config.hpp"
#include "ecoscale/kernel_plan.hpp"
#include "ecoscale/model.hpp"
#include "ecoscale/rng.hpp"

using namespace ecoscale;

namespace {

// Ground truth for parameter counts: build the real model and add up the
// registry arrays. The analytic walk must agree exactly.
long long enumerate_params(const ModelSpec& spec, long long* buffers_out = nullptr) {
    Model m = build_model(spec);
    long long params = 0, buffers = 0;
    for (const ParamRef& p : m.params) {
        if (p.trainable)
            params += static_cast<long long>(p.value->size());
        else
            buffers += static_cast<long long>(p.value->size());
    }
    if (buffers_out) *buffers_out = buffers;
    return params;
}

ModelSpec random_spec(Rng& rng) {
    ModelSpec spec;
    spec.leads = 1 + rng.uniform_int(4);
    spec.input_length = 96 + 16 * rng.uniform_int(12);
    spec.num_classes = 1 + rng.uniform_int(8);
    spec.stem.out_channels = 4 + 2 * rng.uniform_int(4);
    const int n_stages = 1 + rng.uniform_int(3);
    int ch = spec.stem.out_channels;
    for (int i = 0; i < n_stages; ++i) {
        StageSpec st;
        st.blocks = 1 + rng.uniform_int(2);
        if (i > 0 && rng.uniform() < 0.7) ch += 2 * (1 + rng.uniform_int(4));
        st.channels = ch;
        st.stride = (i == 0) ? 1 : (rng.uniform() < 0.8 ? 2 : 1);
        spec.stages.push_back(st);
    }
    spec.initial_cover = 8 + rng.uniform_int(40);
    const double pick = rng.uniform();
    spec.variant = pick < 0.4 ? Variant::Full
                 : pick < 0.7 ? Variant::NoBottleneck
                              : Variant::BackboneOnly;
    spec.strict_coverage = rng.uniform() < 0.25;
    return spec;
}

}  // namespace

TEST_CASE("single-layer count helpers") {
    CHECK(conv_param_count(2, 2, 3, true) == 14);    // 2*2*3 weights + 2 biases
    CHECK(conv_param_count(2, 2, 3, false) == 12);
    CHECK(conv_param_count(64, 32, 1, false) == 2048);
    CHECK(linear_param_count(4, 2) == 10);           // 8 weights + 2 biases
    CHECK(conv_mac_count(1, 1, 1, 10) == 10);
    CHECK(conv_mac_count(3, 8, 5, 100) == 3LL * 8 * 5 * 100);
}

TEST_CASE("analytic parameter counts equal registry enumeration on randomized specs") {
    Rng rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        ModelSpec spec = random_spec(rng);
        CAPTURE(trial);
        CAPTURE(variant_name(spec.variant));
        CAPTURE(spec.stages.size());
        CAPTURE(spec.initial_cover);
        long long buffers = 0;
        const long long truth = enumerate_params(spec, &buffers);
        ComplexityReport rep = count_params(spec);
        CHECK(rep.totals.params == truth);
        CHECK(rep.totals.buffers == buffers);
    }
}

TEST_CASE("the full-size reference lands in the single-digit-millions band") {
    RunConfig cfg = parse_config_text(full_size_config_text(), "embedded");
    ComplexityReport rep = count_params(cfg.model);
    CHECK(rep.totals.params > 4'000'000);
    CHECK(rep.totals.params < 20'000'000);
    // And the analytic walk agrees exactly with the instantiated registry.
    long long buffers = 0;
    CHECK(enumerate_params(cfg.model, &buffers) == rep.totals.params);
    CHECK(buffers == rep.totals.buffers);
}

TEST_CASE("row totals add up and the table lists every block") {
    ModelSpec spec;
    spec.leads = 4;
    spec.input_length = 256;
    spec.num_classes = 3;
    spec.stem.out_channels = 8;
    spec.stages = {{2, 8, 1}, {1, 16, 2}};
    spec.initial_cover = 16;
    ComplexityReport rep = analyze_model(spec, 256);

    long long p = 0, b = 0, macs = 0;
    for (const ComplexityRow& row : rep.rows) {
        p += row.params;
        b += row.buffers;
        macs += row.macs;
    }
    CHECK(p == rep.totals.params);
    CHECK(b == rep.totals.buffers);
    CHECK(macs == rep.totals.macs);
    CHECK(rep.flops() == 2 * rep.totals.macs);

    // stem + res0 + res1 + eco, then res0 + eco, then the classifier head.
    REQUIRE(rep.rows.size() == 7);
    CHECK(rep.rows[0].name == "stem");
    CHECK(rep.rows[3].name == "stage1.eco");
    CHECK(rep.rows.back().name == "fc");

    std::string table = format_complexity_table(rep);
    CHECK(table.find("stage1.res0") != std::string::npos);
    CHECK(table.find("summary:") != std::string::npos);
    std::string csv = complexity_csv(rep);
    CHECK(csv.find("layer,params,buffers,macs,flops,element_ops") == 0);
    CHECK(csv.find("total,") != std::string::npos);
}

TEST_CASE("bottleneck parameter ratio: exact arithmetic at cap 11") {
    // (C^2/2 + (C^2/4) * sum(k)) / (C^2 * sum(k)) with sum(k) = 29.
    const double want = 31.0 / 116.0;
    CHECK(first_stage_ratio_exact(11, 64) == doctest::Approx(want).epsilon(1e-15));
    // The channel width cancels termwise.
    CHECK(first_stage_ratio_exact(11, 2) ==
          doctest::Approx(first_stage_ratio_exact(11, 64)).epsilon(1e-15));
    CHECK(first_stage_ratio_exact(11, 512) ==
          doctest::Approx(first_stage_ratio_exact(11, 64)).epsilon(1e-15));
}

TEST_CASE("bottleneck parameter ratio: closed form tracks the exact value") {
    // (2 ln p + p^2) / (4 p^2) at p = 11.
    const double closed11 = (2.0 * std::log(11.0) + 121.0) / 484.0;
    CHECK(ratio_closed_form(11) == doctest::Approx(closed11).epsilon(1e-15));
    CHECK(ratio_closed_form(11) == doctest::Approx(0.2599086).epsilon(1e-6));

    // Both land on about a quarter: within 26% plus or minus 2 points.
    CHECK(first_stage_ratio_exact(11, 64) > 0.24);
    CHECK(first_stage_ratio_exact(11, 64) < 0.28);
    CHECK(ratio_closed_form(11) > 0.24);
    CHECK(ratio_closed_form(11) < 0.28);

    // Under 5% relative gap for every prime cap from 11 through 199.
    for (int p : primes_up_to(199)) {
        if (p < 11) continue;
        const double exact = first_stage_ratio_exact(p, 64);
        const double approx = ratio_closed_form(p);
        CAPTURE(p);
        CHECK(std::abs(exact - approx) / exact < 0.05);
    }

    // The closed form tends to 1/4 as the cap grows.
    CHECK(std::abs(ratio_closed_form(10007) - 0.25) < 1e-6);
}

TEST_CASE("stage comparison against full-width parallel branches") {
    // Cap 11 at 64 channels: full-width branches hold 64*64*29 weights; the
    // bottlenecked stage holds 64*32 + 32*32*29.
    StageComparison cmp = compare_oscnn(11, 64, 128);
    CHECK(cmp.oscnn.params == 64LL * 64 * 29);
    CHECK(cmp.oscnn.params == 118784);
    CHECK(cmp.ecoscale.params == 2048 + 29696);
    CHECK(cmp.param_ratio == doctest::Approx(31.0 / 116.0).epsilon(1e-12));

    // Tiny pinned case: cap 2 at 2 channels gives 12 vs 5 weights.
    StageComparison tiny = compare_oscnn(2, 2, 16);
    CHECK(tiny.oscnn.params == 12);
    CHECK(tiny.ecoscale.params == 5);

    // Ratio is channel-invariant.
    StageComparison wide = compare_oscnn(11, 128, 128);
    CHECK(wide.param_ratio == doctest::Approx(cmp.param_ratio).epsilon(1e-12));

    // include_restore adds the second pointwise conv honestly.
    StageComparison honest = compare_oscnn(11, 64, 128, true);
    CHECK(honest.ecoscale.params == 2048 + 29696 + 6LL * 32 * 64);

    // MACs scale with the signal length.
    StageComparison longer = compare_oscnn(11, 64, 256);
    CHECK(longer.oscnn.macs == 2 * cmp.oscnn.macs);
}

TEST_CASE("kernel sums grow on the order of p^2 over log p") {
    // sum of primes to p is asymptotically p^2 / (2 ln p); adding {1, 2}
    // barely moves it. The normalized ratio must stay within a tight band.
    std::vector<double> ratios;
    for (int p : {11, 31, 101, 199}) {
        KernelSet ks = select_kernel_set(2 * p - 1);
        REQUIRE(ks.p_k == p);
        const double t = static_cast<double>(ks.sum());
        ratios.push_back(t / (static_cast<double>(p) * p / (2.0 * std::log(p))));
    }
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= static_cast<double>(ratios.size());
    for (double r : ratios) CHECK(std::abs(r - mean) / mean < 0.25);
}

TEST_CASE("doubling the input length doubles every convolution's MACs") {
    ModelSpec spec;
    spec.leads = 12;
    spec.input_length = 512;
    spec.num_classes = 6;
    spec.stem.out_channels = 8;
    spec.stages = {{1, 8, 1}, {1, 16, 2}, {1, 32, 2}};
    spec.initial_cover = 128;

    ComplexityReport at512 = count_flops(spec, 512);
    ComplexityReport at1024 = count_flops(spec, 1024);

    // The classifier head is the only length-independent row.
    long long fc512 = 0, fc1024 = 0;
    for (const ComplexityRow& r : at512.rows)
        if (r.name == "fc") fc512 = r.macs;
    for (const ComplexityRow& r : at1024.rows)
        if (r.name == "fc") fc1024 = r.macs;
    CHECK(fc512 == fc1024);
    CHECK(at1024.totals.macs - fc1024 == 2 * (at512.totals.macs - fc512));

    // Parameter counts never depend on the length.
    CHECK(at512.totals.params == at1024.totals.params);
}

TEST_CASE("variant ordering on the desk-scale shape") {
    ModelSpec spec;
    spec.leads = 12;
    spec.input_length = 512;
    spec.num_classes = 6;
    spec.stem.out_channels = 8;
    spec.stages = {{1, 8, 1}, {1, 16, 2}, {1, 32, 2}};
    spec.initial_cover = 128;

    spec.variant = Variant::BackboneOnly;
    const long long backbone = count_params(spec).totals.params;
    spec.variant = Variant::Full;
    const long long full = count_params(spec).totals.params;
    const long long full_macs = count_flops(spec, 512).totals.macs;
    spec.variant = Variant::NoBottleneck;
    const long long nobottle = count_params(spec).totals.params;
    const long long nobottle_macs = count_flops(spec, 512).totals.macs;

    CHECK(backbone < full);
    CHECK(full < nobottle);
    CHECK(full_macs < nobottle_macs);
}
