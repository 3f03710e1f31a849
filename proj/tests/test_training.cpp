#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ecoscale/grad_check.hpp"
#include "ecoscale/model.hpp"
#include "ecoscale/rng.hpp"
#include "ecoscale/training.hpp"

using namespace ecoscale;

namespace {

constexpr double kLn2 = 0.6931471805599453;

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (double v : row) m.at(r, c++) = v;
        ++r;
    }
    return m;
}

ModelSpec grad_spec() {
    ModelSpec spec;
    spec.leads = 3;
    spec.input_length = 64;
    spec.num_classes = 2;
    spec.stem.out_channels = 4;
    spec.stages = {{1, 4, 1}, {1, 8, 2}};
    spec.variant = Variant::Full;
    spec.initial_cover = 12;  // caps 7 and 5: four branches then three
    return spec;
}

Dataset synthetic_set(int n, int leads, int T, int classes, uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.leads = leads;
    ds.T = T;
    ds.num_classes = classes;
    for (int i = 0; i < n; ++i) {
        Record r;
        r.id = static_cast<uint32_t>(i);
        r.labels = static_cast<uint32_t>(1 + rng.uniform_int((1 << classes) - 1));
        r.signal.resize(static_cast<size_t>(leads) * T);
        for (double& v : r.signal) v = rng.normal();
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

TEST_CASE("binary cross entropy: frozen oracle values") {
    // A zero logit against any binary target costs exactly ln 2.
    LossResult r = bce_multilabel_loss(mat({{0.0}}), mat({{1.0}}));
    CHECK(r.loss == doctest::Approx(kLn2).epsilon(1e-14));
    CHECK(r.grad.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));

    r = bce_multilabel_loss(mat({{0.0}}), mat({{0.0}}));
    CHECK(r.loss == doctest::Approx(kLn2).epsilon(1e-14));
    CHECK(r.grad.at(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    // Two zero logits sum per record: 2 ln 2.
    r = bce_multilabel_loss(mat({{0.0, 0.0}}), mat({{1.0, 0.0}}));
    CHECK(r.loss == doctest::Approx(2.0 * kLn2).epsilon(1e-14));

    // Batch of two averages: (ln 2 + ln 2) / 2.
    r = bce_multilabel_loss(mat({{0.0}, {0.0}}), mat({{1.0}, {0.0}}));
    CHECK(r.loss == doctest::Approx(kLn2).epsilon(1e-14));
    CHECK(r.grad.at(0, 0) == doctest::Approx(-0.25).epsilon(1e-14));  // batch-mean scaling
    CHECK(r.grad.at(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("binary cross entropy: correct confident predictions cost nearly nothing") {
    LossResult r = bce_multilabel_loss(mat({{50.0, -50.0}}), mat({{1.0, 0.0}}));
    CHECK(r.loss < 1e-20);
    CHECK(std::abs(r.grad.at(0, 0)) < 1e-20);

    // Confidently wrong costs about |z| per class.
    r = bce_multilabel_loss(mat({{50.0}}), mat({{0.0}}));
    CHECK(r.loss == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(r.grad.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("binary cross entropy stays finite at extreme logits") {
    LossResult r = bce_multilabel_loss(mat({{700.0, -700.0}}), mat({{0.0, 1.0}}));
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(1400.0).epsilon(1e-9));
}

TEST_CASE("binary cross entropy rejects non-binary targets and shape mismatches") {
    CHECK_THROWS_AS(bce_multilabel_loss(mat({{0.0}}), mat({{0.5}})), std::invalid_argument);
    CHECK_THROWS_AS(bce_multilabel_loss(mat({{0.0}}), mat({{-1.0}})), std::invalid_argument);
    CHECK_THROWS_AS(bce_multilabel_loss(mat({{0.0, 0.0}}), mat({{1.0}})), std::invalid_argument);
}

TEST_CASE("binary cross entropy gradient matches central differences") {
    Rng rng(3);
    Matrix logits(4, 5);
    Matrix targets(4, 5);
    for (double& v : logits.data) v = rng.normal() * 2.0;
    for (double& v : targets.data) v = rng.uniform() < 0.4 ? 1.0 : 0.0;

    LossResult r = bce_multilabel_loss(logits, targets);
    const double eps = 1e-6;
    for (size_t i = 0; i < logits.size(); ++i) {
        double keep = logits.data[i];
        logits.data[i] = keep + eps;
        double up = bce_multilabel_loss(logits, targets).loss;
        logits.data[i] = keep - eps;
        double dn = bce_multilabel_loss(logits, targets).loss;
        logits.data[i] = keep;
        double numeric = (up - dn) / (2.0 * eps);
        CHECK(r.grad.data[i] == doctest::Approx(numeric).epsilon(1e-5));
    }
}

// ---------------------------------------------------------------------------
// Optimizer and schedule
// ---------------------------------------------------------------------------

TEST_CASE("adamw: first step moves by about the learning rate against the gradient") {
    std::vector<double> p{1.0}, g{0.5};
    ParamRegistry reg;
    reg.push_back({"p", {1}, &p, &g, true});
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(reg, cfg);
    opt.step(0.01);
    // mhat = g, vhat = g^2, update = lr * g / (|g| + eps) which is nearly lr.
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("adamw: zero gradient leaves only the decoupled decay") {
    std::vector<double> p{2.0}, g{0.0};
    ParamRegistry reg;
    reg.push_back({"p", {1}, &p, &g, true});
    TrainConfig cfg;
    cfg.weight_decay = 0.1;
    AdamW opt(reg, cfg);
    opt.step(0.5);
    // Decay multiplies by (1 - lr*wd) exactly; the moment update is 0/(0+eps).
    CHECK(p[0] == 2.0 * (1.0 - 0.5 * 0.1));
    opt.step(0.5);
    CHECK(p[0] == 2.0 * (1.0 - 0.05) * (1.0 - 0.05));
}

TEST_CASE("adamw: two-step trace matches an independent scalar recurrence") {
    const double lr = 0.01, wd = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double g1 = 0.3, g2 = -0.2;

    // Hand recurrence, written out without reference to the implementation.
    double p = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        double g = (t == 1) ? g1 : g2;
        p *= (1.0 - lr * wd);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        double mhat = m / (1.0 - std::pow(b1, t));
        double vhat = v / (1.0 - std::pow(b2, t));
        p -= lr * mhat / (std::sqrt(vhat) + eps);
    }

    std::vector<double> param{1.0}, grad{g1};
    ParamRegistry reg;
    reg.push_back({"p", {1}, &param, &grad, true});
    TrainConfig cfg;
    cfg.lr_init = lr;
    cfg.weight_decay = wd;
    cfg.beta1 = b1;
    cfg.beta2 = b2;
    cfg.epsilon = eps;
    AdamW opt(reg, cfg);
    opt.step(lr);
    grad[0] = g2;
    opt.step(lr);

    CHECK(param[0] == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("adamw: decay shrinks toward zero, never through it") {
    std::vector<double> p{1e-3}, g{0.0};
    ParamRegistry reg;
    reg.push_back({"p", {1}, &p, &g, true});
    TrainConfig cfg;
    cfg.weight_decay = 0.01;
    AdamW opt(reg, cfg);
    for (int i = 0; i < 1000; ++i) opt.step(0.1);
    CHECK(p[0] > 0.0);
    CHECK(p[0] < 1e-3);
}

TEST_CASE("adamw skips non-trainable buffers") {
    std::vector<double> p{1.0};
    ParamRegistry reg;
    reg.push_back({"buf", {1}, &p, nullptr, false});
    TrainConfig cfg;
    AdamW opt(reg, cfg);
    opt.step(0.5);
    CHECK(p[0] == 1.0);
}

TEST_CASE("cosine schedule endpoints, midpoint, and clamp") {
    const double lr0 = 1e-4, lr1 = 1e-6;
    CHECK(cosine_lr(0, 1000, lr0, lr1) == doctest::Approx(lr0).epsilon(1e-15));
    CHECK(cosine_lr(1000, 1000, lr0, lr1) == doctest::Approx(lr1).epsilon(1e-12));
    // Midpoint: cos(pi/2) = 0 leaves the arithmetic mean.
    CHECK(cosine_lr(500, 1000, lr0, lr1) == doctest::Approx(5.05e-5).epsilon(1e-12));
    CHECK(cosine_lr(5000, 1000, lr0, lr1) == lr1);

    // Monotone non-increasing over the whole run.
    double prev = cosine_lr(0, 200, lr0, lr1);
    for (long s = 1; s <= 200; ++s) {
        double cur = cosine_lr(s, 200, lr0, lr1);
        CHECK(cur <= prev + 1e-18);
        prev = cur;
    }
    CHECK_THROWS_AS(cosine_lr(-1, 100, lr0, lr1), std::invalid_argument);
    CHECK_THROWS_AS(cosine_lr(0, 0, lr0, lr1), std::invalid_argument);
}

TEST_CASE("train config validation") {
    TrainConfig ok;
    CHECK_NOTHROW(ok.validate());
    TrainConfig bad = ok;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.lr_init = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ok;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Whole-model gradient fidelity
// ---------------------------------------------------------------------------

TEST_CASE("end-to-end gradients through the full variant verify numerically") {
    Model m = build_model(grad_spec());
    init_params(m, 31);
    m.set_mode(Mode::Train);

    Rng rng(32);
    Tensor3 x(2, 3, 64);
    for (double& v : x.data) v = rng.normal();
    Matrix targets(2, 2);
    targets.at(0, 0) = 1.0;
    targets.at(1, 1) = 1.0;

    auto loss = [&]() { return bce_multilabel_loss(m.forward(x), targets).loss; };

    zero_grads(m.params);
    LossResult r = bce_multilabel_loss(m.forward(x), targets);
    Tensor3 gx = m.backward(r.grad);

    // Sample every third parameter to keep the sweep fast; the acceptance
    // gate runs the denser version.
    GradCheckReport rep = check_param_grads(loss, m.params, 1e-5, 3);
    CAPTURE(rep.worst_name);
    CAPTURE(rep.analytic);
    CAPTURE(rep.numeric);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.checked > 300);  // stride 3 over ~1.2k trainable params

    GradCheckReport xrep = check_buffer_grad(loss, x.data, gx.data, "input", 1e-5, 5);
    CHECK(xrep.max_rel_err < 1e-4);
}

TEST_CASE("end-to-end gradients through the no-bottleneck and backbone variants") {
    for (Variant v : {Variant::NoBottleneck, Variant::BackboneOnly}) {
        ModelSpec spec = grad_spec();
        spec.variant = v;
        Model m = build_model(spec);
        init_params(m, 77);
        Rng rng(78);
        Tensor3 x(2, 3, 64);
        for (double& vv : x.data) vv = rng.normal();
        Matrix targets(2, 2);
        targets.at(0, 1) = 1.0;
        targets.at(1, 0) = 1.0;

        auto loss = [&]() { return bce_multilabel_loss(m.forward(x), targets).loss; };
        zero_grads(m.params);
        LossResult r = bce_multilabel_loss(m.forward(x), targets);
        m.backward(r.grad);
        GradCheckReport rep = check_param_grads(loss, m.params, 1e-5, 7);
        CAPTURE(variant_name(v));
        CAPTURE(rep.worst_name);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

TEST_CASE("fresh classifier starts at the coin-flip loss") {
    // With near-zero logits the multi-label loss is M * ln 2 per record.
    Model m = build_model(grad_spec());
    init_params(m, 5);
    Dataset train = synthetic_set(8, 3, 64, 2, 100);
    Dataset val = synthetic_set(4, 3, 64, 2, 101);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 1;
    cfg.lr_init = 1e-5;
    cfg.lr_final = 1e-5;
    cfg.seed = 1;
    FitResult fr = fit(m, train, val, cfg);
    REQUIRE(fr.log.size() == 1);
    const double coin = 2.0 * kLn2;
    CHECK(fr.log[0].train_loss > 0.8 * coin);
    CHECK(fr.log[0].train_loss < 1.2 * coin);
}

TEST_CASE("a tiny model overfits eight records within 200 steps") {
    Model m = build_model(grad_spec());
    init_params(m, 9);
    Dataset train = synthetic_set(8, 3, 64, 2, 200);
    TrainConfig cfg;
    cfg.batch_size = 8;   // one optimizer step per epoch
    cfg.epochs = 200;
    cfg.lr_init = 2e-2;
    cfg.lr_final = 2e-3;
    cfg.weight_decay = 0.0;
    cfg.seed = 2;
    FitResult fr = fit(m, train, train, cfg);
    CHECK(fr.log.back().step == 200);
    CHECK(fr.log.back().train_loss < 0.01);
    CHECK(fr.best_val_macro_f1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training is deterministic: identical logs from identical seeds") {
    Dataset train = synthetic_set(24, 3, 64, 2, 300);
    Dataset val = synthetic_set(8, 3, 64, 2, 301);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 3;
    cfg.lr_init = 1e-3;
    cfg.seed = 4;

    Model a = build_model(grad_spec());
    init_params(a, 11);
    FitResult fa = fit(a, train, val, cfg);

    Model b = build_model(grad_spec());
    init_params(b, 11);
    FitResult fb = fit(b, train, val, cfg);

    CHECK(training_log_csv(fa.log) == training_log_csv(fb.log));
    for (size_t i = 0; i < a.params.size(); ++i)
        CHECK(*a.params[i].value == *b.params[i].value);

    // A different shuffle seed diverges after the first epoch.
    Model c = build_model(grad_spec());
    init_params(c, 11);
    cfg.seed = 5;
    FitResult fc = fit(c, train, val, cfg);
    CHECK(training_log_csv(fa.log) != training_log_csv(fc.log));
}

TEST_CASE("fit restores the best-validation parameters and reports the epoch") {
    Dataset train = synthetic_set(16, 3, 64, 2, 400);
    Dataset val = synthetic_set(8, 3, 64, 2, 401);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.epochs = 4;
    cfg.lr_init = 1e-3;
    cfg.seed = 6;
    Model m = build_model(grad_spec());
    init_params(m, 13);
    FitResult fr = fit(m, train, val, cfg);
    REQUIRE(fr.best_epoch >= 1);
    REQUIRE(fr.best_epoch <= 4);
    CHECK(fr.best_val_macro_f1 ==
          doctest::Approx(fr.log[fr.best_epoch - 1].val_macro_f1).epsilon(1e-12));
    // The model must evaluate to exactly the recorded best.
    MetricsTable t = evaluate(m, val);
    CHECK(t.macro_f1 == doctest::Approx(fr.best_val_macro_f1).epsilon(1e-12));
    CHECK(m.mode() == Mode::Infer);
}

TEST_CASE("learning rate trace is non-increasing and hits both endpoints") {
    Dataset train = synthetic_set(16, 3, 64, 2, 500);
    Dataset val = synthetic_set(4, 3, 64, 2, 501);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 5;
    cfg.lr_init = 1e-3;
    cfg.lr_final = 1e-5;
    cfg.seed = 7;
    Model m = build_model(grad_spec());
    init_params(m, 15);
    FitResult fr = fit(m, train, val, cfg);
    double prev = cfg.lr_init;
    for (const EpochLog& e : fr.log) {
        CHECK(e.lr <= prev + 1e-15);
        prev = e.lr;
    }
    // The last applied rate is the second-to-last grid point of the cosine:
    // one step shy of lr_final, and far below where the run started.
    CHECK(fr.log.front().lr < cfg.lr_init);
    CHECK(fr.log.back().lr >= cfg.lr_final);
    CHECK(fr.log.back().lr < 0.1 * cfg.lr_init);
    CHECK(fr.log.back().step == 5 * 4);
}

TEST_CASE("fit rejects mismatched or empty datasets") {
    Model m = build_model(grad_spec());
    init_params(m, 1);
    TrainConfig cfg;
    Dataset empty;
    empty.leads = 3;
    empty.T = 64;
    empty.num_classes = 2;
    Dataset ok = synthetic_set(4, 3, 64, 2, 1);
    CHECK_THROWS_AS(fit(m, empty, ok, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit(m, ok, empty, cfg), std::invalid_argument);
    Dataset wrong = synthetic_set(4, 5, 64, 2, 1);
    CHECK_THROWS_AS(fit(m, wrong, ok, cfg), std::invalid_argument);
    Dataset wrong_cls = synthetic_set(4, 3, 64, 3, 1);
    CHECK_THROWS_AS(fit(m, wrong_cls, ok, cfg), std::invalid_argument);
}

TEST_CASE("training log serializes with the pinned header") {
    std::vector<EpochLog> log{{1, 10, 1e-3, 1.25, 0.5}};
    std::string csv = training_log_csv(log);
    CHECK(csv.find("epoch,step,lr,train_loss,val_macro_f1") == 0);
    CHECK(csv.find("1,10,") != std::string::npos);
    CHECK(csv.find("1.250000") != std::string::npos);
    CHECK(csv.find("0.500000") != std::string::npos);
}

TEST_CASE("make_batch packs records and 0/1 targets in order") {
    Dataset ds = synthetic_set(5, 2, 8, 3, 900);
    std::vector<size_t> order{4, 0, 2, 1, 3};
    Tensor3 x;
    Matrix t;
    make_batch(ds, order, 1, 3, x, t);
    CHECK(x.batch == 2);
    CHECK(x.channels == 2);
    CHECK(x.length == 8);
    CHECK(t.rows == 2);
    CHECK(t.cols == 3);
    CHECK(x.at(0, 0, 0) == ds.records[0].signal[0]);
    CHECK(x.at(1, 0, 0) == ds.records[2].signal[0]);
    for (int c = 0; c < 3; ++c) {
        CHECK(t.at(0, c) == ((ds.records[0].labels >> c) & 1u ? 1.0 : 0.0));
        CHECK(t.at(1, c) == ((ds.records[2].labels >> c) & 1u ? 1.0 : 0.0));
    }
}
