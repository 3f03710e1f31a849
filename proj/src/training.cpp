#include "ecoscale/training.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "ecoscale/rng.hpp"

namespace ecoscale {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (lr_init <= 0.0 || lr_final < 0.0 || lr_final > lr_init)
        throw std::invalid_argument("train: need 0 <= lr_final <= lr_init, lr_init > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("train: betas must be in [0, 1)");
    if (epsilon <= 0.0) throw std::invalid_argument("train: epsilon must be > 0");
}

LossResult bce_multilabel_loss(const Matrix& logits, const Matrix& targets) {
    if (logits.rows != targets.rows || logits.cols != targets.cols)
        throw std::invalid_argument("loss: logit/target shape mismatch");
    if (logits.rows < 1) throw std::invalid_argument("loss: empty batch");

    LossResult res;
    res.grad = Matrix(logits.rows, logits.cols);
    const double inv_batch = 1.0 / logits.rows;
    double total = 0.0;
    for (size_t i = 0; i < logits.data.size(); ++i) {
        const double t = targets.data[i];
        if (t != 0.0 && t != 1.0)
            throw std::invalid_argument("loss: targets must be exactly 0 or 1");
        const double z = logits.data[i];
        // max(z,0) - z*t + log(1 + exp(-|z|)) never overflows
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
        const double sig = 1.0 / (1.0 + std::exp(-z));
        res.grad.data[i] = (sig - t) * inv_batch;
    }
    res.loss = total * inv_batch;
    return res;
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

AdamW::AdamW(ParamRegistry& params, const TrainConfig& config)
    : params_(&params), config_(config) {
    config.validate();
    for (const ParamRef& p : params) {
        const size_t n = p.trainable ? p.value->size() : 0;
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void AdamW::step(double lr) {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < params_->size(); ++i) {
        ParamRef& p = (*params_)[i];
        if (!p.trainable || !p.grad) continue;
        std::vector<double>& val = *p.value;
        const std::vector<double>& grad = *p.grad;
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        for (size_t j = 0; j < val.size(); ++j) {
            val[j] *= (1.0 - lr * config_.weight_decay);  // decoupled decay first
            const double g = grad[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double mhat = m[j] / corr1;
            const double vhat = v[j] / corr2;
            val[j] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

double cosine_lr(long step, long total_steps, double lr_init, double lr_final) {
    if (step < 0 || total_steps < 1)
        throw std::invalid_argument("cosine_lr: need step >= 0 and total_steps >= 1");
    if (step > total_steps) return lr_final;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

// ---------------------------------------------------------------------------
// Loop
// ---------------------------------------------------------------------------

void make_batch(const Dataset& ds, const std::vector<size_t>& order, size_t from, size_t to,
                Tensor3& x, Matrix& targets) {
    const int bsz = static_cast<int>(to - from);
    x = Tensor3(bsz, ds.leads, ds.T);
    targets = Matrix(bsz, ds.num_classes);
    for (int b = 0; b < bsz; ++b) {
        const Record& rec = ds.records[order[from + b]];
        std::memcpy(x.row(b, 0), rec.signal.data(),
                    static_cast<size_t>(ds.leads) * ds.T * sizeof(double));
        for (int m = 0; m < ds.num_classes; ++m)
            targets.at(b, m) = (rec.labels >> m) & 1u ? 1.0 : 0.0;
    }
}

namespace {

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& params) {
    std::vector<std::vector<double>> snap;
    snap.reserve(params.size());
    for (const ParamRef& p : params) snap.push_back(*p.value);
    return snap;
}

void restore_params(ParamRegistry& params, const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < params.size(); ++i) *params[i].value = snap[i];
}

}  // namespace

FitResult fit(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& config) {
    config.validate();
    if (train.records.empty()) throw std::invalid_argument("fit: empty training set");
    if (val.records.empty()) throw std::invalid_argument("fit: empty validation set");
    if (train.num_classes != model.spec.num_classes)
        throw std::invalid_argument("fit: dataset has " + std::to_string(train.num_classes) +
                                    " classes, model expects " +
                                    std::to_string(model.spec.num_classes));
    for (const Dataset* ds : {&train, &val}) {
        if (ds->leads != model.spec.leads || ds->T != model.spec.input_length)
            throw std::invalid_argument(
                "fit: dataset shape (" + std::to_string(ds->leads) + ", " + std::to_string(ds->T) +
                ") does not match model input (" + std::to_string(model.spec.leads) + ", " +
                std::to_string(model.spec.input_length) + ")");
    }

    const size_t n = train.records.size();
    const long steps_per_epoch =
        static_cast<long>((n + config.batch_size - 1) / config.batch_size);
    const long total_steps = steps_per_epoch * config.epochs;

    AdamW opt(model.params, config);
    Rng shuffle_rng(config.seed);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    FitResult result;
    std::vector<std::vector<double>> best_snap = snapshot_params(model.params);
    double best_f1 = -1.0;
    int best_epoch = 0;
    long global_step = 0;

    Tensor3 x;
    Matrix targets;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        model.set_mode(Mode::Train);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        double lr = config.lr_init;
        for (size_t from = 0; from < n; from += static_cast<size_t>(config.batch_size)) {
            const size_t to = std::min(n, from + static_cast<size_t>(config.batch_size));
            make_batch(train, order, from, to, x, targets);
            lr = cosine_lr(global_step, total_steps, config.lr_init, config.lr_final);
            const Matrix logits = model.forward(x);
            LossResult lr_res = bce_multilabel_loss(logits, targets);
            zero_grads(model.params);
            model.backward(lr_res.grad);
            opt.step(lr);
            ++global_step;
            loss_sum += lr_res.loss * static_cast<double>(to - from);
        }
        const double train_loss = loss_sum / static_cast<double>(n);
        const MetricsTable val_metrics = evaluate(model, val, 0.5);
        result.log.push_back({epoch, global_step, lr, train_loss, val_metrics.macro_f1});
        if (val_metrics.macro_f1 > best_f1) {
            best_f1 = val_metrics.macro_f1;
            best_epoch = epoch;
            best_snap = snapshot_params(model.params);
        }
    }

    restore_params(model.params, best_snap);
    model.set_mode(Mode::Infer);
    result.best_val_macro_f1 = best_f1;
    result.best_epoch = best_epoch;
    return result;
}

MetricsTable evaluate(Model& model, const Dataset& data, double threshold) {
    if (data.records.empty()) throw std::invalid_argument("evaluate: empty dataset");
    model.set_mode(Mode::Infer);
    const size_t n = data.records.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<uint32_t> predictions, labels;
    predictions.reserve(n);
    labels.reserve(n);
    Tensor3 x;
    Matrix targets;
    const size_t chunk = 64;
    for (size_t from = 0; from < n; from += chunk) {
        const size_t to = std::min(n, from + chunk);
        make_batch(data, order, from, to, x, targets);
        const std::vector<uint32_t> masks = model.predict(x, threshold);
        predictions.insert(predictions.end(), masks.begin(), masks.end());
        for (size_t i = from; i < to; ++i) labels.push_back(data.records[i].labels);
    }
    return prf1(predictions, labels, data.num_classes);
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,step,lr,train_loss,val_macro_f1\n";
    char line[160];
    for (const EpochLog& e : log) {
        std::snprintf(line, sizeof(line), "%d,%ld,%.8e,%.6f,%.6f\n", e.epoch, e.step, e.lr,
                      e.train_loss, e.val_macro_f1);
        os << line;
    }
    return os.str();
}

}  // namespace ecoscale
