#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecoscale/dataio.hpp"
#include "ecoscale/metrics.hpp"
#include "ecoscale/model.hpp"

namespace ecoscale {

struct TrainConfig {
    int batch_size = 64;
    int epochs = 50;
    double lr_init = 1e-4;
    double lr_final = 1e-6;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // d loss / d logits
};

/// Numerically stable multi-label binary cross entropy on logits: summed over
/// classes, averaged over the batch. Targets must be exactly 0 or 1.
LossResult bce_multilabel_loss(const Matrix& logits, const Matrix& targets);

/// Decoupled-weight-decay Adam. step() first shrinks each parameter by
/// (1 - lr*wd), then applies the bias-corrected moment update.
class AdamW {
  public:
    AdamW(ParamRegistry& params, const TrainConfig& config);

    void step(double lr);
    long step_count() const { return t_; }

  private:
    ParamRegistry* params_;
    TrainConfig config_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

/// Cosine annealing: lr_final + (lr_init - lr_final) * (1 + cos(pi*s/total))/2,
/// clamped to lr_final past total_steps.
double cosine_lr(long step, long total_steps, double lr_init, double lr_final);

struct EpochLog {
    int epoch = 0;       // 1-based
    long step = 0;       // optimizer steps completed
    double lr = 0.0;     // last lr applied this epoch
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct FitResult {
    std::vector<EpochLog> log;
    double best_val_macro_f1 = 0.0;
    int best_epoch = 0;  // epoch whose parameters the model ends up holding
};

/// Deterministic training loop: per-epoch shuffle from config.seed, cosine lr
/// stepped per optimizer step, per-epoch validation macro-F1, and
/// best-by-validation parameters restored at the end.
FitResult fit(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& config);

/// Metrics over a dataset in infer mode at the given decision threshold.
MetricsTable evaluate(Model& model, const Dataset& data, double threshold = 0.5);

/// CSV: epoch,step,lr,train_loss,val_macro_f1
std::string training_log_csv(const std::vector<EpochLog>& log);

/// Assemble records [from, to) into a batch tensor and 0/1 target matrix.
void make_batch(const Dataset& ds, const std::vector<size_t>& order, size_t from, size_t to,
                Tensor3& x, Matrix& targets);

}  // namespace ecoscale
