#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmkws/datasets.hpp"
#include "pdmkws/errors.hpp"
#include "pdmkws/kws_net.hpp"
#include "pdmkws/metrics_bench.hpp"
#include "pdmkws/pdm_codec.hpp"

namespace pdmkws {

struct TrainConfig {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double plateau_factor = 0.7;
  int patience = 10;
  int epochs = 150;
  int batch_size = 32;
  double shift_s = 0.3;  // augmentation range is [-shift_s, +shift_s]
  std::uint64_t seed = 0;
  bool augment = false;
  EncoderAlgorithm algorithm = EncoderAlgorithm::par;
  OversampleMethod oversample = OversampleMethod::hold;
  int workers = 1;
  double time_budget_s = 0.0;  // stop after the epoch that crosses it; 0 = none
  double cache_limit_bytes = 2e9;  // PDM cache for non-augmented clips

  void validate() const;
};

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Inverse of config_to_json; absent keys keep their defaults.
TrainConfig config_from_json(const nlohmann::json& j);

// ---- optimizer ----------------------------------------------------------------------

/// One Adamax update in place, with t the 1-based step:
///   m = b1 m + (1-b1) g;  u = max(b2 u, |g|);  p -= lr/(1-b1^t) * m/(u+eps)
/// Throws TrainingError naming the first non-finite gradient entry.
template <typename Scalar>
void adamax_step(std::span<Scalar> params, std::span<const Scalar> grads, std::span<Scalar> m, std::span<Scalar> u,
                 long t, double lr, const TrainConfig& cfg);

template <typename Scalar>
class Adamax {
 public:
  explicit Adamax(const NetworkState<Scalar>& like);
  /// Applies `grads` to every block of `state`.
  void step(NetworkState<Scalar>& state, const NetworkState<Scalar>& grads, double lr, const TrainConfig& cfg);
  long steps() const { return t_; }

 private:
  NetworkState<Scalar> m_, u_;
  long t_ = 0;
};

// ---- schedule -----------------------------------------------------------------------

/// Reduce-on-plateau on validation accuracy: a new strict maximum resets the
/// counter, otherwise it counts up; at `patience` the rate is multiplied by
/// `factor` and the counter restarts.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, int patience);
  explicit PlateauScheduler(const TrainConfig& cfg) : PlateauScheduler(cfg.learning_rate, cfg.plateau_factor, cfg.patience) {}
  /// Record one epoch; returns the rate for the next epoch.
  double step(double valid_accuracy);
  double lr() const { return lr_; }
  int reductions() const { return reductions_; }

 private:
  double lr_, factor_;
  int patience_;
  std::optional<double> best_;
  int bad_ = 0;
  int reductions_ = 0;
};

// ---- augmentation -------------------------------------------------------------------

/// Shift by `samples` (positive delays the signal), zero-filled, same length.
PcmSignal shift_signal(const PcmSignal& x, long samples);
/// Shift by round(s * rate) with s uniform in [-max_shift_s, max_shift_s].
PcmSignal augment_shift(const PcmSignal& x, std::mt19937_64& rng, double max_shift_s = 0.3);

// ---- loops ----------------------------------------------------------------------------

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;  // percent, on the training pass itself
  double valid_acc = 0.0;
  double lr = 0.0;  // rate used during this epoch
  double spike_rate = 0.0;  // validation pass
  double rsr = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kTrainLogHeader = "epoch,loss,train_acc,valid_acc,lr,spike_rate,rsr";

struct TrainOptions {
  std::filesystem::path checkpoint;  // best-validation checkpoint; empty = keep in memory only
  std::filesystem::path log;         // CSV; empty = none
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  NetworkState<float> best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_valid = -1.0;
  double initial_loss = 0.0;  // mean loss of the first batch before any update
  bool stopped_by_budget = false;
};

/// Seeded training run. Weights come from spec's seeds, batch order and
/// augmentation from cfg.seed. Gradients are summed per batch in sample order,
/// so results do not depend on cfg.workers. On a non-finite loss or gradient a
/// diagnostic checkpoint is written next to the checkpoint path (".nan") and
/// TrainingError is thrown.
TrainResult train(const NetworkSpec& spec, const TrainConfig& cfg, const Dataset& data, const TrainOptions& opt = {});

struct EvalResult {
  double accuracy = 0.0;  // percent
  std::size_t correct = 0;
  std::size_t total = 0;
  MetricsReport metrics;
  std::vector<int> predictions;
};

/// Accuracy and spike metrics on a list of utterances (never augmented).
/// `batch` only groups work between threads. ArgumentError on an empty split.
EvalResult evaluate(const NetworkState<float>& state, const std::vector<LabeledUtterance>& split,
                    const TrainConfig& cfg, int batch = 32);

/// The PDM stream a clip is fed as.
PdmSignal encode_clip(const PcmSignal& pcm, const NetworkSpec& spec, const TrainConfig& cfg);

}  // namespace pdmkws
