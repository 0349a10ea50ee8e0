#include "pdmkws/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pdmkws/errors.hpp"
#include "pdmkws/parallel.hpp"

namespace pdmkws {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ArgumentError("plateau factor must lie in (0, 1)");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (!(shift_s >= 0.0)) throw ArgumentError("shift range must be non-negative");
  if (workers < 1) throw ArgumentError("workers must be >= 1");
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"betas", {c.beta1, c.beta2}},
          {"epsilon", c.epsilon},
          {"plateau_factor", c.plateau_factor},
          {"plateau_monitor", "valid_accuracy"},
          {"patience", c.patience},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"shift_s", c.shift_s},
          {"seed", c.seed},
          {"augment", c.augment},
          {"loss", "cross_entropy_on_summed_readout"},
          {"encoder", to_string(c.algorithm)},
          {"oversample", to_string(c.oversample)},
          {"workers", c.workers}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("betas")) {
    c.beta1 = j.at("betas").at(0).get<double>();
    c.beta2 = j.at("betas").at(1).get<double>();
  }
  c.epsilon = j.value("epsilon", c.epsilon);
  c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
  c.patience = j.value("patience", c.patience);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.shift_s = j.value("shift_s", c.shift_s);
  c.seed = j.value("seed", c.seed);
  c.augment = j.value("augment", c.augment);
  if (j.contains("encoder")) c.algorithm = parse_encoder_algorithm(j.at("encoder").get<std::string>());
  if (j.contains("oversample")) c.oversample = parse_oversample_method(j.at("oversample").get<std::string>());
  c.workers = j.value("workers", c.workers);
  return c;
}

// ---- optimizer ----------------------------------------------------------------------

template <typename Scalar>
void adamax_step(std::span<Scalar> params, std::span<const Scalar> grads, std::span<Scalar> m, std::span<Scalar> u,
                 long t, double lr, const TrainConfig& cfg) {
  if (grads.size() != params.size() || m.size() != params.size() || u.size() != params.size())
    throw ShapeError("adamax_step: parameter, gradient and moment sizes differ");
  if (t < 1) throw ArgumentError("adamax_step: step counter starts at 1");
  using A = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(params.size());
  Eigen::Map<A> p(params.data(), n), mm(m.data(), n), uu(u.data(), n);
  Eigen::Map<const A> g(grads.data(), n);
  if (!g.allFinite()) {
    Eigen::Index i = 0;
    while (std::isfinite(static_cast<double>(g(i)))) ++i;
    throw TrainingError("non-finite gradient at entry " + std::to_string(i) + " (" +
                        std::to_string(static_cast<double>(g(i))) + ")");
  }
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto step = static_cast<Scalar>(lr / (1.0 - std::pow(cfg.beta1, static_cast<double>(t))));
  mm = b1 * mm + (1 - b1) * g;
  uu = (b2 * uu).max(g.abs());
  p -= step * mm / (uu + static_cast<Scalar>(cfg.epsilon));
}

template <typename Scalar>
Adamax<Scalar>::Adamax(const NetworkState<Scalar>& like) : m_(like.zeros_like()), u_(like.zeros_like()) {}

template <typename Scalar>
void Adamax<Scalar>::step(NetworkState<Scalar>& state, const NetworkState<Scalar>& grads, double lr,
                          const TrainConfig& cfg) {
  ++t_;
  auto p = state.blocks();
  const auto g = grads.blocks();
  auto m = m_.blocks();
  auto u = u_.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    const auto n = static_cast<std::size_t>(std::get<2>(p[b]));
    try {
      adamax_step<Scalar>({std::get<1>(p[b]), n}, {std::get<1>(g[b]), n}, {std::get<1>(m[b]), n},
                          {std::get<1>(u[b]), n}, t_, lr, cfg);
    } catch (const TrainingError& e) {
      throw TrainingError(std::get<0>(p[b]) + ": " + e.what());
    }
  }
}

// ---- schedule -----------------------------------------------------------------------

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience)
    : lr_(lr), factor_(factor), patience_(patience) {
  if (!(factor > 0.0 && factor < 1.0)) throw ArgumentError("plateau factor must lie in (0, 1)");
  if (patience < 1) throw ArgumentError("patience must be >= 1");
}

double PlateauScheduler::step(double acc) {
  if (!best_ || acc > *best_) {
    best_ = acc;
    bad_ = 0;
  } else if (++bad_ >= patience_) {
    lr_ *= factor_;
    ++reductions_;
    bad_ = 0;
  }
  return lr_;
}

// ---- augmentation -------------------------------------------------------------------

PcmSignal shift_signal(const PcmSignal& x, long samples) {
  PcmSignal y;
  y.sample_rate_hz = x.sample_rate_hz;
  const long n = static_cast<long>(x.samples.size());
  y.samples.assign(x.samples.size(), 0.0f);
  const long k = std::clamp(samples, -n, n);
  if (k >= 0)
    std::copy(x.samples.begin(), x.samples.begin() + (n - k), y.samples.begin() + k);
  else
    std::copy(x.samples.begin() - k, x.samples.end(), y.samples.begin());
  return y;
}

PcmSignal augment_shift(const PcmSignal& x, std::mt19937_64& rng, double max_shift_s) {
  std::uniform_real_distribution<double> d(-max_shift_s, max_shift_s);
  return shift_signal(x, std::lround(d(rng) * x.sample_rate_hz));
}

// ---- loops ----------------------------------------------------------------------------

PdmSignal encode_clip(const PcmSignal& pcm, const NetworkSpec& spec, const TrainConfig& cfg) {
  return encode(pcm, spec.alpha, cfg.algorithm, cfg.oversample, 1);
}

namespace {

struct SampleResult {
  NetworkState<float> grads;
  double loss = 0.0;
  bool correct = false;
};

void write_log_header(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kTrainLogHeader << '\n';
}

void append_log(const std::filesystem::path& path, const EpochLog& e) {
  std::ofstream out(path, std::ios::app);
  out.precision(8);
  out << e.epoch << ',' << e.loss << ',' << e.train_acc << ',' << e.valid_acc << ',' << e.lr << ',' << e.spike_rate
      << ',' << e.rsr << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<PdmSignal> encode_all(const std::vector<LabeledUtterance>& items, const NetworkSpec& spec,
                                  const TrainConfig& cfg) {
  std::vector<PdmSignal> out(items.size());
  parallel_for(items.size(), cfg.workers,
               [&](std::size_t i) { out[i] = encode_clip(utterance_signal(items[i]), spec, cfg); });
  return out;
}

bool fits_cache(std::size_t clips, const NetworkSpec& spec, const TrainConfig& cfg) {
  return static_cast<double>(clips) * static_cast<double>(kClipSamples) * spec.alpha <= cfg.cache_limit_bytes;
}

nlohmann::json checkpoint_extra(const Dataset& data, const TrainConfig& cfg, int epoch, double valid) {
  return {{"class_names", data.class_names}, {"train_config", config_to_json(cfg)}, {"epoch", epoch},
          {"valid_accuracy", valid}};
}

EvalResult evaluate_pdm(const NetworkState<float>& state, const std::vector<LabeledUtterance>& split,
                        const std::vector<PdmSignal>* cached, const TrainConfig& cfg, SpikeCounter& total) {
  if (split.empty()) throw ArgumentError("evaluate: split is empty");
  std::vector<int> pred(split.size());
  std::vector<SpikeCounter> counters(split.size());
  parallel_for(split.size(), cfg.workers, [&](std::size_t i) {
    const PdmSignal pdm = cached ? (*cached)[i] : encode_clip(utterance_signal(split[i]), state.spec, cfg);
    const auto t = forward(state, pdm, false);
    pred[i] = predict(t.logits);
    counters[i].add(t);
  });
  EvalResult r;
  for (std::size_t i = 0; i < split.size(); ++i) {
    total.merge(counters[i]);
    r.correct += pred[i] == split[i].label;
  }
  r.total = split.size();
  r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.metrics = total.report(state.spec, r.accuracy);
  r.predictions = std::move(pred);
  return r;
}

}  // namespace

EvalResult evaluate(const NetworkState<float>& state, const std::vector<LabeledUtterance>& split,
                    const TrainConfig& cfg, int batch) {
  if (split.empty()) throw ArgumentError("evaluate: split is empty");
  if (batch < 1) throw ArgumentError("evaluate: batch must be >= 1");
  // batching only bounds how many streams are in flight at once
  EvalResult all;
  SpikeCounter total;
  for (std::size_t lo = 0; lo < split.size(); lo += static_cast<std::size_t>(batch)) {
    const auto hi = std::min(split.size(), lo + static_cast<std::size_t>(batch));
    const std::vector<LabeledUtterance> part(split.begin() + static_cast<long>(lo), split.begin() + static_cast<long>(hi));
    const auto r = evaluate_pdm(state, part, nullptr, cfg, total);
    all.correct += r.correct;
    all.predictions.insert(all.predictions.end(), r.predictions.begin(), r.predictions.end());
  }
  all.total = split.size();
  all.accuracy = 100.0 * static_cast<double>(all.correct) / static_cast<double>(all.total);
  all.metrics = total.report(state.spec, all.accuracy);
  return all;
}

TrainResult train(const NetworkSpec& spec, const TrainConfig& cfg, const Dataset& data, const TrainOptions& opt) {
  cfg.validate();
  spec.validate();
  if (data.train.empty()) throw ArgumentError("train: training split is empty");
  if (data.valid.empty()) throw ArgumentError("train: validation split is empty");
  if (spec.classes != data.classes())
    throw ArgumentError("train: network has " + std::to_string(spec.classes) + " classes, dataset " +
                        std::to_string(data.classes()));

  const auto start = std::chrono::steady_clock::now();
  TrainResult res;
  NetworkState<float> state = build<float>(spec);
  res.best = state;
  Adamax<float> adamax(state);
  PlateauScheduler sched(cfg);
  std::mt19937_64 rng(cfg.seed);

  std::vector<PdmSignal> train_cache, valid_cache;
  if (!cfg.augment && fits_cache(data.train.size(), spec, cfg)) train_cache = encode_all(data.train, spec, cfg);
  const bool cache_valid = fits_cache(data.valid.size(), spec, cfg);
  if (cache_valid) valid_cache = encode_all(data.valid, spec, cfg);
  if (!opt.log.empty()) write_log_header(opt.log);

  auto fail = [&](const std::string& what) {
    if (!opt.checkpoint.empty()) {
      auto diag = opt.checkpoint;
      diag += ".nan";
      save_checkpoint(state, {{"diagnostic", what}, {"class_names", data.class_names}}, diag);
      throw TrainingError(what + "; diagnostic checkpoint written to " + diag.string());
    }
    throw TrainingError(what);
  };

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = sched.lr();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += bs) {
      const auto n = std::min(bs, order.size() - lo);
      // shifts drawn up front so the stream does not depend on thread timing
      std::vector<long> shifts(n, 0);
      if (cfg.augment) {
        std::uniform_real_distribution<double> d(-cfg.shift_s, cfg.shift_s);
        for (auto& s : shifts) s = std::lround(d(rng) * kClipRateHz);
      }
      std::vector<SampleResult> out(n);
      parallel_for(n, cfg.workers, [&](std::size_t j) {
        const std::size_t i = order[lo + j];
        PdmSignal pdm;
        if (!train_cache.empty())
          pdm = train_cache[i];
        else
          pdm = encode_clip(shift_signal(utterance_signal(data.train[i]), shifts[j]), spec, cfg);
        const auto t = forward(state, pdm);
        Vec<float> dl;
        out[j].loss = cross_entropy(t.logits, data.train[i].label, &dl);
        out[j].correct = predict(t.logits) == data.train[i].label;
        out[j].grads = backward(state, t, dl);
      });
      NetworkState<float> g = std::move(out[0].grads);
      double batch_loss = out[0].loss;
      correct += out[0].correct;
      for (std::size_t j = 1; j < n; ++j) {
        g += out[j].grads;
        batch_loss += out[j].loss;
        correct += out[j].correct;
      }
      g *= 1.0f / static_cast<float>(n);
      if (!std::isfinite(batch_loss))
        fail("non-finite loss in epoch " + std::to_string(epoch) + " batch " + std::to_string(lo / bs));
      if (epoch == 1 && lo == 0) res.initial_loss = batch_loss / static_cast<double>(n);
      loss_sum += batch_loss;
      try {
        adamax.step(state, g, lr, cfg);
      } catch (const TrainingError& e) {
        fail(std::string(e.what()) + " in epoch " + std::to_string(epoch));
      }
    }

    SpikeCounter counter;
    const auto v = evaluate_pdm(state, data.valid, cache_valid ? &valid_cache : nullptr, cfg, counter);
    EpochLog e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(order.size());
    e.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(order.size());
    e.valid_acc = v.accuracy;
    e.lr = lr;
    e.spike_rate = v.metrics.spike_rate;
    e.rsr = v.metrics.rsr;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    res.log.push_back(e);
    if (!opt.log.empty()) append_log(opt.log, e);
    if (e.valid_acc > res.best_valid) {
      res.best_valid = e.valid_acc;
      res.best_epoch = epoch;
      res.best = state;
      if (!opt.checkpoint.empty())
        save_checkpoint(state, checkpoint_extra(data, cfg, epoch, e.valid_acc), opt.checkpoint);
    }
    sched.step(e.valid_acc);
    if (opt.on_epoch) opt.on_epoch(e);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cfg.time_budget_s > 0.0 && elapsed >= cfg.time_budget_s && epoch < cfg.epochs) {
      res.stopped_by_budget = true;
      break;
    }
  }
  return res;
}

template void adamax_step<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>, long,
                                 double, const TrainConfig&);
template void adamax_step<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                  long, double, const TrainConfig&);
template class Adamax<float>;
template class Adamax<double>;

}  // namespace pdmkws
