#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdmkws/kws_net.hpp"

namespace pdmkws {

/// Efficiency figures of one network on one evaluated split.
struct MetricsReport {
  int alpha = 1;
  int sparsity = 0;
  std::int64_t params = 0;
  double isr = 0.0;         // input samples per second
  double spike_rate = 0.0;  // hidden-layer spikes per second of audio
  double rsr = 0.0;         // spikes per input sample
  double active_fraction = 0.0;  // rsr / hidden neurons
  std::optional<double> accuracy;  // percent
  std::array<double, kHiddenLayers> layer_spike_rate{};
  std::size_t clips = 0;

  /// rsr * isr reproduces spike_rate to rounding; isr = base rate * alpha.
  bool consistent() const;
};

double input_sampling_rate(int alpha, std::uint32_t base_rate_hz = 16000);

/// Total spikes in the rasters divided by the audio duration.
template <typename Scalar>
double spike_rate(const std::array<Grid<Scalar>, kHiddenLayers>& spikes, double duration_s);

double relative_spike_rate(double sr, double isr);

/// Pools spike counts over many clips (rates are total spikes / total seconds).
class SpikeCounter {
 public:
  template <typename Scalar>
  void add(const ForwardTrace<Scalar>& trace);
  void merge(const SpikeCounter& other);
  MetricsReport report(const NetworkSpec& spec, std::optional<double> accuracy = {}) const;

 private:
  std::array<double, kHiddenLayers> spikes_{};
  double seconds_ = 0.0;
  std::size_t clips_ = 0;
};

/// Build a report from pooled totals. ArgumentError when duration <= 0 and spikes > 0.
MetricsReport make_report(const NetworkSpec& spec, const std::array<double, kHiddenLayers>& layer_spikes,
                          double total_seconds, std::optional<double> accuracy = {}, std::size_t clips = 0);

/// `alpha,sparsity,params,isr,sr,rsr`
void write_metrics_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path);
std::string metrics_csv(const std::vector<MetricsReport>& reports);

struct SweepRow {
  int key = 0;  // alpha or sparsity
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
};
/// `<key>,accuracy_mean,accuracy_std`, key being "alpha" or "sparsity".
void write_sweep_csv(const std::string& key, const std::vector<SweepRow>& rows, const std::filesystem::path& path);
/// Sample mean and standard deviation (n - 1); std is 0 for a single value.
SweepRow summarize(int key, const std::vector<double>& accuracies);

// ---- encoder throughput -----------------------------------------------------------

struct BenchRow {
  std::string variant;  // seq_mod, seq_if, par, par_chunked
  int workers = 1;
  double median_s = 0.0;
  double samples_per_s = 0.0;
  double speedup = 0.0;  // vs seq_mod
};

struct BenchReport {
  std::size_t length = 0;
  int repeats = 0;
  std::size_t chunk_len = 0;
  bool gate_passed = false;  // par family bit-identical, mod/if bracketed
  std::vector<BenchRow> rows;
  double best_chunked_speedup = 0.0;  // par_chunked at the most workers
};

/// Times each encoder on a seeded random unipolar signal after a correctness
/// gate; one warm-up run, then the median of `repeats`. Throws StateError if the
/// gate fails (nothing is timed).
BenchReport bench_codec(std::size_t length, int repeats, const std::vector<int>& workers,
                        std::size_t chunk_len = 65536, std::uint64_t seed = 1);
/// `variant,workers,length,median_s,samples_per_s,speedup`
void write_bench_csv(const BenchReport& report, const std::filesystem::path& path);

inline constexpr double kThroughputFloor = 5.0;

}  // namespace pdmkws
