#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdmkws/pdm_codec.hpp"
#include "pdmkws/snn_core.hpp"

namespace pdmkws {

/// How PDM bits enter layer 1: 0/1 as stored, or mapped to -1/+1.
enum class InputPolarity { unipolar, bipolar };
const char* to_string(InputPolarity p);
InputPolarity parse_input_polarity(const std::string& name);

inline constexpr int kHiddenLayers = 4;

/// Five-layer keyword network: conv(1->H, K=3a, S=floor(3a/2)), three conv(H->H,
/// K=3, S=3, D=2) with optional fan-in masks, recurrence on layers 3 and 4,
/// per-channel delays after every hidden layer, dense H->classes leaky readout.
struct NetworkSpec {
  int alpha = 64;
  int hidden_channels = 128;
  int classes = 35;
  bool recurrence = true;
  bool delays = true;
  int fan_in = 128;
  std::uint64_t weight_seed = 1;
  std::uint64_t delay_seed = 2;
  std::uint64_t mask_seed = 3;
  InputPolarity polarity = InputPolarity::unipolar;
  NeuronParams neuron;
  std::uint32_t base_rate_hz = 16000;
  // Fixed (untrained) scales. Hidden conv currents are multiplied by
  // synaptic_gain; with theta = 1 that is a firing threshold of 1/gain in
  // units of the raw conv output.
  double synaptic_gain = 8.0;
  double readout_gain = 16.0;  // see readout_scale()

  ConvGeometry geometry(int layer) const;
  void validate() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Exact trainable-scalar count: layer 1 H*3a + H; layers 2-4 3(H*F*3 + H);
/// recurrence 2(H*H + H); readout H*classes + classes.
std::int64_t count_params(const NetworkSpec& spec);

/// Sparsity percentage (0, 50, 75, 88, 94) to fan-in for `hidden` channels.
int fan_in_for_sparsity(int percent, int hidden = 128);
int sparsity_for_fan_in(int fan_in, int hidden = 128);

/// Hidden-layer output lengths for an input of `input_bits` PDM samples.
std::array<long, kHiddenLayers> layer_lengths(const NetworkSpec& spec, long input_bits);

/// Fixed factor on the readout current: readout_gain / (layer-4 steps of a
/// one-second clip), so the summed logits are readout_gain x time-averaged drive.
double readout_scale(const NetworkSpec& spec);

/// Per-layer (2..4) Cout x Cin 0/1 masks with exactly fan_in ones per row.
template <typename Scalar>
std::array<Grid<Scalar>, 3> make_masks(int channels, int fan_in, std::uint64_t seed);

enum class AblationRow { conv, conv_rec, conv_rec_delay, conv_rec_delay_aug };
const char* to_string(AblationRow row);

/// Architecture of an ablation row, and whether its training uses time-shift
/// augmentation.
std::pair<NetworkSpec, bool> ablation_spec(AblationRow row, NetworkSpec base = {});

template <typename Scalar>
struct NetworkState {
  NetworkSpec spec;
  std::array<Grid<Scalar>, kHiddenLayers> conv_weights;  // Cout x (K*Cin)
  std::array<Vec<Scalar>, kHiddenLayers> conv_bias;
  std::array<Grid<Scalar>, kHiddenLayers> masks;  // Cout x Cin; empty = dense (always for layer 1)
  std::array<Grid<Scalar>, 2> rec_weights;        // layers 3, 4; empty without recurrence
  std::array<Vec<Scalar>, 2> rec_bias;
  Grid<Scalar> out_weights;  // classes x H
  Vec<Scalar> out_bias;
  std::array<std::vector<int>, kHiddenLayers> delays;  // empty without delays

  /// Unmasked weights and biases.
  std::int64_t trainable_count() const;

  /// Every stored block as (name, data, size), in checkpoint order.
  std::vector<std::tuple<std::string, Scalar*, long>> blocks();
  std::vector<std::tuple<std::string, const Scalar*, long>> blocks() const;

  /// Same shapes, all zeros; used as a gradient accumulator.
  NetworkState zeros_like() const;
  NetworkState& operator+=(const NetworkState& other);
  NetworkState& operator*=(Scalar s);

  template <typename Other>
  NetworkState<Other> cast() const;
};

/// Seeded construction. Weights and biases uniform in +-sqrt(1/fan_in) with
/// fan_in = unmasked inputs x taps.
/// The readout starts at zero, so every class starts equally likely.
template <typename Scalar>
NetworkState<Scalar> build(const NetworkSpec& spec);

template <typename Scalar>
struct ForwardTrace {
  bool recorded = false;
  Grid<Scalar> input;
  std::array<Grid<Scalar>, kHiddenLayers> membrane;
  std::array<Grid<Scalar>, kHiddenLayers> spikes;   // before the delay
  std::array<Grid<Scalar>, kHiddenLayers> outputs;  // after the delay, fed forward
  Grid<Scalar> readout_membrane;
  Vec<Scalar> logits;
  double duration_s = 0.0;
  std::array<double, kHiddenLayers> step_rate_hz{};
};

template <typename Scalar>
Grid<Scalar> pdm_to_input(const PdmSignal& pdm, InputPolarity polarity);

/// logits[c] = sum_t V5(c, t). `keep_trace` retains what backward needs.
template <typename Scalar>
ForwardTrace<Scalar> forward(const NetworkState<Scalar>& state, const PdmSignal& pdm, bool keep_trace = true);

/// Parameter gradients given dL/dlogits. StateError when the trace is empty.
template <typename Scalar>
NetworkState<Scalar> backward(const NetworkState<Scalar>& state, const ForwardTrace<Scalar>& trace,
                              const Vec<Scalar>& grad_logits);

/// Softmax cross-entropy; writes dL/dlogits when `grad` is given.
template <typename Scalar>
double cross_entropy(const Vec<Scalar>& logits, int label, Vec<Scalar>* grad = nullptr);

template <typename Scalar>
int predict(const Vec<Scalar>& logits);

// ---- checkpoint -----------------------------------------------------------------

inline constexpr int kCheckpointSchema = 1;

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

/// "PKWS", u32 schema, u64 header length, JSON header, then every block as raw
/// little-endian float32 in declared order. Masks are rebuilt from the seed and
/// checked against the stored zeros.
void save_checkpoint(const NetworkState<float>& state, const nlohmann::json& extra,
                     const std::filesystem::path& path);

struct Checkpoint {
  NetworkState<float> state;
  nlohmann::json header;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pdmkws
