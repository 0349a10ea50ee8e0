#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pdmkws {

/// Activity grid, one row per channel and one column per time step.
template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// heaviside: S = H(V - theta), surrogate derivative in reverse mode.
/// relaxed: S = u / (1 + k|u|) with u = V - theta, whose exact derivative is the
/// surrogate. Used as the differentiable reference for gradient checks.
enum class SpikeMode { heaviside, relaxed };

struct NeuronParams {
  double beta = 0.95;
  double theta = 1.0;
  double slope = 10.0;
  SpikeMode mode = SpikeMode::heaviside;

  void validate() const;
  friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

/// 1 / (1 + k|v - theta|)^2
double surrogate_spike_grad(double v, const NeuronParams& params);

template <typename Scalar>
Grid<Scalar> spike_fn(const Grid<Scalar>& membrane, const NeuronParams& params);

template <typename Scalar>
Grid<Scalar> spike_fn_grad(const Grid<Scalar>& membrane, const NeuronParams& params);

// ---- convolution ----------------------------------------------------------------

struct ConvGeometry {
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
};

/// floor((L - D(K-1) - 1)/S) + 1; ShapeError when the input is too short.
long conv_output_length(long input_length, const ConvGeometry& g);

/// (K*Cin) x L' patch matrix; row k*Cin + ci holds input(ci, t*S + k*D).
template <typename Scalar>
Grid<Scalar> im2col(const Grid<Scalar>& input, const ConvGeometry& g);

/// Cross-correlation. `weights` is Cout x (K*Cin) in the im2col row order; `mask`
/// (Cout x Cin, 0/1) or empty for a dense layer. Masked taps act as exact zeros
/// whatever value is stored.
template <typename Scalar>
Grid<Scalar> conv1d_forward(const Grid<Scalar>& input, const Grid<Scalar>& weights, const Vec<Scalar>& bias,
                            const ConvGeometry& g, const Grid<Scalar>& mask = Grid<Scalar>());

template <typename Scalar>
struct ConvGradients {
  Grid<Scalar> weights;
  Vec<Scalar> bias;
  Grid<Scalar> input;  // empty unless requested
};

template <typename Scalar>
ConvGradients<Scalar> conv1d_backward(const Grid<Scalar>& input, const Grid<Scalar>& weights,
                                      const ConvGeometry& g, const Grid<Scalar>& grad_output,
                                      const Grid<Scalar>& mask = Grid<Scalar>(), bool input_grad = true);

/// mask expanded to the weight layout (Cout x K*Cin)
template <typename Scalar>
Grid<Scalar> expand_mask(const Grid<Scalar>& mask, int kernel);

// ---- neurons --------------------------------------------------------------------

/// V[t] = beta V[t-1] + (1 - beta) I[t], V[-1] = 0, as a blocked two-pass scan:
/// blocks integrate from zero independently, then block carries are folded in.
template <typename Scalar>
Grid<Scalar> leaky_integrate(const Grid<Scalar>& current, double beta, int workers = 1);

/// Step-by-step loop of the same recurrence.
template <typename Scalar>
Grid<Scalar> leaky_integrate_sequential(const Grid<Scalar>& current, double beta);

/// Adjoint of leaky_integrate: gradient w.r.t. the current given the gradient
/// w.r.t. the membrane.
template <typename Scalar>
Grid<Scalar> leaky_integrate_backward(const Grid<Scalar>& grad_membrane, double beta);

template <typename Scalar>
struct NeuronOutput {
  Grid<Scalar> spikes;
  Grid<Scalar> membrane;
};

/// Non-resetting leaky membrane and pointwise spike function.
template <typename Scalar>
NeuronOutput<Scalar> paralif_forward(const Grid<Scalar>& current, const NeuronParams& params, int workers = 1);

template <typename Scalar>
Grid<Scalar> paralif_backward(const Grid<Scalar>& membrane, const Grid<Scalar>& grad_spikes,
                              const NeuronParams& params);

/// Sequential: I_eff[t] = I[t] + W_r ReLU(V[t-1]) + b_r, then the ParaLIF step.
template <typename Scalar>
NeuronOutput<Scalar> paralif_recurrent_forward(const Grid<Scalar>& current, const Grid<Scalar>& rec_weights,
                                               const Vec<Scalar>& rec_bias, const NeuronParams& params);

template <typename Scalar>
struct RecurrentGradients {
  Grid<Scalar> current;
  Grid<Scalar> weights;
  Vec<Scalar> bias;
};

/// Full unroll through time.
template <typename Scalar>
RecurrentGradients<Scalar> paralif_recurrent_backward(const Grid<Scalar>& membrane, const Grid<Scalar>& grad_spikes,
                                                      const Grid<Scalar>& rec_weights, const NeuronParams& params);

/// Same unroll, starting from a gradient taken directly w.r.t. the membrane.
template <typename Scalar>
RecurrentGradients<Scalar> recurrent_membrane_backward(const Grid<Scalar>& membrane,
                                                       const Grid<Scalar>& grad_membrane,
                                                       const Grid<Scalar>& rec_weights, double beta);

/// Leaky integrator readout, no spikes.
template <typename Scalar>
Grid<Scalar> li_forward(const Grid<Scalar>& current, const NeuronParams& params);

template <typename Scalar>
Grid<Scalar> li_backward(const Grid<Scalar>& grad_membrane, const NeuronParams& params);

// ---- delays ---------------------------------------------------------------------

inline constexpr int kMaxDelay = 30;

/// Per-channel integer delays, uniform in [0, max_delay].
std::vector<int> draw_delays(int channels, std::uint64_t seed, int max_delay = kMaxDelay);

/// out(c, t) = in(c, t - d_c); leading steps zero, tail dropped.
template <typename Scalar>
Grid<Scalar> apply_delay(const Grid<Scalar>& spikes, std::span<const int> delays);

/// Shift back: grad_in(c, t) = grad_out(c, t + d_c).
template <typename Scalar>
Grid<Scalar> apply_delay_backward(const Grid<Scalar>& grad_output, std::span<const int> delays);

}  // namespace pdmkws
