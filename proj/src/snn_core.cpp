#include "pdmkws/snn_core.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pdmkws/errors.hpp"
#include "pdmkws/parallel.hpp"

namespace pdmkws {

void NeuronParams::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw ArgumentError("neuron: beta must lie in (0, 1)");
  if (!(theta > 0.0)) throw ArgumentError("neuron: theta must be positive");
  if (!(slope > 0.0)) throw ArgumentError("neuron: surrogate slope must be positive");
}

double surrogate_spike_grad(double v, const NeuronParams& params) {
  const double d = 1.0 + params.slope * std::abs(v - params.theta);
  return 1.0 / (d * d);
}

template <typename Scalar>
Grid<Scalar> spike_fn(const Grid<Scalar>& membrane, const NeuronParams& params) {
  const auto theta = static_cast<Scalar>(params.theta);
  if (params.mode == SpikeMode::heaviside)
    return (membrane.array() >= theta).template cast<Scalar>().matrix();
  const auto k = static_cast<Scalar>(params.slope);
  const auto u = (membrane.array() - theta);
  return (u / (Scalar(1) + k * u.abs())).matrix();
}

template <typename Scalar>
Grid<Scalar> spike_fn_grad(const Grid<Scalar>& membrane, const NeuronParams& params) {
  const auto theta = static_cast<Scalar>(params.theta);
  const auto k = static_cast<Scalar>(params.slope);
  return (Scalar(1) + k * (membrane.array() - theta).abs()).square().inverse().matrix();
}

// ---- convolution ----------------------------------------------------------------

long conv_output_length(long input_length, const ConvGeometry& g) {
  if (g.kernel < 1 || g.stride < 1 || g.dilation < 1) throw ArgumentError("conv1d: kernel, stride, dilation must be >= 1");
  const long span = static_cast<long>(g.dilation) * (g.kernel - 1) + 1;
  if (input_length < span)
    throw ShapeError("conv1d: input length " + std::to_string(input_length) + " shorter than receptive field " +
                     std::to_string(span));
  return (input_length - span) / g.stride + 1;
}

template <typename Scalar>
Grid<Scalar> im2col(const Grid<Scalar>& input, const ConvGeometry& g) {
  const long cin = input.rows();
  const long out_len = conv_output_length(input.cols(), g);
  Grid<Scalar> cols(cin * g.kernel, out_len);
  if (cin == 1) {
    for (long t = 0; t < out_len; ++t) {
      const Scalar* src = input.data() + t * g.stride;
      Scalar* dst = cols.col(t).data();
      for (int k = 0; k < g.kernel; ++k) dst[k] = src[k * g.dilation];
    }
    return cols;
  }
  for (long t = 0; t < out_len; ++t)
    for (int k = 0; k < g.kernel; ++k)
      cols.block(k * cin, t, cin, 1) = input.col(t * g.stride + static_cast<long>(k) * g.dilation);
  return cols;
}

namespace {

template <typename Scalar>
Grid<Scalar> col2im(const Grid<Scalar>& cols, const ConvGeometry& g, long cin, long length) {
  Grid<Scalar> out = Grid<Scalar>::Zero(cin, length);
  for (long t = 0; t < cols.cols(); ++t)
    for (int k = 0; k < g.kernel; ++k)
      out.col(t * g.stride + static_cast<long>(k) * g.dilation) += cols.block(k * cin, t, cin, 1);
  return out;
}

template <typename Scalar>
void check_conv_shapes(const Grid<Scalar>& input, const Grid<Scalar>& weights, const ConvGeometry& g,
                       const Grid<Scalar>& mask) {
  if (weights.cols() != input.rows() * g.kernel)
    throw ShapeError("conv1d: weights have " + std::to_string(weights.cols()) + " columns, expected K*Cin = " +
                     std::to_string(input.rows() * g.kernel));
  if (mask.size() != 0 && (mask.rows() != weights.rows() || mask.cols() != input.rows()))
    throw ShapeError("conv1d: mask must be Cout x Cin");
}

}  // namespace

template <typename Scalar>
Grid<Scalar> expand_mask(const Grid<Scalar>& mask, int kernel) {
  return mask.replicate(1, kernel);
}

template <typename Scalar>
Grid<Scalar> conv1d_forward(const Grid<Scalar>& input, const Grid<Scalar>& weights, const Vec<Scalar>& bias,
                            const ConvGeometry& g, const Grid<Scalar>& mask) {
  check_conv_shapes(input, weights, g, mask);
  if (bias.size() != weights.rows()) throw ShapeError("conv1d: bias length must equal Cout");
  const Grid<Scalar> cols = im2col(input, g);
  Grid<Scalar> out(weights.rows(), cols.cols());
  if (mask.size() == 0)
    out.noalias() = weights * cols;
  else
    out.noalias() = weights.cwiseProduct(expand_mask(mask, g.kernel)) * cols;
  out.colwise() += bias;
  return out;
}

template <typename Scalar>
ConvGradients<Scalar> conv1d_backward(const Grid<Scalar>& input, const Grid<Scalar>& weights,
                                      const ConvGeometry& g, const Grid<Scalar>& grad_output,
                                      const Grid<Scalar>& mask, bool input_grad) {
  check_conv_shapes(input, weights, g, mask);
  const Grid<Scalar> cols = im2col(input, g);
  if (grad_output.rows() != weights.rows() || grad_output.cols() != cols.cols())
    throw ShapeError("conv1d_backward: upstream gradient shape mismatch");
  ConvGradients<Scalar> out;
  out.weights.noalias() = grad_output * cols.transpose();
  out.bias = grad_output.rowwise().sum();
  if (mask.size() == 0) {
    if (input_grad) out.input = col2im<Scalar>(weights.transpose() * grad_output, g, input.rows(), input.cols());
  } else {
    const Grid<Scalar> m = expand_mask(mask, g.kernel);
    out.weights = out.weights.cwiseProduct(m);
    if (input_grad)
      out.input = col2im<Scalar>(weights.cwiseProduct(m).transpose() * grad_output, g, input.rows(), input.cols());
  }
  return out;
}

// ---- neurons --------------------------------------------------------------------

namespace {
constexpr long kScanBlock = 512;
}

template <typename Scalar>
Grid<Scalar> leaky_integrate_sequential(const Grid<Scalar>& current, double beta) {
  const auto b = static_cast<Scalar>(beta);
  const auto a = static_cast<Scalar>(1.0 - beta);
  Grid<Scalar> v(current.rows(), current.cols());
  if (current.cols() == 0) return v;
  v.col(0) = a * current.col(0);
  for (long t = 1; t < current.cols(); ++t) v.col(t) = b * v.col(t - 1) + a * current.col(t);
  return v;
}

template <typename Scalar>
Grid<Scalar> leaky_integrate(const Grid<Scalar>& current, double beta, int workers) {
  const long n = current.cols();
  const auto b = static_cast<Scalar>(beta);
  const auto a = static_cast<Scalar>(1.0 - beta);
  Grid<Scalar> v(current.rows(), n);
  const long blocks = (n + kScanBlock - 1) / kScanBlock;
  // pass 1: every block from a zero membrane
  parallel_for(static_cast<std::size_t>(blocks), workers, [&](std::size_t blk) {
    const long lo = static_cast<long>(blk) * kScanBlock;
    const long hi = std::min(n, lo + kScanBlock);
    v.col(lo) = a * current.col(lo);
    for (long t = lo + 1; t < hi; ++t) v.col(t) = b * v.col(t - 1) + a * current.col(t);
  });
  if (blocks <= 1) return v;
  // block-end carries in order, then the fix-up V[lo + j] += beta^(j+1) * carry
  const Scalar full_decay = static_cast<Scalar>(std::pow(beta, static_cast<double>(kScanBlock)));
  Grid<Scalar> carry(current.rows(), blocks);
  carry.col(0).setZero();
  for (long blk = 1; blk < blocks; ++blk)
    carry.col(blk) = v.col(blk * kScanBlock - 1) + full_decay * carry.col(blk - 1);
  parallel_for(static_cast<std::size_t>(blocks - 1), workers, [&](std::size_t i) {
    const long blk = static_cast<long>(i) + 1;
    const long lo = blk * kScanBlock;
    const long hi = std::min(n, lo + kScanBlock);
    double p = beta;
    for (long t = lo; t < hi; ++t, p *= beta) v.col(t) += static_cast<Scalar>(p) * carry.col(blk);
  });
  return v;
}

template <typename Scalar>
Grid<Scalar> leaky_integrate_backward(const Grid<Scalar>& grad_membrane, double beta) {
  const auto b = static_cast<Scalar>(beta);
  const auto a = static_cast<Scalar>(1.0 - beta);
  Grid<Scalar> g(grad_membrane.rows(), grad_membrane.cols());
  const long n = grad_membrane.cols();
  if (n == 0) return g;
  g.col(n - 1) = grad_membrane.col(n - 1);
  for (long t = n - 2; t >= 0; --t) g.col(t) = grad_membrane.col(t) + b * g.col(t + 1);
  g *= a;
  return g;
}

template <typename Scalar>
NeuronOutput<Scalar> paralif_forward(const Grid<Scalar>& current, const NeuronParams& params, int workers) {
  NeuronOutput<Scalar> out;
  out.membrane = leaky_integrate(current, params.beta, workers);
  out.spikes = spike_fn(out.membrane, params);
  return out;
}

template <typename Scalar>
Grid<Scalar> paralif_backward(const Grid<Scalar>& membrane, const Grid<Scalar>& grad_spikes,
                              const NeuronParams& params) {
  if (membrane.rows() != grad_spikes.rows() || membrane.cols() != grad_spikes.cols())
    throw ShapeError("paralif_backward: gradient shape mismatch");
  return leaky_integrate_backward<Scalar>(grad_spikes.cwiseProduct(spike_fn_grad(membrane, params)), params.beta);
}

template <typename Scalar>
NeuronOutput<Scalar> paralif_recurrent_forward(const Grid<Scalar>& current, const Grid<Scalar>& rec_weights,
                                               const Vec<Scalar>& rec_bias, const NeuronParams& params) {
  const long c = current.rows();
  if (rec_weights.rows() != c || rec_weights.cols() != c || rec_bias.size() != c)
    throw ShapeError("paralif_recurrent_forward: recurrent weights must be C x C");
  const auto b = static_cast<Scalar>(params.beta);
  const auto a = static_cast<Scalar>(1.0 - params.beta);
  NeuronOutput<Scalar> out;
  out.membrane.resize(c, current.cols());
  Vec<Scalar> prev = Vec<Scalar>::Zero(c);
  Vec<Scalar> drive(c);
  for (long t = 0; t < current.cols(); ++t) {
    drive.noalias() = rec_weights * prev.cwiseMax(Scalar(0));
    drive += current.col(t) + rec_bias;
    prev = b * prev + a * drive;
    out.membrane.col(t) = prev;
  }
  out.spikes = spike_fn(out.membrane, params);
  return out;
}

template <typename Scalar>
RecurrentGradients<Scalar> recurrent_membrane_backward(const Grid<Scalar>& membrane, const Grid<Scalar>& local,
                                                       const Grid<Scalar>& rec_weights, double beta) {
  if (membrane.rows() != local.rows() || membrane.cols() != local.cols())
    throw ShapeError("recurrent backward: gradient shape mismatch");
  const long c = membrane.rows();
  const long n = membrane.cols();
  const auto b = static_cast<Scalar>(beta);
  const auto a = static_cast<Scalar>(1.0 - beta);
  RecurrentGradients<Scalar> out;
  out.current.resize(c, n);
  // g_next is dL/dV[t+1]; V[t] feeds V[t+1] directly (beta) and through ReLU into I_eff[t+1]
  Vec<Scalar> g_next = Vec<Scalar>::Zero(c);
  Vec<Scalar> back(c);
  for (long t = n - 1; t >= 0; --t) {
    back.noalias() = rec_weights.transpose() * (a * g_next);
    Vec<Scalar> g = local.col(t) + b * g_next;
    g += (membrane.col(t).array() > Scalar(0)).select(back, Scalar(0));
    out.current.col(t) = a * g;
    g_next = g;
  }
  // I_eff[t] sees ReLU(V[t-1]); column 0 sees the zero initial membrane
  Grid<Scalar> relu_prev = Grid<Scalar>::Zero(c, n);
  if (n > 1) relu_prev.rightCols(n - 1) = membrane.leftCols(n - 1).cwiseMax(Scalar(0));
  out.weights.noalias() = out.current * relu_prev.transpose();
  out.bias = out.current.rowwise().sum();
  return out;
}

template <typename Scalar>
RecurrentGradients<Scalar> paralif_recurrent_backward(const Grid<Scalar>& membrane, const Grid<Scalar>& grad_spikes,
                                                      const Grid<Scalar>& rec_weights, const NeuronParams& params) {
  if (membrane.rows() != grad_spikes.rows() || membrane.cols() != grad_spikes.cols())
    throw ShapeError("paralif_recurrent_backward: gradient shape mismatch");
  return recurrent_membrane_backward<Scalar>(membrane, grad_spikes.cwiseProduct(spike_fn_grad(membrane, params)),
                                             rec_weights, params.beta);
}

template <typename Scalar>
Grid<Scalar> li_forward(const Grid<Scalar>& current, const NeuronParams& params) {
  return leaky_integrate(current, params.beta);
}

template <typename Scalar>
Grid<Scalar> li_backward(const Grid<Scalar>& grad_membrane, const NeuronParams& params) {
  return leaky_integrate_backward(grad_membrane, params.beta);
}

// ---- delays ---------------------------------------------------------------------

std::vector<int> draw_delays(int channels, std::uint64_t seed, int max_delay) {
  if (channels < 0 || max_delay < 0) throw ArgumentError("draw_delays: negative size");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, max_delay);
  std::vector<int> d(static_cast<std::size_t>(channels));
  for (auto& v : d) v = pick(rng);
  return d;
}

namespace {

template <typename Scalar>
void check_delays(const Grid<Scalar>& g, std::span<const int> delays) {
  if (static_cast<long>(delays.size()) != g.rows()) throw ShapeError("apply_delay: one delay per channel required");
  for (int d : delays)
    if (d < 0 || d > kMaxDelay) throw ArgumentError("apply_delay: delay outside [0, 30]");
}

}  // namespace

template <typename Scalar>
Grid<Scalar> apply_delay(const Grid<Scalar>& spikes, std::span<const int> delays) {
  check_delays(spikes, delays);
  const long n = spikes.cols();
  Grid<Scalar> out = Grid<Scalar>::Zero(spikes.rows(), n);
  for (long c = 0; c < spikes.rows(); ++c) {
    const long d = std::min<long>(delays[static_cast<std::size_t>(c)], n);
    out.row(c).tail(n - d) = spikes.row(c).head(n - d);
  }
  return out;
}

template <typename Scalar>
Grid<Scalar> apply_delay_backward(const Grid<Scalar>& grad_output, std::span<const int> delays) {
  check_delays(grad_output, delays);
  const long n = grad_output.cols();
  Grid<Scalar> out = Grid<Scalar>::Zero(grad_output.rows(), n);
  for (long c = 0; c < grad_output.rows(); ++c) {
    const long d = std::min<long>(delays[static_cast<std::size_t>(c)], n);
    out.row(c).head(n - d) = grad_output.row(c).tail(n - d);
  }
  return out;
}

#define PDMKWS_INSTANTIATE_SNN(S)                                                                                \
  template Grid<S> spike_fn(const Grid<S>&, const NeuronParams&);                                               \
  template Grid<S> spike_fn_grad(const Grid<S>&, const NeuronParams&);                                          \
  template Grid<S> im2col(const Grid<S>&, const ConvGeometry&);                                                 \
  template Grid<S> expand_mask(const Grid<S>&, int);                                                            \
  template Grid<S> conv1d_forward(const Grid<S>&, const Grid<S>&, const Vec<S>&, const ConvGeometry&,           \
                                  const Grid<S>&);                                                              \
  template ConvGradients<S> conv1d_backward(const Grid<S>&, const Grid<S>&, const ConvGeometry&, const Grid<S>&, \
                                            const Grid<S>&, bool);                                              \
  template Grid<S> leaky_integrate(const Grid<S>&, double, int);                                                \
  template Grid<S> leaky_integrate_sequential(const Grid<S>&, double);                                          \
  template Grid<S> leaky_integrate_backward(const Grid<S>&, double);                                            \
  template NeuronOutput<S> paralif_forward(const Grid<S>&, const NeuronParams&, int);                           \
  template Grid<S> paralif_backward(const Grid<S>&, const Grid<S>&, const NeuronParams&);                       \
  template NeuronOutput<S> paralif_recurrent_forward(const Grid<S>&, const Grid<S>&, const Vec<S>&,             \
                                                     const NeuronParams&);                                      \
  template RecurrentGradients<S> paralif_recurrent_backward(const Grid<S>&, const Grid<S>&, const Grid<S>&,     \
                                                            const NeuronParams&);                               \
  template RecurrentGradients<S> recurrent_membrane_backward(const Grid<S>&, const Grid<S>&, const Grid<S>&,    \
                                                             double);                                           \
  template Grid<S> li_forward(const Grid<S>&, const NeuronParams&);                                             \
  template Grid<S> li_backward(const Grid<S>&, const NeuronParams&);                                            \
  template Grid<S> apply_delay(const Grid<S>&, std::span<const int>);                                           \
  template Grid<S> apply_delay_backward(const Grid<S>&, std::span<const int>);

PDMKWS_INSTANTIATE_SNN(float)
PDMKWS_INSTANTIATE_SNN(double)

#undef PDMKWS_INSTANTIATE_SNN

}  // namespace pdmkws
