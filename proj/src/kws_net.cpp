#include "pdmkws/kws_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "pdmkws/errors.hpp"

namespace pdmkws {

const char* to_string(InputPolarity p) { return p == InputPolarity::unipolar ? "unipolar" : "bipolar"; }

InputPolarity parse_input_polarity(const std::string& name) {
  if (name == "unipolar") return InputPolarity::unipolar;
  if (name == "bipolar") return InputPolarity::bipolar;
  throw ArgumentError("unknown input polarity '" + name + "' (unipolar|bipolar)");
}

ConvGeometry NetworkSpec::geometry(int layer) const {
  if (layer == 0) return {3 * alpha, std::max(1, 3 * alpha / 2), 1};
  return {3, 3, 2};
}

void NetworkSpec::validate() const {
  if (alpha < 1 || alpha > 65535) throw ArgumentError("network: alpha must lie in [1, 65535]");
  if (hidden_channels < 1) throw ArgumentError("network: hidden_channels must be >= 1");
  if (classes < 2) throw ArgumentError("network: need at least two classes");
  const bool dense = fan_in == hidden_channels;
  const bool sparse = (fan_in == 64 || fan_in == 32 || fan_in == 16 || fan_in == 8) && fan_in < hidden_channels;
  if (!dense && !sparse)
    throw ArgumentError("network: fan_in " + std::to_string(fan_in) + " invalid for " +
                        std::to_string(hidden_channels) + " channels (128, 64, 32, 16 or 8, at most the width)");
  if (!(synaptic_gain > 0.0)) throw ArgumentError("network: synaptic_gain must be positive");
  if (!(readout_gain > 0.0)) throw ArgumentError("network: readout_gain must be positive");
  neuron.validate();
}

std::int64_t count_params(const NetworkSpec& spec) {
  const std::int64_t h = spec.hidden_channels;
  const std::int64_t a = spec.alpha;
  const std::int64_t f = spec.fan_in;
  std::int64_t n = h * 3 * a + h;
  n += 3 * (h * f * 3 + h);
  if (spec.recurrence) n += 2 * (h * h + h);
  n += h * spec.classes + spec.classes;
  return n;
}

namespace {
constexpr std::array<std::pair<int, int>, 5> kSparsityDivisors{{{0, 1}, {50, 2}, {75, 4}, {88, 8}, {94, 16}}};
}

int fan_in_for_sparsity(int percent, int hidden) {
  for (auto [p, div] : kSparsityDivisors)
    if (p == percent) return hidden / div;
  throw ArgumentError("sparsity must be one of 0, 50, 75, 88, 94 (got " + std::to_string(percent) + ")");
}

int sparsity_for_fan_in(int fan_in, int hidden) {
  for (auto [p, div] : kSparsityDivisors)
    if (hidden / div == fan_in) return p;
  throw ArgumentError("fan_in " + std::to_string(fan_in) + " matches no sparsity level");
}

double readout_scale(const NetworkSpec& spec) {
  const long steps = layer_lengths(spec, static_cast<long>(spec.base_rate_hz) * spec.alpha)[3];
  return spec.readout_gain / static_cast<double>(steps);
}

std::array<long, kHiddenLayers> layer_lengths(const NetworkSpec& spec, long input_bits) {
  std::array<long, kHiddenLayers> out{};
  long len = input_bits;
  for (int l = 0; l < kHiddenLayers; ++l) out[static_cast<std::size_t>(l)] = len = conv_output_length(len, spec.geometry(l));
  return out;
}

template <typename Scalar>
std::array<Grid<Scalar>, 3> make_masks(int channels, int fan_in, std::uint64_t seed) {
  if (fan_in < 1 || fan_in > channels) throw ArgumentError("make_masks: fan_in must lie in [1, channels]");
  std::array<Grid<Scalar>, 3> masks;
  std::mt19937_64 rng(seed);
  std::vector<int> order(static_cast<std::size_t>(channels));
  for (auto& m : masks) {
    m = Grid<Scalar>::Zero(channels, channels);
    for (int o = 0; o < channels; ++o) {
      for (int c = 0; c < channels; ++c) order[static_cast<std::size_t>(c)] = c;
      // partial Fisher-Yates: the first fan_in entries are a uniform subset
      for (int i = 0; i < fan_in; ++i) {
        std::uniform_int_distribution<int> pick(i, channels - 1);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
        m(o, order[static_cast<std::size_t>(i)]) = Scalar(1);
      }
    }
  }
  return masks;
}

const char* to_string(AblationRow row) {
  switch (row) {
    case AblationRow::conv: return "Conv";
    case AblationRow::conv_rec: return "Conv+Rec";
    case AblationRow::conv_rec_delay: return "Conv+Rec+Delay";
    case AblationRow::conv_rec_delay_aug: return "Conv+Rec+Delay+Aug";
  }
  return "?";
}

std::pair<NetworkSpec, bool> ablation_spec(AblationRow row, NetworkSpec base) {
  base.recurrence = row != AblationRow::conv;
  base.delays = row == AblationRow::conv_rec_delay || row == AblationRow::conv_rec_delay_aug;
  return {base, row == AblationRow::conv_rec_delay_aug};
}

// ---- state ----------------------------------------------------------------------

template <typename Scalar>
std::int64_t NetworkState<Scalar>::trainable_count() const {
  std::int64_t n = 0;
  for (int l = 0; l < kHiddenLayers; ++l) {
    const auto& m = masks[static_cast<std::size_t>(l)];
    const auto k = spec.geometry(l).kernel;
    n += m.size() == 0 ? conv_weights[static_cast<std::size_t>(l)].size()
                       : static_cast<std::int64_t>(m.sum()) * k;
    n += conv_bias[static_cast<std::size_t>(l)].size();
  }
  for (int r = 0; r < 2; ++r) n += rec_weights[static_cast<std::size_t>(r)].size() + rec_bias[static_cast<std::size_t>(r)].size();
  n += out_weights.size() + out_bias.size();
  return n;
}

namespace {

template <typename State, typename Ptr>
std::vector<std::tuple<std::string, Ptr, long>> collect_blocks(State& s) {
  std::vector<std::tuple<std::string, Ptr, long>> out;
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    const std::string name = "conv" + std::to_string(l + 1);
    out.emplace_back(name + ".weight", s.conv_weights[l].data(), s.conv_weights[l].size());
    out.emplace_back(name + ".bias", s.conv_bias[l].data(), s.conv_bias[l].size());
  }
  for (std::size_t r = 0; r < 2; ++r) {
    if (s.rec_weights[r].size() == 0) continue;
    const std::string name = "rec" + std::to_string(r + 3);
    out.emplace_back(name + ".weight", s.rec_weights[r].data(), s.rec_weights[r].size());
    out.emplace_back(name + ".bias", s.rec_bias[r].data(), s.rec_bias[r].size());
  }
  out.emplace_back("readout.weight", s.out_weights.data(), s.out_weights.size());
  out.emplace_back("readout.bias", s.out_bias.data(), s.out_bias.size());
  return out;
}

}  // namespace

template <typename Scalar>
std::vector<std::tuple<std::string, Scalar*, long>> NetworkState<Scalar>::blocks() {
  return collect_blocks<NetworkState, Scalar*>(*this);
}

template <typename Scalar>
std::vector<std::tuple<std::string, const Scalar*, long>> NetworkState<Scalar>::blocks() const {
  return collect_blocks<const NetworkState, const Scalar*>(*this);
}

template <typename Scalar>
NetworkState<Scalar> NetworkState<Scalar>::zeros_like() const {
  NetworkState z = *this;
  for (auto& [name, data, size] : z.blocks()) std::fill(data, data + size, Scalar(0));
  return z;
}

template <typename Scalar>
NetworkState<Scalar>& NetworkState<Scalar>::operator+=(const NetworkState& other) {
  auto mine = blocks();
  const auto theirs = other.blocks();
  if (mine.size() != theirs.size()) throw ShapeError("network state: block count mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    auto [n1, d1, s1] = mine[i];
    auto [n2, d2, s2] = theirs[i];
    if (s1 != s2) throw ShapeError("network state: block '" + n1 + "' size mismatch");
    for (long j = 0; j < s1; ++j) d1[j] += d2[j];
  }
  return *this;
}

template <typename Scalar>
NetworkState<Scalar>& NetworkState<Scalar>::operator*=(Scalar s) {
  for (auto& [name, data, size] : blocks())
    for (long j = 0; j < size; ++j) data[j] *= s;
  return *this;
}

template <typename Scalar>
template <typename Other>
NetworkState<Other> NetworkState<Scalar>::cast() const {
  NetworkState<Other> o;
  o.spec = spec;
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    o.conv_weights[l] = conv_weights[l].template cast<Other>();
    o.conv_bias[l] = conv_bias[l].template cast<Other>();
    o.masks[l] = masks[l].template cast<Other>();
    o.delays[l] = delays[l];
  }
  for (std::size_t r = 0; r < 2; ++r) {
    o.rec_weights[r] = rec_weights[r].template cast<Other>();
    o.rec_bias[r] = rec_bias[r].template cast<Other>();
  }
  o.out_weights = out_weights.template cast<Other>();
  o.out_bias = out_bias.template cast<Other>();
  return o;
}

template <typename Scalar>
NetworkState<Scalar> build(const NetworkSpec& spec) {
  spec.validate();
  const int h = spec.hidden_channels;
  NetworkState<Scalar> s;
  s.spec = spec;
  std::mt19937_64 rng(spec.weight_seed);
  auto uniform = [&rng](long rows, long cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Grid<Scalar> g(rows, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) g(i, j) = static_cast<Scalar>(u(rng));
    return g;
  };

  if (spec.fan_in != h) {
    const auto m = make_masks<Scalar>(h, spec.fan_in, spec.mask_seed);
    for (std::size_t l = 1; l < kHiddenLayers; ++l) s.masks[l] = m[l - 1];
  }
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    const auto g = spec.geometry(static_cast<int>(l));
    const int cin = l == 0 ? 1 : h;
    const int active = l == 0 ? 1 : spec.fan_in;
    const double bound = std::sqrt(1.0 / (static_cast<double>(active) * g.kernel));
    s.conv_weights[l] = uniform(h, static_cast<long>(cin) * g.kernel, bound);
    s.conv_bias[l] = uniform(h, 1, bound);
    if (s.masks[l].size() != 0) s.conv_weights[l] = s.conv_weights[l].cwiseProduct(expand_mask(s.masks[l], g.kernel));
  }
  // 0/1 bits carry a 0.5 DC level; start layer 1 centred on it
  if (spec.polarity == InputPolarity::unipolar) s.conv_bias[0] -= Scalar(0.5) * s.conv_weights[0].rowwise().sum();
  if (spec.recurrence) {
    const double bound = std::sqrt(1.0 / h);
    for (std::size_t r = 0; r < 2; ++r) {
      s.rec_weights[r] = uniform(h, h, bound);
      s.rec_bias[r] = uniform(h, 1, bound);
    }
  }
  s.out_weights = Grid<Scalar>::Zero(spec.classes, h);
  s.out_bias = Vec<Scalar>::Zero(spec.classes);
  if (spec.delays)
    for (std::size_t l = 0; l < kHiddenLayers; ++l) s.delays[l] = draw_delays(h, spec.delay_seed + l);
  return s;
}

// ---- forward / backward ---------------------------------------------------------

template <typename Scalar>
Grid<Scalar> pdm_to_input(const PdmSignal& pdm, InputPolarity polarity) {
  Grid<Scalar> x(1, static_cast<long>(pdm.bits.size()));
  const Scalar lo = polarity == InputPolarity::unipolar ? Scalar(0) : Scalar(-1);
  for (std::size_t i = 0; i < pdm.bits.size(); ++i) x(0, static_cast<long>(i)) = pdm.bits[i] ? Scalar(1) : lo;
  return x;
}

template <typename Scalar>
ForwardTrace<Scalar> forward(const NetworkState<Scalar>& state, const PdmSignal& pdm, bool keep_trace) {
  const auto& spec = state.spec;
  if (pdm.alpha != spec.alpha)
    throw ArgumentError("forward: PDM alpha " + std::to_string(pdm.alpha) + " does not match network alpha " +
                        std::to_string(spec.alpha));
  ForwardTrace<Scalar> t;
  t.duration_s = pdm.duration_s();
  t.input = pdm_to_input<Scalar>(pdm, spec.polarity);
  Grid<Scalar> x = t.input;
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    const Grid<Scalar> current =
        conv1d_forward(x, state.conv_weights[l], state.conv_bias[l], spec.geometry(static_cast<int>(l)), state.masks[l]) *
        static_cast<Scalar>(spec.synaptic_gain);
    auto n = (l >= 2 && spec.recurrence)
                 ? paralif_recurrent_forward(current, state.rec_weights[l - 2], state.rec_bias[l - 2], spec.neuron)
                 : paralif_forward(current, spec.neuron);
    t.step_rate_hz[l] = static_cast<double>(current.cols()) / t.duration_s;
    x = spec.delays ? apply_delay<Scalar>(n.spikes, state.delays[l]) : n.spikes;
    if (keep_trace) {
      t.membrane[l] = std::move(n.membrane);
      t.outputs[l] = x;
    }
    t.spikes[l] = std::move(n.spikes);
  }
  Grid<Scalar> current(spec.classes, x.cols());
  current.noalias() = state.out_weights * x;
  current.colwise() += state.out_bias;
  current *= static_cast<Scalar>(readout_scale(spec));
  t.readout_membrane = li_forward(current, spec.neuron);
  t.logits = t.readout_membrane.rowwise().sum();
  t.recorded = keep_trace;
  if (!keep_trace) {
    t.input.resize(0, 0);
    t.readout_membrane.resize(0, 0);
  }
  return t;
}

template <typename Scalar>
NetworkState<Scalar> backward(const NetworkState<Scalar>& state, const ForwardTrace<Scalar>& trace,
                              const Vec<Scalar>& grad_logits) {
  if (!trace.recorded) throw StateError("backward: no recorded forward pass");
  const auto& spec = state.spec;
  if (grad_logits.size() != spec.classes) throw ShapeError("backward: gradient must have one entry per class");
  NetworkState<Scalar> g = state.zeros_like();

  const Grid<Scalar>& x4 = trace.outputs[3];
  const Grid<Scalar> d_current = li_backward<Scalar>(grad_logits.replicate(1, x4.cols()), spec.neuron);
  const Grid<Scalar> d_scaled = d_current * static_cast<Scalar>(readout_scale(spec));
  g.out_weights.noalias() = d_scaled * x4.transpose();
  g.out_bias = d_scaled.rowwise().sum();
  Grid<Scalar> dx(x4.rows(), x4.cols());
  dx.noalias() = state.out_weights.transpose() * d_scaled;

  for (int li = kHiddenLayers - 1; li >= 0; --li) {
    const auto l = static_cast<std::size_t>(li);
    const Grid<Scalar> ds = spec.delays ? apply_delay_backward<Scalar>(dx, state.delays[l]) : dx;
    Grid<Scalar> di;
    if (l >= 2 && spec.recurrence) {
      auto r = paralif_recurrent_backward(trace.membrane[l], ds, state.rec_weights[l - 2], spec.neuron);
      g.rec_weights[l - 2] = std::move(r.weights);
      g.rec_bias[l - 2] = std::move(r.bias);
      di = std::move(r.current);
    } else {
      di = paralif_backward(trace.membrane[l], ds, spec.neuron);
    }
    const Grid<Scalar>& x_in = l == 0 ? trace.input : trace.outputs[l - 1];
    di *= static_cast<Scalar>(spec.synaptic_gain);
    auto c = conv1d_backward(x_in, state.conv_weights[l], spec.geometry(li), di, state.masks[l], l > 0);
    g.conv_weights[l] = std::move(c.weights);
    g.conv_bias[l] = std::move(c.bias);
    dx = std::move(c.input);
  }
  return g;
}

template <typename Scalar>
double cross_entropy(const Vec<Scalar>& logits, int label, Vec<Scalar>* grad) {
  if (label < 0 || label >= logits.size()) throw ArgumentError("cross_entropy: label out of range");
  const Eigen::VectorXd z = logits.template cast<double>();
  const double m = z.maxCoeff();
  const Eigen::VectorXd e = (z.array() - m).exp();
  const double sum = e.sum();
  if (grad) {
    *grad = (e / sum).template cast<Scalar>();
    (*grad)(label) -= Scalar(1);
  }
  return -(z(label) - m - std::log(sum));
}

template <typename Scalar>
int predict(const Vec<Scalar>& logits) {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

// ---- checkpoint -----------------------------------------------------------------

nlohmann::json spec_to_json(const NetworkSpec& s) {
  return {{"alpha", s.alpha},
          {"hidden_channels", s.hidden_channels},
          {"classes", s.classes},
          {"recurrence", s.recurrence},
          {"delays", s.delays},
          {"fan_in", s.fan_in},
          {"weight_seed", s.weight_seed},
          {"delay_seed", s.delay_seed},
          {"mask_seed", s.mask_seed},
          {"polarity", to_string(s.polarity)},
          {"base_rate_hz", s.base_rate_hz},
          {"synaptic_gain", s.synaptic_gain},
          {"readout_gain", s.readout_gain},
          {"neuron",
           {{"beta", s.neuron.beta},
            {"theta", s.neuron.theta},
            {"surrogate_slope", s.neuron.slope},
            {"spike_mode", s.neuron.mode == SpikeMode::heaviside ? "heaviside" : "relaxed"}}}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  try {
    NetworkSpec s;
    s.alpha = j.at("alpha").get<int>();
    s.hidden_channels = j.at("hidden_channels").get<int>();
    s.classes = j.at("classes").get<int>();
    s.recurrence = j.at("recurrence").get<bool>();
    s.delays = j.at("delays").get<bool>();
    s.fan_in = j.at("fan_in").get<int>();
    s.weight_seed = j.at("weight_seed").get<std::uint64_t>();
    s.delay_seed = j.at("delay_seed").get<std::uint64_t>();
    s.mask_seed = j.at("mask_seed").get<std::uint64_t>();
    s.polarity = parse_input_polarity(j.at("polarity").get<std::string>());
    s.base_rate_hz = j.at("base_rate_hz").get<std::uint32_t>();
    s.synaptic_gain = j.value("synaptic_gain", 1.0);
    s.readout_gain = j.value("readout_gain", 1.0);
    const auto& n = j.at("neuron");
    s.neuron.beta = n.at("beta").get<double>();
    s.neuron.theta = n.at("theta").get<double>();
    s.neuron.slope = n.at("surrogate_slope").get<double>();
    s.neuron.mode = n.at("spike_mode").get<std::string>() == "relaxed" ? SpikeMode::relaxed : SpikeMode::heaviside;
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  }
}

namespace {

constexpr char kCheckpointMagic[4] = {'P', 'K', 'W', 'S'};

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw FormatError("checkpoint: truncated header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace

void save_checkpoint(const NetworkState<float>& state, const nlohmann::json& extra, const std::filesystem::path& path) {
  nlohmann::json header;
  header["schema"] = kCheckpointSchema;
  header["spec"] = spec_to_json(state.spec);
  header["params"] = state.trainable_count();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& [name, data, size] : state.blocks()) blocks.push_back({{"name", name}, {"size", size}});
  header["blocks"] = blocks;
  nlohmann::json delays = nlohmann::json::array();
  for (const auto& d : state.delays) delays.push_back(d);
  header["delays"] = delays;
  header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointSchema);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, data, size] : state.blocks())
    for (long i = 0; i < size; ++i) put_le<std::uint32_t>(out, float_bits(data[i]));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const auto schema = get_le<std::uint32_t>(in);
  if (schema != kCheckpointSchema) throw FormatError("checkpoint: unsupported schema " + std::to_string(schema));
  const auto header_len = get_le<std::uint64_t>(in);
  if (header_len > (1u << 26)) throw FormatError("checkpoint: implausible header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("checkpoint: truncated header");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  ck.state = build<float>(spec_from_json(ck.header.at("spec")));
  auto blocks = ck.state.blocks();
  const auto& listed = ck.header.at("blocks");
  if (listed.size() != blocks.size()) throw FormatError("checkpoint: block list does not match the spec");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto [name, data, size] = blocks[b];
    if (listed[b].at("name") != name || listed[b].at("size").get<long>() != size)
      throw FormatError("checkpoint: block " + std::to_string(b) + " is not " + name);
    for (long i = 0; i < size; ++i) data[i] = std::bit_cast<float>(get_le<std::uint32_t>(in));
  }
  if (in.peek() != EOF) throw FormatError("checkpoint: trailing bytes");
  for (std::size_t l = 0; l < kHiddenLayers; ++l) {
    const auto& m = ck.state.masks[l];
    if (m.size() == 0) continue;
    const auto k = ck.state.spec.geometry(static_cast<int>(l)).kernel;
    if ((ck.state.conv_weights[l].array() * (1.0f - expand_mask(m, k).array())).abs().maxCoeff() != 0.0f)
      throw FormatError("checkpoint: masked weights are not zero; mask seed mismatch");
  }
  const auto& delays = ck.header.at("delays");
  for (std::size_t l = 0; l < kHiddenLayers; ++l)
    if (delays.at(l).get<std::vector<int>>() != ck.state.delays[l])
      throw FormatError("checkpoint: delays differ from the seeded draw");
  return ck;
}

#define PDMKWS_INSTANTIATE_NET(S)                                                                             \
  template std::array<Grid<S>, 3> make_masks<S>(int, int, std::uint64_t);                                    \
  template struct NetworkState<S>;                                                                           \
  template NetworkState<S> build<S>(const NetworkSpec&);                                                     \
  template Grid<S> pdm_to_input<S>(const PdmSignal&, InputPolarity);                                         \
  template ForwardTrace<S> forward<S>(const NetworkState<S>&, const PdmSignal&, bool);                       \
  template NetworkState<S> backward<S>(const NetworkState<S>&, const ForwardTrace<S>&, const Vec<S>&);       \
  template double cross_entropy<S>(const Vec<S>&, int, Vec<S>*);                                             \
  template int predict<S>(const Vec<S>&);

PDMKWS_INSTANTIATE_NET(float)
PDMKWS_INSTANTIATE_NET(double)

#undef PDMKWS_INSTANTIATE_NET

template NetworkState<double> NetworkState<float>::cast<double>() const;
template NetworkState<float> NetworkState<double>::cast<float>() const;

}  // namespace pdmkws
