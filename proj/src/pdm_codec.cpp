#include "pdmkws/pdm_codec.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "pdmkws/errors.hpp"
#include "pdmkws/fir.hpp"
#include "pdmkws/parallel.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define PDMKWS_HAVE_AVX2_KERNEL 1
#endif

namespace pdmkws {
namespace {

constexpr double kScale31 = 2147483648.0;  // 2^31
constexpr double kScale32 = 4294967296.0;  // 2^32

#ifdef PDMKWS_HAVE_AVX2_KERNEL
bool cpu_has_avx2() {
  static const bool has = __builtin_cpu_supports("avx2");
  return has;
}

// ordered compares: NaN fails both
__attribute__((target("avx2"))) std::size_t count_outside_avx2(const float* x, std::size_t n, float lo, float hi) {
  const __m256 l = _mm256_set1_ps(lo), h = _mm256_set1_ps(hi);
  std::size_t bad = 0, i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 in = _mm256_and_ps(_mm256_cmp_ps(v, l, _CMP_GE_OQ), _mm256_cmp_ps(v, h, _CMP_LE_OQ));
    bad += static_cast<std::size_t>(8 - __builtin_popcount(static_cast<unsigned>(_mm256_movemask_ps(in))));
  }
  for (; i < n; ++i) bad += !((x[i] >= lo) & (x[i] <= hi));
  return bad;
}
#endif

template <typename Scalar>
void require_range(std::span<const Scalar> x, double lo, double hi, const char* who) {
  // bounds are 0, +-1: exact in Scalar; NaN counts as bad
  const auto l = static_cast<Scalar>(lo), h = static_cast<Scalar>(hi);
  std::size_t bad = 0;
#ifdef PDMKWS_HAVE_AVX2_KERNEL
  if constexpr (std::is_same_v<Scalar, float>) {
    if (cpu_has_avx2()) bad = count_outside_avx2(x.data(), x.size(), l, h);
    else
      for (Scalar v : x) bad += !((v >= l) & (v <= h));
  } else
#endif
    for (Scalar v : x) bad += !((v >= l) & (v <= h));
  if (bad != 0) throw ArgumentError(std::string(who) + ": input outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
}

// ---- unit threshold: q = round(x * 2^31), wrapping 32-bit accumulator ---------
//
// Every increment is at most 2^31, so floor(c / 2^31) advances by 0 or 1 per
// sample and a pulse is exactly a flip of bit 31 of the wrapped sum.

template <typename Scalar>
inline std::uint32_t quantize31(Scalar x) {
  return static_cast<std::uint32_t>(static_cast<std::int64_t>(std::nearbyint(static_cast<double>(x) * kScale31)));
}

template <typename Scalar>
std::uint32_t scan31_scalar(const Scalar* x, std::size_t n, std::uint32_t c, std::uint8_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t next = c + quantize31(x[i]);
    out[i] = static_cast<std::uint8_t>((next ^ c) >> 31);
    c = next;
  }
  return c;
}

template <typename Scalar>
std::uint32_t sum31_scalar(const Scalar* x, std::size_t n, std::uint32_t c) {
  for (std::size_t i = 0; i < n; ++i) c += quantize31(x[i]);
  return c;
}

#ifdef PDMKWS_HAVE_AVX2_KERNEL

// x * 2^31 is exact in float, and cvtps rounds half-to-even like nearbyint, so
// this matches quantize31 bit for bit. x == 1 converts to 0x80000000 == 2^31.
__attribute__((target("avx2"))) inline __m256i quantize31_avx2(const float* x) {
  return _mm256_cvtps_epi32(_mm256_mul_ps(_mm256_loadu_ps(x), _mm256_set1_ps(2147483648.0f)));
}

__attribute__((target("avx2"))) std::uint32_t scan31_avx2(const float* x, std::size_t n, std::uint32_t carry,
                                                          std::uint8_t* out) {
  const __m256i last = _mm256_set1_epi32(7);
  const __m256i half_hi = _mm256_set1_epi32(3);
  const __m256i rotate = _mm256_setr_epi32(7, 0, 1, 2, 3, 4, 5, 6);
  __m256i c = _mm256_set1_epi32(static_cast<int>(carry));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i q = quantize31_avx2(x + i);
    // inclusive prefix sum within each 128-bit half, then carry low half into high
    q = _mm256_add_epi32(q, _mm256_slli_si256(q, 4));
    q = _mm256_add_epi32(q, _mm256_slli_si256(q, 8));
    const __m256i low_total = _mm256_blend_epi32(_mm256_setzero_si256(), _mm256_permutevar8x32_epi32(q, half_hi), 0xF0);
    q = _mm256_add_epi32(q, low_total);
    // block total is broadcast off the carry chain, which is then a single add
    const __m256i total = _mm256_permutevar8x32_epi32(q, last);
    q = _mm256_add_epi32(q, c);
    const __m256i prev = _mm256_blend_epi32(_mm256_permutevar8x32_epi32(q, rotate), c, 0x01);
    const __m256i flip = _mm256_srli_epi32(_mm256_xor_si256(q, prev), 31);
    const __m128i w16 = _mm_packus_epi32(_mm256_castsi256_si128(flip), _mm256_extracti128_si256(flip, 1));
    _mm_storel_epi64(reinterpret_cast<__m128i*>(out + i), _mm_packus_epi16(w16, w16));
    c = _mm256_add_epi32(c, total);
  }
  const auto tail_carry = static_cast<std::uint32_t>(_mm256_cvtsi256_si32(c));
  return scan31_scalar(x + i, n - i, tail_carry, out + i);
}

__attribute__((target("avx2"))) std::uint32_t sum31_avx2(const float* x, std::size_t n, std::uint32_t carry) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_epi32(acc, quantize31_avx2(x + i));
  alignas(32) std::uint32_t lanes[8];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  for (std::uint32_t v : lanes) carry += v;
  return sum31_scalar(x + i, n - i, carry);
}

#endif

template <typename Scalar>
std::uint32_t scan31(const Scalar* x, std::size_t n, std::uint32_t carry, std::uint8_t* out) {
#ifdef PDMKWS_HAVE_AVX2_KERNEL
  if constexpr (std::is_same_v<Scalar, float>) {
    if (cpu_has_avx2()) return scan31_avx2(x, n, carry, out);
  }
#endif
  return scan31_scalar(x, n, carry, out);
}

template <typename Scalar>
std::uint32_t sum31(const Scalar* x, std::size_t n, std::uint32_t carry) {
#ifdef PDMKWS_HAVE_AVX2_KERNEL
  if constexpr (std::is_same_v<Scalar, float>) {
    if (cpu_has_avx2()) return sum31_avx2(x, n, carry);
  }
#endif
  return sum31_scalar(x, n, carry);
}

// ---- general threshold: q = round(x * 2^32), 64-bit accumulator, integer floor --

std::uint64_t quantize_threshold(double th) {
  if (!(th > 0.0) || !std::isfinite(th) || th * kScale32 >= 9.0e18)
    throw ArgumentError("pcm2pdm_par: threshold must be positive and finite");
  const auto q = static_cast<std::uint64_t>(std::nearbyint(th * kScale32));
  if (q == 0) throw ArgumentError("pcm2pdm_par: threshold below fixed-point resolution");
  return q;
}

template <typename Scalar>
inline std::uint64_t quantize32(Scalar x) {
  return static_cast<std::uint64_t>(std::nearbyint(static_cast<double>(x) * kScale32));
}

template <typename Scalar>
std::uint64_t scan64(const Scalar* x, std::size_t n, std::uint64_t c, std::uint64_t th, std::uint8_t* out) {
  std::uint64_t floor_prev = c / th;
  for (std::size_t i = 0; i < n; ++i) {
    c += quantize32(x[i]);
    const std::uint64_t f = c / th;
    out[i] = static_cast<std::uint8_t>(f > floor_prev);
    floor_prev = f;
  }
  return c;
}

template <typename Scalar>
std::uint64_t sum64(const Scalar* x, std::size_t n, std::uint64_t c) {
  for (std::size_t i = 0; i < n; ++i) c += quantize32(x[i]);
  return c;
}

}  // namespace

template <typename Scalar>
BipolarStream pcm2pdm_seq(std::span<const Scalar> x, ModulatorState state) {
  require_range(x, -1.0, 1.0, "pcm2pdm_seq");
  BipolarStream out;
  out.values.resize(x.size());
  double qe = state.qe;
  for (std::size_t n = 0; n < x.size(); ++n) {
    qe += x[n];
    const std::int8_t y = qe > 0.0 ? 1 : -1;
    out.values[n] = y;
    qe -= y;
  }
  out.state = {qe, state.th};
  return out;
}

template <typename Scalar>
BitStream pcm2pdm_mod(std::span<const Scalar> x, ModulatorState state) {
  require_range(x, 0.0, 1.0, "pcm2pdm_mod");
  BitStream out;
  out.bits.resize(x.size());
  double qe = state.qe;
  for (std::size_t n = 0; n < x.size(); ++n) {
    qe += x[n];
    const bool fire = qe > 0.0;
    out.bits[n] = fire;
    qe -= fire ? 1.0 : 0.0;
  }
  out.state = {qe, state.th};
  return out;
}

template <typename Scalar>
BitStream pcm2pdm_if(std::span<const Scalar> x, ModulatorState state) {
  require_range(x, 0.0, 1.0, "pcm2pdm_if");
  if (!(state.th > 0.0)) throw ArgumentError("pcm2pdm_if: threshold must be positive");
  BitStream out;
  out.bits.resize(x.size());
  double qe = state.qe;
  const double th = state.th;
  for (std::size_t n = 0; n < x.size(); ++n) {
    qe += x[n];
    const bool fire = qe >= th;
    out.bits[n] = fire;
    qe -= fire ? th : 0.0;
  }
  out.state = {qe, th};
  return out;
}

template <typename Scalar>
std::vector<std::uint8_t> pcm2pdm_par(std::span<const Scalar> x, double th) {
  return pcm2pdm_par_chunked(x, th, std::max<std::size_t>(x.size(), 1), 1);
}

template <typename Scalar>
std::vector<std::uint8_t> pcm2pdm_par_chunked(std::span<const Scalar> x, double th, std::size_t chunk_len,
                                              int workers) {
  if (chunk_len == 0) throw ArgumentError("pcm2pdm_par_chunked: chunk_len must be >= 1");
  const bool unit = th == 1.0;
  const std::uint64_t th_q = unit ? 0 : quantize_threshold(th);
  require_range(x, 0.0, 1.0, "pcm2pdm_par");
  if (!unit && x.size() >= (std::size_t{1} << 31))
    throw ArgumentError("pcm2pdm_par: input too long for the 64-bit accumulator");

  std::vector<std::uint8_t> bits(x.size());
  const std::size_t n_chunks = (x.size() + chunk_len - 1) / chunk_len;
  auto chunk_begin = [&](std::size_t k) { return k * chunk_len; };
  auto chunk_size = [&](std::size_t k) { return std::min(chunk_len, x.size() - k * chunk_len); };

  if (n_chunks <= 1) {
    if (unit)
      scan31(x.data(), x.size(), 0, bits.data());
    else
      scan64(x.data(), x.size(), 0, th_q, bits.data());
    return bits;
  }

  // Exact chunk totals, combined in index order into each chunk's starting sum.
  std::vector<std::uint64_t> start(n_chunks, 0);
  parallel_for(n_chunks, workers, [&](std::size_t k) {
    start[k] = unit ? sum31(x.data() + chunk_begin(k), chunk_size(k), 0)
                    : sum64(x.data() + chunk_begin(k), chunk_size(k), 0);
  });
  std::uint64_t running = 0;
  for (auto& s : start) {
    const std::uint64_t total = s;
    s = running;
    running = unit ? static_cast<std::uint32_t>(running + total) : running + total;
  }
  parallel_for(n_chunks, workers, [&](std::size_t k) {
    const std::size_t b = chunk_begin(k);
    if (unit)
      scan31(x.data() + b, chunk_size(k), static_cast<std::uint32_t>(start[k]), bits.data() + b);
    else
      scan64(x.data() + b, chunk_size(k), start[k], th_q, bits.data() + b);
  });
  return bits;
}

#define PDMKWS_INSTANTIATE_ENCODERS(S)                                                                  \
  template BipolarStream pcm2pdm_seq<S>(std::span<const S>, ModulatorState);                           \
  template BitStream pcm2pdm_mod<S>(std::span<const S>, ModulatorState);                               \
  template BitStream pcm2pdm_if<S>(std::span<const S>, ModulatorState);                                \
  template std::vector<std::uint8_t> pcm2pdm_par<S>(std::span<const S>, double);                       \
  template std::vector<std::uint8_t> pcm2pdm_par_chunked<S>(std::span<const S>, double, std::size_t, int);

PDMKWS_INSTANTIATE_ENCODERS(float)
PDMKWS_INSTANTIATE_ENCODERS(double)
#undef PDMKWS_INSTANTIATE_ENCODERS

const char* to_string(EncoderAlgorithm algo) {
  switch (algo) {
    case EncoderAlgorithm::seq: return "seq";
    case EncoderAlgorithm::mod: return "mod";
    case EncoderAlgorithm::if_: return "if";
    case EncoderAlgorithm::par: return "par";
  }
  return "?";
}

EncoderAlgorithm parse_encoder_algorithm(const std::string& name) {
  if (name == "seq") return EncoderAlgorithm::seq;
  if (name == "mod") return EncoderAlgorithm::mod;
  if (name == "if") return EncoderAlgorithm::if_;
  if (name == "par") return EncoderAlgorithm::par;
  throw ArgumentError("unknown encoder algorithm: " + name);
}

PdmSignal encode(const PcmSignal& pcm, int alpha, EncoderAlgorithm algo, OversampleMethod method, int workers) {
  if (alpha < 1 || alpha > std::numeric_limits<std::uint16_t>::max())
    throw ArgumentError("encode: alpha must be in [1, 65535]");
  const UnipolarSignal x = oversample(to_unipolar(pcm), alpha, method);
  const std::span<const float> xs(x.samples);
  PdmSignal out;
  out.base_rate_hz = pcm.sample_rate_hz;
  out.alpha = static_cast<std::uint16_t>(alpha);
  switch (algo) {
    case EncoderAlgorithm::seq: {
      std::vector<float> bipolar(xs.size());
      std::transform(xs.begin(), xs.end(), bipolar.begin(), [](float u) { return 2.0f * u - 1.0f; });
      const auto y = pcm2pdm_seq<float>(bipolar);
      out.bits.resize(y.values.size());
      std::transform(y.values.begin(), y.values.end(), out.bits.begin(),
                     [](std::int8_t v) { return static_cast<std::uint8_t>(v > 0); });
      break;
    }
    case EncoderAlgorithm::mod: out.bits = pcm2pdm_mod<float>(xs).bits; break;
    case EncoderAlgorithm::if_: out.bits = pcm2pdm_if<float>(xs).bits; break;
    case EncoderAlgorithm::par: {
      const std::size_t chunk = workers > 1 ? (xs.size() + workers - 1) / static_cast<std::size_t>(workers) : xs.size();
      out.bits = pcm2pdm_par_chunked<float>(xs, 1.0, std::max<std::size_t>(chunk, 1), workers);
      break;
    }
  }
  return out;
}

PcmSignal pdm2pcm(const PdmSignal& pdm, int taps) {
  if (pdm.alpha == 0) throw FormatError("pdm2pcm: alpha is zero");
  const int alpha = pdm.alpha;
  if (taps == 0) taps = default_decimation_taps(alpha);
  if (taps < 3 || taps % 2 == 0) throw ArgumentError("pdm2pcm: taps must be odd and >= 3");
  const double cutoff = 0.45 / alpha;
  const auto h = fir::lowpass_hamming(taps, cutoff);
  const long half = (taps - 1) / 2;
  const long n_bits = static_cast<long>(pdm.bits.size());

  PcmSignal out;
  out.sample_rate_hz = pdm.base_rate_hz;
  out.samples.resize(pdm.bits.size() / static_cast<std::size_t>(alpha));
  for (std::size_t m = 0; m < out.samples.size(); ++m) {
    const long centre = static_cast<long>(m) * alpha;
    const long lo = std::max(0L, centre - half);
    const long hi = std::min(n_bits - 1, centre + half);
    double acc = 0.0;
    for (long i = lo; i <= hi; ++i)
      if (pdm.bits[static_cast<std::size_t>(i)]) acc += h[static_cast<std::size_t>(i - centre + half)];
    out.samples[m] = static_cast<float>(std::clamp(2.0 * acc - 1.0, -1.0, 1.0));
  }
  return out;
}

namespace {

constexpr int kShiftHalfWidth = 16;

// decoded delayed by `tau` samples (d(t - tau)) via a Kaiser-windowed sinc; exact
// copy for integer tau.
std::vector<double> fractional_shift(const std::vector<float>& d, double tau) {
  const auto n = static_cast<long>(d.size());
  std::vector<double> out(d.size(), 0.0);
  const double whole = std::floor(tau);
  const double frac = tau - whole;
  const long shift = static_cast<long>(whole);
  if (frac == 0.0) {
    for (long i = 0; i < n; ++i)
      if (i - shift >= 0 && i - shift < n) out[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i - shift)];
    return out;
  }
  std::array<double, 2 * kShiftHalfWidth> taps{};
  for (int j = -kShiftHalfWidth + 1; j <= kShiftHalfWidth; ++j) {
    // weight of d[i - shift - j] for out[i], kernel centred at frac
    const double x = j - frac;
    const double sinc = std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = x / (kShiftHalfWidth + 1.0);
    const double window = std::cyl_bessel_i(0.0, 8.0 * std::sqrt(std::max(0.0, 1.0 - r * r))) / std::cyl_bessel_i(0.0, 8.0);
    taps[static_cast<std::size_t>(j + kShiftHalfWidth - 1)] = sinc * window;
  }
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -kShiftHalfWidth + 1; j <= kShiftHalfWidth; ++j) {
      const long k = i - shift - j;
      if (k >= 0 && k < n) acc += taps[static_cast<std::size_t>(j + kShiftHalfWidth - 1)] * d[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace

double measure_snr(const PcmSignal& reference, const PcmSignal& decoded, std::size_t trim, int max_lag) {
  if (reference.samples.size() != decoded.samples.size() || reference.sample_rate_hz != decoded.sample_rate_hz)
    throw ArgumentError("measure_snr: signals differ in length or rate");
  if (max_lag < 0) throw ArgumentError("measure_snr: max_lag must be >= 0");
  const auto n = static_cast<long>(reference.samples.size());
  const long margin = max_lag > 0 ? max_lag + kShiftHalfWidth + 1 : 0;
  const long lo = static_cast<long>(trim) + margin;
  const long hi = n - static_cast<long>(trim) - margin;
  if (hi <= lo) throw ArgumentError("measure_snr: nothing left after trimming");

  double ref_power = 0.0;
  for (long i = lo; i < hi; ++i) ref_power += static_cast<double>(reference.samples[i]) * reference.samples[i];
  if (ref_power == 0.0) throw ArgumentError("measure_snr: reference has zero power");

  auto snr_at = [&](double tau) {
    const auto d = fractional_shift(decoded.samples, tau);
    double rd = 0.0;
    double dd = 0.0;
    for (long i = lo; i < hi; ++i) {
      rd += reference.samples[i] * d[i];
      dd += d[i] * d[i];
    }
    const double gain = dd > 0.0 ? rd / dd : 0.0;
    double residual = 0.0;
    for (long i = lo; i < hi; ++i) {
      const double e = reference.samples[i] - gain * d[i];
      residual += e * e;
    }
    return residual == 0.0 ? kSnrSentinelDb : std::min(kSnrSentinelDb, 10.0 * std::log10(ref_power / residual));
  };

  // coarse grid in 1/8 sample steps, then golden-section refinement
  constexpr double kStep = 0.125;
  double best_tau = 0.0;
  double best = snr_at(0.0);
  for (double tau = -max_lag; tau <= max_lag + 1e-9; tau += kStep) {
    const double v = snr_at(tau);
    if (v > best) {
      best = v;
      best_tau = tau;
    }
  }
  if (max_lag == 0 || best >= kSnrSentinelDb) return best;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best_tau - kStep;
  double b = best_tau + kStep;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = snr_at(c);
  double fd = snr_at(d);
  while (b - a > 1e-5) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = snr_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = snr_at(d);
    }
  }
  return std::max({best, fc, fd});
}

std::vector<std::uint8_t> serialize_pdm(const PdmSignal& pdm) {
  if (pdm.alpha == 0) throw ArgumentError("write_pdm: alpha is zero");
  std::vector<std::uint8_t> out{'P', 'D', 'M', '1', kPdmContainerVersion};
  auto put = [&out](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(pdm.base_rate_hz, 4);
  put(pdm.alpha, 2);
  put(pdm.bits.size(), 8);
  const std::size_t header = out.size();
  out.resize(header + (pdm.bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < pdm.bits.size(); ++i) {
    const std::uint8_t b = pdm.bits[i];
    if (b > 1) throw ArgumentError("write_pdm: bit values must be 0 or 1");
    out[header + i / 8] |= static_cast<std::uint8_t>(b << (i % 8));
  }
  return out;
}

PdmSignal parse_pdm(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 4 + 1 + 4 + 2 + 8;
  if (bytes.size() < kHeader) throw FormatError("pdm: truncated header");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "PDM1")) throw FormatError("pdm: bad magic");
  if (bytes[4] != kPdmContainerVersion) throw FormatError("pdm: unsupported version " + std::to_string(bytes[4]));
  auto get = [&bytes](std::size_t at, int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes[at + static_cast<std::size_t>(i)]} << (8 * i);
    return v;
  };
  PdmSignal pdm;
  pdm.base_rate_hz = static_cast<std::uint32_t>(get(5, 4));
  pdm.alpha = static_cast<std::uint16_t>(get(9, 2));
  const std::uint64_t count = get(11, 8);
  if (pdm.alpha == 0) throw FormatError("pdm: alpha is zero");
  if (pdm.base_rate_hz == 0) throw FormatError("pdm: base rate is zero");
  const std::uint64_t payload = (count + 7) / 8;
  if (count > (std::uint64_t{1} << 60) || bytes.size() - kHeader != payload)
    throw FormatError("pdm: payload size does not match bit count");
  pdm.bits.resize(count);
  for (std::size_t i = 0; i < count; ++i) pdm.bits[i] = (bytes[kHeader + i / 8] >> (i % 8)) & 1u;
  if (count % 8 != 0 && (bytes.back() >> (count % 8)) != 0) throw FormatError("pdm: nonzero padding bits");
  return pdm;
}

void write_pdm(const PdmSignal& pdm, const std::filesystem::path& path) {
  const auto bytes = serialize_pdm(pdm);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

PdmSignal read_pdm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pdm(bytes);
}

}  // namespace pdmkws
