#include "pdmkws/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "pdmkws/errors.hpp"
#include "pdmkws/fir.hpp"

namespace pdmkws {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr double kKaiserBeta = 8.6;
constexpr int kSincHalfWidth = 8;  // input samples on each side

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

PcmSignal parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw FormatError("wav: missing RIFF/WAVE header");

  bool have_fmt = false;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16 || body + size > bytes.size()) throw FormatError("wav: truncated fmt chunk");
      const std::uint16_t tag = read_u16(bytes, body);
      const std::uint16_t channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      const std::uint16_t bits = read_u16(bytes, body + 14);
      if (tag != kFormatPcm) throw UnsupportedFormatError("wav: only integer PCM (format tag 1) is supported");
      if (channels != 1) throw UnsupportedFormatError("wav: only mono files are supported");
      if (bits != 16) throw UnsupportedFormatError("wav: only 16-bit samples are supported");
      if (rate == 0) throw FormatError("wav: zero sample rate");
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
      if (body + size > bytes.size() || size % 2 != 0) throw FormatError("wav: truncated data chunk");
      PcmSignal out;
      out.sample_rate_hz = rate;
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
        out.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError(have_fmt ? "wav: missing data chunk" : "wav: missing fmt chunk");
}

PcmSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const PcmSignal& signal) {
  if (signal.sample_rate_hz == 0) throw ArgumentError("wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, signal.sample_rate_hz);
  put_u32(out, signal.sample_rate_hz * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : signal.samples) {
    if (!(s >= -1.0f && s <= 1.0f)) throw ArgumentError("wav: sample outside [-1, 1]");
    const long q = std::lround(static_cast<double>(s) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
  }
  return out;
}

void write_wav(const PcmSignal& signal, const std::filesystem::path& path) {
  const auto bytes = encode_wav(signal);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

UnipolarSignal to_unipolar(const PcmSignal& signal) {
  UnipolarSignal out;
  out.rate_hz = signal.sample_rate_hz;
  out.samples.resize(signal.samples.size());
  std::transform(signal.samples.begin(), signal.samples.end(), out.samples.begin(),
                 [](float x) { return (x + 1.0f) * 0.5f; });
  return out;
}

PcmSignal from_unipolar(const UnipolarSignal& signal) {
  PcmSignal out;
  out.sample_rate_hz = signal.rate_hz;
  out.samples.resize(signal.samples.size());
  std::transform(signal.samples.begin(), signal.samples.end(), out.samples.begin(),
                 [](float y) { return y * 2.0f - 1.0f; });
  return out;
}

std::vector<double> sinc_interpolation_kernel(int alpha) {
  if (alpha < 1) throw ArgumentError("oversample: alpha must be >= 1");
  const int length = 2 * kSincHalfWidth * alpha + 1;
  const int center = kSincHalfWidth * alpha;
  std::vector<double> h(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    const double x = static_cast<double>(n - center) / alpha;
    const double sinc = n == center ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    h[static_cast<std::size_t>(n)] = sinc * fir::kaiser(n, length, kKaiserBeta);
  }
  // Each polyphase branch sums to one so DC passes exactly; branch 0 is the
  // identity because sinc vanishes at nonzero multiples of alpha.
  for (int phase = 0; phase < alpha; ++phase) {
    double sum = 0.0;
    for (int n = phase; n < length; n += alpha) sum += h[static_cast<std::size_t>(n)];
    for (int n = phase; n < length; n += alpha) h[static_cast<std::size_t>(n)] /= sum;
  }
  return h;
}

UnipolarSignal oversample(const UnipolarSignal& signal, int alpha, OversampleMethod method) {
  if (alpha < 1) throw ArgumentError("oversample: alpha must be >= 1");
  UnipolarSignal out;
  out.rate_hz = signal.rate_hz * static_cast<std::uint32_t>(alpha);
  const std::size_t n_in = signal.samples.size();
  const auto a = static_cast<std::size_t>(alpha);
  out.samples.resize(n_in * a);
  if (alpha == 1) {
    out.samples = signal.samples;
    return out;
  }
  if (method == OversampleMethod::hold) {
    for (std::size_t i = 0; i < n_in; ++i)
      std::fill_n(out.samples.begin() + static_cast<std::ptrdiff_t>(i * a), a, signal.samples[i]);
    return out;
  }

  const auto h = sinc_interpolation_kernel(alpha);
  const long center = static_cast<long>(kSincHalfWidth) * alpha;
  const long n_in_l = static_cast<long>(n_in);
  for (long m = 0; m < n_in_l; ++m) {
    for (long phase = 0; phase < alpha; ++phase) {
      // y[m*alpha + phase] = sum_k u[k] * h[center + phase + (m - k) * alpha]
      double acc = 0.0;
      for (long j = -kSincHalfWidth; j <= kSincHalfWidth; ++j) {
        const long k = m - j;
        const long tap = center + phase + j * alpha;
        if (k < 0 || k >= n_in_l || tap < 0 || tap >= static_cast<long>(h.size())) continue;
        acc += h[static_cast<std::size_t>(tap)] * signal.samples[static_cast<std::size_t>(k)];
      }
      out.samples[static_cast<std::size_t>(m * alpha + phase)] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  }
  return out;
}

const char* to_string(OversampleMethod method) {
  return method == OversampleMethod::hold ? "hold" : "sinc";
}

OversampleMethod parse_oversample_method(const std::string& name) {
  if (name == "hold") return OversampleMethod::hold;
  if (name == "sinc") return OversampleMethod::sinc;
  throw ArgumentError("unknown oversampling method: " + name);
}

}  // namespace pdmkws
