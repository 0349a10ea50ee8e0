#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "pdmkws/errors.hpp"
#include "pdmkws/pdm_codec.hpp"
#include "test_support.hpp"

using namespace pdmkws;
using Bits = std::vector<std::uint8_t>;

namespace {

template <typename T>
std::span<const T> sp(const std::vector<T>& v) {
  return std::span<const T>(v);
}

// Random inputs that are multiples of 2^-10, with the integer numerators kept
// so the floor-of-cumsum oracle runs in exact integer arithmetic.
struct DyadicInput {
  std::vector<double> x;
  std::vector<std::int64_t> numerators;
};

DyadicInput dyadic_input(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::int64_t> k(0, 1024);
  DyadicInput in;
  for (std::size_t i = 0; i < n; ++i) {
    in.numerators.push_back(k(rng));
    in.x.push_back(static_cast<double>(in.numerators.back()) / 1024.0);
  }
  return in;
}

bool has_integer_prefix(const DyadicInput& in) {
  std::int64_t c = 0;
  for (auto v : in.numerators) {
    c += v;
    if (c % 1024 == 0 && c != 0) return true;
  }
  return false;
}

Bits floor_oracle(const DyadicInput& in) {
  Bits out;
  std::int64_t c = 0;
  std::int64_t prev = 0;
  for (auto v : in.numerators) {
    c += v;
    out.push_back(static_cast<std::uint8_t>(c / 1024 > prev));
    prev = c / 1024;
  }
  return out;
}

std::vector<std::int64_t> prefix_counts(const Bits& b) {
  std::vector<std::int64_t> out;
  std::int64_t c = 0;
  for (auto v : b) out.push_back(c += v);
  return out;
}

PcmSignal sine(double freq, double amplitude, std::size_t n, std::uint32_t rate = 16000) {
  PcmSignal s{std::vector<float>(n), rate};
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * freq * i / rate));
  return s;
}

}  // namespace

TEST_CASE("pcm2pdm_seq follows the bipolar sigma-delta recurrence", "[pdm_codec]") {
  const std::vector<double> zeros{0, 0, 0};
  const auto r = pcm2pdm_seq(sp(zeros));
  CHECK(r.values == std::vector<std::int8_t>{-1, 1, -1});

  const std::vector<double> ones(17, 1.0);
  for (auto v : pcm2pdm_seq(sp(ones)).values) CHECK(v == 1);

  const std::vector<double> bad{0.5, 1.5};
  CHECK_THROWS_AS(pcm2pdm_seq(sp(bad)), ArgumentError);
}

TEST_CASE("pcm2pdm_mod hand traces", "[pdm_codec]") {
  CHECK(pcm2pdm_mod(sp(std::vector<double>{0.5, 0.5, 0.5})).bits == Bits{1, 0, 1});
  CHECK(pcm2pdm_mod(sp(std::vector<double>{0.6, 0.6, 0.6})).bits == Bits{1, 1, 0});
  CHECK(pcm2pdm_mod(sp(std::vector<double>(9, 0.0))).bits == Bits(9, 0));
}

TEST_CASE("pcm2pdm_if hand traces", "[pdm_codec]") {
  CHECK(pcm2pdm_if(sp(std::vector<double>{0.6, 0.6, 0.6})).bits == Bits{0, 1, 0});
  CHECK(pcm2pdm_if(sp(std::vector<double>{1.0, 0.0})).bits == Bits{1, 0});
  CHECK(pcm2pdm_if(sp(std::vector<double>(9, 0.0))).bits == Bits(9, 0));
  const auto r = pcm2pdm_if(sp(std::vector<double>{0.5, 0.5}), ModulatorState{0.0, 0.5});
  CHECK(r.bits == Bits{1, 1});
  CHECK(r.state.qe == 0.0);
}

TEST_CASE("pcm2pdm_par hand traces and leading element", "[pdm_codec]") {
  CHECK(pcm2pdm_par(sp(std::vector<double>{0.5, 0.5, 0.5})) == Bits{0, 1, 0});
  CHECK(pcm2pdm_par(sp(std::vector<double>{0.6, 0.6, 0.6})) == Bits{0, 1, 0});
  CHECK(pcm2pdm_par(sp(std::vector<double>{1.0, 0.0, 1.0, 1.0})) == Bits{1, 0, 1, 1});
  CHECK(pcm2pdm_par(sp(std::vector<float>{1.0f, 0.0f, 1.0f, 1.0f})) == Bits{1, 0, 1, 1});
  CHECK(pcm2pdm_par(sp(std::vector<double>{})).empty());
  // th = 0.5: floor(cumsum / 0.5) over [0.3, 0.3, 0.3] = 0, 1, 1
  CHECK(pcm2pdm_par(sp(std::vector<double>{0.3, 0.3, 0.3}), 0.5) == Bits{0, 1, 0});
  CHECK_THROWS_AS(pcm2pdm_par(sp(std::vector<double>{0.3}), 0.0), ArgumentError);
  CHECK_THROWS_AS(pcm2pdm_par(sp(std::vector<double>{0.3}), -1.0), ArgumentError);
  CHECK_THROWS_AS(pcm2pdm_par(sp(std::vector<double>{1.2})), ArgumentError);
}

TEST_CASE("parallel encoder equals IF encoder on dyadic inputs without ties", "[pdm_codec][property]") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(1, 600);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = dyadic_input(rng, len(rng));
    if (has_integer_prefix(in)) continue;
    ++checked;
    const auto oracle = floor_oracle(in);
    REQUIRE(pcm2pdm_if(sp(in.x)).bits == oracle);
    REQUIRE(pcm2pdm_par(sp(in.x)) == oracle);
    std::vector<float> xf(in.x.begin(), in.x.end());
    REQUIRE(pcm2pdm_par(sp(xf)) == oracle);
  }
  CHECK(checked > 50);
}

TEST_CASE("mod and IF bracket cumsum from above and below", "[pdm_codec][property]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + trial * 13);
    for (auto& v : x) v = u(rng);
    const auto mod = pcm2pdm_mod(sp(x));
    const auto ifb = pcm2pdm_if(sp(x));
    const auto cm = prefix_counts(mod.bits);
    const auto ci = prefix_counts(ifb.bits);
    double cum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      cum += x[i];
      REQUIRE(cm[i] - ci[i] >= 0);
      REQUIRE(cm[i] - ci[i] <= 1);
      REQUIRE(static_cast<double>(cm[i]) >= cum - 1e-9);
      REQUIRE(static_cast<double>(ci[i]) <= cum + 1e-9);
    }
    const double n = static_cast<double>(x.size());
    REQUIRE(std::abs(test::mean(mod.bits) - cum / n) <= 1.0 / n + 1e-12);
    REQUIRE(std::abs(test::mean(ifb.bits) - cum / n) <= 1.0 / n + 1e-12);
    REQUIRE(mod.state.qe > -1.0);
    REQUIRE(mod.state.qe <= 1.0);
  }
}

TEST_CASE("sequential encoders compose over chunks with carried state", "[pdm_codec][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(1000);
  for (auto& v : x) v = u(rng);
  const std::size_t cut = 377;
  const std::span<const double> all(x), a = all.first(cut), b = all.subspan(cut);

  const auto whole_mod = pcm2pdm_mod(all);
  auto first = pcm2pdm_mod(a);
  auto second = pcm2pdm_mod(b, first.state);
  first.bits.insert(first.bits.end(), second.bits.begin(), second.bits.end());
  CHECK(first.bits == whole_mod.bits);
  CHECK(second.state.qe == whole_mod.state.qe);

  const auto whole_if = pcm2pdm_if(all);
  auto fi = pcm2pdm_if(a);
  auto si = pcm2pdm_if(b, fi.state);
  fi.bits.insert(fi.bits.end(), si.bits.begin(), si.bits.end());
  CHECK(fi.bits == whole_if.bits);

  std::vector<double> bip(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) bip[i] = 2.0 * x[i] - 1.0;
  const std::span<const double> ball(bip);
  const auto whole_seq = pcm2pdm_seq(ball);
  auto fs = pcm2pdm_seq(ball.first(cut));
  auto ss = pcm2pdm_seq(ball.subspan(cut), fs.state);
  fs.values.insert(fs.values.end(), ss.values.begin(), ss.values.end());
  CHECK(fs.values == whole_seq.values);
}

TEST_CASE("bipolar algorithm is the 0/1 modulator started at qe = -1/2", "[pdm_codec][property]") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> k(0, 256);
  std::vector<double> u(2000), bip(2000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = k(rng) / 256.0;
    bip[i] = 2.0 * u[i] - 1.0;
  }
  const auto seq = pcm2pdm_seq(sp(bip));
  // seq fires iff 2(e + u) - 1 > 0, i.e. the unipolar error offset by one half
  const auto mod = pcm2pdm_mod(sp(u), ModulatorState{-0.5, 1.0});
  for (std::size_t i = 0; i < u.size(); ++i) REQUIRE((seq.values[i] > 0) == (mod.bits[i] == 1));
}

TEST_CASE("chunked parallel encoder is bit-identical across chunking", "[pdm_codec][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> x((1 << 16) + 37);
  for (auto& v : x) v = u(rng);
  const auto ref = pcm2pdm_par(sp(x));
  for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{1024}, x.size(), x.size() + 5})
    for (int workers : {1, 3})
      REQUIRE(pcm2pdm_par_chunked(sp(x), 1.0, chunk, workers) == ref);

  std::vector<double> xd(x.begin(), x.end());
  CHECK(pcm2pdm_par(sp(xd)) == ref);
  const auto ref_half = pcm2pdm_par(sp(xd), 0.75);
  CHECK(pcm2pdm_par_chunked(sp(xd), 0.75, 1000, 2) == ref_half);
  CHECK_THROWS_AS(pcm2pdm_par_chunked(sp(xd), 1.0, 0), ArgumentError);
}

TEST_CASE("encode pipeline produces alpha bits per sample", "[pdm_codec]") {
  const auto pcm = sine(440.0, 0.5, 800);
  for (auto algo : {EncoderAlgorithm::seq, EncoderAlgorithm::mod, EncoderAlgorithm::if_, EncoderAlgorithm::par}) {
    const auto p = encode(pcm, 8, algo);
    CHECK(p.bits.size() == 800u * 8u);
    CHECK(p.alpha == 8);
    CHECK(p.base_rate_hz == 16000);
    CHECK(p.effective_rate_hz() == 128000u);
    CHECK(std::abs(test::mean(p.bits) - 0.5) < 0.01);
  }
  CHECK(encode(pcm, 4, EncoderAlgorithm::par, OversampleMethod::hold, 3).bits ==
        encode(pcm, 4, EncoderAlgorithm::par).bits);
}

TEST_CASE("pdm2pcm steady-state DC behaviour", "[pdm_codec]") {
  for (int alpha : {1, 4, 16}) {
    const int taps = default_decimation_taps(alpha);
    const std::size_t edge = static_cast<std::size_t>(taps / alpha + 1);
    PdmSignal ones{Bits(static_cast<std::size_t>(alpha) * 200, 1), 16000, static_cast<std::uint16_t>(alpha)};
    const auto d1 = pdm2pcm(ones);
    REQUIRE(d1.samples.size() == 200);
    for (std::size_t i = edge; i + edge < d1.samples.size(); ++i) REQUIRE(std::abs(d1.samples[i] - 1.0f) <= 1e-6f);

    PdmSignal alt{Bits(static_cast<std::size_t>(alpha) * 200), 16000, static_cast<std::uint16_t>(alpha)};
    for (std::size_t i = 0; i < alt.bits.size(); ++i) alt.bits[i] = i % 2;
    const auto d2 = pdm2pcm(alt);
    if (alpha >= 4)  // at alpha 1 the alternation is in band and not averaged away
      for (std::size_t i = edge; i + edge < d2.samples.size(); ++i) REQUIRE(std::abs(d2.samples[i]) <= 0.01f);
  }
  PdmSignal bad{Bits(8, 1), 16000, 0};
  CHECK_THROWS_AS(pdm2pcm(bad), FormatError);
  PdmSignal ok{Bits(8, 1), 16000, 2};
  CHECK_THROWS_AS(pdm2pcm(ok, 4), ArgumentError);
  CHECK_THROWS_AS(pdm2pcm(ok, 1), ArgumentError);
}

TEST_CASE("measure_snr constructed cases", "[pdm_codec]") {
  const auto ref = sine(1000.0, 0.8, 16000);
  CHECK(measure_snr(ref, ref) >= kSnrSentinelDb);

  // residual at exactly -40 dB relative to the reference power, orthogonal-ish noise
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> noise(ref.samples.size());
  for (auto& v : noise) v = g(rng);
  double p_ref = 0.0, p_noise = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    p_ref += ref.samples[i] * ref.samples[i];
    p_noise += noise[i] * noise[i];
  }
  const double scale = std::sqrt(p_ref * 1e-4 / p_noise);
  PcmSignal noisy = ref;
  for (std::size_t i = 0; i < noise.size(); ++i) noisy.samples[i] += static_cast<float>(scale * noise[i]);
  CHECK_THAT(measure_snr(ref, noisy, 0, 0), Catch::Matchers::WithinAbs(40.0, 0.5));

  // a pure delay is aligned away
  PcmSignal shifted = ref;
  std::rotate(shifted.samples.rbegin(), shifted.samples.rbegin() + 2, shifted.samples.rend());
  CHECK(measure_snr(ref, shifted, 8, 4) > 100.0);

  // half-sample delay of a band-limited tone is recovered by the fractional search
  PcmSignal half = ref;
  for (std::size_t i = 0; i < half.samples.size(); ++i)
    half.samples[i] = static_cast<float>(0.8 * std::sin(2.0 * std::numbers::pi * 1000.0 * (i - 0.5) / 16000.0));
  CHECK(measure_snr(ref, half, 0, 0) < 20.0);
  CHECK(measure_snr(ref, half, 8, 4) > 70.0);

  CHECK_THROWS_AS(measure_snr(PcmSignal{std::vector<float>(100, 0.0f), 16000}, ref), ArgumentError);
  CHECK_THROWS_AS(measure_snr(PcmSignal{std::vector<float>(100, 0.0f), 16000},
                              PcmSignal{std::vector<float>(100, 0.0f), 16000}),
                  ArgumentError);
}

TEST_CASE("roundtrip SNR grows with oversampling", "[pdm_codec][dsp]") {
  const auto ref = sine(1000.0, 1.0, 16000);
  double previous = -1e9;
  for (int alpha : {4, 16, 64}) {
    const auto decoded = pdm2pcm(encode(ref, alpha, EncoderAlgorithm::par));
    const double snr = measure_snr(ref, decoded, 64);
    // FFT oracle on a power-of-two capture of whole tone periods
    const std::vector<float> capture(decoded.samples.begin() + 4000, decoded.samples.begin() + 4000 + 8192);
    const double sinad = test::sinad_db(capture, 512, 4096);
    INFO("alpha " << alpha << " snr " << snr << " dB, oracle sinad " << sinad << " dB");
    CHECK(snr > previous);
    CHECK(std::abs(snr - sinad) < 3.0);
    previous = snr;
  }
}

TEST_CASE("pdm container layout and roundtrip", "[pdm_codec]") {
  PdmSignal nine{Bits{1, 0, 1, 1, 0, 0, 0, 0, 1}, 16000, 64};
  const auto bytes = serialize_pdm(nine);
  REQUIRE(bytes.size() == 19 + 2);
  CHECK(bytes[0] == 0x50);
  CHECK(bytes[1] == 0x44);
  CHECK(bytes[2] == 0x4D);
  CHECK(bytes[3] == 0x31);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0x80);  // 16000 = 0x3E80
  CHECK(bytes[6] == 0x3E);
  CHECK(bytes[9] == 64);
  CHECK(bytes[11] == 9);
  CHECK(bytes[19] == 0b00001101);
  CHECK(bytes[20] == 0b00000001);
  CHECK(parse_pdm(bytes) == nine);

  std::mt19937_64 rng(4);
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{8}, std::size_t{1000003}}) {
    PdmSignal p{Bits(n), 48000, 3};
    for (auto& b : p.bits) b = rng() & 1u;
    const test::TempDir dir;
    write_pdm(p, dir.path() / "x.pdm");
    CHECK(read_pdm(dir.path() / "x.pdm") == p);
  }
}

TEST_CASE("pdm container rejects malformed input", "[pdm_codec]") {
  const auto good = serialize_pdm(PdmSignal{Bits{1, 1, 1}, 16000, 4});
  auto bad_magic = good;
  bad_magic[0] = 'Q';
  CHECK_THROWS_AS(parse_pdm(bad_magic), FormatError);
  auto bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_AS(parse_pdm(bad_version), FormatError);
  auto zero_alpha = good;
  zero_alpha[9] = 0;
  zero_alpha[10] = 0;
  CHECK_THROWS_AS(parse_pdm(zero_alpha), FormatError);
  auto short_payload = good;
  short_payload.pop_back();
  CHECK_THROWS_AS(parse_pdm(short_payload), FormatError);
  auto dirty_pad = good;
  dirty_pad.back() |= 0x80;
  CHECK_THROWS_AS(parse_pdm(dirty_pad), FormatError);
  CHECK_THROWS_AS(serialize_pdm(PdmSignal{Bits{2}, 16000, 1}), ArgumentError);
}
