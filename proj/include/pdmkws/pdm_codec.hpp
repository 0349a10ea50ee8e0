#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pdmkws/signal_io.hpp"

namespace pdmkws {

/// Unipolar one-bit stream. `base_rate_hz` is the pre-oversampling rate; the
/// stream itself runs at base_rate_hz * alpha.
struct PdmSignal {
  std::vector<std::uint8_t> bits;
  std::uint32_t base_rate_hz = 16000;
  std::uint16_t alpha = 1;

  std::uint64_t effective_rate_hz() const { return std::uint64_t{base_rate_hz} * alpha; }
  double duration_s() const { return static_cast<double>(bits.size()) / static_cast<double>(effective_rate_hz()); }

  friend bool operator==(const PdmSignal&, const PdmSignal&) = default;
};

/// Carried quantization error of the sequential modulators. `th` is the firing
/// threshold of the integrate-and-fire form.
struct ModulatorState {
  double qe = 0.0;
  double th = 1.0;
};

struct BipolarStream {
  std::vector<std::int8_t> values;  // each -1 or +1
  ModulatorState state;
};

struct BitStream {
  std::vector<std::uint8_t> bits;
  ModulatorState state;
};

/// First-order sigma-delta on [-1, 1] input with +-1 output: accumulate, emit +1
/// when the error is positive, subtract the emitted value.
template <typename Scalar>
BipolarStream pcm2pdm_seq(std::span<const Scalar> x, ModulatorState state = {});

/// 0/1 variant of the above on [0, 1] input: pulse iff qe + x[n] > 0, then qe -= 1.
/// Cumulative pulse count through n is ceil(cumsum(x)[n]) from qe = 0.
template <typename Scalar>
BitStream pcm2pdm_mod(std::span<const Scalar> x, ModulatorState state = {});

/// Integrate-and-fire with soft reset: pulse iff qe >= th, then qe -= th.
/// Cumulative pulse count through n is floor(cumsum(x)[n] / th) from qe = 0.
template <typename Scalar>
BitStream pcm2pdm_if(std::span<const Scalar> x, ModulatorState state = {});

/// Prefix-sum encoder: bits[n] = floor(c[n]/th) > floor(c[n-1]/th) with c the
/// cumulative sum of x and floor(c[-1]) = 0. Sums are exact in fixed point
/// (x rounded to multiples of 2^-31, or 2^-32 when th != 1), so the result does
/// not depend on evaluation order.
template <typename Scalar>
std::vector<std::uint8_t> pcm2pdm_par(std::span<const Scalar> x, double th = 1.0);

/// pcm2pdm_par over independent chunks on `workers` threads. Each chunk scans
/// from the exact fixed-point sum of all earlier chunks, so the output is
/// bit-identical to pcm2pdm_par for every chunk length and worker count.
template <typename Scalar>
std::vector<std::uint8_t> pcm2pdm_par_chunked(std::span<const Scalar> x, double th, std::size_t chunk_len,
                                              int workers = 1);

enum class EncoderAlgorithm { seq, mod, if_, par };
const char* to_string(EncoderAlgorithm algo);
EncoderAlgorithm parse_encoder_algorithm(const std::string& name);

/// Whole pipeline PCM -> PDM: unipolar map, oversampling, modulation.
/// `seq` maps its +-1 output to 0/1.
PdmSignal encode(const PcmSignal& pcm, int alpha, EncoderAlgorithm algo,
                 OversampleMethod method = OversampleMethod::hold, int workers = 1);

/// Default decimation filter length for a given oversampling ratio.
inline int default_decimation_taps(int alpha) { return 16 * alpha + 1; }

/// Decimation: Hamming-windowed sinc lowpass at 0.45/alpha cycles per PDM sample,
/// keep every alpha-th output (group delay compensated), map 2y - 1, clamp.
/// `taps` = 0 selects default_decimation_taps(alpha).
PcmSignal pdm2pcm(const PdmSignal& pdm, int taps = 0);

/// Reported in place of +inf when the aligned residual is exactly zero.
inline constexpr double kSnrSentinelDb = 300.0;

/// 10 log10(P_ref / P_residual) over the trimmed reference, minimizing the
/// residual over a scalar gain and a (fractional) delay in [-max_lag, max_lag]
/// samples. Fractional delays use windowed-sinc interpolation of `decoded`;
/// max_lag = 0 compares sample-for-sample.
double measure_snr(const PcmSignal& reference, const PcmSignal& decoded, std::size_t trim = 0, int max_lag = 4);

// Container: "PDM1", u8 version, u32 base rate, u16 alpha, u64 bit count,
// LSB-first packed payload with a zero-padded final byte. All little-endian.
inline constexpr std::uint8_t kPdmContainerVersion = 1;
std::vector<std::uint8_t> serialize_pdm(const PdmSignal& pdm);
PdmSignal parse_pdm(std::span<const std::uint8_t> bytes);
void write_pdm(const PdmSignal& pdm, const std::filesystem::path& path);
PdmSignal read_pdm(const std::filesystem::path& path);

}  // namespace pdmkws
