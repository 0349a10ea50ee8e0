#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pdmkws {

/// Real-valued sampled waveform, samples in [-1, 1].
struct PcmSignal {
  std::vector<float> samples;
  std::uint32_t sample_rate_hz = 16000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// PCM mapped onto [0, 1]; the input domain of the 0/1 modulators.
struct UnipolarSignal {
  std::vector<float> samples;
  std::uint32_t rate_hz = 16000;
};

enum class OversampleMethod { hold, sinc };

/// Reads a mono 16-bit PCM RIFF/WAVE file. Integer samples are divided by 32768.
/// Throws FormatError on malformed/truncated files and UnsupportedFormatError on
/// anything other than format tag 1, one channel, 16 bits.
PcmSignal read_wav(const std::filesystem::path& path);
PcmSignal parse_wav(std::span<const std::uint8_t> bytes);

/// Writes 16-bit mono PCM. Samples are rounded to the nearest step and saturated
/// to [-32768, 32767].
void write_wav(const PcmSignal& signal, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const PcmSignal& signal);

UnipolarSignal to_unipolar(const PcmSignal& signal);
PcmSignal from_unipolar(const UnipolarSignal& signal);

/// Integer-ratio upsampling onto the PDM grid. `hold` repeats every sample `alpha`
/// times; `sinc` is a Kaiser-windowed sinc interpolator spanning 8 input samples on
/// each side. The output is clamped to [0, 1].
UnipolarSignal oversample(const UnipolarSignal& signal, int alpha,
                          OversampleMethod method = OversampleMethod::hold);

/// Interpolation kernel used by `oversample(..., sinc)`, length 16 * alpha + 1.
std::vector<double> sinc_interpolation_kernel(int alpha);

const char* to_string(OversampleMethod method);
OversampleMethod parse_oversample_method(const std::string& name);

}  // namespace pdmkws
