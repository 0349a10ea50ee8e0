#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdmkws/signal_io.hpp"

namespace pdmkws {

inline constexpr std::uint32_t kClipRateHz = 16000;
inline constexpr std::size_t kClipSamples = kClipRateHz;  // one second

/// One keyword clip. `signal` is exactly kClipSamples long once loaded; lazily
/// loaded datasets leave it empty and keep `path`.
struct LabeledUtterance {
  PcmSignal signal;
  int label = 0;
  std::string source_id;  // "class/file.wav"
  std::filesystem::path path;
};

enum class Split { train, valid, test };
const char* to_string(Split split);
Split parse_split(const std::string& name);

struct Dataset {
  std::vector<std::string> class_names;  // index = label, sorted
  std::vector<LabeledUtterance> train, valid, test;

  const std::vector<LabeledUtterance>& split(Split s) const;
  int classes() const { return static_cast<int>(class_names.size()); }
};

/// Zero-pads at the end or truncates to one second.
PcmSignal fit_to_clip(PcmSignal signal);

/// The utterance waveform, read from disk when not held in memory.
PcmSignal utterance_signal(const LabeledUtterance& u);

/// Speech Commands layout: one directory of WAVs per class, plus
/// validation_list.txt and testing_list.txt naming "class/file.wav" entries.
/// Everything not listed is training data. Directories starting with '_' or
/// holding no WAV files are skipped with a warning on stderr.
/// With `preload` false only paths are kept.
Dataset load_gsc(const std::filesystem::path& root, bool preload = true, int workers = 1);

enum class SynthFamily { tones, mixed };
const char* to_string(SynthFamily f);
SynthFamily parse_synth_family(const std::string& name);

/// Class frequency for class c of K: 400 * 8^(c/(K-1)) Hz (400..3200).
double synth_class_frequency(int c, int classes);

/// Seeded synthetic keyword set. `tones`: class c is a sine at its class
/// frequency. `mixed` cycles tone, up-chirp, down-chirp and AM tone around the
/// class frequency. Random phase, +-3 dB gain jitter, white noise at 20 dB SNR.
/// Per class the first 80% go to train, the next 10% to valid, the rest to test.
Dataset synth_dataset(int classes, int per_class, std::uint64_t seed, SynthFamily family = SynthFamily::tones);

/// Writes the dataset in the Speech Commands layout (16-bit WAVs + list files).
void materialize(const Dataset& data, const std::filesystem::path& root);

}  // namespace pdmkws
