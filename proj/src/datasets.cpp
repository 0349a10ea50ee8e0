#include "pdmkws/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "pdmkws/errors.hpp"
#include "pdmkws/parallel.hpp"

namespace fs = std::filesystem;

namespace pdmkws {

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid" || name == "validation") return Split::valid;
  if (name == "test") return Split::test;
  throw ArgumentError("unknown split '" + name + "' (train, valid, test)");
}

const std::vector<LabeledUtterance>& Dataset::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::valid: return valid;
    case Split::test: break;
  }
  return test;
}

PcmSignal fit_to_clip(PcmSignal signal) {
  signal.samples.resize(kClipSamples, 0.0f);
  return signal;
}

PcmSignal utterance_signal(const LabeledUtterance& u) {
  if (!u.signal.samples.empty()) return u.signal;
  auto s = read_wav(u.path);
  if (s.sample_rate_hz != kClipRateHz)
    throw UnsupportedFormatError(u.path.string() + ": sample rate " + std::to_string(s.sample_rate_hz) +
                                 " Hz, expected 16000");
  return fit_to_clip(std::move(s));
}

namespace {

std::set<std::string> read_list(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("missing list file " + file.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

bool is_wav(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

}  // namespace

Dataset load_gsc(const fs::path& root, bool preload, int workers) {
  if (!fs::is_directory(root)) throw FormatError("dataset root " + root.string() + " is not a directory");
  const auto valid_list = read_list(root / "validation_list.txt");
  const auto test_list = read_list(root / "testing_list.txt");

  std::map<std::string, std::vector<std::string>> by_class;  // sorted by name
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    std::vector<std::string> files;
    for (const auto& f : fs::directory_iterator(entry.path()))
      if (f.is_regular_file() && is_wav(f.path())) files.push_back(f.path().filename().string());
    if (name.starts_with('_') || files.empty()) {
      std::cerr << "warning: skipping directory " << name << " (not a keyword class)\n";
      continue;
    }
    std::sort(files.begin(), files.end());
    by_class[name] = std::move(files);
  }
  if (by_class.empty()) throw FormatError("no class directories with WAV files under " + root.string());

  Dataset d;
  int label = 0;
  for (const auto& [name, files] : by_class) {
    d.class_names.push_back(name);
    for (const auto& f : files) {
      LabeledUtterance u;
      u.label = label;
      u.source_id = name + "/" + f;
      u.path = root / name / f;
      if (test_list.contains(u.source_id))
        d.test.push_back(std::move(u));
      else if (valid_list.contains(u.source_id))
        d.valid.push_back(std::move(u));
      else
        d.train.push_back(std::move(u));
    }
    ++label;
  }
  if (preload) {
    for (auto* split : {&d.train, &d.valid, &d.test}) {
      auto& items = *split;
      parallel_for(items.size(), workers, [&](std::size_t i) { items[i].signal = utterance_signal(items[i]); });
    }
  }
  return d;
}

const char* to_string(SynthFamily f) { return f == SynthFamily::tones ? "tones" : "mixed"; }

SynthFamily parse_synth_family(const std::string& name) {
  if (name == "tones") return SynthFamily::tones;
  if (name == "mixed") return SynthFamily::mixed;
  throw ArgumentError("unknown synthetic family '" + name + "' (tones, mixed)");
}

double synth_class_frequency(int c, int classes) {
  if (classes < 2) throw ArgumentError("synthetic dataset needs at least 2 classes");
  return 400.0 * std::pow(8.0, static_cast<double>(c) / (classes - 1));
}

namespace {

enum class Shape { tone, up_chirp, down_chirp, am };
const char* shape_name(Shape s) {
  switch (s) {
    case Shape::tone: return "tone";
    case Shape::up_chirp: return "upchirp";
    case Shape::down_chirp: return "downchirp";
    case Shape::am: return "am";
  }
  return "?";
}

PcmSignal synth_clip(Shape shape, double f, std::uint64_t seed, int c, int i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(i)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> phase_d(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> gain_db(-3.0, 3.0);
  const double phase = phase_d(rng);
  const double amp = 0.5 * std::pow(10.0, gain_db(rng) / 20.0);
  const double fs = kClipRateHz;
  const double dur = 1.0;

  std::vector<double> x(kClipSamples);
  for (std::size_t n = 0; n < kClipSamples; ++n) {
    const double t = static_cast<double>(n) / fs;
    double arg = 0.0;
    double env = 1.0;
    switch (shape) {
      case Shape::tone: arg = 2 * std::numbers::pi * f * t; break;
      case Shape::up_chirp:
      case Shape::down_chirp: {
        // linear sweep across one octave centred (geometrically) on f
        double f0 = f / std::numbers::sqrt2, f1 = f * std::numbers::sqrt2;
        if (shape == Shape::down_chirp) std::swap(f0, f1);
        arg = 2 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t);
        break;
      }
      case Shape::am:
        arg = 2 * std::numbers::pi * f * t;
        env = 0.5 * (1.0 + std::sin(2 * std::numbers::pi * 6.0 * t));
        break;
    }
    x[n] = amp * env * std::sin(arg + phase);
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(x.size());
  std::normal_distribution<double> noise(0.0, std::sqrt(power / 100.0));  // 20 dB
  PcmSignal s;
  s.sample_rate_hz = kClipRateHz;
  s.samples.resize(kClipSamples);
  for (std::size_t n = 0; n < kClipSamples; ++n)
    s.samples[n] = static_cast<float>(std::clamp(x[n] + noise(rng), -1.0, 1.0));
  return s;
}

}  // namespace

Dataset synth_dataset(int classes, int per_class, std::uint64_t seed, SynthFamily family) {
  if (classes < 2) throw ArgumentError("synthetic dataset needs at least 2 classes");
  if (classes > 100) throw ArgumentError("synthetic dataset supports at most 100 classes");
  if (per_class < 1) throw ArgumentError("per_class must be at least 1");
  Dataset d;
  const int n_train = per_class * 8 / 10;
  const int n_valid = per_class / 10;
  for (int c = 0; c < classes; ++c) {
    const Shape shape = family == SynthFamily::tones ? Shape::tone : static_cast<Shape>(c % 4);
    const double f = synth_class_frequency(c, classes);
    char name[64];
    std::snprintf(name, sizeof name, "c%02d_%s_%dhz", c, shape_name(shape), static_cast<int>(std::lround(f)));
    d.class_names.emplace_back(name);
    for (int i = 0; i < per_class; ++i) {
      LabeledUtterance u;
      u.signal = synth_clip(shape, f, seed, c, i);
      u.label = c;
      char file[32];
      std::snprintf(file, sizeof file, "%05d.wav", i);
      u.source_id = std::string(name) + "/" + file;
      auto& dst = i < n_train ? d.train : (i < n_train + n_valid ? d.valid : d.test);
      dst.push_back(std::move(u));
    }
  }
  return d;
}

void materialize(const Dataset& data, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  for (const auto& name : data.class_names) fs::create_directories(root / name);
  auto write_split = [&](const std::vector<LabeledUtterance>& items, const char* list) {
    std::ofstream out;
    if (list) {
      out.open(root / list);
      if (!out) throw IoError("cannot write " + (root / list).string());
    }
    for (const auto& u : items) {
      write_wav(utterance_signal(u), root / u.source_id);
      if (list) out << u.source_id << '\n';
    }
  };
  write_split(data.train, nullptr);
  write_split(data.valid, "validation_list.txt");
  write_split(data.test, "testing_list.txt");
}

}  // namespace pdmkws
