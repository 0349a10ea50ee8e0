#include <catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "pdmkws/datasets.hpp"
#include "pdmkws/errors.hpp"
#include "test_support.hpp"

using namespace pdmkws;
namespace fs = std::filesystem;

namespace {

void touch_list(const fs::path& p, const std::vector<std::string>& lines = {}) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

void write_clip(const fs::path& p, std::size_t n, float v) {
  PcmSignal s;
  s.samples.assign(n, v);
  fs::create_directories(p.parent_path());
  write_wav(s, p);
}

}  // namespace

TEST_CASE("synthetic set has the documented shape", "[datasets]") {
  const auto d = synth_dataset(4, 200, 1);
  CHECK(d.train.size() == 640);
  CHECK(d.valid.size() == 80);
  CHECK(d.test.size() == 80);
  REQUIRE(d.class_names.size() == 4);
  CHECK(std::is_sorted(d.class_names.begin(), d.class_names.end()));
  CHECK(d.class_names[0] == "c00_tone_400hz");
  CHECK(d.class_names[3] == "c03_tone_3200hz");
  std::set<std::string> ids;
  for (Split s : {Split::train, Split::valid, Split::test})
    for (const auto& u : d.split(s)) {
      REQUIRE(u.signal.samples.size() == kClipSamples);
      REQUIRE(u.signal.sample_rate_hz == kClipRateHz);
      REQUIRE(ids.insert(u.source_id).second);
    }
  CHECK(ids.size() == 800);
}

TEST_CASE("synthetic set is seeded", "[datasets]") {
  const auto a = synth_dataset(3, 20, 5);
  const auto b = synth_dataset(3, 20, 5);
  const auto c = synth_dataset(3, 20, 6);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    REQUIRE(a.train[i].signal.samples == b.train[i].signal.samples);
    REQUIRE(a.train[i].source_id == c.train[i].source_id);
    REQUIRE(a.train[i].label == c.train[i].label);
  }
  CHECK(a.train[0].signal.samples != c.train[0].signal.samples);
  CHECK_THROWS_AS(synth_dataset(1, 10, 0), ArgumentError);
}

TEST_CASE("synthetic tones peak at their class frequency", "[datasets]") {
  const auto d = synth_dataset(4, 10, 3);
  const double bin_hz = static_cast<double>(kClipRateHz) / 8192.0;
  for (const auto& u : d.train) {
    const std::vector<float> head(u.signal.samples.begin(), u.signal.samples.begin() + 8192);
    const auto k = static_cast<double>(test::peak_bin(test::magnitude_spectrum(head)));
    const double want = synth_class_frequency(u.label, 4) / bin_hz;
    REQUIRE(std::abs(k - want) <= 2.0);
  }
  CHECK(synth_class_frequency(1, 4) == Catch::Approx(800.0));
}

TEST_CASE("mixed family names cycle the waveform shapes", "[datasets]") {
  const auto d = synth_dataset(5, 10, 3, SynthFamily::mixed);
  CHECK(d.class_names[1].find("upchirp") != std::string::npos);
  CHECK(d.class_names[2].find("downchirp") != std::string::npos);
  CHECK(d.class_names[3].find("_am_") != std::string::npos);
  CHECK(d.class_names[4].find("tone") != std::string::npos);
  CHECK(std::is_sorted(d.class_names.begin(), d.class_names.end()));
}

TEST_CASE("materialized synthetic set loads back through the GSC reader", "[datasets]") {
  test::TempDir dir;
  const auto d = synth_dataset(3, 20, 9);
  materialize(d, dir.path());
  for (bool preload : {true, false}) {
    const auto g = load_gsc(dir.path(), preload, 2);
    CHECK(g.class_names == d.class_names);
    REQUIRE(g.train.size() == d.train.size());
    REQUIRE(g.valid.size() == d.valid.size());
    REQUIRE(g.test.size() == d.test.size());
    for (std::size_t i = 0; i < d.test.size(); ++i) {
      REQUIRE(g.test[i].source_id == d.test[i].source_id);
      REQUIRE(g.test[i].label == d.test[i].label);
      CHECK(g.test[i].signal.samples.empty() == !preload);
      const auto a = utterance_signal(g.test[i]).samples;
      const auto& b = d.test[i].signal.samples;
      REQUIRE(a.size() == b.size());
      for (std::size_t n = 0; n < a.size(); n += 97) REQUIRE(std::abs(a[n] - b[n]) <= 1.0f / 32768);
    }
  }
}

TEST_CASE("list files decide membership", "[datasets]") {
  test::TempDir dir;
  for (const char* c : {"yes", "no"})
    for (int i = 0; i < 4; ++i) write_clip(dir.path() / c / ("f" + std::to_string(i) + ".wav"), 100, 0.25f);
  write_clip(dir.path() / "_background_noise_" / "n.wav", 100, 0.0f);
  fs::create_directories(dir.path() / "empty");
  touch_list(dir.path() / "validation_list.txt", {"yes/f1.wav"});
  touch_list(dir.path() / "testing_list.txt", {"yes/f2.wav", "no/f3.wav"});

  const auto d = load_gsc(dir.path());
  CHECK(d.class_names == std::vector<std::string>{"no", "yes"});
  CHECK(d.valid.size() == 1);
  CHECK(d.test.size() == 2);
  CHECK(d.train.size() == 5);
  std::set<std::string> test_ids;
  for (const auto& u : d.test) test_ids.insert(u.source_id);
  for (const auto& u : d.train) {
    CHECK_FALSE(test_ids.contains(u.source_id));
    REQUIRE(u.signal.samples.size() == kClipSamples);
    CHECK(u.signal.samples[99] == 0.25f);
    CHECK(u.signal.samples[100] == 0.0f);
  }
  CHECK(d.valid[0].label == 1);
}

TEST_CASE("malformed dataset roots are format errors", "[datasets]") {
  test::TempDir dir;
  CHECK_THROWS_AS(load_gsc(dir.path()), FormatError);
  CHECK_THROWS_AS(load_gsc(dir.path() / "nope"), FormatError);
  write_clip(dir.path() / "yes" / "a.wav", 10, 0.1f);
  touch_list(dir.path() / "validation_list.txt");
  CHECK_THROWS_AS(load_gsc(dir.path()), FormatError);  // testing_list.txt missing
  touch_list(dir.path() / "testing_list.txt");
  CHECK(load_gsc(dir.path()).train.size() == 1);
}

TEST_CASE("fit_to_clip pads and truncates", "[datasets]") {
  PcmSignal s;
  s.samples.assign(20000, 0.5f);
  CHECK(fit_to_clip(s).samples.size() == kClipSamples);
  s.samples.assign(3, 0.5f);
  const auto p = fit_to_clip(s);
  CHECK(p.samples.size() == kClipSamples);
  CHECK(p.samples[2] == 0.5f);
  CHECK(p.samples[3] == 0.0f);
}
