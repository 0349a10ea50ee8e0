#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "manifest.hpp"
#include "pdmkws/datasets.hpp"
#include "pdmkws/errors.hpp"
#include "pdmkws/kws_net.hpp"
#include "pdmkws/metrics_bench.hpp"
#include "pdmkws/pdm_codec.hpp"
#include "pdmkws/signal_io.hpp"
#include "pdmkws/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pdmkws::cli {

namespace {

const auto kOnOff = CLI::IsMember({"on", "off"});

struct NetOptions {
  int osr = 64;
  int sparsity = 0;
  int hidden = 128;
  std::string rec = "on";
  std::string delays = "on";
  std::string polarity = "unipolar";
  double synaptic_gain = 8.0;
  double readout_gain = 16.0;
};

// osr/sparsity are lists for sweep, so they are registered separately
void add_net_options(CLI::App* c, NetOptions& o) {
  c->add_option("--hidden", o.hidden, "hidden channels per layer")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--rec", o.rec, "recurrence on layers 3 and 4")->capture_default_str()->check(kOnOff);
  c->add_option("--delays", o.delays, "per-channel synaptic delays")->capture_default_str()->check(kOnOff);
  c->add_option("--polarity", o.polarity, "input coding of PDM bits: unipolar (0/1) or bipolar (-1/+1)")
      ->capture_default_str()
      ->check(CLI::IsMember({"unipolar", "bipolar"}));
  c->add_option("--synaptic-gain", o.synaptic_gain, "fixed gain on hidden conv currents")->capture_default_str();
  c->add_option("--readout-gain", o.readout_gain, "fixed gain on the time-averaged readout")->capture_default_str();
}

NetworkSpec make_spec(const NetOptions& o, int alpha, int sparsity, int classes, std::uint64_t seed) {
  NetworkSpec s;
  s.alpha = alpha;
  s.hidden_channels = o.hidden;
  s.fan_in = fan_in_for_sparsity(sparsity, o.hidden);
  s.classes = classes;
  s.recurrence = o.rec == "on";
  s.delays = o.delays == "on";
  s.polarity = parse_input_polarity(o.polarity);
  s.synaptic_gain = o.synaptic_gain;
  s.readout_gain = o.readout_gain;
  s.weight_seed = 3 * seed + 1;
  s.delay_seed = 3 * seed + 2;
  s.mask_seed = 3 * seed + 3;
  s.validate();
  return s;
}

struct RunOptions {
  std::string data;
  bool lazy = false;
  int epochs = 150;
  std::uint64_t seed = 0;
  std::string aug = "off";
  int batch = 32;
  double lr = 0.002;
  std::string algo = "par";
  std::string oversample = "hold";
  double time_budget = 0.0;
  int workers = 1;
};

void add_data_option(CLI::App* c, std::string& data, bool& lazy) {
  c->add_option("--data", data, std::string("dataset root (Speech Commands layout); default $") + kDataRootEnv);
  c->add_flag("--lazy", lazy, "read WAVs on demand instead of preloading");
}

void add_workers_option(CLI::App* c, int& workers) {
  c->add_option("--workers", workers, "worker threads; 1 is the deterministic reference")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_run_options(CLI::App* c, RunOptions& o) {
  add_data_option(c, o.data, o.lazy);
  c->add_option("--epochs", o.epochs, "training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--seed", o.seed, "seed for weights, delays, masks, batch order and augmentation")
      ->capture_default_str();
  c->add_option("--aug", o.aug, "random time-shift augmentation")->capture_default_str()->check(kOnOff);
  c->add_option("--batch", o.batch, "batch size")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--lr", o.lr, "initial Adamax learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--algo", o.algo, "PDM encoder feeding the network")
      ->capture_default_str()
      ->check(CLI::IsMember({"seq", "mod", "if", "par"}));
  c->add_option("--oversample", o.oversample, "PCM upsampling before modulation")
      ->capture_default_str()
      ->check(CLI::IsMember({"hold", "sinc"}));
  c->add_option("--time-budget", o.time_budget, "stop after the epoch that exceeds this many seconds (0 = none)")
      ->capture_default_str();
  add_workers_option(c, o.workers);
}

TrainConfig make_config(const RunOptions& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.seed = o.seed;
  c.augment = o.aug == "on";
  c.batch_size = o.batch;
  c.learning_rate = o.lr;
  c.algorithm = parse_encoder_algorithm(o.algo);
  c.oversample = parse_oversample_method(o.oversample);
  c.time_budget_s = o.time_budget;
  c.workers = o.workers;
  c.validate();
  return c;
}

fs::path data_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  throw ArgumentError(std::string("no --data given and ") + kDataRootEnv + " is not set");
}

// cheap fingerprint: split, id, label and file size of every clip
std::string listing_sha256(const Dataset& d) {
  std::ostringstream s;
  for (Split sp : {Split::train, Split::valid, Split::test})
    for (const auto& u : d.split(sp)) {
      s << to_string(sp) << '\t' << u.source_id << '\t' << u.label << '\t';
      s << (u.path.empty() ? u.signal.samples.size() * 2 : fs::file_size(u.path)) << '\n';
    }
  const auto text = s.str();
  return sha256_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

json data_entry(const fs::path& root, const Dataset& d) {
  json j = {{"path", root.string()},
            {"listing_sha256", listing_sha256(d)},
            {"clips", {{"train", d.train.size()}, {"valid", d.valid.size()}, {"test", d.test.size()}}},
            {"class_names", d.class_names}};
  for (const char* list : {"validation_list.txt", "testing_list.txt"})
    if (fs::exists(root / list)) j[std::string(list) + "_sha256"] = sha256_file(root / list);
  return j;
}

json seeds_json(const NetworkSpec& s, const TrainConfig& c) {
  return {{"train", c.seed}, {"weights", s.weight_seed}, {"delays", s.delay_seed}, {"masks", s.mask_seed}};
}

json variants_json(const NetworkSpec& s, const TrainConfig& c) {
  return {{"encoder", to_string(c.algorithm)}, {"oversample", to_string(c.oversample)},
          {"polarity", to_string(s.polarity)}};
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

struct Context {
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.config["cwd"] = fs::current_path().string();
    return m;
  }

  void wrote(const fs::path& output, const RunManifest& m) const {
    const auto path = write_manifest(m, output);
    err << "manifest: " << path.string() << '\n';
  }
};

// ---- encode / decode ----------------------------------------------------------------

struct EncodeOptions {
  std::string in, out, algo = "par", oversample = "hold";
  int osr = 64;
  int workers = 1;
};

void run_encode(const EncodeOptions& o, const Context& ctx) {
  const auto pcm = read_wav(o.in);
  const auto algo = parse_encoder_algorithm(o.algo);
  const auto method = parse_oversample_method(o.oversample);
  const auto pdm = encode(pcm, o.osr, algo, method, o.workers);
  write_pdm(pdm, o.out);
  const auto ones = std::accumulate(pdm.bits.begin(), pdm.bits.end(), std::size_t{0});
  ctx.out << "encoded " << pcm.samples.size() << " samples into " << pdm.bits.size() << " bits ("
          << fixed(pdm.bits.empty() ? 0.0 : 100.0 * static_cast<double>(ones) / static_cast<double>(pdm.bits.size()), 2)
          << "% ones) -> " << o.out << '\n';
  auto m = ctx.manifest("encode");
  m.config.update({{"osr", o.osr}, {"workers", o.workers}});
  m.variants = {{"encoder", to_string(algo)}, {"oversample", to_string(method)}};
  m.add_input("wav", o.in);
  m.add_output("pdm", o.out);
  m.results = {{"bits", pdm.bits.size()}, {"ones", ones}};
  ctx.wrote(o.out, m);
}

struct DecodeOptions {
  std::string in, out;
  int taps = 0;
};

void run_decode(const DecodeOptions& o, const Context& ctx) {
  const auto pdm = read_pdm(o.in);
  const int taps = o.taps == 0 ? default_decimation_taps(pdm.alpha) : o.taps;
  const auto pcm = pdm2pcm(pdm, taps);
  write_wav(pcm, o.out);
  ctx.out << "decoded " << pdm.bits.size() << " bits (osr " << pdm.alpha << ", " << taps << " taps) into "
          << pcm.samples.size() << " samples -> " << o.out << '\n';
  auto m = ctx.manifest("decode");
  m.config.update({{"taps", taps}, {"osr", pdm.alpha}});
  m.variants = {{"decimator", "hamming_windowed_sinc"}};
  m.add_input("pdm", o.in);
  m.add_output("wav", o.out);
  m.results = {{"samples", pcm.samples.size()}};
  ctx.wrote(o.out, m);
}

// ---- bench-codec --------------------------------------------------------------------

struct BenchOptions {
  std::size_t length = std::size_t{1} << 24;
  int repeats = 5;
  std::vector<int> workers;
  std::size_t chunk = 65536;
  std::uint64_t seed = 1;
  std::string out;
};

void run_bench(BenchOptions o, const Context& ctx) {
  if (o.workers.empty()) o.workers = {1, static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  const auto r = bench_codec(o.length, o.repeats, o.workers, o.chunk, o.seed);
  ctx.out << "gate passed: par family bit-identical, mod/if bracketed\n";
  ctx.out << std::left << std::setw(14) << "variant" << std::setw(9) << "workers" << std::setw(13) << "median_s"
          << std::setw(15) << "samples/s" << "speedup\n";
  for (const auto& row : r.rows)
    ctx.out << std::left << std::setw(14) << row.variant << std::setw(9) << row.workers << std::setw(13)
            << fixed(row.median_s, 6) << std::setw(15) << fixed(row.samples_per_s / 1e6, 1) + "M"
            << fixed(row.speedup, 2) << '\n';
  ctx.out << "best par_chunked speedup " << fixed(r.best_chunked_speedup, 2) << "x (floor " << kThroughputFloor
          << "x): " << (r.best_chunked_speedup >= kThroughputFloor ? "met" : "not met") << '\n';
  if (o.out.empty()) return;
  write_bench_csv(r, o.out);
  auto m = ctx.manifest("bench-codec");
  m.config.update({{"length", o.length}, {"repeats", o.repeats}, {"workers", o.workers}, {"chunk_len", o.chunk}});
  m.seeds = {{"signal", o.seed}};
  m.add_output("csv", o.out);
  m.results = {{"best_chunked_speedup", r.best_chunked_speedup}, {"gate_passed", r.gate_passed}};
  ctx.wrote(o.out, m);
}

// ---- synth-data ---------------------------------------------------------------------

struct SynthOptions {
  int classes = 4;
  int per_class = 200;
  std::uint64_t seed = 7;
  std::string family = "tones";
  std::string out;
};

void run_synth(const SynthOptions& o, const Context& ctx) {
  const auto family = parse_synth_family(o.family);
  const auto d = synth_dataset(o.classes, o.per_class, o.seed, family);
  materialize(d, o.out);
  ctx.out << "wrote " << d.train.size() + d.valid.size() + d.test.size() << " clips (" << d.train.size() << " train, "
          << d.valid.size() << " valid, " << d.test.size() << " test) in " << d.classes() << " classes -> " << o.out
          << '\n';
  auto m = ctx.manifest("synth-data");
  m.config.update({{"classes", o.classes}, {"per_class", o.per_class}});
  m.seeds = {{"data", o.seed}};
  m.variants = {{"family", to_string(family)}};
  m.outputs["data"] = {{"path", o.out}, {"tree_sha256", tree_sha256(o.out)}, {"class_names", d.class_names}};
  ctx.wrote(o.out, m);
}

// ---- train --------------------------------------------------------------------------

struct TrainCliOptions {
  NetOptions net;
  RunOptions run;
  std::string out, log, preset;
};

Dataset load_data(const fs::path& root, bool lazy, int workers) { return load_gsc(root, !lazy, workers); }

void print_epoch(std::ostream& out, const EpochLog& e) {
  out << "epoch " << e.epoch << " loss " << fixed(e.loss, 4) << " train " << fixed(e.train_acc, 1) << " valid "
      << fixed(e.valid_acc, 1) << " lr " << fixed(e.lr, 5) << " sr " << fixed(e.spike_rate, 0) << " ("
      << fixed(e.seconds, 1) << " s)" << std::endl;
}

void run_train(TrainCliOptions o, bool aug_given, const Context& ctx) {
  if (o.preset == "gsc-full") {
    if (!aug_given) o.run.aug = "on";
    o.run.lazy = true;
  }
  const auto root = data_root(o.run.data);
  const auto cfg = make_config(o.run);
  const auto data = load_data(root, o.run.lazy, cfg.workers);
  const auto spec = make_spec(o.net, o.net.osr, o.net.sparsity, data.classes(), cfg.seed);
  ctx.out << "training " << count_params(spec) << " parameters on " << data.train.size() << " clips, "
          << data.classes() << " classes" << std::endl;

  TrainOptions topt;
  topt.checkpoint = o.out;
  topt.log = o.log;
  topt.on_epoch = [&](const EpochLog& e) { print_epoch(ctx.out, e); };
  const auto res = train(spec, cfg, data, topt);

  json results = {{"best_epoch", res.best_epoch},
                  {"best_valid_accuracy", res.best_valid},
                  {"initial_loss", res.initial_loss},
                  {"epochs_run", res.log.size()},
                  {"stopped_by_budget", res.stopped_by_budget}};
  ctx.out << "initial loss " << fixed(res.initial_loss, 4) << ", best valid " << fixed(res.best_valid, 2)
          << "% at epoch " << res.best_epoch;
  if (!data.test.empty()) {
    const auto ev = evaluate(res.best, data.test, cfg);
    results["test_accuracy"] = ev.accuracy;
    ctx.out << ", test " << fixed(ev.accuracy, 2) << "%";
  }
  ctx.out << " -> " << o.out << '\n';

  auto m = ctx.manifest("train");
  m.config.update({{"network", spec_to_json(spec)},
                   {"training", config_to_json(cfg)},
                   {"params", count_params(spec)},
                   {"preset", o.preset}});
  m.seeds = seeds_json(spec, cfg);
  m.variants = variants_json(spec, cfg);
  m.inputs["data"] = data_entry(root, data);
  m.add_output("checkpoint", o.out);
  if (!o.log.empty()) m.add_output("log", o.log);
  m.results = results;
  ctx.wrote(o.out, m);
}

// ---- eval / metrics -----------------------------------------------------------------

struct EvalOptions {
  std::string ckpt, data, split = "test", out;
  bool lazy = false;
  int workers = 1;
};

struct Evaluated {
  Checkpoint ck;
  TrainConfig cfg;
  fs::path root;
  Dataset data;
  EvalResult result;
};

Evaluated evaluate_checkpoint(const EvalOptions& o) {
  Evaluated e;
  e.ck = load_checkpoint(o.ckpt);
  const json& extra = e.ck.header.at("extra");
  if (extra.contains("train_config")) e.cfg = config_from_json(extra.at("train_config"));
  e.cfg.workers = o.workers;
  e.root = data_root(o.data);
  e.data = load_data(e.root, o.lazy, o.workers);
  if (extra.contains("class_names") && extra.at("class_names").get<std::vector<std::string>>() != e.data.class_names)
    throw ArgumentError("dataset classes do not match the checkpoint's classes");
  if (e.data.classes() != e.ck.state.spec.classes)
    throw ArgumentError("dataset has " + std::to_string(e.data.classes()) + " classes, checkpoint expects " +
                        std::to_string(e.ck.state.spec.classes));
  e.result = evaluate(e.ck.state, e.data.split(parse_split(o.split)), e.cfg);
  return e;
}

RunManifest eval_manifest(const std::string& command, const EvalOptions& o, const Evaluated& e, const Context& ctx) {
  auto m = ctx.manifest(command);
  m.config.update({{"split", o.split}, {"workers", o.workers}, {"network", spec_to_json(e.ck.state.spec)}});
  m.variants = variants_json(e.ck.state.spec, e.cfg);
  m.add_input("checkpoint", o.ckpt);
  m.inputs["data"] = data_entry(e.root, e.data);
  return m;
}

json report_json(const MetricsReport& r) {
  return {{"alpha", r.alpha},   {"sparsity", r.sparsity}, {"params", r.params},
          {"isr", r.isr},       {"sr", r.spike_rate},     {"rsr", r.rsr},
          {"active_fraction", r.active_fraction},         {"layer_sr", r.layer_spike_rate},
          {"clips", r.clips}};
}

void run_eval(const EvalOptions& o, const Context& ctx) {
  const auto e = evaluate_checkpoint(o);
  const auto& r = e.result;
  ctx.out << o.split << " accuracy " << fixed(r.accuracy, 2) << "% (" << r.correct << "/" << r.total << "), sr "
          << fixed(r.metrics.spike_rate, 0) << "/s, rsr " << fixed(r.metrics.rsr, 4) << '\n';
  if (o.out.empty()) return;
  json j = {{"split", o.split}, {"accuracy", r.accuracy},          {"correct", r.correct},
            {"total", r.total}, {"metrics", report_json(r.metrics)}, {"predictions", r.predictions}};
  {
    std::ofstream f(o.out);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("cannot write " + o.out);
  }
  auto m = eval_manifest("eval", o, e, ctx);
  m.add_output("result", o.out);
  m.results = {{"accuracy", r.accuracy}};
  ctx.wrote(o.out, m);
}

void run_metrics(const EvalOptions& o, const Context& ctx) {
  const auto e = evaluate_checkpoint(o);
  const auto csv = metrics_csv({e.result.metrics});
  ctx.out << csv;
  if (o.out.empty()) return;
  write_metrics_csv({e.result.metrics}, o.out);
  auto m = eval_manifest("metrics", o, e, ctx);
  m.add_output("csv", o.out);
  m.results = report_json(e.result.metrics);
  m.results["accuracy"] = e.result.accuracy;
  ctx.wrote(o.out, m);
}

// ---- params -------------------------------------------------------------------------

struct ParamsOptions {
  NetOptions net;
  int classes = 35;
};

void run_params(const ParamsOptions& o, const Context& ctx) {
  ctx.out << count_params(make_spec(o.net, o.net.osr, o.net.sparsity, o.classes, 0)) << '\n';
}

// ---- sweep --------------------------------------------------------------------------

struct SweepOptions {
  NetOptions net;
  RunOptions run;
  std::vector<int> osr{64};
  std::vector<int> sparsity{0};
  std::vector<std::uint64_t> seeds{0};
  std::string out;
};

fs::path metrics_path_for(const fs::path& out) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + "_metrics" + out.extension().string());
  return p;
}

void run_sweep(const SweepOptions& o, const Context& ctx) {
  if (o.osr.size() > 1 && o.sparsity.size() > 1) throw ArgumentError("sweep one axis at a time: --osr or --sparsity");
  const bool by_alpha = o.sparsity.size() == 1;
  const std::string key = by_alpha ? "alpha" : "sparsity";
  const auto& values = by_alpha ? o.osr : o.sparsity;

  const auto root = data_root(o.run.data);
  const auto data = load_data(root, o.run.lazy, o.run.workers);
  if (data.test.empty()) throw ArgumentError("sweep needs a non-empty test split");

  std::vector<SweepRow> rows;
  std::vector<MetricsReport> reports;
  json runs = json::array();
  for (int v : values) {
    const int alpha = by_alpha ? v : o.osr.front();
    const int sparsity = by_alpha ? o.sparsity.front() : v;
    std::vector<double> acc;
    MetricsReport pooled;
    for (auto seed : o.seeds) {
      auto run = o.run;
      run.seed = seed;
      const auto cfg = make_config(run);
      const auto spec = make_spec(o.net, alpha, sparsity, data.classes(), seed);
      const auto res = train(spec, cfg, data);
      const auto ev = evaluate(res.best, data.test, cfg);
      acc.push_back(ev.accuracy);
      ctx.out << key << " " << v << " seed " << seed << ": test " << fixed(ev.accuracy, 2) << "%, sr "
              << fixed(ev.metrics.spike_rate, 0) << "/s" << std::endl;
      runs.push_back({{"alpha", alpha}, {"sparsity", sparsity}, {"seed", seed}, {"test_accuracy", ev.accuracy},
                      {"best_epoch", res.best_epoch}, {"initial_loss", res.initial_loss}});
      // seed-averaged spike statistics
      const double n = static_cast<double>(acc.size());
      if (acc.size() == 1) pooled = ev.metrics;
      else {
        const auto mix = [n](double a, double b) { return a + (b - a) / n; };
        pooled.spike_rate = mix(pooled.spike_rate, ev.metrics.spike_rate);
        pooled.rsr = mix(pooled.rsr, ev.metrics.rsr);
        pooled.active_fraction = mix(pooled.active_fraction, ev.metrics.active_fraction);
        for (std::size_t l = 0; l < pooled.layer_spike_rate.size(); ++l)
          pooled.layer_spike_rate[l] = mix(pooled.layer_spike_rate[l], ev.metrics.layer_spike_rate[l]);
        pooled.clips += ev.metrics.clips;
      }
    }
    rows.push_back(summarize(v, acc));
    reports.push_back(pooled);
  }
  write_sweep_csv(key, rows, o.out);
  const auto mpath = metrics_path_for(o.out);
  write_metrics_csv(reports, mpath);
  ctx.out << "wrote " << rows.size() << " rows -> " << o.out << " (spike metrics -> " << mpath.string() << ")\n";

  auto m = ctx.manifest("sweep");
  const auto base_cfg = make_config(o.run);
  const auto base_spec = make_spec(o.net, o.osr.front(), o.sparsity.front(), data.classes(), o.seeds.front());
  m.config.update({{"axis", key},
                   {"values", values},
                   {"network", spec_to_json(base_spec)},
                   {"training", config_to_json(base_cfg)}});
  m.seeds = {{"train", o.seeds}, {"network_seed_rule", "weights 3s+1, delays 3s+2, masks 3s+3"}};
  m.variants = variants_json(base_spec, base_cfg);
  m.inputs["data"] = data_entry(root, data);
  m.add_output("csv", o.out);
  m.add_output("metrics_csv", mpath);
  m.results = {{"runs", runs}};
  ctx.wrote(o.out, m);
}

// ---- dispatch -----------------------------------------------------------------------

int fail(std::ostream& err, const std::exception& e, int code) {
  err << "pdm: " << e.what() << '\n';
  return code;
}

int replay(const fs::path& manifest, std::ostream& out, std::ostream& err) {
  const auto m = read_manifest(manifest);
  const auto here = fs::current_path();
  if (m.config.contains("cwd")) fs::current_path(m.config.at("cwd").get<std::string>());
  int rc = 2;
  try {
    rc = dispatch(m.argv, out, err);
  } catch (...) {
    fs::current_path(here);
    throw;
  }
  fs::current_path(here);
  return rc;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PDM keyword spotting: one-bit audio codec, spiking network training and metrics", "pdm"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(0, 1);
  std::string replay_from;
  app.add_option("--replay", replay_from, "re-run the command recorded in a run manifest")->check(CLI::ExistingFile);

  EncodeOptions enc;
  auto* c_enc = app.add_subcommand("encode", "PCM WAV -> PDM container");
  c_enc->add_option("--in", enc.in, "input 16-bit mono WAV")->required()->check(CLI::ExistingFile);
  c_enc->add_option("--osr", enc.osr, "oversampling ratio alpha")->capture_default_str()->check(CLI::Range(1, 1024));
  c_enc->add_option("--algo", enc.algo, "modulator")->capture_default_str()->check(CLI::IsMember({"seq", "mod", "if", "par"}));
  c_enc->add_option("--oversample", enc.oversample, "PCM upsampling")->capture_default_str()->check(CLI::IsMember({"hold", "sinc"}));
  c_enc->add_option("--out", enc.out, "output .pdm file")->required();
  add_workers_option(c_enc, enc.workers);

  DecodeOptions dec;
  auto* c_dec = app.add_subcommand("decode", "PDM container -> PCM WAV");
  c_dec->add_option("--in", dec.in, "input .pdm file")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--taps", dec.taps, "decimation filter length (0 = 16*osr+1)")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_dec->add_option("--out", dec.out, "output WAV")->required();

  BenchOptions bench;
  auto* c_bench = app.add_subcommand("bench-codec", "encoder throughput after a bit-exactness gate");
  c_bench->add_option("--length", bench.length, "signal length in PDM samples")->capture_default_str()->check(CLI::PositiveNumber);
  c_bench->add_option("--repeats", bench.repeats, "timed runs per variant (median reported)")->capture_default_str()->check(CLI::PositiveNumber);
  c_bench->add_option("--workers", bench.workers, "worker counts for the chunked encoder, e.g. 1,2,4 (default 1 and all cores)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  c_bench->add_option("--chunk", bench.chunk, "chunk length of the chunked encoder")->capture_default_str()->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", bench.seed, "seed of the random test signal")->capture_default_str();
  c_bench->add_option("--out", bench.out, "CSV output");

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth-data", "write a seeded synthetic keyword set in Speech Commands layout");
  c_synth->add_option("--classes", synth.classes, "number of classes")->capture_default_str()->check(CLI::Range(2, 64));
  c_synth->add_option("--per-class", synth.per_class, "clips per class")->capture_default_str()->check(CLI::Range(10, 100000));
  c_synth->add_option("--seed", synth.seed, "data seed")->capture_default_str();
  c_synth->add_option("--family", synth.family, "tones, or mixed (tone/chirp/AM)")->capture_default_str()->check(CLI::IsMember({"tones", "mixed"}));
  c_synth->add_option("--out", synth.out, "output directory")->required();

  TrainCliOptions tr;
  auto* c_train = app.add_subcommand("train", "train a network; writes the best-validation checkpoint");
  c_train->add_option("--osr", tr.net.osr, "oversampling ratio alpha")->capture_default_str()->check(CLI::Range(1, 1024));
  c_train->add_option("--sparsity", tr.net.sparsity, "connection sparsity percent (0, 50, 75, 88, 94)")->capture_default_str();
  add_net_options(c_train, tr.net);
  add_run_options(c_train, tr.run);
  c_train->add_option("--out", tr.out, "checkpoint path")->required();
  c_train->add_option("--log", tr.log, "per-epoch CSV log");
  c_train->add_option("--preset", tr.preset, "gsc-full: augmentation on and lazy loading, full-size defaults")
      ->check(CLI::IsMember({"gsc-full"}));

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "accuracy and spike rates of a checkpoint on one split");
  EvalOptions mt;
  auto* c_metrics = app.add_subcommand("metrics", "alpha,sparsity,params,isr,sr,rsr row of a checkpoint");
  for (auto [c, o] : {std::pair{c_eval, &ev}, std::pair{c_metrics, &mt}}) {
    c->add_option("--ckpt", o->ckpt, "checkpoint written by train")->required()->check(CLI::ExistingFile);
    add_data_option(c, o->data, o->lazy);
    c->add_option("--split", o->split, "split to evaluate")->capture_default_str()->check(CLI::IsMember({"train", "valid", "test"}));
    add_workers_option(c, o->workers);
  }
  c_eval->add_option("--out", ev.out, "JSON result with per-clip predictions");
  c_metrics->add_option("--out", mt.out, "CSV output");

  ParamsOptions pa;
  auto* c_params = app.add_subcommand("params", "trainable parameter count of an architecture");
  c_params->add_option("--osr", pa.net.osr, "oversampling ratio alpha")->capture_default_str()->check(CLI::Range(1, 1024));
  c_params->add_option("--sparsity", pa.net.sparsity, "connection sparsity percent (0, 50, 75, 88, 94)")->capture_default_str();
  c_params->add_option("--classes", pa.classes, "output classes")->capture_default_str()->check(CLI::PositiveNumber);
  add_net_options(c_params, pa.net);

  SweepOptions sw;
  auto* c_sweep = app.add_subcommand("sweep", "train and test over oversampling ratios or sparsities");
  c_sweep->add_option("--osr", sw.osr, "comma-separated oversampling ratios")->delimiter(',')->check(CLI::Range(1, 1024));
  c_sweep->add_option("--sparsity", sw.sparsity, "comma-separated sparsity percents")->delimiter(',');
  c_sweep->add_option("--seeds", sw.seeds, "comma-separated seeds; mean and std are over these")->delimiter(',');
  add_net_options(c_sweep, sw.net);
  add_run_options(c_sweep, sw.run);
  c_sweep->remove_option(c_sweep->get_option("--seed"));
  c_sweep->add_option("--out", sw.out, "accuracy CSV; spike metrics go to <stem>_metrics.csv")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const Context ctx{args, out, err};
  try {
    if (!replay_from.empty()) {
      if (!app.get_subcommands().empty()) throw ArgumentError("--replay takes no subcommand");
      return replay(replay_from, out, err);
    }
    if (*c_enc) run_encode(enc, ctx);
    else if (*c_dec) run_decode(dec, ctx);
    else if (*c_bench) run_bench(bench, ctx);
    else if (*c_synth) run_synth(synth, ctx);
    else if (*c_train) run_train(tr, c_train->count("--aug") > 0, ctx);
    else if (*c_eval) run_eval(ev, ctx);
    else if (*c_metrics) run_metrics(mt, ctx);
    else if (*c_params) run_params(pa, ctx);
    else if (*c_sweep) run_sweep(sw, ctx);
    else {
      err << app.help();
      return 1;
    }
  } catch (const ArgumentError& e) {
    return fail(err, e, 1);
  } catch (const ShapeError& e) {
    return fail(err, e, 1);
  } catch (const FormatError& e) {
    return fail(err, e, 1);
  } catch (const IoError& e) {
    return fail(err, e, 1);
  } catch (const fs::filesystem_error& e) {
    return fail(err, e, 1);
  } catch (const std::exception& e) {
    return fail(err, e, 2);
  }
  return 0;
}

}  // namespace pdmkws::cli
