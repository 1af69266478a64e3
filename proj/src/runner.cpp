#include "synsem/runner.hpp"

#include "synsem/csv.hpp"
#include "synsem/features.hpp"
#include "synsem/parallel.hpp"
#include "synsem/parcellation.hpp"
#include "synsem/pipeline.hpp"
#include "synsem/plot.hpp"
#include "synsem/random.hpp"
#include "synsem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace synsem {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;

// ------------------------------------------------------------ config reading

/// Type-checked view of one JSON object that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  const json* find(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  T get(const char* key, T fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v->is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v->is_number_integer() && (std::is_signed_v<T> || v->get<long long>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v->is_number();
    } else {
      ok = v->is_string();
    }
    if (!ok) throw ValidationError(where_ + ": key '" + key + "' has the wrong type");
    return v->get<T>();
  }

  Section child(const char* key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, where_ + "." + key);
  }

  const std::string& where() const noexcept { return where_; }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

fs::path existing(const fs::path& base, const json& v, const std::string& where) {
  if (!v.is_string()) throw ValidationError(where + ": expected a path string");
  fs::path p = resolve(base, v.get<std::string>());
  if (!fs::exists(p)) throw InputError("input file not found: " + p.string(), p.string());
  return p;
}

std::vector<fs::path> existing_list(const fs::path& base, const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array of paths");
  std::vector<fs::path> out;
  for (const auto& e : v) out.push_back(existing(base, e, where));
  return out;
}

std::vector<sim::Planted> drivers_from(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": drivers must be an array");
  std::vector<sim::Planted> out;
  for (const auto& d : v) {
    if (!d.is_string()) throw ValidationError(where + ": drivers must be strings");
    out.push_back(sim::planted_from_string(d.get<std::string>()));
  }
  return out;
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ValidationError(where + ": expected a nonempty number array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ValidationError(where + ": expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

SimulateSection parse_simulate(Section s) {
  SimulateSection out;
  out.stories = s.get("stories", out.stories);
  out.trs_per_story = s.get("trs_per_story", out.trs_per_story);
  out.corpus_sentences = s.get("corpus_sentences", out.corpus_sentences);
  {
    Section p = s.child("provider");
    out.provider.d = p.get("d", out.provider.d);
    out.provider.syn_dim = p.get("syn_dim", out.provider.syn_dim);
    out.provider.lex_dim = p.get("lex_dim", out.provider.lex_dim);
    out.provider.ctx_dim = p.get("ctx_dim", out.provider.ctx_dim);
    out.provider.sigma = p.get("sigma", out.provider.sigma);
    out.provider.layers = p.get("layers", out.provider.layers);
    p.done();
  }
  if (const json* snr = s.find("snr")) {
    if (snr->is_null()) {
      out.snr = std::numeric_limits<double>::infinity();
    } else if (snr->is_number() && snr->get<double>() > 0.0) {
      out.snr = snr->get<double>();
    } else {
      throw ValidationError(s.where() + ": snr must be a positive number or null");
    }
  }
  out.targets = s.get<Index>("targets", out.targets);
  if (const json* d = s.find("drivers")) out.drivers = drivers_from(*d, s.where());
  out.region_size = s.get<Index>("region_size", out.region_size);
  if (const json* regions = s.find("regions")) {
    if (!regions->is_array()) throw ValidationError(s.where() + ": regions must be an array");
    for (std::size_t i = 0; i < regions->size(); ++i) {
      Section r((*regions)[i], s.where() + ".regions[" + std::to_string(i) + "]");
      SimRegion reg;
      reg.name = r.get<std::string>("name", "");
      if (reg.name.empty()) throw ValidationError(r.where() + ": name required");
      if (const json* d = r.find("drivers")) reg.drivers = drivers_from(*d, r.where());
      reg.targets = r.get<Index>("targets", reg.targets);
      if (reg.targets < 1) throw ValidationError(r.where() + ": targets must be >= 1");
      r.done();
      out.regions.push_back(std::move(reg));
    }
  }
  s.done();
  if (out.stories < 1 || out.trs_per_story < 10 || out.corpus_sentences < 1) {
    throw ValidationError(s.where() + ": stories >= 1, trs_per_story >= 10, corpus_sentences >= 1");
  }
  if (out.targets < 1 || out.region_size < 1) {
    throw ValidationError(s.where() + ": targets and region_size must be >= 1");
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ------------------------------------------------------------------- files

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open input file: " + p.string(), p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + p.string(), p.string());
  out << text;
}

/// Rows of a CSV with a header; the header must equal `expected`.
std::vector<std::vector<std::string>> read_csv(const fs::path& p, const std::string& expected) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open input file: " + p.string(), p.string());
  std::string line;
  if (!std::getline(in, line) || line != expected) {
    throw FormatError(p.string() + ": expected header '" + expected + "'");
  }
  const auto columns = split_csv_line(expected).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns) throw FormatError(p.string() + ": wrong field count");
    rows.push_back(std::move(fields));
  }
  return rows;
}

const std::vector<std::string>& base_sets() {
  static const std::vector<std::string> sets = {"phono", "X0", "Xl", "barX0", "barXl"};
  return sets;
}

std::vector<std::string> split_plus(const std::string& name) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = name.find('+', start);
    out.push_back(name.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};

/// Mean and standard error over folds of the per-fold target mean.
MeanSem fold_summary(const Matrix& values) {
  const Index f = values.rows();
  if (f == 0 || values.cols() == 0) return {};
  const Vector per_fold = values.rowwise().mean();
  const double mean = per_fold.mean();
  if (f < 2) return {mean, 0.0};
  const double var = (per_fold.array() - mean).square().sum() / static_cast<double>(f - 1);
  return {mean, std::sqrt(var / static_cast<double>(f))};
}

}  // namespace

// -------------------------------------------------------------- RunConfig

RunConfig RunConfig::from_json(const json& doc, const fs::path& base) {
  RunConfig cfg;
  Section top(doc, "config");
  const json* version = top.find("version");
  if (!version || !version->is_number_integer() || version->get<int>() != kConfigVersion) {
    throw ValidationError("config: \"version\": 1 required");
  }
  cfg.seed = top.get<std::uint64_t>("seed", 0);
  cfg.workers = top.get("workers", 0);
  if (cfg.workers < 0) throw ValidationError("config: workers must be >= 0");
  if (const json* o = top.find("out_dir")) {
    if (!o->is_string()) throw ValidationError("config: out_dir must be a string");
    cfg.out_dir = resolve(base, o->get<std::string>());
  } else {
    cfg.out_dir = base / "run";
  }

  if (top.find("simulate")) cfg.simulate = parse_simulate(top.child("simulate"));
  if (const json* stories = top.find("stories")) {
    if (!stories->is_array()) throw ValidationError("config: stories must be an array");
    for (std::size_t i = 0; i < stories->size(); ++i) {
      Section s((*stories)[i], "config.stories[" + std::to_string(i) + "]");
      StoryInput in;
      const json* sent = s.find("sentences");
      const json* meta = s.find("meta");
      if (!sent || !meta) throw ValidationError(s.where() + ": sentences and meta required");
      in.sentences = existing(base, *sent, s.where());
      in.meta = existing(base, *meta, s.where());
      if (const json* ph = s.find("phones")) in.phones = existing(base, *ph, s.where());
      if (const json* sig = s.find("signals")) in.signals = existing_list(base, *sig, s.where());
      if (const json* act = s.find("activations")) {
        in.activations = existing_list(base, *act, s.where());
      }
      if (in.signals.empty()) throw ValidationError(s.where() + ": at least one signals file required");
      s.done();
      cfg.stories.push_back(std::move(in));
    }
  }
  if (cfg.simulate.has_value() == !cfg.stories.empty()) {
    throw ValidationError("config: exactly one of 'simulate' and 'stories' is required");
  }
  if (const json* c = top.find("corpus")) cfg.corpus = existing(base, *c, "config.corpus");
  if (const json* p = top.find("parcellation")) {
    cfg.parcellation = existing(base, *p, "config.parcellation");
  }
  if (const json* r = top.find("relabel")) {
    if (!r->is_string()) throw ValidationError("config: relabel must be a string");
    cfg.relabel = r->get<std::string>() == "brodmann"
                      ? std::string("brodmann")
                      : existing(base, *r, "config.relabel").string();
  }
  if (const json* va = top.find("variant_activations")) {
    if (!va->is_array()) throw ValidationError("config: variant_activations must be an array");
    for (std::size_t i = 0; i < va->size(); ++i) {
      Section s((*va)[i], "config.variant_activations[" + std::to_string(i) + "]");
      FileEmbeddingProvider::Source src;
      const json* sent = s.find("sentences");
      const json* layers = s.find("activations");
      if (!sent || !layers) throw ValidationError(s.where() + ": sentences and activations required");
      src.sentences = existing(base, *sent, s.where());
      src.layers = existing_list(base, *layers, s.where());
      s.done();
      cfg.variant_activations.push_back(std::move(src));
    }
  }
  if (cfg.simulate && (cfg.corpus || cfg.parcellation || !cfg.variant_activations.empty())) {
    throw ValidationError(
        "config: corpus, parcellation and variant_activations come from 'simulate' in a simulated run");
  }
  if (!cfg.simulate && !cfg.corpus) throw ValidationError("config: corpus required");

  {
    Section s = top.child("layers");
    cfg.lexical_layer = s.get("lexical", cfg.lexical_layer);
    cfg.layer = s.get("deep", cfg.layer);
    s.done();
    const int available = cfg.simulate
                              ? cfg.simulate->provider.layers
                              : static_cast<int>(cfg.stories.front().activations.size());
    for (const auto& st : cfg.stories) {
      if (static_cast<int>(st.activations.size()) != available) {
        throw ValidationError("config: every story needs the same number of activation layers");
      }
    }
    for (int l : {cfg.lexical_layer, cfg.layer}) {
      if (l < 0 || l >= available) {
        throw ValidationError("config.layers: layer " + std::to_string(l) + " outside [0, " +
                              std::to_string(available) + ")");
      }
    }
  }
  {
    Section s = top.child("synthesis");
    cfg.synthesis.k = s.get("k", cfg.synthesis.k);
    cfg.synthesis.k_prime = s.get("k_prime", cfg.synthesis.k_prime);
    cfg.synthesis.threshold = s.get("threshold", cfg.synthesis.threshold);
    cfg.synthesis.frequency_weighted = s.get("frequency_weighted", cfg.synthesis.frequency_weighted);
    cfg.reparser = s.get<std::string>("reparser", cfg.reparser);
    s.done();
    if (cfg.synthesis.k < 1 || cfg.synthesis.k_prime < cfg.synthesis.k) {
      throw ValidationError("config.synthesis: need 1 <= k <= k_prime");
    }
    if (cfg.reparser != "auto" && cfg.reparser != "toy" && cfg.reparser != "none") {
      throw ValidationError("config.synthesis: reparser must be auto, toy or none");
    }
  }
  {
    Section s = top.child("align");
    cfg.lags = s.get("lags", cfg.lags);
    if (const json* f = s.find("feature_sets")) cfg.feature_sets = string_list(*f, s.where());
    const auto storage = s.get<std::string>("storage", "f32");
    if (storage != "f32" && storage != "f64") throw ValidationError(s.where() + ": storage must be f32 or f64");
    cfg.storage = storage == "f32" ? DType::f32 : DType::f64;
    s.done();
    if (cfg.lags < 1) throw ValidationError("config.align: lags must be >= 1");
    for (const auto& name : cfg.feature_sets) {
      for (const auto& part : split_plus(name)) {
        if (std::find(base_sets().begin(), base_sets().end(), part) == base_sets().end()) {
          throw ValidationError("config.align: unknown feature set '" + name + "'");
        }
      }
    }
  }
  {
    Section s = top.child("ridge");
    cfg.ridge.folds = s.get("folds", cfg.ridge.folds);
    cfg.ridge.min_test_samples = s.get("min_test_samples", cfg.ridge.min_test_samples);
    if (const json* g = s.find("lambda_grid")) cfg.ridge.lambda_grid = number_list(*g, s.where());
    const auto mode = s.get<std::string>("lambda_mode", "per_target");
    if (mode != "per_target" && mode != "shared") {
      throw ValidationError(s.where() + ": lambda_mode must be per_target or shared");
    }
    cfg.ridge.lambda_mode = mode == "shared" ? LambdaMode::shared : LambdaMode::per_target;
    const auto scaler = s.get<std::string>("scaler", "per_story_train");
    if (scaler != "per_story_train" && scaler != "per_story_global") {
      throw ValidationError(s.where() + ": scaler must be per_story_train or per_story_global");
    }
    cfg.ridge.scaler =
        scaler == "per_story_global" ? ScalerMode::per_story_global : ScalerMode::per_story_train;
    cfg.ridge.clip_low = s.get("clip_low", cfg.ridge.clip_low);
    cfg.ridge.clip_high = s.get("clip_high", cfg.ridge.clip_high);
    s.done();
    try {
      cfg.ridge.validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("config.ridge: ") + e.what());
    }
  }
  {
    Section s = top.child("decompose");
    {
      Section m = s.child("modes");
      auto mode = [&](const char* key, ContrastMode& slot) {
        if (const json* v = m.find(key)) {
          if (!v->is_string()) throw ValidationError(m.where() + ": modes are strings");
          slot = contrast_mode_from_string(v->get<std::string>());
        }
      };
      mode("lexical", cfg.modes.lexical);
      mode("compositional_strict", cfg.modes.compositional_strict);
      mode("syntactic", cfg.modes.syntactic);
      mode("semantic", cfg.modes.semantic);
      mode("lexical_semantics", cfg.modes.lexical_semantics);
      m.done();
    }
    if (const json* c = s.find("components")) cfg.components = string_list(*c, s.where());
    s.done();
  }
  {
    Section s = top.child("stats");
    cfg.q = s.get("q", cfg.q);
    cfg.top = s.get("top", cfg.top);
    s.done();
    if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw ValidationError("config.stats: q must be in (0, 1)");
    if (cfg.top < 1) throw ValidationError("config.stats: top must be >= 1");
  }
  {
    Section s = top.child("probe");
    cfg.probe_enabled = s.get("enabled", cfg.probe_enabled);
    cfg.probe.folds = s.get("folds", cfg.probe.folds);
    if (const json* g = s.find("lambda_grid")) cfg.probe.lambda_grid = number_list(*g, s.where());
    if (const json* t = s.find("targets")) cfg.probe_targets = existing(base, *t, s.where());
    cfg.probe_content_only = s.get("content_only", cfg.probe_content_only);
    s.done();
    if (cfg.probe.folds < 2) throw ValidationError("config.probe: folds must be >= 2");
  }
  {
    Section s = top.child("report");
    cfg.plots = s.get("plots", cfg.plots);
    s.done();
  }
  top.done();

  cfg.document = doc;
  cfg.document.erase("workers");
  cfg.document.erase("out_dir");
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file not found: " + path.string(), path.string());
  return from_json(read_json_file(path), path.parent_path());
}

// ------------------------------------------------------------------ Runner

const std::vector<std::string>& Runner::stage_names() {
  static const std::vector<std::string> names = {"simulate", "lexicon", "synth",  "embed",
                                                 "align",    "score",   "decompose", "stats",
                                                 "probe",    "report"};
  return names;
}

Runner::Runner(const RunOptions& opts) : cfg_(RunConfig::load(opts.config)), force_(opts.force) {
  if (opts.seed) {
    cfg_.seed = *opts.seed;
    cfg_.document["seed"] = *opts.seed;
  }
  if (opts.out_dir) {
    dir_ = *opts.out_dir;
  } else if (const char* env = std::getenv("SYNSEM_OUT_DIR"); env && *env) {
    dir_ = env;
  } else {
    dir_ = cfg_.out_dir;
  }
  workers_ = resolve_workers(opts.workers.value_or(cfg_.workers));
  cfg_.ridge.workers = workers_;
  fs::create_directories(dir_ / "stages");
}

std::string Runner::fingerprint() const { return hex64(fnv1a(cfg_.document.dump())); }

bool Runner::up_to_date(const std::string& stage) const {
  if (force_) return false;
  const auto marker = path("stages/" + stage + ".json");
  if (!fs::exists(marker)) return false;
  json m;
  try {
    m = read_json_file(marker);
  } catch (const std::exception&) {
    return false;
  }
  if (m.value("fingerprint", "") != fingerprint()) return false;
  for (const auto& o : m.value("outputs", json::array())) {
    if (!o.is_string() || !fs::exists(path(o.get<std::string>()))) return false;
  }
  return true;
}

void Runner::record(const StageResult& r) const {
  json m = {{"stage", r.stage},
            {"fingerprint", fingerprint()},
            {"outputs", r.outputs},
            {"summary", r.summary}};
  write_text(path("stages/" + r.stage + ".json"), m.dump(2) + "\n");
}

void Runner::update_manifest(const StageResult& r) const {
  const auto p = path("manifest.json");
  json m;
  if (fs::exists(p)) {
    try {
      m = read_json_file(p);
    } catch (const std::exception&) {
      m = json::object();
    }
  }
  if (!m.is_object() || m.value("fingerprint", "") != fingerprint()) m = json::object();
  m["version"] = kConfigVersion;
  m["tool"] = "synsem";
  m["fingerprint"] = fingerprint();
  m["seed"] = cfg_.seed;
  m["config"] = cfg_.document;
  m["stages"][r.stage] = {{"status", r.skipped ? "up_to_date" : "done"},
                          {"outputs", r.outputs},
                          {"summary", r.summary}};
  write_text(p, m.dump(2) + "\n");
}

StageResult Runner::run_stage(const std::string& name) {
  static const std::map<std::string, StageResult (Runner::*)()> table = {
      {"simulate", &Runner::simulate}, {"lexicon", &Runner::lexicon},
      {"synth", &Runner::synth},       {"embed", &Runner::embed},
      {"align", &Runner::align},       {"score", &Runner::score},
      {"decompose", &Runner::decompose}, {"stats", &Runner::stats},
      {"probe", &Runner::probe},       {"report", &Runner::report}};
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown stage '" + name + "'");
  if (name == "simulate" && !cfg_.simulate) {
    throw ValidationError("simulate stage needs a 'simulate' section in the config");
  }
  if (up_to_date(name)) {
    json m = read_json_file(path("stages/" + name + ".json"));
    StageResult r{name, true, m.at("outputs").get<std::vector<std::string>>(), m.at("summary")};
    update_manifest(r);
    return r;
  }
  fs::remove(path("error.json"));
  StageResult r = (this->*(it->second))();
  r.stage = name;
  record(r);
  update_manifest(r);
  return r;
}

std::vector<StageResult> Runner::run_all() {
  std::vector<StageResult> out;
  for (const auto& name : stage_names()) {
    if (name == "simulate" && !cfg_.simulate) continue;
    if (name == "probe" && !cfg_.probe_enabled) continue;
    out.push_back(run_stage(name));
  }
  return out;
}

// ------------------------------------------------------------ data access

std::vector<Transcript> Runner::load_stories() const {
  std::vector<Transcript> out;
  if (cfg_.simulate) {
    for (int i = 0; i < cfg_.simulate->stories; ++i) {
      const std::string id = "story" + std::to_string(i);
      out.push_back(load_transcript({path("sim/" + id + ".sentences.jsonl"),
                                     path("sim/" + id + ".phones.jsonl"),
                                     path("sim/" + id + ".meta.json")}));
    }
    return out;
  }
  std::set<std::string> ids;
  for (const auto& s : cfg_.stories) {
    out.push_back(load_transcript({s.sentences, s.phones, s.meta}));
    if (!ids.insert(out.back().story_id).second) {
      throw ValidationError("story '" + out.back().story_id + "' configured twice");
    }
  }
  return out;
}

namespace {

std::vector<SignalBundle> story_signals(const RunConfig& cfg, const fs::path& dir,
                                        std::span<const Transcript> transcripts) {
  std::vector<SignalBundle> out;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const auto& t = transcripts[i];
    if (cfg.simulate) {
      out.push_back(load_signals(dir / "sim" / (t.story_id + ".signals.dten"), t.tr_times, "sim",
                                 t.story_id));
      continue;
    }
    std::vector<SignalBundle> subjects;
    for (const auto& p : cfg.stories[i].signals) {
      subjects.push_back(load_signals(p, t.tr_times, p.stem().string(), t.story_id));
    }
    out.push_back(average_subjects(subjects));
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.simulate) {
    const auto truth = sim::GroundTruth::from_json(read_json_file(dir / "sim" / "ground_truth.json"));
    return std::make_unique<sim::SimProvider>(truth.provider);
  }
  std::vector<FileEmbeddingProvider::Source> sources;
  for (const auto& s : cfg.stories) sources.push_back({s.sentences, s.activations});
  sources.insert(sources.end(), cfg.variant_activations.begin(), cfg.variant_activations.end());
  return std::make_unique<FileEmbeddingProvider>(sources);
}

}  // namespace

// ------------------------------------------------------------------ stages

StageResult Runner::simulate() {
  const auto& s = *cfg_.simulate;
  const auto& grammar = sim::default_grammar();
  fs::create_directories(path("sim"));
  StageResult r;

  write_sentences(path("sim/corpus.jsonl"),
                  sim::gen_corpus(derive_seed(cfg_.seed, "lexicon"), s.corpus_sentences, grammar));
  r.outputs.push_back("sim/corpus.jsonl");

  std::vector<Transcript> stories;
  for (int i = 0; i < s.stories; ++i) {
    const std::string id = "story" + std::to_string(i);
    stories.push_back(sim::gen_story(cfg_.seed, id, s.trs_per_story, {}, grammar));
    write_sentences(path("sim/" + id + ".sentences.jsonl"), stories.back().sentences);
    write_phones(path("sim/" + id + ".phones.jsonl"), stories.back().phones);
    write_story_meta(path("sim/" + id + ".meta.json"), stories.back());
    for (const char* ext : {".sentences.jsonl", ".phones.jsonl", ".meta.json"}) {
      r.outputs.push_back("sim/" + id + ext);
    }
  }

  auto spec = s.provider;
  spec.seed = derive_seed(cfg_.seed, "provider");
  const sim::SimProvider provider(spec, grammar);

  // Targets and their regions: explicit regions, or uniform drivers cut into blocks.
  ParcellationTable parc;
  Matrix mask;
  if (!s.regions.empty()) {
    Index total = 0;
    for (const auto& reg : s.regions) total += reg.targets;
    mask = Matrix::Zero(total, 3);
    Index row = 0;
    for (const auto& reg : s.regions) {
      parc.regions.push_back(reg.name);
      for (Index k = 0; k < reg.targets; ++k, ++row) {
        for (auto d : reg.drivers) mask(row, static_cast<int>(d)) = 1.0;
        parc.target_region[row] = static_cast<int>(parc.regions.size()) - 1;
      }
    }
  } else {
    mask = sim::SignalConfig::uniform(s.targets, s.drivers, s.snr, 0, cfg_.lags).mask;
    for (Index v = 0; v < s.targets; ++v) {
      const Index block = v / s.region_size;
      if (static_cast<Index>(parc.regions.size()) <= block) {
        parc.regions.push_back("R" + std::to_string(block + 1));
      }
      parc.target_region[v] = static_cast<int>(block);
    }
  }
  const sim::SignalConfig sc{mask, s.snr, cfg_.lags, derive_seed(cfg_.seed, "signals")};
  const auto signals = sim::gen_signals(provider, stories, sc);
  for (const auto& b : signals.stories) {
    store_matrix(b.matrix, path("sim/" + b.story_id + ".signals.dten"), cfg_.storage);
    r.outputs.push_back("sim/" + b.story_id + ".signals.dten");
  }
  write_text(path("sim/ground_truth.json"), signals.truth.to_json().dump(2) + "\n");
  write_parcellation(path("sim/parcellation.csv"), parc);
  r.outputs.push_back("sim/ground_truth.json");
  r.outputs.push_back("sim/parcellation.csv");
  r.summary = {{"stories", s.stories},
               {"trs", s.stories * s.trs_per_story},
               {"targets", mask.rows()},
               {"regions", parc.regions.size()}};
  return r;
}

StageResult Runner::lexicon() {
  const fs::path corpus = cfg_.corpus ? *cfg_.corpus : path("sim/corpus.jsonl");
  const auto sentences = load_sentences(corpus);
  const auto lex = Lexicon::build(sentences);
  lex.save(path("lexicon.jsonl"));
  return {"lexicon", false, {"lexicon.jsonl"},
          {{"sentences", sentences.size()}, {"tag_pairs", lex.tag_pair_count()}}};
}

StageResult Runner::synth() {
  const auto transcripts = load_stories();
  const auto lex = Lexicon::load(path("lexicon.jsonl"));
  const bool toy = cfg_.reparser == "toy" || (cfg_.reparser == "auto" && cfg_.simulate);
  Reparser reparse;
  if (toy) {
    reparse = [](const Sentence& s) { return sim::toy_parse(sim::default_grammar(), s); };
  }
  fs::create_directories(path("variants"));
  StageResult r;
  std::size_t sentences = 0;
  std::size_t insufficient = 0;
  for (const auto& t : transcripts) {
    const auto sets = synthesize_story(t, lex, cfg_.synthesis, derive_seed(cfg_.seed, "synthesis"),
                                       reparse, workers_);
    for (const auto& s : sets) insufficient += s.insufficient ? 1 : 0;
    sentences += sets.size();
    write_variant_sets(path("variants/" + t.story_id + ".jsonl"), sets);
    r.outputs.push_back("variants/" + t.story_id + ".jsonl");
  }
  r.summary = {{"sentences", sentences}, {"insufficient", insufficient}};
  return r;
}

StageResult Runner::embed() {
  const auto transcripts = load_stories();
  const auto provider = make_provider(cfg_, dir_);
  StageResult r;
  std::vector<std::vector<VariantSet>> variants;
  for (const auto& t : transcripts) {
    variants.push_back(load_variant_sets(path("variants/" + t.story_id + ".jsonl")));
  }
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const auto& id = transcripts[i].story_id;
    fs::create_directories(path("features/" + id));
    for (const auto& [tag, layer] : {std::pair{std::string("0"), cfg_.lexical_layer},
                                     std::pair{std::string("l"), cfg_.layer}}) {
      const Matrix x = story_activations(*provider, transcripts[i], layer, workers_);
      const Matrix bar = story_syntactic_embedding(*provider, variants[i], layer, workers_);
      store_matrix(x, path("features/" + id + "/X" + tag + ".dten"), cfg_.storage);
      store_matrix(bar, path("features/" + id + "/barX" + tag + ".dten"), cfg_.storage);
      r.outputs.push_back("features/" + id + "/X" + tag + ".dten");
      r.outputs.push_back("features/" + id + "/barX" + tag + ".dten");
    }
  }

  // Convergence of the running mean over sentences with a full variant set.
  const int k_max = cfg_.synthesis.k;
  std::vector<const VariantSet*> full;
  for (const auto& sets : variants) {
    for (const auto& s : sets) {
      if (k_max >= 2 && static_cast<int>(s.variants.size()) >= k_max) full.push_back(&s);
    }
  }
  std::vector<std::vector<ConvergencePoint>> curves(full.size());
  parallel_for(full.size(), workers_, [&](std::size_t i) {
    curves[i] = convergence_curve(*provider, *full[i], cfg_.layer, k_max);
  });
  std::ofstream out(path("convergence.csv"), std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path("convergence.csv").string(),
                             path("convergence.csv").string());
  out << "k,mean,median,count\n";
  for (int k = 2; k <= k_max; ++k) {
    std::vector<double> values;
    for (const auto& c : curves) {
      const auto& pt = c[static_cast<std::size_t>(k - 2)];
      if (pt.cosine) values.push_back(*pt.cosine);
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    out << k << ',' << format_double(mean) << ',' << format_double(median) << ',' << n << '\n';
  }
  r.outputs.push_back("convergence.csv");
  r.summary = {{"convergence_sentences", full.size()}};
  return r;
}

StageResult Runner::align() {
  const auto transcripts = load_stories();
  const bool have_phones = std::all_of(transcripts.begin(), transcripts.end(),
                                       [](const Transcript& t) { return !t.phones.empty(); });
  std::vector<std::string> sets = cfg_.feature_sets;
  if (sets.empty()) {
    if (have_phones) sets.push_back("phono");
    for (const char* s : {"X0", "Xl", "barX0", "barXl"}) sets.push_back(s);
    auto add = [&](ContrastMode m, const char* name) {
      if (m == ContrastMode::concatenation) sets.push_back(name);
    };
    add(cfg_.modes.lexical, "X0+phono");
    add(cfg_.modes.compositional_strict, "Xl+X0");
    add(cfg_.modes.syntactic, "barXl+phono");
    add(cfg_.modes.semantic, "Xl+barXl");
    add(cfg_.modes.lexical_semantics, "X0+barX0");
  }

  std::map<std::string, LaggedDesign> base;
  auto design = [&](const std::string& name) -> const LaggedDesign& {
    auto it = base.find(name);
    if (it != base.end()) return it->second;
    if (name == "phono") {
      if (!have_phones) throw ValidationError("feature set 'phono' needs phone files for every story");
      return base[name] = phonological_design(transcripts, PhoneVocabulary::build(transcripts),
                                                cfg_.lags);
    }
    std::vector<Matrix> per_story;
    for (const auto& t : transcripts) {
      per_story.push_back(load_matrix(path("features/" + t.story_id + "/" + name + ".dten")));
    }
    return base[name] = word_design(transcripts, per_story, cfg_.lags);
  };

  fs::create_directories(path("designs"));
  StageResult r;
  json columns = json::object();
  for (const auto& name : sets) {
    const auto parts = split_plus(name);
    LaggedDesign d;
    if (parts.size() == 1) {
      d = design(name);
    } else {
      std::vector<LaggedDesign> pieces;
      for (const auto& p : parts) pieces.push_back(design(p));
      d = concat_features(pieces);
    }
    store_matrix(d.matrix, path("designs/" + name + ".dten"), cfg_.storage);
    r.outputs.push_back("designs/" + name + ".dten");
    columns[name] = d.matrix.cols();
  }
  const auto signals = story_signals(cfg_, dir_, transcripts);
  const Matrix y = stack_signals(transcripts, signals);
  store_matrix(y, path("designs/Y.dten"), cfg_.storage);
  r.outputs.push_back("designs/Y.dten");
  r.summary = {{"feature_sets", sets}, {"columns", columns}, {"rows", y.rows()}, {"targets", y.cols()}};
  return r;
}

StageResult Runner::score() {
  const auto marker = read_json_file(path("stages/align.json"));
  const auto sets = marker.at("summary").at("feature_sets").get<std::vector<std::string>>();
  const auto transcripts = load_stories();
  const auto groups = tr_groups(transcripts);
  const Matrix y = load_matrix(path("designs/Y.dten"));
  std::vector<ScoreTable> tables;
  StageResult r;
  for (const auto& name : sets) {
    const LaggedDesign d{load_matrix(path("designs/" + name + ".dten")), cfg_.lags};
    std::optional<int> layer;
    if (name == "X0" || name == "barX0") layer = cfg_.lexical_layer;
    if (name == "Xl" || name == "barXl") layer = cfg_.layer;
    tables.push_back(brain_scores(d, y, cfg_.ridge, groups, name, layer));
    r.summary["mean_score"][name] = fold_summary(tables.back().scores).mean;
  }
  write_score_tables(path("scores.csv"), tables);
  r.outputs.push_back("scores.csv");
  return r;
}

StageResult Runner::decompose() {
  const auto tables = read_score_tables(path("scores.csv"));
  const auto report = decompose_scores(ScoreInputs::from_tables(tables), cfg_.modes, cfg_.components);
  write_decomposition(path("decomposition.csv"), report);
  StageResult r;
  r.outputs.push_back("decomposition.csv");
  r.summary = json::object();
  for (const auto& c : report.components) r.summary[c.name] = fold_summary(c.values).mean;
  return r;
}

StageResult Runner::stats() {
  const auto report = read_decomposition(path("decomposition.csv"));
  if (report.components.empty()) throw ValidationError("decomposition has no components");
  const Index targets = report.components.front().values.cols();
  ParcellationTable parc;
  if (cfg_.parcellation) {
    parc = load_parcellation(*cfg_.parcellation);
  } else if (cfg_.simulate) {
    parc = load_parcellation(path("sim/parcellation.csv"));
  } else {
    for (Index v = 0; v < targets; ++v) {
      parc.regions.push_back("target" + std::to_string(v));
      parc.target_region[v] = static_cast<int>(v);
    }
  }
  if (cfg_.relabel) {
    parc = relabel(parc, *cfg_.relabel == "brodmann" ? brodmann_relabel_preset()
                                                      : load_relabel_table(*cfg_.relabel));
  }

  std::vector<SignificanceRow> rows;
  std::ofstream top(path("top_regions.csv"), std::ios::trunc);
  if (!top) throw InputError("cannot open for writing: " + path("top_regions.csv").string(),
                             path("top_regions.csv").string());
  top << "component,rank,region,mean,sem\n";
  StageResult r;
  r.summary = json::object();
  for (const auto& c : report.components) {
    const auto roi = roi_average(c.values, parc);
    const auto sig = region_significance(roi, c.name, cfg_.q);
    std::size_t rejected = 0;
    for (const auto& s : sig) rejected += s.reject ? 1 : 0;
    r.summary[c.name] = {{"regions", sig.size()}, {"significant", rejected}};
    rows.insert(rows.end(), sig.begin(), sig.end());
    const auto best = top_regions(roi, static_cast<std::size_t>(cfg_.top));
    for (std::size_t i = 0; i < best.size(); ++i) {
      top << c.name << ',' << i + 1 << ',' << best[i].region << ',' << format_double(best[i].mean)
          << ',' << format_double(best[i].sem) << '\n';
    }
  }
  write_significance(path("significance.csv"), rows);
  r.outputs = {"significance.csv", "top_regions.csv"};
  return r;
}

StageResult Runner::probe() {
  const auto transcripts = load_stories();
  std::vector<ProbeFeature> features = {pos_feature(transcripts), depth_feature(transcripts)};
  if (cfg_.probe_targets) {
    auto extra = load_probe_targets(*cfg_.probe_targets, transcripts);
    features.insert(features.end(), extra.begin(), extra.end());
  }
  if (cfg_.simulate) {
    const auto truth = sim::GroundTruth::from_json(read_json_file(path("sim/ground_truth.json")));
    const sim::SimProvider provider(truth.provider);
    auto planted = sim::planted_probe_features(provider, transcripts, Lexicon::load(path("lexicon.jsonl")),
                                               derive_seed(cfg_.seed, "probe"));
    for (auto& f : planted) f.name = "planted_" + f.name;
    features.insert(features.end(), planted.begin(), planted.end());
  }
  if (cfg_.probe_content_only) {
    const auto keep = content_mask(transcripts);
    for (auto& f : features) f = restrict_rows(f, keep);
  }

  const std::vector<std::string> sets = {"X0", "Xl", "barX0", "barXl"};
  std::vector<Matrix> embeddings;
  for (const auto& name : sets) {
    std::vector<Matrix> parts;
    Index rows = 0;
    for (const auto& t : transcripts) {
      parts.push_back(load_matrix(path("features/" + t.story_id + "/" + name + ".dten")));
      rows += parts.back().rows();
    }
    Matrix stacked(rows, parts.empty() ? 0 : parts.front().cols());
    Index at = 0;
    for (const auto& p : parts) {
      stacked.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    embeddings.push_back(std::move(stacked));
  }

  const std::size_t jobs = features.size() * sets.size();
  std::vector<ProbeResult> results(jobs);
  parallel_for(jobs, workers_, [&](std::size_t j) {
    results[j] = probe_decode(embeddings[j % sets.size()], features[j / sets.size()], cfg_.probe);
  });
  std::ofstream out(path("probe.csv"), std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path("probe.csv").string(),
                             path("probe.csv").string());
  out << "feature,embedding,mean,sem\n";
  StageResult r;
  r.summary = json::object();
  for (std::size_t j = 0; j < jobs; ++j) {
    const auto& f = features[j / sets.size()];
    const auto& e = sets[j % sets.size()];
    out << f.name << ',' << e << ',' << format_double(results[j].mean) << ','
        << format_double(results[j].sem) << '\n';
    r.summary[f.name][e] = results[j].mean;
  }
  r.outputs.push_back("probe.csv");
  return r;
}

StageResult Runner::report() {
  fs::create_directories(path("report"));
  StageResult r;

  const auto tables = read_score_tables(path("scores.csv"));
  {
    std::ofstream out(path("report/feature_sets.csv"), std::ios::trunc);
    out << "feature_set,layer,mean,sem\n";
    for (const auto& t : tables) {
      const auto s = fold_summary(t.scores);
      out << t.feature_set << ',' << (t.layer ? std::to_string(*t.layer) : std::string()) << ','
          << format_double(s.mean) << ',' << format_double(s.sem) << '\n';
    }
    r.outputs.push_back("report/feature_sets.csv");
  }

  const auto decomposition = read_decomposition(path("decomposition.csv"));
  std::vector<double> means;
  std::vector<double> sems;
  {
    std::ofstream out(path("report/components.csv"), std::ios::trunc);
    out << "component,mode,mean,sem\n";
    for (const auto& c : decomposition.components) {
      const auto s = fold_summary(c.values);
      out << c.name << ',' << to_string(c.mode) << ',' << format_double(s.mean) << ','
          << format_double(s.sem) << '\n';
      means.push_back(s.mean);
      sems.push_back(s.sem);
    }
    r.outputs.push_back("report/components.csv");
  }

  if (fs::exists(path("significance.csv"))) {
    fs::copy_file(path("significance.csv"), path("report/significance.csv"),
                  fs::copy_options::overwrite_existing);
    r.outputs.push_back("report/significance.csv");
  }

  if (cfg_.plots) {
    write_bar_plot(path("report/components.png"), means, sems);
    r.outputs.push_back("report/components.png");

    if (fs::exists(path("convergence.csv"))) {
      std::vector<double> k;
      std::vector<double> mean;
      for (const auto& row : read_csv(path("convergence.csv"), "k,mean,median,count")) {
        k.push_back(parse_double(row[0], "convergence.csv"));
        mean.push_back(parse_double(row[1], "convergence.csv"));
      }
      if (!k.empty()) {
        write_line_plot(path("report/convergence.png"), k, mean);
        r.outputs.push_back("report/convergence.png");
      }
    }

    if (fs::exists(path("top_regions.csv"))) {
      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_component;
      for (const auto& row : read_csv(path("top_regions.csv"), "component,rank,region,mean,sem")) {
        auto& [m, s] = per_component[row[0]];
        m.push_back(parse_double(row[3], "top_regions.csv"));
        s.push_back(parse_double(row[4], "top_regions.csv"));
      }
      for (const auto& [component, ms] : per_component) {
        const std::string file = "report/regions_" + component + ".png";
        write_bar_plot(path(file), ms.first, ms.second);
        r.outputs.push_back(file);
      }
    }
  }
  r.summary = {{"components", decomposition.components.size()}, {"feature_sets", tables.size()}};
  return r;
}

// ------------------------------------------------------------------ errors

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 3;
  return 1;
}

json error_document(const std::exception& e, const std::string& stage) {
  json doc;
  if (const auto* in = dynamic_cast<const InputError*>(&e)) {
    doc["error"] = "input";
    doc["path"] = in->path();
  } else if (dynamic_cast<const ValidationError*>(&e)) {
    doc["error"] = "validation";
  } else if (dynamic_cast<const FormatError*>(&e)) {
    doc["error"] = "format";
  } else {
    doc["error"] = "internal";
  }
  doc["message"] = e.what();
  if (!stage.empty()) doc["stage"] = stage;
  return doc;
}

}  // namespace synsem
