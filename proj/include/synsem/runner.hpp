#pragma once

#include "synsem/decomposer.hpp"
#include "synsem/embedding.hpp"
#include "synsem/encoder.hpp"
#include "synsem/probe.hpp"
#include "synsem/simgen.hpp"
#include "synsem/synthesis.hpp"
#include "synsem/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synsem {

/// Files of one real story. Relative paths resolve against the config file.
struct StoryInput {
  std::filesystem::path sentences;
  std::optional<std::filesystem::path> phones;
  std::filesystem::path meta;
  std::vector<std::filesystem::path> signals;      // one N x V DTEN per subject
  std::vector<std::filesystem::path> activations;  // one DTEN per layer
};

struct SimRegion {
  std::string name;
  std::vector<sim::Planted> drivers;  // empty = pure noise
  Index targets = 10;
};

struct SimulateSection {
  int stories = 4;
  int trs_per_story = 1250;
  int corpus_sentences = 2000;
  sim::ProviderSpec provider;
  double snr = 1.0;
  /// Without explicit regions: `targets` targets driven by `drivers`, cut
  /// into regions of `region_size`.
  Index targets = 50;
  std::vector<sim::Planted> drivers = {sim::Planted::syntactic};
  Index region_size = 10;
  std::vector<SimRegion> regions;
};

/// Parsed run configuration (schema version 1, documented in README.md).
struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 0;
  std::filesystem::path out_dir = "run";

  std::optional<SimulateSection> simulate;
  std::vector<StoryInput> stories;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> parcellation;
  std::optional<std::string> relabel;  // "brodmann" or a CSV path
  std::vector<FileEmbeddingProvider::Source> variant_activations;

  int lexical_layer = 0;
  int layer = 2;
  SynthesisConfig synthesis;
  std::string reparser = "auto";  // auto | toy | none

  int lags = 5;
  std::vector<std::string> feature_sets;  // empty = derived from the contrast modes
  DType storage = DType::f32;
  RidgeConfig ridge;

  ContrastModes modes;
  std::vector<std::string> components;  // empty = every available component
  double q = 0.05;
  int top = 10;

  bool probe_enabled = true;
  ProbeConfig probe;
  std::optional<std::filesystem::path> probe_targets;
  bool probe_content_only = false;

  bool plots = true;

  /// Validated, canonical document the fingerprint is computed from.
  nlohmann::json document;

  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> out_dir;
  bool force = false;
};

struct StageResult {
  std::string stage;
  bool skipped = false;
  std::vector<std::string> outputs;  // relative to the run directory
  nlohmann::json summary;
};

/// Stage DAG over one run directory. Every stage reads its inputs from the
/// run directory (or the configured files) and records a marker, so stages
/// can be invoked one at a time and a rerun with the same configuration is
/// a no-op unless forced.
class Runner {
 public:
  explicit Runner(const RunOptions& opts);

  static const std::vector<std::string>& stage_names();

  StageResult run_stage(const std::string& name);
  /// Every stage the configuration enables, in dependency order.
  std::vector<StageResult> run_all();

  const RunConfig& config() const noexcept { return cfg_; }
  const std::filesystem::path& run_dir() const noexcept { return dir_; }
  int workers() const noexcept { return workers_; }
  std::string fingerprint() const;

 private:
  StageResult simulate();
  StageResult lexicon();
  StageResult synth();
  StageResult embed();
  StageResult align();
  StageResult score();
  StageResult decompose();
  StageResult stats();
  StageResult probe();
  StageResult report();

  std::vector<Transcript> load_stories() const;
  std::filesystem::path path(const std::string& rel) const { return dir_ / rel; }
  bool up_to_date(const std::string& stage) const;
  void record(const StageResult& r) const;
  void update_manifest(const StageResult& r) const;

  RunConfig cfg_;
  std::filesystem::path dir_;
  int workers_ = 1;
  bool force_ = false;
};

/// Exit code for an exception escaping a stage: 2 for missing or unreadable
/// inputs, 3 for format and validation failures, 1 otherwise.
int exit_code_for(const std::exception& e);

/// {"error", "message", "path"?, "stage"?} describing a failure.
nlohmann::json error_document(const std::exception& e, const std::string& stage = {});

}  // namespace synsem
