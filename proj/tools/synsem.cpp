#include "synsem/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;

void report_failure(const std::exception& e, const std::string& stage,
                    const std::optional<fs::path>& run_dir) {
  const auto doc = synsem::error_document(e, stage);
  std::cerr << doc.dump() << '\n';
  if (!run_dir) return;
  std::error_code ec;
  fs::create_directories(*run_dir, ec);
  std::ofstream out(*run_dir / "error.json", std::ios::trunc);
  if (out) out << doc.dump(2) << '\n';
}

void print(const synsem::StageResult& r) {
  std::cout << r.stage << ": " << (r.skipped ? "up to date" : "done");
  if (!r.summary.empty() && !r.summary.is_null()) std::cout << ' ' << r.summary.dump();
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synsem: decompose feature-to-signal encoding scores into lexical, "
               "compositional, syntactic and semantic components"};
  app.require_subcommand(1);

  synsem::RunOptions opts;
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON, version 1)")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--workers", workers, "Worker threads (default: SYNSEM_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "Run directory (default: SYNSEM_OUT_DIR or config out_dir)");
    sub->add_flag("--force", opts.force, "Rerun stages whose outputs are up to date");
  };

  const std::map<std::string, std::string> help = {
      {"simulate", "Generate a planted-signal dataset"},
      {"lexicon", "Build the (POS, relation) lexicon from the donor corpus"},
      {"synth", "Synthesize syntax-matched variants for every sentence"},
      {"embed", "Extract activations and syntactic embeddings; convergence diagnostic"},
      {"align", "Build lag-stacked designs and the stacked response matrix"},
      {"score", "Cross-validated ridge brain scores per feature set"},
      {"decompose", "Score components from the feature-set scores"},
      {"stats", "Region averages, Wilcoxon tests and FDR correction"},
      {"probe", "Decode word properties from each embedding"},
      {"report", "Summary CSVs and plots"},
      {"run", "Every enabled stage in order"}};
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& name : synsem::Runner::stage_names()) {
    subs.emplace_back(name, app.add_subcommand(name, help.at(name)));
  }
  subs.emplace_back("run", app.add_subcommand("run", help.at("run")));
  for (auto& [name, sub] : subs) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  opts.config = config;
  for (auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--workers")) opts.workers = workers;
    if (sub->count("--out-dir")) opts.out_dir = fs::path(out_dir);
  }

  std::optional<fs::path> run_dir = opts.out_dir;
  if (!run_dir) {
    if (const char* env = std::getenv("SYNSEM_OUT_DIR"); env && *env) run_dir = fs::path(env);
  }
  std::string stage;
  try {
    synsem::Runner runner(opts);
    run_dir = runner.run_dir();
    if (command == "run") {
      for (const auto& name : synsem::Runner::stage_names()) {
        if (name == "simulate" && !runner.config().simulate) continue;
        if (name == "probe" && !runner.config().probe_enabled) continue;
        stage = name;
        print(runner.run_stage(name));
      }
    } else {
      stage = command;
      print(runner.run_stage(command));
    }
  } catch (const std::exception& e) {
    report_failure(e, stage, run_dir);
    return synsem::exit_code_for(e);
  }
  return 0;
}
