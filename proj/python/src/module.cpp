#include "synsem/align.hpp"
#include "synsem/correlation.hpp"
#include "synsem/decomposer.hpp"
#include "synsem/dependency_tree.hpp"
#include "synsem/encoder.hpp"
#include "synsem/parallel.hpp"
#include "synsem/runner.hpp"
#include "synsem/stats.hpp"
#include "synsem/tensor.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace synsem;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

DType dtype_from(const std::string& s) {
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  throw ValidationError("dtype must be 'f32' or 'f64', got '" + s + "'");
}

Sentence tree(const std::vector<int>& heads) {
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    AnnotatedToken t;
    t.text = "w" + std::to_string(i);
    t.head = Head::decode(heads[i]);
    s.tokens.push_back(t);
  }
  validate_heads(heads);
  return s;
}

py::dict stage_dict(const StageResult& r) {
  py::dict d;
  d["stage"] = r.stage;
  d["skipped"] = r.skipped;
  d["outputs"] = r.outputs;
  d["summary"] = to_python(r.summary);
  return d;
}

const std::map<std::string, std::optional<Matrix> ScoreInputs::*>& score_slots() {
  static const std::map<std::string, std::optional<Matrix> ScoreInputs::*> slots = {
      {"phono", &ScoreInputs::phono},          {"X0", &ScoreInputs::x0},
      {"Xl", &ScoreInputs::xl},                {"barX0", &ScoreInputs::bar_x0},
      {"barXl", &ScoreInputs::bar_xl},         {"X0+phono", &ScoreInputs::x0_phono},
      {"Xl+X0", &ScoreInputs::xl_x0},          {"barXl+phono", &ScoreInputs::bar_xl_phono},
      {"Xl+barXl", &ScoreInputs::xl_bar_xl},   {"X0+barX0", &ScoreInputs::x0_bar_x0}};
  return slots;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of synsem";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::exception<InputError>(m, "InputError", PyExc_FileNotFoundError);
  // InputError carries the offending path as an attribute.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::object cls = py::module_::import("synsem._core").attr("InputError");
      py::object err = cls(e.what());
      err.attr("path") = e.path();
      PyErr_SetObject(cls.ptr(), err.ptr());
    }
  });

  // ------------------------------------------------------------ files
  m.def("load_matrix", &load_matrix, py::arg("path"), "Read a rank-1 or rank-2 DTEN file as float64.");
  m.def(
      "store_matrix",
      [](const Matrix& x, const std::filesystem::path& path, const std::string& dtype) {
        store_matrix(x, path, dtype_from(dtype));
      },
      py::arg("matrix"), py::arg("path"), py::arg("dtype") = "f32", "Write a matrix as DTEN.");

  // ------------------------------------------------------------ trees
  m.def(
      "tree_similarity",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return tree_similarity(tree(a), tree(b));
      },
      py::arg("heads_a"), py::arg("heads_b"),
      "Pearson correlation of pairwise tree distances; heads use -1 for ROOT. None below 3 tokens.");
  m.def(
      "tree_distances", [](const std::vector<int>& heads) { return tree_pairwise_distances(tree(heads)); },
      py::arg("heads"));

  // ------------------------------------------------------------ align
  m.def(
      "align_events",
      [](const Matrix& features, const std::vector<double>& onsets,
         const std::vector<double>& tr_times, int lags) {
        return align_events(features, onsets, tr_times, lags).matrix;
      },
      py::arg("features"), py::arg("onsets"), py::arg("tr_times"), py::arg("lags") = 5,
      "Nearest-TR binning followed by lag stacking.");

  // ---------------------------------------------------------- encoder
  m.def(
      "robust_standardize",
      [](const Matrix& x, const std::vector<int>& groups, double clip_low, double clip_high) {
        return robust_standardize(x, groups, clip_low, clip_high);
      },
      py::arg("x"), py::arg("groups") = std::vector<int>{}, py::arg("clip_low") = 0.01,
      py::arg("clip_high") = 99.99);
  m.def(
      "ridge_fit", [](const Matrix& x, const Matrix& y, double lambda) { return ridge_fit(x, y, lambda).weights; },
      py::arg("x"), py::arg("y"), py::arg("alpha"));
  m.def(
      "select_lambda",
      [](const Matrix& x, const Matrix& y, const std::vector<double>& grid, bool shared) {
        return select_lambda(x, y, grid, shared ? LambdaMode::shared : LambdaMode::per_target);
      },
      py::arg("x"), py::arg("y"), py::arg("grid") = default_lambda_grid(), py::arg("shared") = false);
  m.def(
      "loo_errors",
      [](const Matrix& x, const Matrix& y, const std::vector<double>& grid) {
        return RidgeSolver(x).loo_errors(y, grid);
      },
      py::arg("x"), py::arg("y"), py::arg("grid") = default_lambda_grid());
  m.def(
      "pearson",
      [](const std::vector<double>& a, const std::vector<double>& b) -> std::optional<double> {
        const auto c = pearson(a, b);
        if (!c.defined) return std::nullopt;
        return c.r;
      },
      py::arg("a"), py::arg("b"), "Pearson r, or None when either input is constant.");
  m.def(
      "brain_scores",
      [](const Matrix& design, const Matrix& y, int folds, int min_test_samples,
         const std::vector<double>& grid, const std::vector<int>& groups, const std::string& scaler,
         int workers) {
        RidgeConfig cfg;
        cfg.folds = folds;
        cfg.min_test_samples = min_test_samples;
        cfg.lambda_grid = grid;
        if (scaler == "per_story_global") {
          cfg.scaler = ScalerMode::per_story_global;
        } else if (scaler != "per_story_train") {
          throw ValidationError("scaler must be 'per_story_train' or 'per_story_global'");
        }
        cfg.workers = resolve_workers(workers);
        const LaggedDesign d{design, 1};
        ScoreTable t;
        {
          py::gil_scoped_release release;
          t = brain_scores(d, y, cfg, groups);
        }
        return py::make_tuple(t.scores, t.lambdas);
      },
      py::arg("design"), py::arg("y"), py::arg("folds") = 100, py::arg("min_test_samples") = 10,
      py::arg("grid") = default_lambda_grid(), py::arg("groups") = std::vector<int>{},
      py::arg("scaler") = "per_story_train", py::arg("workers") = 0,
      "Cross-validated Pearson scores (folds x targets) and the chosen lambdas.");

  // -------------------------------------------------------- decompose
  m.def(
      "decompose",
      [](const std::map<std::string, Matrix>& scores, const std::map<std::string, std::string>& modes,
         const std::vector<std::string>& components) {
        ScoreInputs in;
        for (const auto& [name, values] : scores) {
          auto it = score_slots().find(name);
          if (it == score_slots().end()) throw ValidationError("unknown score table '" + name + "'");
          in.*(it->second) = values;
        }
        ContrastModes cm;
        const std::map<std::string, ContrastMode ContrastModes::*> fields = {
            {"lexical", &ContrastModes::lexical},
            {"compositional_strict", &ContrastModes::compositional_strict},
            {"syntactic", &ContrastModes::syntactic},
            {"semantic", &ContrastModes::semantic},
            {"lexical_semantics", &ContrastModes::lexical_semantics}};
        for (const auto& [name, mode] : modes) {
          auto it = fields.find(name);
          if (it == fields.end()) throw ValidationError("no contrast mode for '" + name + "'");
          cm.*(it->second) = contrast_mode_from_string(mode);
        }
        std::map<std::string, Matrix> out;
        for (auto& c : decompose_scores(in, cm, components).components) out[c.name] = std::move(c.values);
        return out;
      },
      py::arg("scores"), py::arg("modes") = std::map<std::string, std::string>{},
      py::arg("components") = std::vector<std::string>{},
      "Components from score tables keyed phono, X0, Xl, barX0, barXl (and joined sets).");

  // ------------------------------------------------------------ stats
  m.def(
      "wilcoxon",
      [](const std::vector<double>& samples) {
        const auto r = wilcoxon_signed_rank(samples);
        py::dict d;
        d["p"] = r.p;
        d["statistic"] = r.statistic;
        d["n"] = r.n;
        d["exact"] = r.exact;
        d["degenerate"] = r.degenerate;
        return d;
      },
      py::arg("samples"), "Two-sided Wilcoxon signed-rank test of zero location.");
  m.def(
      "fdr_bh",
      [](const std::vector<double>& p, double q) {
        auto r = fdr_bh(p, q);
        return py::make_tuple(r.adjusted, r.reject);
      },
      py::arg("pvalues"), py::arg("q") = 0.05);

  // ----------------------------------------------------------- runner
  py::class_<Runner>(m, "Runner")
      .def(py::init([](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                       std::optional<int> workers, std::optional<std::filesystem::path> out_dir,
                       bool force) {
             RunOptions o;
             o.config = config;
             o.seed = seed;
             o.workers = workers;
             o.out_dir = std::move(out_dir);
             o.force = force;
             return std::make_unique<Runner>(o);
           }),
           py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none(),
           py::arg("out_dir") = py::none(), py::arg("force") = false)
      .def_static("stage_names", &Runner::stage_names)
      .def(
          "run_stage",
          [](Runner& r, const std::string& name) {
            StageResult res;
            {
              py::gil_scoped_release release;
              res = r.run_stage(name);
            }
            return stage_dict(res);
          },
          py::arg("name"))
      .def("run_all",
           [](Runner& r) {
             std::vector<StageResult> res;
             {
               py::gil_scoped_release release;
               res = r.run_all();
             }
             py::list out;
             for (const auto& s : res) out.append(stage_dict(s));
             return out;
           })
      .def_property_readonly("run_dir", &Runner::run_dir)
      .def_property_readonly("workers", &Runner::workers)
      .def_property_readonly("fingerprint", &Runner::fingerprint);
}
