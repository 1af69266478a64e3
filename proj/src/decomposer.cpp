#include "synsem/decomposer.hpp"

#include "synsem/csv.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>

namespace synsem {
namespace {

const std::vector<std::string>& all_components() {
  static const std::vector<std::string> names = {
      "lexical",        "compositional",     "compositional_strict", "syntactic",
      "semantic",       "lexical_syntax",    "lexical_semantics",    "lexical_gain",
      "compositional_gain", "syntactic_gain", "lexical_syntax_gain"};
  return names;
}

const Matrix& need(const std::optional<Matrix>& m, const char* name, const std::string& component) {
  if (!m) throw ValidationError("component '" + component + "' needs the " + name + " scores");
  return *m;
}

}  // namespace

const char* to_string(ContrastMode m) {
  return m == ContrastMode::subtraction ? "subtraction" : "concatenation";
}

ContrastMode contrast_mode_from_string(const std::string& s) {
  if (s == "subtraction") return ContrastMode::subtraction;
  if (s == "concatenation") return ContrastMode::concatenation;
  throw ValidationError("unknown contrast mode '" + s + "'");
}

ScoreInputs ScoreInputs::from_tables(std::span<const ScoreTable> tables) {
  ScoreInputs in;
  const std::map<std::string, std::optional<Matrix> ScoreInputs::*> slots = {
      {"phono", &ScoreInputs::phono},          {"X0", &ScoreInputs::x0},
      {"Xl", &ScoreInputs::xl},                {"barX0", &ScoreInputs::bar_x0},
      {"barXl", &ScoreInputs::bar_xl},         {"X0+phono", &ScoreInputs::x0_phono},
      {"Xl+X0", &ScoreInputs::xl_x0},          {"barXl+phono", &ScoreInputs::bar_xl_phono},
      {"Xl+barXl", &ScoreInputs::xl_bar_xl},   {"X0+barX0", &ScoreInputs::x0_bar_x0}};
  for (const auto& t : tables) {
    auto it = slots.find(t.feature_set);
    if (it == slots.end()) continue;
    auto& slot = in.*(it->second);
    if (slot) throw ValidationError("score table '" + t.feature_set + "' given twice");
    slot = t.scores;
  }
  return in;
}

const Component* DecompositionReport::find(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Component& DecompositionReport::at(const std::string& name) const {
  const auto* c = find(name);
  if (!c) throw std::out_of_range("no component '" + name + "' in report");
  return *c;
}

DecompositionReport decompose_scores(const ScoreInputs& in, const ContrastModes& modes,
                                     std::span<const std::string> requested) {
  // Every present table must share the fold plan and target set.
  std::optional<std::pair<Index, Index>> shape;
  for (const auto* m : {&in.phono, &in.x0, &in.xl, &in.bar_x0, &in.bar_xl, &in.x0_phono,
                        &in.xl_x0, &in.bar_xl_phono, &in.xl_bar_xl, &in.x0_bar_x0}) {
    if (!*m) continue;
    const std::pair<Index, Index> s{(*m)->rows(), (*m)->cols()};
    if (shape && *shape != s) {
      throw ValidationError("score tables differ in fold count or target count");
    }
    shape = s;
  }

  using Maker = std::function<std::pair<ContrastMode, Matrix>(const std::string&)>;
  auto contrast = [&](ContrastMode mode, const std::optional<Matrix>& a, const char* an,
                      const std::optional<Matrix>& b, const char* bn,
                      const std::optional<Matrix>& cat, const char* cn, const std::string& name) {
    if (mode == ContrastMode::subtraction) {
      return std::make_pair(mode, Matrix(need(a, an, name) - need(b, bn, name)));
    }
    return std::make_pair(mode, Matrix(need(cat, cn, name) - need(b, bn, name)));
  };
  const std::map<std::string, Maker> makers = {
      {"lexical",
       [&](const std::string& n) {
         if (modes.lexical == ContrastMode::subtraction) {
           return std::make_pair(modes.lexical, need(in.x0, "X0", n));
         }
         return contrast(modes.lexical, in.x0, "X0", in.phono, "phono", in.x0_phono, "X0+phono", n);
       }},
      {"compositional",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction, need(in.xl, "Xl", n));
       }},
      {"compositional_strict",
       [&](const std::string& n) {
         return contrast(modes.compositional_strict, in.xl, "Xl", in.x0, "X0", in.xl_x0, "Xl+X0",
                         n);
       }},
      {"syntactic",
       [&](const std::string& n) {
         if (modes.syntactic == ContrastMode::subtraction) {
           return std::make_pair(modes.syntactic, need(in.bar_xl, "barXl", n));
         }
         return contrast(modes.syntactic, in.bar_xl, "barXl", in.phono, "phono", in.bar_xl_phono,
                         "barXl+phono", n);
       }},
      {"semantic",
       [&](const std::string& n) {
         return contrast(modes.semantic, in.xl, "Xl", in.bar_xl, "barXl", in.xl_bar_xl,
                         "Xl+barXl", n);
       }},
      {"lexical_syntax",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction, need(in.bar_x0, "barX0", n));
       }},
      {"lexical_semantics",
       [&](const std::string& n) {
         return contrast(modes.lexical_semantics, in.x0, "X0", in.bar_x0, "barX0", in.x0_bar_x0,
                         "X0+barX0", n);
       }},
      {"lexical_gain",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction,
                               Matrix(need(in.x0, "X0", n) - need(in.phono, "phono", n)));
       }},
      {"compositional_gain",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction,
                               Matrix(need(in.xl, "Xl", n) - need(in.phono, "phono", n)));
       }},
      {"syntactic_gain",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction,
                               Matrix(need(in.bar_xl, "barXl", n) - need(in.phono, "phono", n)));
       }},
      {"lexical_syntax_gain",
       [&](const std::string& n) {
         return std::make_pair(ContrastMode::subtraction,
                               Matrix(need(in.bar_x0, "barX0", n) - need(in.phono, "phono", n)));
       }},
  };

  DecompositionReport report;
  const bool everything = requested.empty();
  const auto& names = everything ? all_components() : std::vector<std::string>(requested.begin(), requested.end());
  for (const auto& name : names) {
    auto it = makers.find(name);
    if (it == makers.end()) throw ValidationError("unknown component '" + name + "'");
    try {
      auto [mode, values] = it->second(name);
      report.components.push_back({name, mode, std::move(values)});
    } catch (const ValidationError&) {
      if (!everything) throw;
    }
  }
  return report;
}

void write_decomposition(const std::filesystem::path& path, const DecompositionReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  out << "component,mode,fold,target,value\n";
  for (const auto& c : report.components) {
    for (Index f = 0; f < c.values.rows(); ++f) {
      for (Index v = 0; v < c.values.cols(); ++v) {
        out << c.name << ',' << to_string(c.mode) << ',' << f << ',' << v << ','
            << format_double(c.values(f, v)) << '\n';
      }
    }
  }
}

DecompositionReport read_decomposition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open decomposition: " + path.string(), path.string());
  struct Entry {
    Index fold, target;
    double value;
  };
  std::vector<std::pair<std::string, ContrastMode>> order;
  std::map<std::string, std::vector<Entry>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw FormatError(where + ": expected 5 columns");
    if (lineno == 1 && cells[0] == "component") continue;
    if (!entries.count(cells[0])) order.emplace_back(cells[0], contrast_mode_from_string(cells[1]));
    entries[cells[0]].push_back({static_cast<Index>(parse_int(cells[2], where)),
                                 static_cast<Index>(parse_int(cells[3], where)),
                                 parse_double(cells[4], where)});
  }
  DecompositionReport report;
  for (const auto& [name, mode] : order) {
    const auto& es = entries[name];
    Index folds = 0;
    Index targets = 0;
    for (const auto& e : es) {
      folds = std::max(folds, e.fold + 1);
      targets = std::max(targets, e.target + 1);
    }
    if (static_cast<Index>(es.size()) != folds * targets) {
      throw ValidationError(path.string() + ": component '" + name + "' is incomplete");
    }
    Matrix values(folds, targets);
    for (const auto& e : es) {
      if (e.fold < 0 || e.target < 0) throw ValidationError(path.string() + ": negative index");
      values(e.fold, e.target) = e.value;
    }
    report.components.push_back({name, mode, std::move(values)});
  }
  return report;
}

}  // namespace synsem
