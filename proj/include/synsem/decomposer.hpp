#pragma once

#include "synsem/common.hpp"
#include "synsem/encoder.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synsem {

enum class ContrastMode { subtraction, concatenation };

const char* to_string(ContrastMode m);
ContrastMode contrast_mode_from_string(const std::string& s);

/// Per-fold, per-target score matrices (folds x V). The concatenated sets
/// are only needed for contrasts run in concatenation mode; A⊕B is the
/// score of the horizontally joined designs.
struct ScoreInputs {
  std::optional<Matrix> phono;
  std::optional<Matrix> x0;
  std::optional<Matrix> xl;
  std::optional<Matrix> bar_x0;
  std::optional<Matrix> bar_xl;

  std::optional<Matrix> x0_phono;      // X0 ⊕ P
  std::optional<Matrix> xl_x0;         // Xl ⊕ X0
  std::optional<Matrix> bar_xl_phono;  // X̄l ⊕ P
  std::optional<Matrix> xl_bar_xl;     // Xl ⊕ X̄l
  std::optional<Matrix> x0_bar_x0;     // X0 ⊕ X̄0

  /// Fills the slots from tables named phono, X0, Xl, barX0, barXl,
  /// X0+phono, Xl+X0, barXl+phono, Xl+barXl, X0+barX0.
  static ScoreInputs from_tables(std::span<const ScoreTable> tables);
};

/// Contrast selection. Under subtraction, lexical is ℛ(X0), the strict
/// compositional part ℛ(Xl) − ℛ(X0), syntactic ℛ(X̄l), semantic
/// ℛ(Xl) − ℛ(X̄l) and lexical semantics ℛ(X0) − ℛ(X̄0). Under
/// concatenation each becomes ℛ(A ⊕ B) − ℛ(B) with B the reference above
/// (phonology for lexical and syntactic).
struct ContrastModes {
  ContrastMode lexical = ContrastMode::subtraction;
  ContrastMode compositional_strict = ContrastMode::subtraction;
  ContrastMode syntactic = ContrastMode::subtraction;
  ContrastMode semantic = ContrastMode::subtraction;
  ContrastMode lexical_semantics = ContrastMode::subtraction;
};

struct Component {
  std::string name;
  ContrastMode mode = ContrastMode::subtraction;
  Matrix values;  // folds x V
};

struct DecompositionReport {
  std::vector<Component> components;

  const Component* find(const std::string& name) const;
  const Component& at(const std::string& name) const;
};

/// Names accepted in `requested`: lexical, compositional,
/// compositional_strict, syntactic, semantic, lexical_syntax,
/// lexical_semantics and the gains over phonology lexical_gain,
/// compositional_gain, syntactic_gain, lexical_syntax_gain. An empty
/// request computes every component whose inputs are present.
DecompositionReport decompose_scores(const ScoreInputs& in, const ContrastModes& modes = {},
                                     std::span<const std::string> requested = {});

/// CSV `component,mode,fold,target,value`.
void write_decomposition(const std::filesystem::path& path, const DecompositionReport& report);
DecompositionReport read_decomposition(const std::filesystem::path& path);

}  // namespace synsem
