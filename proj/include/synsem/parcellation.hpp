#pragma once

#include "synsem/common.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace synsem {

/// Assignment of targets (voxels) to named regions. Targets missing from
/// the mapping are unlabeled.
struct ParcellationTable {
  std::vector<std::string> regions;   // in order of first appearance
  std::map<Index, int> target_region;  // target index -> position in `regions`

  /// Per-target region position (-1 when unlabeled) for V targets.
  /// Throws ValidationError if any mapped index is >= V.
  std::vector<int> assignment(Index target_count) const;
};

/// CSV "target_index,region_label", optional header line.
ParcellationTable load_parcellation(const std::filesystem::path& path);
void write_parcellation(const std::filesystem::path& path, const ParcellationTable& table);

/// Display label -> atlas labels it groups (e.g. "A1" -> {"BA41", "BA42"}).
using RelabelTable = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Brodmann-area renaming preset used for the per-region reporting figure.
const RelabelTable& brodmann_relabel_preset();

/// CSV "label,areas" where areas are separated by " / ".
RelabelTable load_relabel_table(const std::filesystem::path& path);

/// Renames regions through the table; atlas labels that share a display
/// label are merged into one region. Labels not in the table are kept.
ParcellationTable relabel(const ParcellationTable& table, const RelabelTable& relabel);

}  // namespace synsem
