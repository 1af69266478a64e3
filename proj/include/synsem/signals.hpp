#pragma once

#include "synsem/common.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace synsem {

/// TR-level responses of one or more subjects to one story.
struct SignalBundle {
  Matrix matrix;  // N x V
  std::vector<double> tr_times;
  std::vector<std::string> subject_ids;
  std::string story_id;

  Index tr_count() const noexcept { return matrix.rows(); }
  Index target_count() const noexcept { return matrix.cols(); }
};

/// Checks N == len(tr_times) and that every value is finite.
void validate_signals(const SignalBundle& s);

/// Elementwise mean across subjects of the same story. Subject ids are
/// concatenated in argument order.
SignalBundle average_subjects(std::span<const SignalBundle> signals);

/// Loads an N x V DTEN file for one subject.
SignalBundle load_signals(const std::filesystem::path& path, std::vector<double> tr_times,
                          std::string subject_id, std::string story_id);

}  // namespace synsem
