#include "synsem/signals.hpp"

#include "synsem/tensor.hpp"

namespace synsem {

void validate_signals(const SignalBundle& s) {
  if (static_cast<std::size_t>(s.matrix.rows()) != s.tr_times.size()) {
    throw ValidationError("signals for story " + s.story_id + ": " +
                          std::to_string(s.matrix.rows()) + " rows but " +
                          std::to_string(s.tr_times.size()) + " TR times");
  }
  if (!s.matrix.allFinite()) {
    throw ValidationError("signals for story " + s.story_id + " contain non-finite values");
  }
}

SignalBundle average_subjects(std::span<const SignalBundle> signals) {
  if (signals.empty()) throw std::invalid_argument("average_subjects: no signals");
  const auto& first = signals.front();
  SignalBundle out;
  out.story_id = first.story_id;
  out.tr_times = first.tr_times;
  out.matrix = Matrix::Zero(first.matrix.rows(), first.matrix.cols());
  for (const auto& s : signals) {
    if (s.story_id != first.story_id) {
      throw ValidationError("average_subjects: story mismatch '" + s.story_id + "' vs '" +
                            first.story_id + "'");
    }
    if (s.matrix.rows() != first.matrix.rows()) {
      throw ValidationError("average_subjects: TR count mismatch");
    }
    if (s.matrix.cols() != first.matrix.cols()) {
      throw ValidationError("average_subjects: target count mismatch");
    }
    if (s.tr_times != first.tr_times) {
      throw ValidationError("average_subjects: TR grids differ");
    }
    out.matrix += s.matrix;
    out.subject_ids.insert(out.subject_ids.end(), s.subject_ids.begin(), s.subject_ids.end());
  }
  out.matrix /= static_cast<double>(signals.size());
  return out;
}

SignalBundle load_signals(const std::filesystem::path& path, std::vector<double> tr_times,
                          std::string subject_id, std::string story_id) {
  SignalBundle s;
  s.matrix = load_matrix(path);
  s.tr_times = std::move(tr_times);
  s.subject_ids = {std::move(subject_id)};
  s.story_id = std::move(story_id);
  validate_signals(s);
  return s;
}

}  // namespace synsem
