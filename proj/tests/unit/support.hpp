#pragma once

#include "synsem/transcript.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace synsem::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("synsem_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Sentence with the given POS tags and heads (-1 = ROOT); words are w0, w1, ...
inline Sentence make_sentence(const std::vector<std::string>& pos, const std::vector<int>& heads,
                              const std::vector<std::string>& words = {},
                              const std::string& story = "s", int index = 0) {
  Sentence s;
  s.story_id = story;
  s.sentence_index = index;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    AnnotatedToken t;
    t.text = words.empty() ? "w" + std::to_string(i) : words[i];
    t.pos = pos[i];
    t.dep = heads[i] < 0 ? "root" : "dep";
    t.head = heads[i] < 0 ? Head::root() : Head::token(heads[i]);
    t.onset_s = 0.3 * static_cast<double>(i);
    t.offset_s = t.onset_s + 0.25;
    t.is_content = is_content_pos(t.pos);
    s.tokens.push_back(std::move(t));
  }
  return s;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = nd(rng);
  }
  return m;
}

}  // namespace synsem::test
