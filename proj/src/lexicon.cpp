#include "synsem/lexicon.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace synsem {

void Lexicon::insert(std::vector<WordCount>& list, const std::string& word, double frequency) {
  auto it = std::lower_bound(list.begin(), list.end(), word,
                             [](const WordCount& w, const std::string& key) { return w.word < key; });
  if (it != list.end() && it->word == word) {
    it->frequency += frequency;
  } else {
    list.insert(it, WordCount{word, frequency});
  }
}

void Lexicon::add(const std::string& pos, const std::string& dep, const std::string& word,
                  double frequency) {
  if (!(frequency > 0.0) || !std::isfinite(frequency)) {
    throw ValidationError("lexicon frequency must be positive and finite");
  }
  insert(by_tags_[{pos, dep}], word, frequency);
  insert(by_pos_[pos], word, frequency);
}

Lexicon Lexicon::build(std::span<const Sentence> corpus) {
  Lexicon lex;
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) lex.add(t.pos, t.dep, t.text);
  }
  return lex;
}

std::span<const WordCount> Lexicon::by_tags(const std::string& pos, const std::string& dep) const {
  auto it = by_tags_.find({pos, dep});
  if (it == by_tags_.end()) return {};
  return it->second;
}

std::span<const WordCount> Lexicon::by_pos(const std::string& pos) const {
  auto it = by_pos_.find(pos);
  if (it == by_pos_.end()) return {};
  return it->second;
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  for (const auto& [key, words] : by_tags_) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& w : words) list.push_back({{"w", w.word}, {"f", w.frequency}});
    out << nlohmann::json{{"pos", key.first}, {"dep", key.second}, {"words", list}}.dump() << '\n';
  }
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon: " + path.string(), path.string());
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    try {
      const auto pos = obj.at("pos").get<std::string>();
      const auto dep = obj.at("dep").get<std::string>();
      for (const auto& w : obj.at("words")) {
        lex.add(pos, dep, w.at("w").get<std::string>(), w.at("f").get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return lex;
}

}  // namespace synsem
