#include "synsem/transcript.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace synsem {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path.string(), path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  return out;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number()) throw ValidationError(where + ": field '" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where + ": field '" + key + "' is not finite");
  return d;
}

std::string text_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError(where + ": field '" + key + "' must be a string");
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace

Head Head::decode(long long encoded) {
  if (encoded == -1) return root();
  if (encoded < 0 || encoded > std::numeric_limits<int>::max()) {
    throw ValidationError("invalid head index " + std::to_string(encoded));
  }
  return token(static_cast<int>(encoded));
}

int Head::index() const {
  if (is_root()) throw std::logic_error("ROOT head has no token index");
  return index_;
}

std::vector<std::string> Sentence::pos_sequence() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.pos);
  return out;
}

std::vector<int> Sentence::heads() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.head.encoded());
  return out;
}

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

std::size_t Transcript::word_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<double> Transcript::word_onsets() const {
  std::vector<double> out;
  out.reserve(word_count());
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) out.push_back(t.onset_s);
  }
  return out;
}

std::vector<const AnnotatedToken*> Transcript::words() const {
  std::vector<const AnnotatedToken*> out;
  out.reserve(word_count());
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) out.push_back(&t);
  }
  return out;
}

bool is_content_pos(const std::string& pos) {
  return pos == "NOUN" || pos == "VERB" || pos == "ADJ";
}

void validate_sentence(const Sentence& s) {
  const std::string where =
      "sentence " + s.story_id + "/" + std::to_string(s.sentence_index);
  const auto m = static_cast<int>(s.tokens.size());
  if (m == 0) throw ValidationError(where + ": no tokens");
  for (int i = 0; i < m; ++i) {
    const auto& t = s.tokens[i];
    if (!std::isfinite(t.onset_s) || !std::isfinite(t.offset_s)) {
      throw ValidationError(where + ": non-finite timing at token " + std::to_string(i));
    }
    if (t.onset_s > t.offset_s) {
      throw ValidationError(where + ": onset after offset at token " + std::to_string(i));
    }
    if (i > 0 && t.onset_s < s.tokens[i - 1].onset_s) {
      throw ValidationError(where + ": token onsets decrease at token " + std::to_string(i));
    }
    if (!t.head.is_root()) {
      const int h = t.head.index();
      if (h >= m) {
        throw ValidationError(where + ": head " + std::to_string(h) + " out of range at token " +
                              std::to_string(i));
      }
      if (h == i) throw ValidationError(where + ": token " + std::to_string(i) + " heads itself");
    }
  }
  // Every chain of heads must reach ROOT within m steps.
  for (int i = 0; i < m; ++i) {
    Head h = s.tokens[i].head;
    int steps = 0;
    while (!h.is_root()) {
      if (++steps > m) {
        throw ValidationError(where + ": dependency cycle through token " + std::to_string(i));
      }
      h = s.tokens[h.index()].head;
    }
  }
}

void validate_transcript(const Transcript& t) {
  if (t.tr_times.empty()) throw ValidationError("story " + t.story_id + ": empty tr_times");
  for (std::size_t i = 0; i < t.tr_times.size(); ++i) {
    if (!std::isfinite(t.tr_times[i])) {
      throw ValidationError("story " + t.story_id + ": non-finite tr_time");
    }
    if (i > 0 && !(t.tr_times[i] > t.tr_times[i - 1])) {
      throw ValidationError("story " + t.story_id + ": tr_times not strictly increasing at " +
                            std::to_string(i));
    }
  }
  for (std::size_t i = 1; i < t.phones.size(); ++i) {
    if (t.phones[i].onset_s < t.phones[i - 1].onset_s) {
      throw ValidationError("story " + t.story_id + ": phone onsets decrease at " +
                            std::to_string(i));
    }
  }
  for (const auto& p : t.phones) {
    if (!std::isfinite(p.onset_s) || !std::isfinite(p.offset_s) || p.onset_s > p.offset_s) {
      throw ValidationError("story " + t.story_id + ": invalid phone timing");
    }
  }
  for (const auto& s : t.sentences) {
    if (s.story_id != t.story_id) {
      throw ValidationError("sentence story '" + s.story_id + "' does not match story '" +
                            t.story_id + "'");
    }
    validate_sentence(s);
  }
}

Sentence parse_sentence_line(const std::string& line, const std::string& where) {
  const json obj = parse_json(line, where);
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  Sentence s;
  s.story_id = text_field(obj, "story", where);
  const auto& idx = field(obj, "sent_index", where);
  if (!idx.is_number_integer()) throw ValidationError(where + ": sent_index must be an integer");
  s.sentence_index = idx.get<int>();
  const auto& toks = field(obj, "tokens", where);
  if (!toks.is_array()) throw ValidationError(where + ": tokens must be an array");
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& tj = toks[i];
    const std::string tw = where + " token " + std::to_string(i);
    if (!tj.is_object()) throw ValidationError(tw + ": expected an object");
    AnnotatedToken t;
    t.text = text_field(tj, "text", tw);
    t.pos = text_field(tj, "pos", tw);
    t.dep = text_field(tj, "dep", tw);
    const auto& hj = field(tj, "head", tw);
    if (!hj.is_number_integer()) throw ValidationError(tw + ": head must be an integer");
    t.head = Head::decode(hj.get<long long>());
    t.onset_s = number(tj, "onset", tw);
    t.offset_s = number(tj, "offset", tw);
    if (auto it = tj.find("is_content"); it != tj.end()) {
      if (!it->is_boolean()) throw ValidationError(tw + ": is_content must be a boolean");
      t.is_content = it->get<bool>();
    } else {
      t.is_content = is_content_pos(t.pos);
    }
    s.tokens.push_back(std::move(t));
  }
  return s;
}

std::string sentence_to_json_line(const Sentence& s) {
  json toks = json::array();
  for (const auto& t : s.tokens) {
    toks.push_back({{"text", t.text},
                    {"pos", t.pos},
                    {"dep", t.dep},
                    {"head", t.head.encoded()},
                    {"onset", t.onset_s},
                    {"offset", t.offset_s},
                    {"is_content", t.is_content}});
  }
  json obj = {{"story", s.story_id}, {"sent_index", s.sentence_index}, {"tokens", toks}};
  return obj.dump();
}

std::vector<Sentence> load_sentences(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Sentence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Sentence s = parse_sentence_line(line, path.string() + ":" + std::to_string(lineno));
    validate_sentence(s);
    out.push_back(std::move(s));
  }
  return out;
}

Transcript load_transcript(const TranscriptFiles& files) {
  Transcript t;
  {
    auto in = open_input(files.meta);
    std::stringstream ss;
    ss << in.rdbuf();
    const json meta = parse_json(ss.str(), files.meta.string());
    const std::string where = files.meta.string();
    if (!meta.is_object()) throw ValidationError(where + ": expected an object");
    t.story_id = text_field(meta, "story", where);
    const auto& trs = field(meta, "tr_times", where);
    if (!trs.is_array()) throw ValidationError(where + ": tr_times must be an array");
    for (const auto& v : trs) {
      if (!v.is_number()) throw ValidationError(where + ": tr_times must hold numbers");
      t.tr_times.push_back(v.get<double>());
    }
  }
  {
    auto in = open_input(files.sentences);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      t.sentences.push_back(
          parse_sentence_line(line, files.sentences.string() + ":" + std::to_string(lineno)));
    }
  }
  if (files.phones) {
    auto in = open_input(*files.phones);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = files.phones->string() + ":" + std::to_string(lineno);
      const json obj = parse_json(line, where);
      if (!obj.is_object()) throw ValidationError(where + ": expected an object");
      PhoneEvent p;
      p.label = text_field(obj, "label", where);
      p.stress = text_field(obj, "stress", where);
      p.tone = text_field(obj, "tone", where);
      p.onset_s = number(obj, "onset", where);
      p.offset_s = number(obj, "offset", where);
      t.phones.push_back(std::move(p));
    }
  }
  validate_transcript(t);
  return t;
}

void write_sentences(const std::filesystem::path& path, const std::vector<Sentence>& sentences) {
  auto out = open_output(path);
  for (const auto& s : sentences) out << sentence_to_json_line(s) << '\n';
}

void write_phones(const std::filesystem::path& path, const std::vector<PhoneEvent>& phones) {
  auto out = open_output(path);
  for (const auto& p : phones) {
    json obj = {{"label", p.label},
                {"stress", p.stress},
                {"tone", p.tone},
                {"onset", p.onset_s},
                {"offset", p.offset_s}};
    out << obj.dump() << '\n';
  }
}

void write_story_meta(const std::filesystem::path& path, const Transcript& t) {
  auto out = open_output(path);
  json obj = {{"story", t.story_id}, {"tr_times", t.tr_times}};
  out << obj.dump() << '\n';
}

}  // namespace synsem
