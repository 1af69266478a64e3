#include "synsem/simgen.hpp"

#include "synsem/align.hpp"
#include "synsem/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace synsem::sim {
namespace {

// "POS:dep:head" tokens; alternatives for the same POS sequence are
// separated by " | ".
Template make_template(const std::string& spec) {
  Template t;
  std::string alt;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto bar = spec.find(" | ", start);
    alt = spec.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
    std::vector<TemplateToken> parse;
    std::stringstream words(alt);
    std::string w;
    while (words >> w) {
      const auto a = w.find(':');
      const auto b = w.rfind(':');
      parse.push_back({w.substr(0, a), w.substr(a + 1, b - a - 1), std::stoi(w.substr(b + 1))});
    }
    if (t.parses.empty()) {
      for (const auto& tok : parse) t.pos.push_back(tok.pos);
    }
    t.parses.push_back(std::move(parse));
    if (bar == std::string::npos) break;
    start = bar + 3;
  }
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string joined(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

Vector gaussian(std::uint64_t seed, Index n) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

Sentence realize(const Grammar& g, const Template& t, Rng& rng, const std::string& story,
                 int index) {
  Sentence s;
  s.story_id = story;
  s.sentence_index = index;
  for (std::size_t i = 0; i < t.pos.size(); ++i) {
    const auto& words = g.vocabulary.at(t.pos[i]);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    AnnotatedToken tok;
    tok.text = words[pick(rng)];
    tok.pos = t.pos[i];
    tok.dep = t.parses[0][i].dep;
    tok.head = Head::decode(t.parses[0][i].head);
    tok.is_content = is_content_pos(tok.pos);
    s.tokens.push_back(std::move(tok));
  }
  return toy_parse(g, s);
}

std::vector<PhoneEvent> word_phones(const AnnotatedToken& tok) {
  std::vector<char> letters;
  for (char c : tok.text) {
    if (std::isalpha(static_cast<unsigned char>(c))) letters.push_back(c);
  }
  std::vector<PhoneEvent> out;
  if (letters.empty()) return out;
  const double step = (tok.offset_s - tok.onset_s) / static_cast<double>(letters.size());
  bool stressed = false;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(letters[i])));
    const bool vowel = std::string_view("AEIOU").find(c) != std::string_view::npos;
    PhoneEvent p;
    p.label = std::string(1, c);
    p.stress = vowel && !stressed ? "1" : "0";
    stressed = stressed || vowel;
    p.tone = letters.size() == 1 ? "S" : i == 0 ? "B" : i + 1 == letters.size() ? "E" : "I";
    p.onset_s = tok.onset_s + step * static_cast<double>(i);
    p.offset_s = p.onset_s + step;
    out.push_back(std::move(p));
  }
  return out;
}

constexpr std::array<const char*, 3> kPlantedNames = {"syntactic", "lexical", "compositional"};

}  // namespace

// ---------------------------------------------------------------- grammar

const Grammar& default_grammar() {
  static const Grammar g = [] {
    Grammar g;
    for (const char* spec : {
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 PUNCT:punct:2",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 DET:det:4 NOUN:dobj:2 PUNCT:punct:2",
             "DET:det:2 ADJ:amod:2 NOUN:nsubj:3 VERB:ROOT:-1 DET:det:5 NOUN:dobj:3 PUNCT:punct:3",
             "PRON:nsubj:1 VERB:ROOT:-1 DET:det:3 NOUN:dobj:1 PUNCT:punct:1",
             "PRON:nsubj:1 VERB:ROOT:-1 DET:det:3 NOUN:dobj:1 ADP:prep:1 DET:det:6 NOUN:pobj:4 "
             "PUNCT:punct:1 | PRON:nsubj:1 VERB:ROOT:-1 DET:det:3 NOUN:dobj:1 ADP:prep:3 "
             "DET:det:6 NOUN:pobj:4 PUNCT:punct:1",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 DET:det:4 NOUN:dobj:2 ADP:prep:2 DET:det:7 "
             "NOUN:pobj:5 PUNCT:punct:2 | DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 DET:det:4 "
             "NOUN:dobj:2 ADP:prep:4 DET:det:7 NOUN:pobj:5 PUNCT:punct:2",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 ADV:advmod:2 PUNCT:punct:2",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 ADP:prep:2 DET:det:5 NOUN:pobj:3 PUNCT:punct:2",
             "DET:det:2 ADJ:amod:2 NOUN:nsubj:3 VERB:ROOT:-1 ADV:advmod:3 PUNCT:punct:3",
             "PRON:nsubj:1 VERB:ROOT:-1 ADJ:acomp:1 PUNCT:punct:1",
             "DET:det:1 NOUN:nsubj:3 AUX:aux:3 VERB:ROOT:-1 DET:det:5 NOUN:dobj:3 PUNCT:punct:3",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 CCONJ:cc:2 VERB:conj:2 PUNCT:punct:2",
             "DET:det:1 NOUN:nsubj:5 CCONJ:cc:1 DET:det:4 NOUN:conj:1 VERB:ROOT:-1 PUNCT:punct:5",
             "PRON:nsubj:1 VERB:ROOT:-1 DET:det:4 ADJ:amod:4 NOUN:dobj:1 PUNCT:punct:1",
             "DET:det:2 ADJ:amod:2 NOUN:nsubj:3 VERB:ROOT:-1 DET:det:6 ADJ:amod:6 NOUN:dobj:3 "
             "PUNCT:punct:3",
             "ADV:advmod:2 PRON:nsubj:2 VERB:ROOT:-1 DET:det:4 NOUN:dobj:2 PUNCT:punct:2",
             "PRON:nsubj:1 VERB:ROOT:-1 ADP:prep:1 DET:det:4 NOUN:pobj:2 PUNCT:punct:1",
             "DET:det:1 NOUN:nsubj:5 ADP:prep:1 DET:det:4 NOUN:pobj:2 VERB:ROOT:-1 PUNCT:punct:5",
             "PRON:nsubj:2 AUX:aux:2 VERB:ROOT:-1 DET:det:4 NOUN:dobj:2 ADV:advmod:2 PUNCT:punct:2",
             "DET:det:1 NOUN:nsubj:2 VERB:ROOT:-1 DET:det:4 NOUN:dobj:2 ADV:advmod:2 PUNCT:punct:2",
             "DET:det:2 ADJ:amod:2 NOUN:nsubj:3 VERB:ROOT:-1 DET:det:5 NOUN:dobj:3 ADP:prep:3 "
             "DET:det:8 NOUN:pobj:6 PUNCT:punct:3 | DET:det:2 ADJ:amod:2 NOUN:nsubj:3 "
             "VERB:ROOT:-1 DET:det:5 NOUN:dobj:3 ADP:prep:5 DET:det:8 NOUN:pobj:6 PUNCT:punct:3",
         }) {
      g.templates.push_back(make_template(spec));
    }
    g.vocabulary = {
        {"DET", {"the", "a", "this", "that", "every", "some", "each", "my", "your", "his", "her",
                 "our", "their", "one", "no", "any"}},
        {"NOUN", {"dog",    "cat",    "man",    "woman",  "child",  "teacher", "doctor", "bird",
                  "horse",  "farmer", "king",   "queen",  "boy",    "girl",    "friend", "sailor",
                  "house",  "garden", "river",  "forest", "city",   "road",    "table",  "window",
                  "letter", "book",   "song",   "story",  "apple",  "bread",   "stone",  "boat",
                  "train",  "car",    "key",    "door",   "hat",    "coat",    "ball",   "box",
                  "park",   "hill",   "lake",   "field",  "market", "school",  "church", "bridge",
                  "tower",  "lamp",   "chair",  "cup",    "glass",  "ring",    "map",    "coin",
                  "flower", "tree",   "cloud",  "telescope"}},
        {"VERB", {"sees",    "finds",   "likes",  "takes",   "holds",  "watches", "follows",
                  "carries", "paints",  "builds", "opens",   "closes", "visits",  "leaves",
                  "calls",   "helps",   "meets",  "sells",   "buys",   "brings",  "moves",
                  "breaks",  "cleans",  "draws",  "reads",   "writes", "keeps",   "loses",
                  "wants",   "hears",   "knows",  "loves",   "hides",  "pulls",   "pushes",
                  "throws",  "catches", "fixes",  "sleeps",  "waits"}},
        {"ADJ", {"old",   "young", "small", "big",   "red",   "green", "happy", "sad",
                 "quiet", "loud",  "dark",  "bright", "cold", "warm",  "tall",  "short",
                 "new",   "strange", "gentle", "brave", "tired", "clever", "heavy", "empty",
                 "busy",  "proud",  "calm",  "lucky", "wild",  "kind"}},
        {"PRON", {"she", "he", "they", "we", "i", "you"}},
        {"ADP", {"in", "on", "with", "near", "under", "behind", "from", "at"}},
        {"ADV", {"quickly", "slowly", "often", "rarely", "again", "today", "soon", "here",
                 "there", "always", "never", "later"}},
        {"AUX", {"will", "can", "must", "should", "may", "might"}},
        {"CCONJ", {"and", "or", "but"}},
        {"PUNCT", {"."}},
    };
    return g;
  }();
  return g;
}

Sentence toy_parse(const Grammar& g, const Sentence& s) {
  const auto pos = s.pos_sequence();
  for (const auto& t : g.templates) {
    if (t.pos != pos) continue;
    std::vector<std::string> words;
    for (const auto& tok : s.tokens) words.push_back(lower(tok.text));
    const auto& parse = t.parses[fnv1a(joined(words)) % t.parses.size()];
    Sentence out = s;
    for (std::size_t i = 0; i < parse.size(); ++i) {
      out.tokens[i].dep = parse[i].dep;
      out.tokens[i].head = Head::decode(parse[i].head);
    }
    return out;
  }
  return s;
}

std::vector<Sentence> gen_corpus(std::uint64_t seed, int n_sentences, const Grammar& g) {
  Rng rng(derive_seed(seed, "corpus"));
  std::uniform_int_distribution<std::size_t> pick(0, g.templates.size() - 1);
  std::vector<Sentence> out;
  for (int i = 0; i < n_sentences; ++i) {
    Sentence s = realize(g, g.templates[pick(rng)], rng, "corpus", i);
    for (std::size_t j = 0; j < s.tokens.size(); ++j) {
      s.tokens[j].onset_s = static_cast<double>(j) / 3.0;
      s.tokens[j].offset_s = s.tokens[j].onset_s + 0.3;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Transcript gen_story(std::uint64_t seed, const std::string& story_id, int n_trs,
                     const StoryConfig& cfg, const Grammar& g) {
  if (n_trs < 1) throw std::invalid_argument("gen_story: n_trs must be >= 1");
  Rng rng(derive_seed(seed, "story/" + story_id));
  std::uniform_int_distribution<std::size_t> pick(0, g.templates.size() - 1);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  Transcript t;
  t.story_id = story_id;
  const double end = cfg.tr * n_trs - 1.0;
  double clock = 0.5;
  for (int i = 0; clock < end; ++i) {
    Sentence s = realize(g, g.templates[pick(rng)], rng, story_id, i);
    for (auto& tok : s.tokens) {
      const double dur = jitter(rng) / cfg.words_per_s;
      tok.onset_s = clock;
      tok.offset_s = clock + 0.9 * dur;
      clock += dur;
      auto phones = word_phones(tok);
      t.phones.insert(t.phones.end(), phones.begin(), phones.end());
    }
    clock += cfg.sentence_gap_s;
    t.sentences.push_back(std::move(s));
  }
  for (int i = 0; i < n_trs; ++i) t.tr_times.push_back(cfg.tr * (i + 1));
  return t;
}

// --------------------------------------------------------------- provider

nlohmann::json ProviderSpec::to_json() const {
  return {{"d", d},         {"syn_dim", syn_dim}, {"lex_dim", lex_dim}, {"ctx_dim", ctx_dim},
          {"sigma", sigma}, {"layers", layers},   {"seed", seed}};
}

ProviderSpec ProviderSpec::from_json(const nlohmann::json& j) {
  ProviderSpec s;
  s.d = j.value("d", s.d);
  s.syn_dim = j.value("syn_dim", s.syn_dim);
  s.lex_dim = j.value("lex_dim", s.lex_dim);
  s.ctx_dim = j.value("ctx_dim", s.ctx_dim);
  s.sigma = j.value("sigma", s.sigma);
  s.layers = j.value("layers", s.layers);
  s.seed = j.value("seed", s.seed);
  return s;
}

SimProvider::SimProvider(const ProviderSpec& spec, const Grammar& g) : spec_(spec) {
  const int k = spec.syn_dim + spec.lex_dim + spec.ctx_dim;
  if (spec.syn_dim < 1 || spec.lex_dim < 1 || spec.ctx_dim < 1 || k > spec.d) {
    throw std::invalid_argument("provider subspaces must be nonempty and fit in d");
  }
  if (spec.layers < 1 || !(spec.sigma >= 0.0)) {
    throw std::invalid_argument("provider needs at least one layer and sigma >= 0");
  }
  Matrix raw(spec.d, k);
  Rng rng(derive_seed(spec.seed, "bases"));
  std::normal_distribution<double> nd;
  for (Index i = 0; i < raw.size(); ++i) raw.data()[i] = nd(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(spec.d, k);
  b_syn_ = q.leftCols(spec.syn_dim);
  b_lex_ = q.middleCols(spec.syn_dim, spec.lex_dim);
  b_ctx_ = q.rightCols(spec.ctx_dim);

  for (const auto& [pos, words] : g.vocabulary) {
    Vector psi = Vector::Zero(spec.ctx_dim);
    Vector chi = Vector::Zero(spec.ctx_dim);
    for (const auto& w : words) {
      psi += code("psi", w, spec.ctx_dim);
      chi += code("chi", w, spec.ctx_dim);
      pos_of_word_.try_emplace(w, pos);
    }
    psi_mean_[pos] = psi / static_cast<double>(words.size());
    chi_mean_[pos] = chi / static_cast<double>(words.size());
  }
}

Vector SimProvider::code(const char* kind, const std::string& key, int dim) const {
  return gaussian(derive_seed(derive_seed(spec_.seed, kind), key), dim);
}

Vector SimProvider::centred(const char* kind, const std::string& word,
                            const std::string& pos) const {
  Vector v = code(kind, word, spec_.ctx_dim);
  auto it = pos_of_word_.find(word);
  if (it != pos_of_word_.end() && it->second == pos) {
    v -= (std::string_view(kind) == "psi" ? psi_mean_ : chi_mean_).at(pos);
  }
  return v;
}

Vector SimProvider::lexical_code(const std::string& word) const {
  return code("lex", lower(word), spec_.lex_dim);
}

Vector SimProvider::tag_code(const std::string& pos, const std::string& dep) const {
  return code("tag", pos + "/" + dep, spec_.syn_dim);
}

Components SimProvider::components(const Sentence& s) const {
  const auto m = static_cast<Index>(s.size());
  Components c;
  c.syn.resize(m, spec_.syn_dim);
  c.lex.resize(m, spec_.lex_dim);
  c.ctx = Matrix::Zero(m, spec_.ctx_dim);
  const double norm = 1.0 / std::sqrt(3.0);
  for (Index i = 0; i < m; ++i) {
    const auto& tok = s.tokens[static_cast<std::size_t>(i)];
    const std::string tag = tok.pos + "/" + tok.dep;
    const std::string prev =
        i == 0 ? "<s>" : s.tokens[static_cast<std::size_t>(i - 1)].pos + "/" +
                             s.tokens[static_cast<std::size_t>(i - 1)].dep;
    c.syn.row(i) = (tag_code(tok.pos, tok.dep) + code("tagpair", prev + ">" + tag, spec_.syn_dim) +
                    code("position", std::to_string(i), spec_.syn_dim))
                       .transpose() *
                   norm;
    c.lex.row(i) = lexical_code(tok.text).transpose();
    if (i > 0) {
      const auto& p = s.tokens[static_cast<std::size_t>(i - 1)];
      c.ctx.row(i) =
          centred("psi", lower(p.text), p.pos).cwiseProduct(centred("chi", lower(tok.text), tok.pos)).transpose();
    }
  }
  return c;
}

Matrix SimProvider::activations(const Sentence& s, int layer) const {
  if (layer < 0 || layer >= spec_.layers) throw std::out_of_range("layer outside provider range");
  const auto c = components(s);
  Matrix a = c.lex * b_lex_.transpose();
  if (layer > 0) {
    a.noalias() += c.syn * b_syn_.transpose();
    a.noalias() += c.ctx * b_ctx_.transpose();
  }
  if (spec_.sigma > 0.0) {
    const std::string text = s.text();
    for (Index i = 0; i < a.rows(); ++i) {
      const auto& tok = s.tokens[static_cast<std::size_t>(i)];
      const Vector noise =
          layer == 0 ? code("noise/0", lower(tok.text), spec_.d)
                     : code(("noise/" + std::to_string(layer)).c_str(),
                            text + "#" + std::to_string(i), spec_.d);
      a.row(i) += spec_.sigma * noise.transpose();
    }
  }
  return a;
}

// ---------------------------------------------------------------- signals

const char* to_string(Planted p) { return kPlantedNames[static_cast<std::size_t>(p)]; }

Planted planted_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kPlantedNames.size(); ++i) {
    if (s == kPlantedNames[i]) return static_cast<Planted>(i);
  }
  throw ValidationError("unknown planted component '" + s + "'");
}

SignalConfig SignalConfig::uniform(Index targets, std::span<const Planted> drivers, double snr,
                                   std::uint64_t seed, int lags) {
  SignalConfig cfg;
  cfg.mask = Matrix::Zero(targets, 3);
  for (auto p : drivers) cfg.mask.col(static_cast<int>(p)).setOnes();
  cfg.snr = snr;
  cfg.seed = seed;
  cfg.lags = lags;
  return cfg;
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json mask = nlohmann::json::array();
  for (Index v = 0; v < config.mask.rows(); ++v) {
    mask.push_back({config.mask(v, 0), config.mask(v, 1), config.mask(v, 2)});
  }
  nlohmann::json j = {{"version", 1},
                      {"provider", provider.to_json()},
                      {"seed", config.seed},
                      {"lags", config.lags},
                      {"mask_columns", {"syntactic", "lexical", "compositional"}},
                      {"mask", mask},
                      {"stories", stories},
                      {"signal_variance", signal_variance},
                      {"noise_variance", noise_variance}};
  j["snr"] = std::isinf(config.snr) ? nlohmann::json(nullptr) : nlohmann::json(config.snr);
  return j;
}

GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
  try {
    GroundTruth t;
    t.provider = ProviderSpec::from_json(j.at("provider"));
    t.config.seed = j.at("seed").get<std::uint64_t>();
    t.config.lags = j.at("lags").get<int>();
    t.config.snr = j.at("snr").is_null() ? std::numeric_limits<double>::infinity()
                                          : j.at("snr").get<double>();
    const auto& mask = j.at("mask");
    t.config.mask.resize(static_cast<Index>(mask.size()), 3);
    for (std::size_t v = 0; v < mask.size(); ++v) {
      for (int c = 0; c < 3; ++c) t.config.mask(static_cast<Index>(v), c) = mask[v].at(c).get<double>();
    }
    t.stories = j.at("stories").get<std::vector<std::string>>();
    t.signal_variance = j.at("signal_variance").get<std::vector<double>>();
    t.noise_variance = j.at("noise_variance").get<std::vector<double>>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ground-truth record: ") + e.what());
  }
}

SimSignals gen_signals(const SimProvider& provider, std::span<const Transcript> transcripts,
                       const SignalConfig& cfg) {
  if (cfg.mask.cols() != 3 || cfg.mask.rows() < 1) {
    throw std::invalid_argument("signal mask must be targets x 3");
  }
  if (!(cfg.snr > 0.0)) throw std::invalid_argument("snr must be positive");
  const Index targets = cfg.mask.rows();
  const auto& spec = provider.spec();
  const std::array<int, 3> dims = {spec.syn_dim, spec.lex_dim, spec.ctx_dim};

  std::array<Matrix, 3> weights;
  for (int c = 0; c < 3; ++c) {
    const Index rows = static_cast<Index>(cfg.lags) * dims[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(cfg.seed, std::string("weights/") + kPlantedNames[static_cast<std::size_t>(c)]));
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
    weights[static_cast<std::size_t>(c)].resize(rows, targets);
    auto& w = weights[static_cast<std::size_t>(c)];
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
    for (Index v = 0; v < targets; ++v) w.col(v) *= cfg.mask(v, c);
  }

  SimSignals out;
  out.truth.provider = spec;
  out.truth.config = cfg;
  std::vector<Matrix> clean;
  for (const auto& t : transcripts) {
    out.truth.stories.push_back(t.story_id);
    std::array<std::vector<Matrix>, 3> blocks;
    for (const auto& s : t.sentences) {
      auto comp = provider.components(s);
      blocks[0].push_back(std::move(comp.syn));
      blocks[1].push_back(std::move(comp.lex));
      blocks[2].push_back(std::move(comp.ctx));
    }
    const auto onsets = t.word_onsets();
    Matrix y = Matrix::Zero(static_cast<Index>(t.tr_times.size()), targets);
    for (int c = 0; c < 3; ++c) {
      if (cfg.mask.col(c).isZero(0.0)) continue;
      Matrix feats(static_cast<Index>(onsets.size()), dims[static_cast<std::size_t>(c)]);
      Index r = 0;
      for (const auto& b : blocks[static_cast<std::size_t>(c)]) {
        feats.middleRows(r, b.rows()) = b;
        r += b.rows();
      }
      const auto design = align_events(feats, onsets, t.tr_times, cfg.lags);
      y.noalias() += design.matrix * weights[static_cast<std::size_t>(c)];
    }
    clean.push_back(std::move(y));
  }

  Index total = 0;
  for (const auto& y : clean) total += y.rows();
  auto column_variance = [&](const std::vector<Matrix>& parts, Index v) {
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& p : parts) {
      sum += p.col(v).sum();
      sq += p.col(v).squaredNorm();
    }
    const double mean = sum / static_cast<double>(total);
    return std::max(0.0, sq / static_cast<double>(total) - mean * mean);
  };

  std::vector<Matrix> noise;
  if (std::isfinite(cfg.snr)) {
    Rng rng(derive_seed(cfg.seed, "noise"));
    std::normal_distribution<double> nd;
    for (const auto& y : clean) {
      Matrix e(y.rows(), y.cols());
      for (Index r = 0; r < e.rows(); ++r) {
        for (Index v = 0; v < e.cols(); ++v) e(r, v) = nd(rng);
      }
      noise.push_back(std::move(e));
    }
  }
  for (Index v = 0; v < targets; ++v) {
    const double vs = column_variance(clean, v);
    out.truth.signal_variance.push_back(vs);
    double vn = 0.0;
    if (!noise.empty()) {
      // Targets without a planted component carry unit-variance noise.
      vn = vs > 0.0 ? vs / cfg.snr : 1.0;
      const double ve = column_variance(noise, v);
      const double scale = ve > 0.0 ? std::sqrt(vn / ve) : 0.0;
      for (auto& e : noise) e.col(v) *= scale;
    }
    out.truth.noise_variance.push_back(vn);
  }
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    SignalBundle b;
    b.matrix = noise.empty() ? std::move(clean[i]) : Matrix(clean[i] + noise[i]);
    b.tr_times = transcripts[i].tr_times;
    b.subject_ids = {"sim"};
    b.story_id = transcripts[i].story_id;
    out.stories.push_back(std::move(b));
  }
  return out;
}

// ------------------------------------------------------------------ probes

std::vector<ProbeFeature> planted_probe_features(const SimProvider& provider,
                                                 std::span<const Transcript> transcripts,
                                                 const Lexicon& lexicon, std::uint64_t seed) {
  const auto& spec = provider.spec();
  Vector u_sem = gaussian(derive_seed(seed, "probe/semantic"), spec.lex_dim);
  Vector u_syn = gaussian(derive_seed(seed, "probe/syntactic"), spec.syn_dim);
  u_sem.normalize();
  u_syn.normalize();

  std::map<std::pair<std::string, std::string>, double> class_mean;
  ProbeFeature sem{"semantic", ProbeKind::continuous, {}, {}, {}, {}};
  ProbeFeature syn{"syntactic", ProbeKind::continuous, {}, {}, {}, {}};
  std::vector<double> sem_v;
  std::vector<double> syn_v;
  Index row = 0;
  for (const auto& t : transcripts) {
    for (const auto& s : t.sentences) {
      const auto comp = provider.components(s);
      for (std::size_t i = 0; i < s.tokens.size(); ++i, ++row) {
        const auto& tok = s.tokens[i];
        const auto key = std::make_pair(tok.pos, tok.dep);
        auto it = class_mean.find(key);
        if (it == class_mean.end()) {
          double mean = 0.0;
          const auto words = lexicon.by_tags(tok.pos, tok.dep);
          for (const auto& w : words) mean += u_sem.dot(provider.lexical_code(w.word));
          it = class_mean.emplace(key, words.empty() ? 0.0 : mean / static_cast<double>(words.size())).first;
        }
        sem.rows.push_back(row);
        syn.rows.push_back(row);
        sem_v.push_back(u_sem.dot(comp.lex.row(static_cast<Index>(i)).transpose()) - it->second);
        syn_v.push_back(u_syn.dot(comp.syn.row(static_cast<Index>(i)).transpose()));
      }
    }
  }
  sem.values = Eigen::Map<const Vector>(sem_v.data(), static_cast<Index>(sem_v.size()));
  syn.values = Eigen::Map<const Vector>(syn_v.data(), static_cast<Index>(syn_v.size()));
  return {std::move(sem), std::move(syn)};
}

}  // namespace synsem::sim
