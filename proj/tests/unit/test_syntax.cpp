#include "support.hpp"

#include "synsem/dependency_tree.hpp"
#include "synsem/embedding.hpp"
#include "synsem/lexicon.hpp"
#include "synsem/random.hpp"
#include "synsem/synthesis.hpp"
#include "synsem/tensor.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace synsem;
using synsem::test::make_sentence;
using synsem::test::TempDir;

namespace {

/// Activations looked up by sentence text.
class MapProvider final : public EmbeddingProvider {
 public:
  std::map<std::string, Matrix> table;
  Index d = 2;
  int layer_count() const override { return 1; }
  Index dim() const override { return d; }
  Matrix activations(const Sentence& s, int) const override { return table.at(s.text()); }
};

/// psi (fixed per length) plus i.i.d. N(0, sigma^2) keyed by the sentence text.
class NoisyProvider final : public EmbeddingProvider {
 public:
  NoisyProvider(Matrix psi, double sigma) : psi_(std::move(psi)), sigma_(sigma) {}
  int layer_count() const override { return 1; }
  Index dim() const override { return psi_.cols(); }
  Matrix activations(const Sentence& s, int) const override {
    Rng rng(fnv1a(s.text()));
    std::normal_distribution<double> nd(0.0, sigma_);
    Matrix out = psi_;
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) out(r, c) += nd(rng);
    }
    return out;
  }
  const Matrix& psi() const { return psi_; }

 private:
  Matrix psi_;
  double sigma_;
};

Sentence words(const Sentence& s, const std::vector<std::string>& w) {
  Sentence out = s;
  for (std::size_t i = 0; i < w.size(); ++i) out.tokens[i].text = w[i];
  return out;
}

/// Random valid tree: every token except 0 attaches to an earlier token.
std::vector<int> random_heads(int m, std::mt19937_64& rng) {
  std::vector<int> h(static_cast<std::size_t>(m), -1);
  for (int i = 1; i < m; ++i) h[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, i - 1)(rng);
  return h;
}

VariantSet numbered_set(int k, int m) {
  const std::vector<std::string> pos(static_cast<std::size_t>(m), "NOUN");
  std::vector<int> heads(static_cast<std::size_t>(m), 0);
  heads[0] = -1;
  VariantSet set;
  set.target = make_sentence(pos, heads);
  for (int v = 0; v < k; ++v) {
    std::vector<std::string> w;
    for (int i = 0; i < m; ++i) w.push_back("v" + std::to_string(v) + "_" + std::to_string(i));
    set.variants.push_back(words(set.target, w));
    set.similarities.push_back(1.0);
  }
  return set;
}

}  // namespace

TEST_SUITE("syntax-synth") {

TEST_CASE("pairwise distances on a 3-chain rooted in the middle") {
  const auto s = make_sentence({"A", "B", "C"}, {1, -1, 1});
  const Matrix d = tree_pairwise_distances(s);
  CHECK(d(0, 1) == 1);
  CHECK(d(1, 2) == 1);
  CHECK(d(0, 2) == 2);
  CHECK(d == d.transpose());
  for (Index i = 0; i < 3; ++i) CHECK(d(i, i) == 0);
}

TEST_CASE("head cycles are rejected") {
  const std::vector<int> cycle = {1, 2, 0};
  CHECK_THROWS_AS(validate_heads(cycle), ValidationError);
  const std::vector<int> self = {-1, 1};
  CHECK_THROWS_AS(validate_heads(self), ValidationError);
  auto s = make_sentence({"A", "B", "C"}, {1, -1, 1});
  s.tokens[1].head = Head::token(0);
  s.tokens[0].head = Head::token(1);
  CHECK_THROWS_AS(tree_pairwise_distances(s), ValidationError);
}

TEST_CASE("tree depths count arcs to the root") {
  const auto s = make_sentence({"A", "B", "C", "D"}, {1, -1, 1, 2});
  CHECK(tree_depths(s) == std::vector<int>{1, 0, 1, 2});
}

TEST_CASE("tree similarity examples") {
  const auto chain = make_sentence({"A", "A", "A", "A"}, {-1, 0, 1, 2});
  const auto star = make_sentence({"A", "A", "A", "A"}, {-1, 0, 0, 0});
  CHECK(*tree_similarity(chain, chain) == doctest::Approx(1.0));
  CHECK(*tree_similarity(chain, star) == doctest::Approx(-0.4472135955).epsilon(1e-9));
  const auto two = make_sentence({"A", "A"}, {-1, 0});
  CHECK_FALSE(tree_similarity(two, two).has_value());
  // A 3-token chain has distances [1, 2, 1]; a 3-token star rooted at 0 has [1, 1, 2].
  const auto c3 = make_sentence({"A", "A", "A"}, {-1, 0, 1});
  CHECK(tree_similarity(c3, c3).has_value());
  CHECK_THROWS(tree_similarity(chain, c3));
}

TEST_CASE("tree similarity is symmetric") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const int m = std::uniform_int_distribution<int>(3, 9)(rng);
    const std::vector<std::string> pos(static_cast<std::size_t>(m), "X");
    const auto a = make_sentence(pos, random_heads(m, rng));
    const auto b = make_sentence(pos, random_heads(m, rng));
    const auto ab = tree_similarity(a, b);
    const auto ba = tree_similarity(b, a);
    REQUIRE(ab.has_value() == ba.has_value());
    if (ab) CHECK(*ab == doctest::Approx(*ba).epsilon(1e-14));
  }
}

TEST_CASE("lexicon construction") {
  const auto s1 = make_sentence({"NOUN"}, {-1}, {"cat"});
  auto s2 = make_sentence({"NOUN"}, {-1}, {"dog"});
  std::vector<Sentence> corpus = {s1, s2};
  for (auto& s : corpus) s.tokens[0].dep = "nsubj";
  const auto lex = Lexicon::build(corpus);
  const auto nouns = lex.by_tags("NOUN", "nsubj");
  REQUIRE(nouns.size() == 2);
  CHECK(nouns[0].word == "cat");
  CHECK(nouns[1].word == "dog");
  CHECK(lex.by_pos("NOUN").size() == 2);
  CHECK(lex.by_tags("NOUN", "obj").empty());
  CHECK(Lexicon::build(std::vector<Sentence>{}).empty());
}

TEST_CASE("every corpus word is retrievable by its own tags; save/load round trip") {
  std::mt19937_64 rng(12);
  std::vector<Sentence> corpus;
  const std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "DET"};
  for (int i = 0; i < 40; ++i) {
    const int m = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<std::string> pos, w;
    for (int k = 0; k < m; ++k) {
      pos.push_back(tags[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]);
      w.push_back("w" + std::to_string(std::uniform_int_distribution<int>(0, 30)(rng)));
    }
    corpus.push_back(make_sentence(pos, random_heads(m, rng), w));
  }
  const auto lex = Lexicon::build(corpus);
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) {
      const auto list = lex.by_tags(t.pos, t.dep);
      CHECK(std::any_of(list.begin(), list.end(), [&](const WordCount& w) { return w.word == t.text; }));
      for (const auto& w : lex.by_pos(t.pos)) CHECK(w.frequency > 0.0);
    }
  }
  TempDir dir;
  lex.save(dir / "lex.jsonl");
  CHECK(Lexicon::load(dir / "lex.jsonl") == lex);
}

TEST_CASE("synthesized words come from the matching tags, with POS backoff and copy") {
  Lexicon lex;
  lex.add("NOUN", "nsubj", "cat");
  lex.add("NOUN", "nsubj", "dog");
  lex.add("VERB", "root", "runs");
  auto target = make_sentence({"NOUN", "VERB", "NOUN", "ADV"}, {1, -1, 1, 1},
                              {"bird", "sings", "song", "loudly"});
  target.tokens[0].dep = "nsubj";
  target.tokens[2].dep = "obj";
  target.tokens[3].dep = "advmod";
  const auto cands = synthesize_variants(target, lex, 50, 1);
  REQUIRE(cands.size() == 50);
  for (const auto& c : cands) {
    REQUIRE(c.sentence.size() == target.size());
    CHECK(c.sentence.pos_sequence() == target.pos_sequence());
    CHECK(c.sentence.heads() == target.heads());
    const auto& w0 = c.sentence.tokens[0].text;
    CHECK((w0 == "cat" || w0 == "dog"));
    CHECK(c.sentence.tokens[1].text == "runs");
    const auto& w2 = c.sentence.tokens[2].text;  // (NOUN, obj) missing: POS backoff
    CHECK((w2 == "cat" || w2 == "dog"));
    CHECK(c.pos_backoffs == 1);
    CHECK(c.sentence.tokens[3].text == "loudly");  // no ADV at all: copied
    CHECK(c.copied_target);
  }
  CHECK(synthesize_variants(target, lex, 3, 1).size() == 3);
  const auto a = synthesize_variants(target, lex, 10, 77);
  const auto b = synthesize_variants(target, lex, 10, 77);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].sentence == b[i].sentence);
}

TEST_CASE("selection excludes the target and wrong lengths, keeps the best k in order") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> pos(6, "NOUN");
  const auto target = make_sentence(pos, {-1, 0, 1, 2, 3, 4}, {"a", "b", "c", "d", "e", "f"});
  std::vector<Sentence> cands;
  cands.push_back(target);                                                  // equal to the target
  cands.push_back(make_sentence({"NOUN", "NOUN", "NOUN"}, {-1, 0, 1}));      // wrong length
  auto wrong_pos = words(target, {"x", "y", "z", "u", "v", "w"});
  wrong_pos.tokens[2].pos = "VERB";
  cands.push_back(wrong_pos);                                               // wrong POS sequence
  std::vector<std::pair<double, std::string>> expected;
  for (int i = 0; i < 12; ++i) {
    auto c = make_sentence(pos, random_heads(6, rng),
                           {"n" + std::to_string(i), "b", "c", "d", "e", "f"});
    const auto sim = tree_similarity(target, c);
    if (!sim) {
      --i;
      continue;
    }
    expected.emplace_back(*sim, c.text());
    cands.push_back(c);
  }
  const auto set = select_variants(cands, target, 10, -1.0);
  REQUIRE(set.variants.size() == 10);
  CHECK_FALSE(set.insufficient);
  std::stable_sort(expected.begin(), expected.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(set.variants[i].text() == expected[i].second);
    CHECK(set.similarities[i] == doctest::Approx(expected[i].first));
    if (i > 0) CHECK(set.similarities[i] <= set.similarities[i - 1]);
  }
  const auto few = select_variants(cands, target, 20, -1.0);
  CHECK(few.variants.size() == 12);
  CHECK(few.insufficient);
}

TEST_CASE("selection invariants hold for random lexicons and targets") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "DET", "ADP"};
  const std::vector<std::string> deps = {"nsubj", "obj", "amod", "det", "case"};
  for (int rep = 0; rep < 40; ++rep) {
    Lexicon lex;
    for (int i = 0; i < 60; ++i) {
      lex.add(tags[rng() % tags.size()], deps[rng() % deps.size()], "w" + std::to_string(rng() % 25));
    }
    const int m = std::uniform_int_distribution<int>(2, 8)(rng);
    std::vector<std::string> pos;
    for (int i = 0; i < m; ++i) pos.push_back(tags[rng() % tags.size()]);
    auto target = make_sentence(pos, random_heads(m, rng));
    for (auto& t : target.tokens) {
      if (!t.head.is_root()) t.dep = deps[rng() % deps.size()];
    }
    // Candidates with perturbed trees so that the threshold matters.
    std::vector<Sentence> cands;
    for (const auto& c : synthesize_variants(target, lex, 60, rng())) {
      auto s = c.sentence;
      if (rng() % 3 == 0) {
        const auto h = random_heads(m, rng);
        for (int i = 0; i < m; ++i) {
          s.tokens[static_cast<std::size_t>(i)].head = h[static_cast<std::size_t>(i)] < 0 ? Head::root() : Head::token(h[static_cast<std::size_t>(i)]);
        }
      }
      cands.push_back(s);
    }
    cands.push_back(target);
    const auto set = select_variants(cands, target, 10, 0.9);
    CHECK(set.variants.size() == set.similarities.size());
    CHECK(set.variants.size() <= 10);
    CHECK(set.insufficient == (set.variants.size() < 10));
    for (std::size_t i = 0; i < set.variants.size(); ++i) {
      const auto& v = set.variants[i];
      CHECK(v.size() == target.size());
      CHECK(v.pos_sequence() == target.pos_sequence());
      CHECK(v.text() != target.text());
      CHECK(set.similarities[i] >= 0.9);
      if (i > 0) CHECK(set.similarities[i] <= set.similarities[i - 1]);
    }
  }
}

TEST_CASE("sentences shorter than three tokens keep only identical structures") {
  const auto target = make_sentence({"NOUN", "VERB"}, {1, -1}, {"a", "b"});
  const auto same = make_sentence({"NOUN", "VERB"}, {1, -1}, {"c", "d"});
  const auto flipped = make_sentence({"NOUN", "VERB"}, {-1, 0}, {"e", "f"});
  const std::vector<Sentence> cands = {same, flipped};
  const auto set = select_variants(cands, target, 5, 0.9);
  REQUIRE(set.variants.size() == 1);
  CHECK(set.variants[0].text() == "c d");
  CHECK(set.similarities[0] == 1.0);
}

TEST_CASE("story synthesis does not depend on the worker count") {
  Lexicon lex;
  for (const char* w : {"cat", "dog", "fox", "owl"}) lex.add("NOUN", "nsubj", w);
  for (const char* w : {"runs", "naps", "eats"}) lex.add("VERB", "root", w);
  for (const char* w : {"the", "a", "one"}) lex.add("DET", "det", w);
  Transcript t;
  t.story_id = "s";
  for (int i = 0; i < 12; ++i) {
    auto s = make_sentence({"DET", "NOUN", "VERB"}, {1, 2, -1}, {"the", "cat", "runs"}, "s", i);
    s.tokens[0].dep = "det";
    s.tokens[1].dep = "nsubj";
    t.sentences.push_back(s);
  }
  t.tr_times = {1.0};
  const SynthesisConfig cfg{3, 20, 0.9, false};
  const auto one = synthesize_story(t, lex, cfg, 5, {}, 1);
  const auto four = synthesize_story(t, lex, cfg, 5, {}, 4);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].variants == four[i].variants);
  TempDir dir;
  write_variant_sets(dir / "v.jsonl", one);
  const auto back = load_variant_sets(dir / "v.jsonl");
  REQUIRE(back.size() == one.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(back[i].variants == one[i].variants);
    CHECK(back[i].target == one[i].target);
    CHECK(back[i].similarities == one[i].similarities);
  }
}

TEST_CASE("syntactic embedding is the mean of the variant activations") {
  auto set = numbered_set(2, 1);
  MapProvider p;
  p.table[set.variants[0].text()] = (Matrix(1, 2) << 0, 2).finished();
  p.table[set.variants[1].text()] = (Matrix(1, 2) << 2, 0).finished();
  const auto e = syntactic_embedding(p, set, 0);
  CHECK(e.matrix(0, 0) == 1.0);
  CHECK(e.matrix(0, 1) == 1.0);
  CHECK(e.k == 2);

  auto same = numbered_set(5, 3);
  MapProvider q;
  const Matrix v = (Matrix(3, 2) << 1, 2, 3, 4, 5, 6).finished();
  for (const auto& s : same.variants) q.table[s.text()] = v;
  CHECK((syntactic_embedding(q, same, 0).matrix - v).cwiseAbs().maxCoeff() < 1e-15);
  const auto curve = convergence_curve(q, same, 0, 5);
  REQUIRE(curve.size() == 4);
  CHECK(curve.front().k == 2);
  for (const auto& pt : curve) CHECK(*pt.cosine == doctest::Approx(1.0));
}

TEST_CASE("syntactic embedding is permutation invariant and linear in each variant") {
  std::mt19937_64 rng(6);
  auto set = numbered_set(6, 4);
  MapProvider p;
  for (const auto& s : set.variants) p.table[s.text()] = synsem::test::random_matrix(4, 2, rng);
  const Matrix base = syntactic_embedding(p, set, 0).matrix;
  auto shuffled = set;
  std::shuffle(shuffled.variants.begin(), shuffled.variants.end(), rng);
  CHECK((syntactic_embedding(p, shuffled, 0).matrix - base).cwiseAbs().maxCoeff() < 1e-14);
  // Scaling one variant's activations by c moves the mean by (c - 1) * a / k.
  const Matrix a = p.table[set.variants[2].text()];
  p.table[set.variants[2].text()] = 3.0 * a;
  const Matrix moved = syntactic_embedding(p, set, 0).matrix;
  CHECK((moved - (base + 2.0 * a / 6.0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("variance of the averaged estimate falls as sigma^2 / k") {
  std::mt19937_64 rng(31);
  const Matrix psi = synsem::test::random_matrix(4, 8, rng);
  const double sigma = 0.5;
  const NoisyProvider p(psi, sigma);
  for (int k : {1, 4, 10}) {
    double sq = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 200; ++rep) {
      auto set = numbered_set(k, 4);
      for (auto& v : set.variants) v.tokens[1].text += "_r" + std::to_string(rep) + "k" + std::to_string(k);
      const Matrix dev = syntactic_embedding(p, set, 0).matrix - psi;
      sq += dev.squaredNorm();
      count += static_cast<std::size_t>(dev.size());
    }
    const double var = sq / static_cast<double>(count);
    INFO("k = " << k);
    CHECK(var == doctest::Approx(sigma * sigma / k).epsilon(0.1));
  }
}

TEST_CASE("estimation error decreases with k (Kendall trend)") {
  std::mt19937_64 rng(32);
  const Matrix psi = synsem::test::random_matrix(3, 5, rng);
  const NoisyProvider p(psi, 1.0);
  const int k_max = 20;
  std::vector<double> err(k_max, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    auto set = numbered_set(k_max, 3);
    for (auto& v : set.variants) v.tokens[0].text += "_" + std::to_string(rep);
    for (int k = 1; k <= k_max; ++k) {
      VariantSet head = set;
      head.variants.resize(static_cast<std::size_t>(k));
      err[static_cast<std::size_t>(k - 1)] += (syntactic_embedding(p, head, 0).matrix - psi).norm();
    }
  }
  int concordant = 0;
  int discordant = 0;
  for (int i = 0; i < k_max; ++i) {
    for (int j = i + 1; j < k_max; ++j) {
      (err[static_cast<std::size_t>(j)] < err[static_cast<std::size_t>(i)] ? concordant : discordant)++;
    }
  }
  const double tau = static_cast<double>(concordant - discordant) / (k_max * (k_max - 1) / 2);
  // Under no trend tau has sd sqrt(2(2n+5)/(9n(n-1))) ~ 0.16 for n = 20.
  CHECK(tau > 0.8);
}

TEST_CASE("file-backed activations are looked up by sentence text") {
  TempDir dir;
  const auto a = make_sentence({"NOUN", "VERB"}, {1, -1}, {"cats", "nap"});
  const auto b = make_sentence({"NOUN", "VERB", "NOUN"}, {1, -1, 1}, {"dogs", "chase", "cats"});
  write_sentences(dir / "s.jsonl", {a, b});
  Matrix l0 = Matrix::Zero(5, 2);
  Matrix l1(5, 2);
  l1 << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  store_matrix(l0, dir / "l0.dten", DType::f64);
  store_matrix(l1, dir / "l1.dten", DType::f64);
  const std::vector<FileEmbeddingProvider::Source> sources = {{dir / "s.jsonl", {dir / "l0.dten", dir / "l1.dten"}}};
  const FileEmbeddingProvider p(sources);
  CHECK(p.layer_count() == 2);
  CHECK(p.dim() == 2);
  CHECK(p.activations(b, 1) == l1.bottomRows(3));
  CHECK(p.activations(a, 1) == l1.topRows(2));
  CHECK_THROWS_AS(p.activations(make_sentence({"X"}, {-1}, {"unknown"}), 0), ValidationError);
  CHECK_THROWS(p.activations(a, 2));

  store_matrix(Matrix::Zero(4, 2), dir / "short.dten");
  const std::vector<FileEmbeddingProvider::Source> bad = {{dir / "s.jsonl", {dir / "short.dten"}}};
  CHECK_THROWS_AS(FileEmbeddingProvider{bad}, ValidationError);
}

}  // TEST_SUITE
