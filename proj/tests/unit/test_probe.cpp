#include "support.hpp"

#include "synsem/probe.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace synsem;
using synsem::test::make_sentence;
using synsem::test::random_matrix;
using synsem::test::TempDir;

namespace {

ProbeFeature continuous(const Matrix& values) {
  ProbeFeature f;
  f.name = "f";
  f.kind = ProbeKind::continuous;
  f.values = values;
  for (Index i = 0; i < values.rows(); ++i) f.rows.push_back(i);
  return f;
}

}  // namespace

TEST_SUITE("probe") {

TEST_CASE("adjusted balanced accuracy anchors") {
  const std::vector<int> truth = {0, 1, 0, 1, 0, 1};
  CHECK(adjusted_balanced_accuracy(truth, truth, 2) == doctest::Approx(1.0));
  const std::vector<int> constant(6, 0);
  CHECK(adjusted_balanced_accuracy(truth, constant, 2) == doctest::Approx(0.0));
  // Unbalanced truth: recall 1 on class 0, 0.5 on class 1.
  const std::vector<int> t3 = {0, 0, 0, 0, 1, 1};
  const std::vector<int> p3 = {0, 0, 0, 0, 1, 0};
  CHECK(adjusted_balanced_accuracy(t3, p3, 2) == doctest::Approx(0.5));
  const std::vector<int> missing = {0, 0, 0};
  CHECK_THROWS(adjusted_balanced_accuracy(missing, missing, 2));
  CHECK_THROWS(adjusted_balanced_accuracy(truth, truth, 1));
}

TEST_CASE("uniform random predictions score near zero for many classes") {
  std::mt19937_64 rng(1);
  const int c = 50;
  std::vector<int> truth;
  std::vector<int> pred;
  for (int i = 0; i < 50000; ++i) {
    truth.push_back(i % c);
    pred.push_back(std::uniform_int_distribution<int>(0, c - 1)(rng));
  }
  CHECK(std::abs(adjusted_balanced_accuracy(truth, pred, c)) < 0.02);
}

TEST_CASE("a noiseless linear target is decoded") {
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(300, 10, rng);
  const Matrix y = x * random_matrix(10, 3, rng);
  const auto r = probe_decode(x, continuous(y));
  CHECK(r.mean > 0.99);
  CHECK(r.fold_scores.size() == 10);
  CHECK(r.sem >= 0.0);
}

TEST_CASE("an independent target does not decode") {
  double total = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + static_cast<unsigned>(seed));
    const Matrix x = random_matrix(200, 10, rng);
    const Matrix y = random_matrix(200, 1, rng);
    total += probe_decode(x, continuous(y)).mean;
  }
  CHECK(total / 20.0 <= 0.05);
}

TEST_CASE("separable classes are decoded") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.3);
  const int classes = 4;
  const Matrix centers = 3.0 * random_matrix(classes, 6, rng);
  ProbeFeature f;
  f.name = "cls";
  f.kind = ProbeKind::categorical;
  f.class_names = {"a", "b", "c", "d"};
  Matrix x(400, 6);
  for (Index i = 0; i < 400; ++i) {
    const int label = std::uniform_int_distribution<int>(0, classes - 1)(rng);
    f.labels.push_back(label);
    f.rows.push_back(i);
    for (Index j = 0; j < 6; ++j) x(i, j) = centers(label, j) + nd(rng);
  }
  CHECK(probe_decode(x, f).mean > 0.95);
}

TEST_CASE("guards and default grid") {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(8, 2, rng);
  CHECK_THROWS_AS(probe_decode(x, continuous(random_matrix(8, 1, rng))), ValidationError);
  const auto grid = default_probe_grid();
  REQUIRE(grid.size() == 10);
  CHECK(grid.front() == doctest::Approx(1e-3));
  CHECK(grid.back() == doctest::Approx(1e6));
}

TEST_CASE("transcript features, content restriction and file targets") {
  Transcript t;
  t.story_id = "s";
  auto a = make_sentence({"DET", "NOUN", "VERB"}, {1, 2, -1}, {"the", "cat", "naps"});
  auto b = make_sentence({"NOUN", "VERB"}, {1, -1}, {"dogs", "bark"}, "s", 1);
  t.sentences = {a, b};
  t.sentences[0].tokens[0].is_content = false;
  t.sentences[0].tokens[1].is_content = true;
  t.sentences[0].tokens[2].is_content = true;
  t.tr_times = {1.0};
  const std::vector<Transcript> ts = {t};
  const auto depth = depth_feature(ts);
  CHECK(depth.values.col(0).transpose() == Eigen::RowVectorXd((Eigen::RowVectorXd(5) << 2, 1, 0, 1, 0).finished()));
  const auto pos = pos_feature(ts);
  CHECK(pos.class_names.size() == 3);
  CHECK(pos.class_names[static_cast<std::size_t>(pos.labels[1])] == "NOUN");
  const auto mask = content_mask(ts);
  CHECK(mask == std::vector<bool>{false, true, true, true, true});
  const auto restricted = restrict_rows(pos, mask);
  CHECK(restricted.rows == std::vector<Index>{1, 2, 3, 4});

  TempDir dir;
  synsem::test::write_file(dir / "targets.jsonl",
                           "{\"story\":\"s\",\"sent_index\":0,\"token_index\":1,\"name\":\"freq\",\"value\":2.5}\n"
                           "{\"story\":\"s\",\"sent_index\":1,\"token_index\":0,\"name\":\"freq\",\"value\":1.5}\n"
                           "{\"story\":\"s\",\"sent_index\":1,\"token_index\":0,\"name\":\"cat\",\"class\":\"animal\"}\n"
                           "{\"story\":\"s\",\"sent_index\":0,\"token_index\":2,\"name\":\"vec\",\"vector\":[1,2]}\n");
  const auto targets = load_probe_targets(dir / "targets.jsonl", ts);
  REQUIRE(targets.size() == 3);
  CHECK(targets[0].name == "freq");
  CHECK(targets[0].rows == std::vector<Index>{1, 3});
  CHECK(targets[0].values(1, 0) == 1.5);
  CHECK(targets[1].kind == ProbeKind::categorical);
  CHECK(targets[2].values.cols() == 2);
  synsem::test::write_file(dir / "bad.jsonl",
                           "{\"story\":\"s\",\"sent_index\":5,\"token_index\":0,\"name\":\"x\",\"value\":1}\n");
  CHECK_THROWS_AS(load_probe_targets(dir / "bad.jsonl", ts), ValidationError);
  CHECK_THROWS_AS(load_probe_targets(dir / "none.jsonl", ts), InputError);
}

}  // TEST_SUITE
