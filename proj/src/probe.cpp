#include "synsem/probe.hpp"

#include "synsem/dependency_tree.hpp"
#include "synsem/encoder.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace synsem {
namespace {

Matrix take_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

// Uniform average over columns of 1 - SS_res / SS_tot.
double r2_score(const Matrix& truth, const Matrix& pred) {
  double total = 0.0;
  for (Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    const double ss_res = (truth.col(c) - pred.col(c)).squaredNorm();
    if (ss_tot > 0.0) {
      total += 1.0 - ss_res / ss_tot;
    } else {
      total += ss_res == 0.0 ? 1.0 : 0.0;
    }
  }
  return total / static_cast<double>(truth.cols());
}

// Centered ridge with one λ chosen by summed leave-one-out error.
Matrix ridge_predict(Matrix xtr, Matrix ytr, Matrix xte, std::span<const double> grid) {
  const auto scaler = ColumnScaler::fit(xtr, {}, 0.0, 100.0);
  scaler.apply(xtr, {});
  scaler.apply(xte, {}, false);
  const Eigen::RowVectorXd ymean = ytr.colwise().mean();
  ytr.rowwise() -= ymean;
  const RidgeSolver solver(xtr);
  const auto idx = argmin_lambda(solver.loo_errors(ytr, grid), LambdaMode::shared);
  const std::vector<double> lam(static_cast<std::size_t>(ytr.cols()), grid[idx.front()]);
  Matrix pred = xte * solver.weights(ytr, lam);
  pred.rowwise() += ymean;
  return pred;
}

ProbeFeature token_feature(std::span<const Transcript> transcripts, const std::string& name,
                           ProbeKind kind) {
  ProbeFeature f;
  f.name = name;
  f.kind = kind;
  Index row = 0;
  std::vector<double> depths;
  std::map<std::string, int> classes;
  for (const auto& t : transcripts) {
    for (const auto& s : t.sentences) {
      const auto depth = kind == ProbeKind::continuous ? tree_depths(s) : std::vector<int>{};
      for (std::size_t i = 0; i < s.tokens.size(); ++i, ++row) {
        f.rows.push_back(row);
        if (kind == ProbeKind::continuous) {
          depths.push_back(depth[i]);
        } else {
          classes.try_emplace(s.tokens[i].pos, 0);
        }
      }
    }
  }
  if (kind == ProbeKind::continuous) {
    f.values = Eigen::Map<const Vector>(depths.data(), static_cast<Index>(depths.size()));
    return f;
  }
  int next = 0;
  for (auto& [pos, id] : classes) {
    id = next++;
    f.class_names.push_back(pos);
  }
  for (const auto& t : transcripts) {
    for (const auto& s : t.sentences) {
      for (const auto& tok : s.tokens) f.labels.push_back(classes.at(tok.pos));
    }
  }
  return f;
}

}  // namespace

double adjusted_balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred,
                                  int n_classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("label vectors differ in length");
  if (n_classes < 2) throw std::invalid_argument("adjusted accuracy needs at least 2 classes");
  std::vector<double> hits(static_cast<std::size_t>(n_classes), 0.0);
  std::vector<double> count(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int c = y_true[i];
    if (c < 0 || c >= n_classes) throw std::invalid_argument("label outside [0, n_classes)");
    count[static_cast<std::size_t>(c)] += 1.0;
    if (y_pred[i] == c) hits[static_cast<std::size_t>(c)] += 1.0;
  }
  double recall = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0.0) {
      throw ValidationError("class " + std::to_string(c) + " absent from the true labels");
    }
    recall += hits[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
  }
  const double chance = 1.0 / n_classes;
  return (recall / n_classes - chance) / (1.0 - chance);
}

ProbeFeature restrict_rows(const ProbeFeature& f, const std::vector<bool>& keep) {
  ProbeFeature out;
  out.name = f.name;
  out.kind = f.kind;
  out.class_names = f.class_names;
  std::vector<Index> positions;
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(f.rows[i]);
    if (r >= keep.size()) throw std::out_of_range("restrict_rows: mask shorter than rows");
    if (keep[r]) {
      out.rows.push_back(f.rows[i]);
      positions.push_back(static_cast<Index>(i));
    }
  }
  if (f.kind == ProbeKind::continuous) {
    out.values = take_rows(f.values, positions);
  } else {
    for (Index p : positions) out.labels.push_back(f.labels[static_cast<std::size_t>(p)]);
  }
  return out;
}

ProbeFeature pos_feature(std::span<const Transcript> transcripts) {
  return token_feature(transcripts, "pos", ProbeKind::categorical);
}

ProbeFeature depth_feature(std::span<const Transcript> transcripts) {
  return token_feature(transcripts, "tree_depth", ProbeKind::continuous);
}

std::vector<bool> content_mask(std::span<const Transcript> transcripts) {
  std::vector<bool> out;
  for (const auto& t : transcripts) {
    for (const auto& s : t.sentences) {
      for (const auto& tok : s.tokens) out.push_back(tok.is_content);
    }
  }
  return out;
}

std::vector<ProbeFeature> load_probe_targets(const std::filesystem::path& path,
                                             std::span<const Transcript> transcripts) {
  std::map<std::tuple<std::string, int, int>, Index> row_of;
  Index row = 0;
  for (const auto& t : transcripts) {
    for (const auto& s : t.sentences) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i, ++row) {
        row_of[{s.story_id, s.sentence_index, static_cast<int>(i)}] = row;
      }
    }
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open probe targets: " + path.string(), path.string());
  struct Raw {
    ProbeKind kind;
    std::map<Index, std::vector<double>> values;
    std::map<Index, std::string> classes;
  };
  std::map<std::string, Raw> raw;
  std::vector<std::string> order;
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
      const auto key = std::make_tuple(obj.at("story").get<std::string>(),
                                       obj.at("sent_index").get<int>(),
                                       obj.at("token_index").get<int>());
      auto it = row_of.find(key);
      if (it == row_of.end()) throw ValidationError(where + ": token not in the transcripts");
      const auto name = obj.at("name").get<std::string>();
      const bool categorical = obj.contains("class");
      const ProbeKind kind = categorical ? ProbeKind::categorical : ProbeKind::continuous;
      auto [rit, fresh] = raw.try_emplace(name, Raw{kind, {}, {}});
      if (fresh) order.push_back(name);
      if (rit->second.kind != kind) throw ValidationError(where + ": mixed kinds for " + name);
      if (categorical) {
        const auto& c = obj.at("class");
        rit->second.classes[it->second] = c.is_string() ? c.get<std::string>() : c.dump();
      } else if (obj.contains("vector")) {
        rit->second.values[it->second] = obj.at("vector").get<std::vector<double>>();
      } else {
        rit->second.values[it->second] = {obj.at("value").get<double>()};
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  std::vector<ProbeFeature> out;
  for (const auto& name : order) {
    const auto& r = raw.at(name);
    ProbeFeature f;
    f.name = name;
    f.kind = r.kind;
    if (r.kind == ProbeKind::categorical) {
      std::map<std::string, int> ids;
      for (const auto& [row_idx, c] : r.classes) ids.try_emplace(c, 0);
      int next = 0;
      for (auto& [c, id] : ids) {
        id = next++;
        f.class_names.push_back(c);
      }
      for (const auto& [row_idx, c] : r.classes) {
        f.rows.push_back(row_idx);
        f.labels.push_back(ids.at(c));
      }
    } else {
      const auto width = static_cast<Index>(r.values.begin()->second.size());
      f.values.resize(static_cast<Index>(r.values.size()), width);
      Index i = 0;
      for (const auto& [row_idx, v] : r.values) {
        if (static_cast<Index>(v.size()) != width) {
          throw ValidationError(path.string() + ": inconsistent vector width for " + name);
        }
        f.rows.push_back(row_idx);
        f.values.row(i++) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), width);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<double> default_probe_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -3.0 + i);
  return grid;
}

ProbeResult probe_decode(const Matrix& embeddings, const ProbeFeature& feature,
                         const ProbeConfig& cfg) {
  const auto n = static_cast<Index>(feature.size());
  if (n < cfg.folds) {
    throw ValidationError("probe '" + feature.name + "': " + std::to_string(n) +
                          " tokens for " + std::to_string(cfg.folds) + " folds");
  }
  for (Index r : feature.rows) {
    if (r < 0 || r >= embeddings.rows()) throw std::out_of_range("probe row outside embeddings");
  }
  const Matrix x = take_rows(embeddings, feature.rows);
  Matrix y;
  int n_classes = 0;
  if (feature.kind == ProbeKind::continuous) {
    y = feature.values;
  } else {
    n_classes = static_cast<int>(feature.class_names.size());
    y = Matrix::Constant(n, n_classes, -1.0);
    for (Index i = 0; i < n; ++i) y(i, feature.labels[static_cast<std::size_t>(i)]) = 1.0;
  }

  ProbeResult res;
  for (const auto& fold : make_fold_plan(n, cfg.folds)) {
    const Index b = fold.test_begin;
    const Index e = fold.test_end;
    const Index ntr = n - fold.test_size();
    Matrix xtr(ntr, x.cols());
    xtr << x.topRows(b), x.bottomRows(n - e);
    Matrix ytr(ntr, y.cols());
    ytr << y.topRows(b), y.bottomRows(n - e);
    if (feature.kind == ProbeKind::categorical) {
      // Only classes seen in training get a decision column.
      std::vector<Index> seen;
      for (Index c = 0; c < ytr.cols(); ++c) {
        if ((ytr.col(c).array() > 0).any()) seen.push_back(c);
      }
      Matrix ysub(ntr, static_cast<Index>(seen.size()));
      for (std::size_t k = 0; k < seen.size(); ++k) ysub.col(static_cast<Index>(k)) = ytr.col(seen[k]);
      const Matrix decision =
          ridge_predict(std::move(xtr), std::move(ysub), x.middleRows(b, fold.test_size()),
                        cfg.lambda_grid);
      std::map<int, int> present;
      for (Index i = b; i < e; ++i) present.try_emplace(feature.labels[static_cast<std::size_t>(i)], 0);
      if (present.size() < 2) {
        throw ValidationError("probe '" + feature.name + "': a test fold holds a single class");
      }
      int next = 0;
      for (auto& [c, id] : present) id = next++;
      std::vector<int> truth;
      std::vector<int> pred;
      for (Index i = 0; i < fold.test_size(); ++i) {
        Index best = 0;
        decision.row(i).maxCoeff(&best);
        const int cls = static_cast<int>(seen[static_cast<std::size_t>(best)]);
        truth.push_back(present.at(feature.labels[static_cast<std::size_t>(b + i)]));
        auto it = present.find(cls);
        pred.push_back(it == present.end() ? -1 : it->second);
      }
      res.fold_scores.push_back(
          adjusted_balanced_accuracy(truth, pred, static_cast<int>(present.size())));
    } else {
      const Matrix pred = ridge_predict(std::move(xtr), std::move(ytr),
                                        x.middleRows(b, fold.test_size()), cfg.lambda_grid);
      res.fold_scores.push_back(r2_score(y.middleRows(b, fold.test_size()), pred));
    }
  }
  const auto k = static_cast<double>(res.fold_scores.size());
  for (double s : res.fold_scores) res.mean += s;
  res.mean /= k;
  double ss = 0.0;
  for (double s : res.fold_scores) ss += (s - res.mean) * (s - res.mean);
  res.sem = std::sqrt(ss / (k - 1.0) / k);
  return res;
}

}  // namespace synsem
