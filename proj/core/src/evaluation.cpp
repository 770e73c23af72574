// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "echo/errors.hpp"
#include "echo/rng.hpp"
#include "json_convert.hpp"

namespace echo {

void EmbeddingSet::append(const std::string& id, const std::vector<double>& vec,
                          const std::string& label) {
  if (M == 0) {
    E = static_cast<int>(vec.size());
  } else if (static_cast<int>(vec.size()) != E) {
    throw InvalidInputError("EmbeddingSet: dimension mismatch for " + id);
  }
  ids.push_back(id);
  vectors.insert(vectors.end(), vec.begin(), vec.end());
  labels.push_back(label);
  ++M;
}

Distance distance_from_name(const std::string& name) {
  if (name == "euclidean") return Distance::kEuclidean;
  if (name == "cosine") return Distance::kCosine;
  throw ConfigError("unknown distance metric '" + name + "' (euclidean|cosine)");
}

std::string distance_name(Distance d) {
  return d == Distance::kEuclidean ? "euclidean" : "cosine";
}

void EvalConfig::validate() const {
  if (k < 1) throw ConfigError("eval k must be >= 1");
  if (max_fpr <= 0.0 || max_fpr > 1.0) throw ConfigError("max_fpr must be in (0, 1]");
  if (aggregate != "arithmetic" && aggregate != "harmonic")
    throw ConfigError("aggregate must be arithmetic or harmonic");
  if (cv != "loocv" && cv != "kfold") throw ConfigError("cv must be loocv or kfold");
  if (folds < 2) throw ConfigError("folds must be >= 2");
}

namespace {

std::vector<double> maybe_normalize(const double* v, int e, bool l2) {
  std::vector<double> out(v, v + e);
  if (!l2) return out;
  double sq = 0.0;
  for (double x : out) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > 0.0) {
    for (double& x : out) x /= norm;
  }
  return out;
}

double distance(const std::vector<double>& a, const std::vector<double>& b, Distance metric) {
  if (metric == Distance::kEuclidean) {
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      sq += d * d;
    }
    return std::sqrt(sq);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0.0 ? 1.0 - dot / denom : 1.0;
}

// (distance, index) pairs sorted ascending; equal distances keep lower index
// first.
std::vector<std::pair<double, int>> sorted_neighbors(const EmbeddingSet& train,
                                                     const std::vector<double>& query,
                                                     Distance metric, bool l2) {
  if (train.M == 0) throw UsageError("knn: empty training set");
  if (static_cast<int>(query.size()) != train.E) {
    throw UsageError("knn: query dimension " + std::to_string(query.size()) +
                     " does not match train dimension " + std::to_string(train.E));
  }
  std::vector<double> q = maybe_normalize(query.data(), train.E, l2);
  std::vector<std::pair<double, int>> d(train.M);
  for (int i = 0; i < train.M; ++i) {
    d[i] = {distance(maybe_normalize(train.row(i), train.E, l2), q, metric), i};
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace

double knn_anomaly_score(const EmbeddingSet& train, const std::vector<double>& query, int k,
                         Distance metric, bool l2_normalize) {
  if (k < 1 || k > train.M) throw UsageError("knn_anomaly_score: k out of range");
  auto d = sorted_neighbors(train, query, metric, l2_normalize);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += d[i].first;
  return sum / k;
}

std::string knn_classify(const EmbeddingSet& train, const std::vector<double>& query, int k,
                         Distance metric, bool l2_normalize) {
  if (train.labels.size() != static_cast<size_t>(train.M)) {
    throw UsageError("knn_classify: training set has no labels");
  }
  if (k < 1) throw UsageError("knn_classify: k must be >= 1");
  auto d = sorted_neighbors(train, query, metric, l2_normalize);
  const int kk = std::min<int>(k, train.M);

  std::map<std::string, int> votes;
  for (int i = 0; i < kk; ++i) votes[train.labels[d[i].second]]++;
  int best = 0;
  for (const auto& [cls, n] : votes) best = std::max(best, n);
  // vote tie: first neighbor (ascending distance) whose class is tied wins
  for (int i = 0; i < kk; ++i) {
    const std::string& cls = train.labels[d[i].second];
    if (votes[cls] == best) return cls;
  }
  return train.labels[d[0].second]; // unreachable
}

double roc_auc(const std::vector<double>& scores_neg, const std::vector<double>& scores_pos) {
  if (scores_neg.empty() || scores_pos.empty()) {
    throw UsageError("roc_auc: both score sets must be nonempty");
  }
  double wins = 0.0;
  for (double p : scores_pos) {
    for (double n : scores_neg) {
      if (p > n) wins += 1.0;
      else if (p == n) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(scores_pos.size()) * scores_neg.size());
}

double partial_auc(const std::vector<double>& scores_neg, const std::vector<double>& scores_pos,
                   double max_fpr) {
  if (scores_neg.empty() || scores_pos.empty()) {
    throw UsageError("partial_auc: both score sets must be nonempty");
  }
  if (max_fpr <= 0.0 || max_fpr > 1.0) throw ConfigError("partial_auc: max_fpr in (0, 1]");

  // ROC vertices from a descending threshold sweep; ties move diagonally.
  std::vector<std::pair<double, int>> all; // (score, is_pos)
  all.reserve(scores_neg.size() + scores_pos.size());
  for (double s : scores_neg) all.push_back({s, 0});
  for (double s : scores_pos) all.push_back({s, 1});
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double np = static_cast<double>(scores_pos.size());
  const double nn = static_cast<double>(scores_neg.size());
  double area = 0.0;
  double fpr = 0.0, tpr = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    int tp = 0, fp = 0;
    const double threshold = all[i].first;
    while (i < all.size() && all[i].first == threshold) {
      all[i].second ? ++tp : ++fp;
      ++i;
    }
    const double nfpr = fpr + fp / nn;
    const double ntpr = tpr + tp / np;
    if (nfpr <= max_fpr) {
      area += (nfpr - fpr) * 0.5 * (tpr + ntpr);
    } else if (fpr < max_fpr) {
      // linear interpolation at the cutoff
      const double frac = (max_fpr - fpr) / (nfpr - fpr);
      const double cut_tpr = tpr + frac * (ntpr - tpr);
      area += (max_fpr - fpr) * 0.5 * (tpr + cut_tpr);
    }
    fpr = nfpr;
    tpr = ntpr;
    if (fpr >= max_fpr) break;
  }
  return area / max_fpr;
}

ClassificationMetrics classification_metrics(const std::vector<std::string>& y_true,
                                             const std::vector<std::string>& y_pred,
                                             const std::vector<std::string>& classes) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    throw UsageError("classification_metrics: empty or mismatched label sequences");
  }
  for (const auto& labels : {&y_true, &y_pred}) {
    for (const std::string& l : *labels) {
      if (std::find(classes.begin(), classes.end(), l) == classes.end()) {
        throw InvalidInputError("classification_metrics: label '" + l +
                                "' is not in the declared class list");
      }
    }
  }

  ClassificationMetrics out;
  int correct = 0;
  for (size_t i = 0; i < y_true.size(); ++i) correct += (y_true[i] == y_pred[i]);
  out.accuracy = static_cast<double>(correct) / y_true.size();

  for (const std::string& cls : classes) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == cls;
      const bool p = y_pred[i] == cls;
      support += t;
      if (t && p) ++tp;
      else if (!t && p) ++fp;
      else if (t && !p) ++fn;
    }
    ClassScores cs;
    cs.support = support;
    cs.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    cs.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    cs.f1 = (cs.precision + cs.recall) > 0.0
                ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                : 0.0;
    out.per_class[cls] = cs;
    out.macro_precision += cs.precision;
    out.macro_recall += cs.recall;
    out.macro_f1 += cs.f1;
  }
  const double inv = classes.empty() ? 0.0 : 1.0 / classes.size();
  out.macro_precision *= inv;
  out.macro_recall *= inv;
  out.macro_f1 *= inv;
  return out;
}

std::vector<Split> loocv_splits(size_t n) {
  if (n < 2) throw UsageError("loocv_splits: need n >= 2");
  std::vector<Split> splits(n);
  for (size_t i = 0; i < n; ++i) {
    splits[i].test = {i};
    splits[i].train.reserve(n - 1);
    for (size_t j = 0; j < n; ++j) {
      if (j != i) splits[i].train.push_back(j);
    }
  }
  return splits;
}

std::vector<Split> kfold_splits(size_t n, int k, uint64_t seed) {
  if (k < 2) throw UsageError("kfold_splits: need k >= 2");
  if (static_cast<size_t>(k) > n) throw UsageError("kfold_splits: k exceeds n");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).fork("kfold");
  rng.shuffle(order);

  std::vector<Split> splits(k);
  const size_t base = n / k, rem = n % k;
  size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const size_t len = base + (static_cast<size_t>(f) < rem ? 1 : 0);
    splits[f].test.assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  for (int f = 0; f < k; ++f) {
    for (int g = 0; g < k; ++g) {
      if (g != f) {
        splits[f].train.insert(splits[f].train.end(), splits[g].test.begin(),
                               splits[g].test.end());
      }
    }
    // stable order inside each side of the split
    std::sort(splits[f].train.begin(), splits[f].train.end());
    std::sort(splits[f].test.begin(), splits[f].test.end());
  }
  return splits;
}

namespace {

double harmonic_mean(const std::vector<double>& xs) {
  for (double x : xs) {
    if (x <= 0.0) return 0.0;
  }
  double inv = 0.0;
  for (double x : xs) inv += 1.0 / x;
  return xs.size() / inv;
}

double arithmetic_mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

}  // namespace

AggregateScores aggregate_scores(const std::vector<GroupScores>& per_machine,
                                 const std::string& mode) {
  if (per_machine.empty()) throw UsageError("aggregate_scores: empty input");
  if (mode != "arithmetic" && mode != "harmonic") {
    throw ConfigError("aggregate mode must be arithmetic or harmonic");
  }
  std::vector<double> aucs, paucs, both;
  for (const GroupScores& g : per_machine) {
    aucs.push_back(g.auc);
    paucs.push_back(g.pauc);
    both.push_back(g.auc);
    both.push_back(g.pauc);
  }
  AggregateScores out;
  if (mode == "arithmetic") {
    out.mean_auc = arithmetic_mean(aucs);
    out.mean_pauc = arithmetic_mean(paucs);
    out.combined = arithmetic_mean(both);
  } else {
    out.mean_auc = harmonic_mean(aucs);
    out.mean_pauc = harmonic_mean(paucs);
    out.combined = harmonic_mean(both);
  }
  return out;
}

namespace {

json metrics_to_json(const ClassificationMetrics& m) {
  json per_class = json::object();
  for (const auto& [cls, cs] : m.per_class) {
    per_class[cls] = json{{"precision", cs.precision},
                          {"recall", cs.recall},
                          {"f1", cs.f1},
                          {"support", cs.support}};
  }
  return json{{"accuracy", m.accuracy},
              {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall},
              {"macro_f1", m.macro_f1},
              {"per_class", std::move(per_class)}};
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["schema"] = schema;
  j["task"] = task;
  j["tool_version"] = tool_version;
  j["config"] = echo::to_json(config);
  if (!model_config_json.empty()) {
    j["model"] = parse_json_text(model_config_json, "model config echo");
  }
  if (task == "anomaly") {
    json groups_json = json::array();
    for (const GroupScores& g : groups) {
      groups_json.push_back(json{{"machine", g.name},
                                 {"auc", g.auc},
                                 {"pauc", g.pauc},
                                 {"n_train", g.n_train},
                                 {"n_test", g.n_test}});
    }
    j["groups"] = std::move(groups_json);
    j["aggregate"] = json{{"mean_auc", aggregate.mean_auc},
                          {"mean_pauc", aggregate.mean_pauc},
                          {"combined", aggregate.combined},
                          {"mode", config.aggregate}};
  } else {
    j["classes"] = classes;
    json folds_json = json::array();
    for (const FoldScores& f : folds) {
      folds_json.push_back(
          json{{"fold", f.fold}, {"n_test", f.n_test}, {"metrics", metrics_to_json(f.metrics)}});
    }
    j["folds"] = std::move(folds_json);
    j["pooled"] = metrics_to_json(pooled);
    j["n_predictions"] = n_predictions;
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  if (task == "anomaly") {
    out << "machine,auc,pauc,n_train,n_test\n";
    for (const GroupScores& g : groups) {
      out << g.name << ',' << g.auc << ',' << g.pauc << ',' << g.n_train << ',' << g.n_test
          << '\n';
    }
  } else {
    out << "fold,n_test,accuracy,macro_precision,macro_recall,macro_f1\n";
    for (const FoldScores& f : folds) {
      out << f.fold << ',' << f.n_test << ',' << f.metrics.accuracy << ','
          << f.metrics.macro_precision << ',' << f.metrics.macro_recall << ','
          << f.metrics.macro_f1 << '\n';
    }
  }
  return out.str();
}

}  // namespace echo
