// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace echo {

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<double> vectors; // M x E row-major
  int M = 0;
  int E = 0;
  std::vector<std::string> labels; // empty or one per row

  const double* row(int i) const { return vectors.data() + static_cast<size_t>(i) * E; }
  void append(const std::string& id, const std::vector<double>& vec, const std::string& label);
};

enum class Distance { kEuclidean, kCosine };

Distance distance_from_name(const std::string& name);
std::string distance_name(Distance d);

struct EvalConfig {
  int k = 1;
  Distance metric = Distance::kEuclidean;
  bool l2_normalize = true;
  double max_fpr = 0.1;
  std::string aggregate = "arithmetic"; // or "harmonic"
  std::string cv = "loocv";             // or "kfold"
  int folds = 5;
  uint64_t seed = 0;

  void validate() const;
};

// Mean distance from the query to its k nearest training vectors; higher
// means more anomalous. Optional L2 normalization applies to train and query
// alike.
double knn_anomaly_score(const EmbeddingSet& train, const std::vector<double>& query, int k,
                         Distance metric, bool l2_normalize);

// Majority vote among the k nearest; vote ties resolved by the nearest
// neighbor whose class is among the tied leaders; exact distance ties by
// lower index.
std::string knn_classify(const EmbeddingSet& train, const std::vector<double>& query, int k,
                         Distance metric, bool l2_normalize);

// Mann-Whitney statistic: P(pos > neg) + 0.5 P(pos = neg).
double roc_auc(const std::vector<double>& scores_neg, const std::vector<double>& scores_pos);

// Area under the empirical ROC restricted to FPR in [0, max_fpr](trapezoid
// over the threshold-sweep vertices, linear interpolation at the cutoff),
// normalized by max_fpr.
double partial_auc(const std::vector<double>& scores_neg, const std::vector<double>& scores_pos,
                   double max_fpr = 0.1);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, ClassScores> per_class;
};

// Macro averages run over the declared class list; a class absent from both
// y_true and y_pred contributes zeros.
ClassificationMetrics classification_metrics(const std::vector<std::string>& y_true,
                                             const std::vector<std::string>& y_pred,
                                             const std::vector<std::string>& classes);

struct Split {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

std::vector<Split> loocv_splits(size_t n);
// Seeded shuffle, then k folds with sizes differing by at most one.
std::vector<Split> kfold_splits(size_t n, int k, uint64_t seed);

struct AggregateScores {
  double mean_auc = 0.0;
  double mean_pauc = 0.0;
  double combined = 0.0; // pooled mean over both columns
};

struct GroupScores {
  std::string name;
  double auc = 0.0;
  double pauc = 0.0;
  int n_train = 0;
  int n_test = 0;
};

AggregateScores aggregate_scores(const std::vector<GroupScores>& per_machine,
                                 const std::string& mode);

struct FoldScores {
  int fold = 0;
  int n_test = 0;
  ClassificationMetrics metrics;
};

// One report type serves both tasks; unused sections stay empty. to_json is
// deterministic (sorted keys, shortest round-trip floats, no timestamps).
struct EvalReport {
  std::string schema = "echo-eval-report/1";
  std::string task; // "anomaly" | "classification"
  std::string tool_version;
  EvalConfig config;
  std::string model_config_json; // effective model config echo

  std::vector<GroupScores> groups; // anomaly: per machine
  AggregateScores aggregate;

  std::vector<std::string> classes; // classification
  std::vector<FoldScores> folds;
  ClassificationMetrics pooled;
  int n_predictions = 0;

  std::string to_json() const;
  std::string to_csv() const; // per-group / per-fold rows
};

}  // namespace echo
