#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hsdeg {

/// Degradation classes used for type identification, in class-id order.
inline const std::vector<std::string> kDegradationClasses = {
    "noise", "blur", "low_res", "regions_missing", "band_missing"};

/// Feature table: one row per cube, one column per metric.
struct LabeledSamples {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names = kDegradationClasses;
  /// Optional provenance, one per row (e.g. cube path). May be empty.
  std::vector<std::string> ids;

  std::size_t rows() const noexcept { return features.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }
  /// Throws on ragged rows, non-finite values or out-of-range labels.
  void validate() const;
  LabeledSamples select_rows(const std::vector<std::size_t>& rows) const;
  LabeledSamples select_columns(const std::vector<std::size_t>& cols) const;
};

/// Greedy redundancy filter. Zero-variance columns are dropped first; then
/// columns are scanned in order and kept iff |rho| < rho_max against every
/// column kept so far. Returns kept indices, ascending.
std::vector<std::size_t> pearson_filter(const LabeledSamples& samples, double rho_max);

/// Gini impurity of a class histogram.
double gini(const std::vector<double>& counts);

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 2;
  /// 0 selects ceil(sqrt(d)).
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  unsigned threads = 1;
};

struct TreeNode {
  /// -1 for a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Training-sample class histogram at this node.
  std::vector<double> counts;
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// CART tree stored as a node array; node 0 is the root. Rows with
/// x[feature] <= threshold go left.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  int predict(const std::vector<double>& row) const;
  const TreeNode& leaf_for(const std::vector<double>& row) const;
  std::size_t depth() const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<double> importances;
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;
  ForestConfig config;
};

/// Trains a random forest. Deterministic in (row order, config.seed) for any
/// thread count: tree t bootstraps with stream derive_seed(seed, t).
ForestModel train_forest(const LabeledSamples& samples, const ForestConfig& config);

struct Prediction {
  int label = 0;
  std::vector<std::size_t> votes;
};

/// Majority vote over trees; ties go to the lowest class id.
Prediction predict(const ForestModel& model, const std::vector<double>& row);

/// (feature name, importance), descending, ties broken by name.
std::vector<std::pair<std::string, double>> importance_report(const ForestModel& model);

/// rows = true class, columns = predicted class.
std::vector<std::vector<std::size_t>> confusion_matrix(const ForestModel& model,
                                                       const LabeledSamples& test);
double accuracy(const std::vector<std::vector<std::size_t>>& confusion);

/// Per class, a seeded shuffle then the first round(train_fraction * n_c)
/// rows go to train. Returns (train rows, test rows), each ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const LabeledSamples& samples, double train_fraction, std::uint64_t seed);

/// Reads a metrics CSV (path,label,<features...>). Labels must name a class.
LabeledSamples parse_samples_csv(const std::string& text,
                                 const std::vector<std::string>& class_names = kDegradationClasses);

void to_json(nlohmann::json& j, const ForestModel& model);
void from_json(const nlohmann::json& j, ForestModel& model);

}  // namespace hsdeg
