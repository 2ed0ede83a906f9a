#include "hsdeg/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hsdeg/errors.hpp"
#include "hsdeg/parallel.hpp"
#include "hsdeg/rng.hpp"

namespace hsdeg {

void LabeledSamples::validate() const {
  if (features.size() != labels.size()) {
    throw ShapeError("samples: " + std::to_string(features.size()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (!ids.empty() && ids.size() != features.size()) {
    throw ShapeError("samples: ids length does not match row count");
  }
  for (std::size_t r = 0; r < features.size(); ++r) {
    if (features[r].size() != feature_names.size()) {
      throw ShapeError("samples: row " + std::to_string(r) + " has " +
                       std::to_string(features[r].size()) + " features, expected " +
                       std::to_string(feature_names.size()));
    }
    for (double v : features[r]) {
      if (!std::isfinite(v)) throw DomainError("samples: row " + std::to_string(r) + " has a non-finite value");
    }
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= class_names.size()) {
      throw DomainError("samples: row " + std::to_string(r) + " has label id " +
                        std::to_string(labels[r]) + " outside the class set");
    }
  }
}

LabeledSamples LabeledSamples::select_rows(const std::vector<std::size_t>& rows) const {
  LabeledSamples out;
  out.feature_names = feature_names;
  out.class_names = class_names;
  for (std::size_t r : rows) {
    out.features.push_back(features.at(r));
    out.labels.push_back(labels.at(r));
    if (!ids.empty()) out.ids.push_back(ids.at(r));
  }
  return out;
}

LabeledSamples LabeledSamples::select_columns(const std::vector<std::size_t>& cols) const {
  LabeledSamples out;
  out.class_names = class_names;
  out.labels = labels;
  out.ids = ids;
  for (std::size_t c : cols) out.feature_names.push_back(feature_names.at(c));
  out.features.reserve(features.size());
  for (const auto& row : features) {
    std::vector<double> picked;
    picked.reserve(cols.size());
    for (std::size_t c : cols) picked.push_back(row.at(c));
    out.features.push_back(std::move(picked));
  }
  return out;
}

namespace {

std::vector<double> column(const LabeledSamples& s, std::size_t c) {
  std::vector<double> out;
  out.reserve(s.rows());
  for (const auto& row : s.features) out.push_back(row[c]);
  return out;
}

double variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss;
}

double abs_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a == b) return 1.0;
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb));
}

}  // namespace

std::vector<std::size_t> pearson_filter(const LabeledSamples& samples, double rho_max) {
  if (!(rho_max > 0.0 && rho_max <= 1.0)) throw ParameterError("rho_max must be in (0, 1]");
  if (samples.rows() < 3) {
    throw SampleSizeError("pearson_filter needs at least 3 samples, got " +
                          std::to_string(samples.rows()));
  }
  std::vector<std::size_t> kept;
  std::vector<std::vector<double>> kept_columns;
  for (std::size_t c = 0; c < samples.cols(); ++c) {
    auto col = column(samples, c);
    if (variance(col) == 0.0) continue;
    bool redundant = false;
    for (const auto& other : kept_columns) {
      if (!(abs_pearson(col, other) < rho_max)) {
        redundant = true;
        break;
      }
    }
    if (!redundant) {
      kept.push_back(c);
      kept_columns.push_back(std::move(col));
    }
  }
  return kept;
}

double gini(const std::vector<double>& counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

namespace {

int argmax_lowest(const std::vector<double>& counts) {
  int best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

struct TreeBuilder {
  const LabeledSamples& samples;
  const ForestConfig& config;
  std::size_t n_classes;
  std::size_t max_depth;
  std::size_t features_per_split;
  Rng rng;
  double root_size = 0.0;
  DecisionTree tree;
  std::vector<double> importance;

  std::vector<double> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<double> h(n_classes, 0.0);
    for (std::size_t r : rows) h[static_cast<std::size_t>(samples.labels[r])] += 1.0;
    return h;
  }

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    TreeNode node;
    node.counts = histogram(rows);
    node.depth = depth;
    const double n = static_cast<double>(rows.size());
    const double node_gini = gini(node.counts);

    const bool can_split = depth < max_depth && node_gini > 0.0 &&
                           rows.size() >= 2 * config.min_leaf;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    if (can_split) {
      const std::size_t d = samples.cols();
      std::vector<std::size_t> features(d);
      std::iota(features.begin(), features.end(), 0);
      for (std::size_t i = 0; i < features_per_split; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(features[i], features[pick(rng)]);
      }
      std::vector<std::size_t> sorted = rows;
      for (std::size_t fi = 0; fi < features_per_split; ++fi) {
        const std::size_t f = features[fi];
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
          return samples.features[a][f] < samples.features[b][f];
        });
        std::vector<double> left(n_classes, 0.0);
        std::vector<double> right = node.counts;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
          const auto k = static_cast<std::size_t>(samples.labels[sorted[i]]);
          left[k] += 1.0;
          right[k] -= 1.0;
          const double lo = samples.features[sorted[i]][f];
          const double hi = samples.features[sorted[i + 1]][f];
          if (!(lo < hi)) continue;
          const std::size_t n_left = i + 1;
          const std::size_t n_right = sorted.size() - n_left;
          if (n_left < config.min_leaf || n_right < config.min_leaf) continue;
          const double score = (static_cast<double>(n_left) * gini(left) +
                                static_cast<double>(n_right) * gini(right)) / n;
          if (score < best_score) {
            best_score = score;
            best_feature = static_cast<int>(f);
            const double mid = lo + 0.5 * (hi - lo);
            best_threshold = mid < hi ? mid : lo;
          }
        }
      }
    }

    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)] = std::move(node);
      return id;
    }

    importance[static_cast<std::size_t>(best_feature)] +=
        (n / root_size) * (node_gini - best_score);
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (samples.features[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_rows
                                                                                   : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    node.feature = best_feature;
    node.threshold = best_threshold;
    tree.nodes[static_cast<std::size_t>(id)] = node;
    const int l = build(std::move(left_rows), depth + 1);
    const int r = build(std::move(right_rows), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

std::size_t resolve_features_per_split(const ForestConfig& config, std::size_t d) {
  if (config.features_per_split == 0) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  }
  return std::min(config.features_per_split, d);
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(const std::vector<double>& row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes[i];
}

int DecisionTree::predict(const std::vector<double>& row) const {
  return argmax_lowest(leaf_for(row).counts);
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

ForestModel train_forest(const LabeledSamples& samples, const ForestConfig& config) {
  samples.validate();
  if (samples.rows() == 0 || samples.cols() == 0) {
    throw DegenerateError("train_forest: empty feature table");
  }
  std::vector<bool> present(samples.class_names.size(), false);
  for (int l : samples.labels) present[static_cast<std::size_t>(l)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw DegenerateError("train_forest: training data contains a single class");
  }
  if (config.n_trees == 0) throw ParameterError("forest.n_trees must be >= 1");
  if (config.min_leaf == 0) throw ParameterError("forest.min_leaf must be >= 1");

  const std::size_t d = samples.cols();
  const std::size_t n = samples.rows();
  ForestModel model;
  model.config = config;
  model.feature_names = samples.feature_names;
  model.classes = samples.class_names;
  model.trees.resize(config.n_trees);
  std::vector<std::vector<double>> tree_importance(config.n_trees);

  parallel_for(config.n_trees, config.threads, [&](std::size_t t) {
    TreeBuilder builder{samples,
                        config,
                        samples.class_names.size(),
                        config.max_depth == 0 ? std::numeric_limits<std::size_t>::max()
                                              : config.max_depth,
                        resolve_features_per_split(config, d),
                        make_rng(config.seed, t),
                        0.0,
                        {},
                        std::vector<double>(d, 0.0)};
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(builder.rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    builder.root_size = static_cast<double>(n);
    builder.build(std::move(rows), 0);
    model.trees[t] = std::move(builder.tree);
    tree_importance[t] = std::move(builder.importance);
  });

  model.importances.assign(d, 0.0);
  for (const auto& imp : tree_importance) {
    for (std::size_t f = 0; f < d; ++f) model.importances[f] += imp[f];
  }
  for (double& v : model.importances) v /= static_cast<double>(config.n_trees);
  const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
  for (double& v : model.importances) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(d);
  return model;
}

Prediction predict(const ForestModel& model, const std::vector<double>& row) {
  if (row.size() != model.feature_names.size()) {
    throw ShapeError("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                     std::to_string(model.feature_names.size()));
  }
  Prediction p;
  p.votes.assign(model.classes.size(), 0);
  for (const auto& tree : model.trees) ++p.votes[static_cast<std::size_t>(tree.predict(row))];
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.votes.size(); ++k) {
    if (p.votes[k] > p.votes[best]) best = k;
  }
  p.label = static_cast<int>(best);
  return p;
}

std::vector<std::pair<std::string, double>> importance_report(const ForestModel& model) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t f = 0; f < model.feature_names.size(); ++f) {
    out.emplace_back(model.feature_names[f], model.importances.at(f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

std::vector<std::vector<std::size_t>> confusion_matrix(const ForestModel& model,
                                                       const LabeledSamples& test) {
  test.validate();
  if (test.rows() == 0) throw SampleSizeError("confusion_matrix: empty test set");
  const std::size_t k = model.classes.size();
  std::vector<std::vector<std::size_t>> m(k, std::vector<std::size_t>(k, 0));
  for (std::size_t r = 0; r < test.rows(); ++r) {
    const auto truth = static_cast<std::size_t>(test.labels[r]);
    if (truth >= k) throw DomainError("confusion_matrix: label outside the model's class set");
    ++m[truth][static_cast<std::size_t>(predict(model, test.features[r]).label)];
  }
  return m;
}

double accuracy(const std::vector<std::vector<std::size_t>>& confusion) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    for (std::size_t j = 0; j < confusion[i].size(); ++j) {
      total += confusion[i][j];
      if (i == j) hit += confusion[i][j];
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const LabeledSamples& samples, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("split must be in (0, 1)");
  }
  std::vector<std::size_t> train, test;
  for (std::size_t k = 0; k < samples.class_names.size(); ++k) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      if (static_cast<std::size_t>(samples.labels[r]) == k) members.push_back(r);
    }
    if (members.empty()) continue;
    Rng rng = make_rng(seed, k);
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

LabeledSamples parse_samples_csv(const std::string& text,
                                 const std::vector<std::string>& class_names) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) header = split_csv_line(line, line_no);
  }
  if (header.empty()) throw ParseError("csv: missing header row");

  std::ptrdiff_t label_col = -1;
  std::ptrdiff_t path_col = -1;
  std::vector<std::size_t> feature_cols;
  LabeledSamples out;
  out.class_names = class_names;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      label_col = static_cast<std::ptrdiff_t>(i);
    } else if (header[i] == "path") {
      path_col = static_cast<std::ptrdiff_t>(i);
    } else {
      feature_cols.push_back(i);
      out.feature_names.push_back(header[i]);
    }
  }
  if (label_col < 0) throw ParseError("csv: header has no \"label\" column");

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const auto& label = fields[static_cast<std::size_t>(label_col)];
    const auto it = std::find(class_names.begin(), class_names.end(), label);
    if (it == class_names.end()) {
      throw ParseError("csv line " + std::to_string(line_no) + ": label \"" + label +
                       "\" is not a known class");
    }
    out.labels.push_back(static_cast<int>(it - class_names.begin()));
    std::vector<double> row;
    for (std::size_t c : feature_cols) {
      const auto& s = fields[c];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size() || !std::isfinite(v)) {
        throw ParseError("csv line " + std::to_string(line_no) + ": column \"" + header[c] +
                         "\" has non-numeric value \"" + s + "\"");
      }
      row.push_back(v);
    }
    out.features.push_back(std::move(row));
    if (path_col >= 0) out.ids.push_back(fields[static_cast<std::size_t>(path_col)]);
  }
  return out;
}

namespace {

nlohmann::json node_to_json(const DecisionTree& tree, std::size_t i) {
  const auto& n = tree.nodes[i];
  nlohmann::json j{{"counts", n.counts}};
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(tree, static_cast<std::size_t>(n.left));
    j["right"] = node_to_json(tree, static_cast<std::size_t>(n.right));
  }
  return j;
}

int node_from_json(const nlohmann::json& j, DecisionTree& tree, std::size_t depth,
                   std::size_t n_features) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  TreeNode node;
  node.depth = depth;
  node.counts = j.at("counts").get<std::vector<double>>();
  if (j.contains("feature")) {
    node.feature = j.at("feature").get<int>();
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
      throw ParseError("model.trees: split feature index out of range");
    }
    node.threshold = j.at("threshold").get<double>();
    tree.nodes[static_cast<std::size_t>(id)] = node;
    const int l = node_from_json(j.at("left"), tree, depth + 1, n_features);
    const int r = node_from_json(j.at("right"), tree, depth + 1, n_features);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
  } else {
    tree.nodes[static_cast<std::size_t>(id)] = node;
  }
  return id;
}

}  // namespace

void to_json(nlohmann::json& j, const ForestModel& model) {
  const auto& c = model.config;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
  j = nlohmann::json{
      {"config",
       {{"n_trees", c.n_trees},
        {"max_depth", c.max_depth},
        {"min_leaf", c.min_leaf},
        {"features_per_split", c.features_per_split},
        {"seed", c.seed},
        {"bootstrap", c.bootstrap}}},
      {"feature_names", model.feature_names},
      {"classes", model.classes},
      {"importances", model.importances},
      {"trees", trees},
  };
}

void from_json(const nlohmann::json& j, ForestModel& model) {
  try {
    const auto& c = j.at("config");
    model.config.n_trees = c.at("n_trees").get<std::size_t>();
    model.config.max_depth = c.at("max_depth").get<std::size_t>();
    model.config.min_leaf = c.at("min_leaf").get<std::size_t>();
    model.config.features_per_split = c.at("features_per_split").get<std::size_t>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.bootstrap = c.at("bootstrap").get<bool>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.classes = j.at("classes").get<std::vector<std::string>>();
    model.importances = j.at("importances").get<std::vector<double>>();
    model.trees.clear();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      node_from_json(t, tree, 0, model.feature_names.size());
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (model.importances.size() != model.feature_names.size()) {
    throw ParseError("model.importances: length does not match feature_names");
  }
}

}  // namespace hsdeg
