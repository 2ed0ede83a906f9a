#include "hsdeg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hsdeg/errors.hpp"
#include "hsdeg/file_io.hpp"
#include "hsdeg/metrics.hpp"
#include "hsdeg/parallel.hpp"
#include "hsdeg/rng.hpp"

namespace hsdeg {

void PipelineConfig::validate() const {
  if (classes.size() < 2) throw ParameterError("pipeline.classes: need at least two classes");
  for (const auto& c : classes) {
    if (c.count < 1) throw ParameterError("pipeline.classes." + c.label + ".count must be >= 1");
    if (c.recipes.empty()) throw ParameterError("pipeline.classes." + c.label + ".recipes is empty");
  }
  if (!(split > 0.0 && split < 1.0)) throw ParameterError("pipeline.split must be in (0, 1)");
}

PipelineConfig default_pipeline_config(std::size_t per_class) {
  using nlohmann::json;
  PipelineConfig c;
  c.scene = SynthSpec{};
  c.classes = {
      {"noise", per_class, {json{{"kind", "gaussian_noise"}, {"params", {{"sigma255", {{"uniform", {30.0, 70.0}}}}}}}}},
      {"blur", per_class, {json{{"kind", "gaussian_blur"}, {"params", {{"kernel_size", {9, 15}}}}}}},
      {"low_res", per_class, {json{{"kind", "super_res"}, {"params", {{"scale", {2, 4}}}}}}},
      {"regions_missing", per_class, {json{{"kind", "inpaint"}, {"params", {{"mask_rate", {0.7, 0.8, 0.9}}}}}}},
      {"band_missing", per_class, {json{{"kind", "band_drop"}, {"params", {{"drop_rate", {0.1, 0.2, 0.3}}}}}}},
  };
  c.split = 0.8;
  c.master_seed = 2024;
  c.forest.seed = 7;
  return c;
}

std::uint64_t item_seed(std::uint64_t master_seed, std::size_t class_index, std::size_t index) {
  return derive_seed(derive_seed(master_seed, class_index), index);
}

namespace {

nlohmann::json resolve_param(const nlohmann::json& value, Rng& rng, const std::string& where) {
  if (value.is_array()) {
    if (value.empty()) throw ParseError(where + ": empty choice list");
    std::uniform_int_distribution<std::size_t> pick(0, value.size() - 1);
    return value[pick(rng)];
  }
  if (value.is_object()) {
    if (!value.contains("uniform") || value.size() != 1) {
      throw ParseError(where + ": expected a number, a list of choices or {\"uniform\": [lo, hi]}");
    }
    const auto& r = value.at("uniform");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      throw ParseError(where + ".uniform: expected [lo, hi]");
    }
    std::uniform_real_distribution<double> u(r[0].get<double>(), r[1].get<double>());
    return u(rng);
  }
  return value;
}

}  // namespace

DegradationRecipe resolve_recipe(const ClassSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, 3);
  std::uniform_int_distribution<std::size_t> pick(0, spec.recipes.size() - 1);
  const auto& tmpl = spec.recipes[spec.recipes.size() == 1 ? 0 : pick(rng)];
  if (!tmpl.is_object() || !tmpl.contains("kind")) {
    throw ParseError("pipeline.classes." + spec.label + ".recipes: template needs a \"kind\"");
  }
  nlohmann::json concrete{{"kind", tmpl.at("kind")}, {"params", nlohmann::json::object()},
                          {"seed", derive_seed(seed, 2)}};
  if (tmpl.contains("params")) {
    for (const auto& [key, value] : tmpl.at("params").items()) {
      concrete["params"][key] =
          resolve_param(value, rng, "pipeline.classes." + spec.label + ".params." + key);
    }
  }
  return concrete.get<DegradationRecipe>();
}

Dataset build_dataset(const PipelineConfig& config) {
  config.validate();
  struct Item {
    std::size_t class_index;
    std::size_t index;
  };
  std::vector<Item> items;
  for (std::size_t k = 0; k < config.classes.size(); ++k) {
    for (std::size_t i = 0; i < config.classes[k].count; ++i) items.push_back({k, i});
  }

  const auto registry = MetricRegistry::standard();
  Dataset out;
  auto& s = out.samples;
  s.class_names.clear();
  for (const auto& c : config.classes) s.class_names.push_back(c.label);
  if (config.features == FeatureSet::Prompt) {
    s.feature_names.assign(DegradationPrompt::kNames.begin(), DegradationPrompt::kNames.end());
  } else {
    s.feature_names = registry.names();
  }
  s.features.resize(items.size());
  s.labels.resize(items.size());
  s.ids.resize(items.size());
  out.recipes.resize(items.size());

  // Recipes are resolved up front so template errors surface before any work.
  for (std::size_t n = 0; n < items.size(); ++n) {
    const auto& [k, i] = items[n];
    out.recipes[n] = resolve_recipe(config.classes[k], item_seed(config.master_seed, k, i));
  }

  parallel_for(items.size(), config.threads, [&](std::size_t n) {
    const auto& [k, i] = items[n];
    SynthSpec scene = config.scene;
    scene.seed = derive_seed(item_seed(config.master_seed, k, i), 1);
    const auto pair = apply(out.recipes[n], synth_scene(scene));
    if (config.features == FeatureSet::Prompt) {
      const auto v = prompt(pair.degraded).values();
      s.features[n].assign(v.begin(), v.end());
    } else {
      s.features[n] = registry.evaluate(pair.degraded);
    }
    s.labels[n] = static_cast<int>(k);
    s.ids[n] = config.classes[k].label + "/" + std::to_string(i);
  });
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult r;
  r.dataset = build_dataset(config);
  auto [train, test] = stratified_split(r.dataset.samples, config.split, config.master_seed);
  r.train_rows = std::move(train);
  r.test_rows = std::move(test);
  ForestConfig forest = config.forest;
  forest.threads = config.threads;
  r.model = train_forest(r.dataset.samples.select_rows(r.train_rows), forest);
  r.confusion = confusion_matrix(r.model, r.dataset.samples.select_rows(r.test_rows));
  r.accuracy = accuracy(r.confusion);
  return r;
}

std::string format_samples_csv(const LabeledSamples& samples) {
  std::vector<MetricRow> rows;
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    rows.push_back({samples.ids.empty() ? std::string() : samples.ids[r],
                    samples.class_names.at(static_cast<std::size_t>(samples.labels[r])),
                    samples.features[r]});
  }
  return format_metrics_csv(samples.feature_names, rows);
}

std::string format_confusion_csv(const std::vector<std::string>& classes,
                                 const std::vector<std::vector<std::size_t>>& confusion) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& c : classes) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    out << classes.at(i);
    for (std::size_t v : confusion[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

namespace {

std::string distribution_csv(const LabeledSamples& s) {
  std::ostringstream out;
  out << "label,metric,count,mean,std,min,max\n";
  char buf[160];
  for (std::size_t k = 0; k < s.class_names.size(); ++k) {
    for (std::size_t f = 0; f < s.cols(); ++f) {
      std::vector<double> v;
      for (std::size_t r = 0; r < s.rows(); ++r) {
        if (static_cast<std::size_t>(s.labels[r]) == k) v.push_back(s.features[r][f]);
      }
      if (v.empty()) continue;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g", v.size(), mean, sd, *lo, *hi);
      out << s.class_names[k] << ',' << s.feature_names[f] << ',' << buf << '\n';
    }
  }
  return out.str();
}

}  // namespace

void write_pipeline_outputs(const PipelineConfig& config, const PipelineResult& result) {
  const auto& dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
  const auto& s = result.dataset.samples;
  write_text_atomic(dir / "samples.csv", format_samples_csv(s));
  write_text_atomic(dir / "train.csv", format_samples_csv(s.select_rows(result.train_rows)));
  write_text_atomic(dir / "test.csv", format_samples_csv(s.select_rows(result.test_rows)));
  write_text_atomic(dir / "model.json", nlohmann::json(result.model).dump(1) + "\n");
  write_text_atomic(dir / "confusion.csv", format_confusion_csv(s.class_names, result.confusion));
  write_text_atomic(dir / "distribution.csv", distribution_csv(s));
  nlohmann::json summary{{"accuracy", result.accuracy},
                         {"n_samples", s.rows()},
                         {"n_train", result.train_rows.size()},
                         {"n_test", result.test_rows.size()},
                         {"classes", s.class_names},
                         {"confusion", result.confusion}};
  write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

void from_json(const nlohmann::json& j, PipelineConfig& config) {
  if (!j.is_object()) throw ParseError("pipeline config: expected a JSON object");
  auto fail = [](const std::string& field, const std::string& what) {
    throw ParseError("pipeline." + field + ": " + what);
  };
  try {
    for (const auto& [key, value] : j.items()) {
      static const std::vector<std::string> known = {"scene", "classes", "split", "forest",
                                                     "output_dir", "master_seed", "features",
                                                     "threads"};
      if (std::find(known.begin(), known.end(), key) == known.end()) fail(key, "unknown field");
    }
    if (j.contains("scene")) {
      const auto& sc = j.at("scene");
      config.scene.height = sc.value("height", config.scene.height);
      config.scene.width = sc.value("width", config.scene.width);
      config.scene.bands = sc.value("bands", config.scene.bands);
      config.scene.n_materials = sc.value("n_materials", config.scene.n_materials);
      config.scene.texture_freqs = sc.value("texture_freqs", config.scene.texture_freqs);
    }
    if (!j.contains("classes") || !j.at("classes").is_array()) fail("classes", "required list");
    config.classes.clear();
    for (const auto& c : j.at("classes")) {
      ClassSpec spec;
      if (!c.contains("label") || !c.at("label").is_string()) fail("classes.label", "required string");
      spec.label = c.at("label").get<std::string>();
      if (!c.contains("count") || !c.at("count").is_number_integer() || c.at("count").get<long long>() < 1) {
        fail("classes." + spec.label + ".count", "required integer >= 1");
      }
      spec.count = c.at("count").get<std::size_t>();
      if (!c.contains("recipes") || !c.at("recipes").is_array()) {
        fail("classes." + spec.label + ".recipes", "required list of recipe templates");
      }
      for (const auto& r : c.at("recipes")) spec.recipes.push_back(r);
      config.classes.push_back(std::move(spec));
    }
    config.split = j.value("split", config.split);
    config.output_dir = j.value("output_dir", config.output_dir.string());
    config.master_seed = j.value("master_seed", config.master_seed);
    config.threads = j.value("threads", config.threads);
    if (j.contains("features")) {
      const auto f = j.at("features").get<std::string>();
      if (f == "prompt") {
        config.features = FeatureSet::Prompt;
      } else if (f == "registry") {
        config.features = FeatureSet::Registry;
      } else {
        fail("features", "expected \"prompt\" or \"registry\"");
      }
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      config.forest.n_trees = f.value("n_trees", config.forest.n_trees);
      config.forest.max_depth = f.value("max_depth", config.forest.max_depth);
      config.forest.min_leaf = f.value("min_leaf", config.forest.min_leaf);
      config.forest.features_per_split = f.value("features_per_split", config.forest.features_per_split);
      config.forest.seed = f.value("seed", config.forest.seed);
      config.forest.bootstrap = f.value("bootstrap", config.forest.bootstrap);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pipeline config: ") + e.what());
  }
  config.validate();
  // Surface template errors (unknown kinds, bad params) at load time.
  for (std::size_t k = 0; k < config.classes.size(); ++k) resolve_recipe(config.classes[k], 0);
}

}  // namespace hsdeg
