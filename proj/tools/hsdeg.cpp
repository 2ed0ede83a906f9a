// hsdeg: command-line front end for the degradation-analysis library.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 invariant violation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsdeg/cube.hpp"
#include "hsdeg/degrade.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/eval.hpp"
#include "hsdeg/file_io.hpp"
#include "hsdeg/metrics.hpp"
#include "hsdeg/pipeline.hpp"
#include "hsdeg/route.hpp"
#include "hsdeg/select.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hsdeg;

namespace {

json parse_json_file(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

HscDtype parse_dtype(const std::string& s) {
  if (s == "f32") return HscDtype::f32;
  return HscDtype::f64;
}

json mask_summary(const DegradedPair& pair) {
  if (!pair.mask) return nullptr;
  const auto& m = *pair.mask;
  json out = json::object();
  if (!m.missing_pixels.empty()) {
    std::size_t missing = 0;
    for (auto v : m.missing_pixels) missing += v;
    out["missing_pixels"] = missing;
    out["missing_fraction"] =
        static_cast<double>(missing) / static_cast<double>(m.missing_pixels.size());
  }
  if (!m.dropped_bands.empty() || pair.recipe.kind() == DegradationKind::BandDrop) {
    out["dropped_bands"] = m.dropped_bands;
  }
  return out;
}

fs::path numbered(const fs::path& out, std::size_t i) {
  auto p = out;
  p.replace_filename(out.stem().string() + "_" + std::to_string(i) + out.extension().string());
  return p;
}

// ---- subcommands ------------------------------------------------------------

struct SynthArgs {
  SynthSpec spec;
  fs::path output;
  std::string dtype = "f64";
};

void run_synth(const SynthArgs& a) {
  write_hsc(synth_scene(a.spec), a.output, parse_dtype(a.dtype));
}

struct DegradeArgs {
  fs::path input, recipe, output;
  std::string dtype = "f64";
};

// A recipe file holds one recipe or a list. With a list, recipe i is written
// to <stem>_<i><ext>; each output gets a <output>.json sidecar.
void run_degrade(const DegradeArgs& a) {
  const auto cube = read_hsc(a.input);
  const auto doc = parse_json_file(a.recipe);
  std::vector<DegradationRecipe> recipes;
  try {
    if (doc.is_array()) {
      for (const auto& r : doc) recipes.push_back(r.get<DegradationRecipe>());
    } else {
      recipes.push_back(doc.get<DegradationRecipe>());
    }
  } catch (const json::exception& e) {
    throw ParseError(a.recipe.string() + ": " + e.what());
  }
  if (recipes.empty()) throw ParseError(a.recipe.string() + ": empty recipe list");

  for (std::size_t i = 0; i < recipes.size(); ++i) {
    const auto pair = apply(recipes[i], cube);
    const auto out = recipes.size() == 1 ? a.output : numbered(a.output, i);
    write_hsc(pair.degraded, out, parse_dtype(a.dtype));
    json side{{"input", a.input.string()},
              {"output", out.string()},
              {"recipe", pair.recipe},
              {"sigma", pair.sigma ? json(*pair.sigma) : json(nullptr)},
              {"mask", mask_summary(pair)}};
    write_text_atomic(fs::path(out.string() + ".json"), dump(side));
  }
}

struct MetricsArgs {
  std::vector<fs::path> inputs;
  fs::path output;
  std::string label;
  bool prompt_only = false;
};

void run_metrics(const MetricsArgs& a) {
  const auto registry = MetricRegistry::standard();
  std::vector<std::string> names;
  if (a.prompt_only) {
    names.assign(DegradationPrompt::kNames.begin(), DegradationPrompt::kNames.end());
  } else {
    names = registry.names();
  }
  std::vector<MetricRow> rows;
  for (const auto& path : a.inputs) {
    const auto cube = read_hsc(path);
    MetricRow row{path.string(), a.label, {}};
    if (a.prompt_only) {
      const auto v = prompt(cube).values();
      row.values.assign(v.begin(), v.end());
    } else {
      row.values = registry.evaluate(cube);
    }
    rows.push_back(std::move(row));
  }
  write_text_atomic(a.output, format_metrics_csv(names, rows));
}

struct ForestArgs {
  ForestConfig config;
  std::string classes;
};

std::vector<std::string> class_list(const std::string& s) {
  if (s.empty()) return kDegradationClasses;
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void add_forest_flags(CLI::App* cmd, ForestArgs& f) {
  cmd->add_option("--trees", f.config.n_trees, "Number of trees")->capture_default_str();
  cmd->add_option("--max-depth", f.config.max_depth, "Maximum tree depth, 0 = unlimited")
      ->capture_default_str();
  cmd->add_option("--min-leaf", f.config.min_leaf, "Minimum samples per leaf")->capture_default_str();
  cmd->add_option("--features-per-split", f.config.features_per_split,
                  "Candidate features per split, 0 = ceil(sqrt(d))")
      ->capture_default_str();
  cmd->add_option("--seed", f.config.seed, "Forest seed")->capture_default_str();
  cmd->add_flag("--no-bootstrap{false}", f.config.bootstrap, "Train every tree on all rows");
  cmd->add_option("--threads", f.config.threads, "Worker threads")->capture_default_str();
  cmd->add_option("--classes", f.classes, "Comma-separated class names in id order");
}

struct ClassifyArgs {
  fs::path train, test, model, confusion;
  double split = 0.8;
  ForestArgs forest;
};

void run_classify(const ClassifyArgs& a) {
  const auto classes = class_list(a.forest.classes);
  auto all = parse_samples_csv(read_text_file(a.train), classes);
  LabeledSamples train, test;
  if (!a.test.empty()) {
    train = std::move(all);
    test = parse_samples_csv(read_text_file(a.test), classes);
    if (test.feature_names != train.feature_names) {
      throw ParseError(a.test.string() + ": feature columns differ from the training file");
    }
  } else {
    const auto [tr, te] = stratified_split(all, a.split, a.forest.config.seed);
    train = all.select_rows(tr);
    test = all.select_rows(te);
  }
  const auto model = train_forest(train, a.forest.config);
  const auto confusion = confusion_matrix(model, test);
  write_text_atomic(a.model, json(model).dump(1) + "\n");
  write_text_atomic(a.confusion, format_confusion_csv(classes, confusion));
  std::cout << dump(json{{"accuracy", accuracy(confusion)},
                         {"n_train", train.rows()},
                         {"n_test", test.rows()}});
}

struct SelectArgs {
  fs::path samples, output;
  double rho_max = 0.8;
  ForestArgs forest;
};

void run_select(const SelectArgs& a) {
  const auto classes = class_list(a.forest.classes);
  const auto samples = parse_samples_csv(read_text_file(a.samples), classes);
  const auto kept = pearson_filter(samples, a.rho_max);
  const auto reduced = samples.select_columns(kept);
  const auto model = train_forest(reduced, a.forest.config);
  json report{{"rho_max", a.rho_max}, {"kept", reduced.feature_names}, {"dropped", json::array()}};
  for (std::size_t c = 0; c < samples.cols(); ++c) {
    if (std::find(kept.begin(), kept.end(), c) == kept.end()) {
      report["dropped"].push_back(samples.feature_names[c]);
    }
  }
  report["importances"] = json::array();
  for (const auto& [name, value] : importance_report(model)) {
    report["importances"].push_back({{"name", name}, {"importance", value}});
  }
  write_text_atomic(a.output, dump(report));
}

struct RouteArgs {
  fs::path input, weights, write_weights, output;
  std::size_t top_k = 1;
  std::size_t experts = 4;
  std::size_t embed_dim = 64;
  std::string mode = "infer";
  std::uint64_t seed = 0;
  double noise_std = 0.01;
  bool renormalize = false;
};

void run_route(const RouteArgs& a) {
  const auto cube = read_hsc(a.input);
  const auto features = FeatureTensor::from_cube(normalize(cube));
  RouterConfig config;
  if (!a.weights.empty()) {
    config = router_from_bundle(bundle_from_json(parse_json_file(a.weights)), a.top_k, a.noise_std,
                                a.renormalize);
    if (config.n_experts != a.experts) {
      throw ShapeError("--experts " + std::to_string(a.experts) + " does not match the " +
                       std::to_string(config.n_experts) + " experts in " + a.weights.string());
    }
  } else {
    config = RouterConfig::seeded(features.channels, a.seed, a.experts, a.top_k, a.embed_dim);
    config.noise_std = a.noise_std;
    config.renormalize_gates = a.renormalize;
  }
  config.validate();
  if (!a.write_weights.empty()) {
    write_text_atomic(a.write_weights, bundle_to_json(router_bundle(config)).dump() + "\n");
  }
  const auto dp = prompt(cube);
  const auto mode = a.mode == "train" ? GateMode::Train : GateMode::Infer;
  const auto result = gate(features, embed_prompt(dp, config), config, mode, a.seed);
  json out = result;
  out["prompt"] = json::object();
  const auto values = dp.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out["prompt"][std::string(DegradationPrompt::kNames[i])] = values[i];
  }
  const auto text = dump(out);
  if (a.output.empty()) {
    std::cout << text;
  } else {
    write_text_atomic(a.output, text);
  }
}

struct EvalArgs {
  fs::path a, b;
  double peak = 1.0;
};

void run_eval(const EvalArgs& a) {
  const auto score = evaluate_quality(read_hsc(a.a), read_hsc(a.b), a.peak);
  json out;
  out["psnr_db"] = std::isinf(score.psnr_db) ? json("inf") : json(score.psnr_db);
  out["ssim"] = score.ssim;
  std::cout << out.dump() << "\n";
}

struct PipelineArgs {
  fs::path config;
  fs::path output_dir;
  unsigned threads = 0;
};

void run_pipeline_cmd(const PipelineArgs& a) {
  PipelineConfig config;
  from_json(parse_json_file(a.config), config);
  if (!a.output_dir.empty()) config.output_dir = a.output_dir;
  if (a.threads > 0) config.threads = a.threads;
  const auto result = run_pipeline(config);
  write_pipeline_outputs(config, result);
  std::cout << dump(json{{"accuracy", result.accuracy},
                         {"n_train", result.train_rows.size()},
                         {"n_test", result.test_rows.size()},
                         {"output_dir", config.output_dir.string()}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral degradation simulation, metrics, classification and routing"};
  app.require_subcommand(1);
  app.allow_extras(false);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a seeded synthetic scene");
  c_synth->add_option("output", synth.output, "Output .hsc")->required();
  c_synth->add_option("--height", synth.spec.height)->capture_default_str();
  c_synth->add_option("--width", synth.spec.width)->capture_default_str();
  c_synth->add_option("--bands", synth.spec.bands)->capture_default_str();
  c_synth->add_option("--seed", synth.spec.seed)->capture_default_str();
  c_synth->add_option("--materials", synth.spec.n_materials)->capture_default_str();
  c_synth->add_option("--texture-freqs", synth.spec.texture_freqs, "Cycles per image")
      ->capture_default_str();
  c_synth->add_option("--dtype", synth.dtype)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();

  DegradeArgs degrade;
  auto* c_degrade = app.add_subcommand("degrade", "Apply a degradation recipe (or a list) to a cube");
  c_degrade->add_option("input", degrade.input, "Input .hsc")->required();
  c_degrade->add_option("recipe", degrade.recipe, "Recipe JSON (object or list)")
      ->required();
  c_degrade->add_option("output", degrade.output, "Output .hsc; sidecar written to <output>.json")
      ->required();
  c_degrade->add_option("--dtype", degrade.dtype)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();

  MetricsArgs metrics;
  auto* c_metrics = app.add_subcommand("metrics", "Compute registry metrics per cube into a CSV");
  c_metrics->add_option("inputs", metrics.inputs, "Input .hsc files")->required();
  c_metrics->add_option("-o,--output", metrics.output, "Output CSV")->required();
  c_metrics->add_option("--label", metrics.label, "Label written on every row");
  c_metrics->add_flag("--prompt-only", metrics.prompt_only, "Only the six prompt metrics");

  ClassifyArgs classify;
  auto* c_classify = app.add_subcommand("classify", "Train a random forest and report a confusion matrix");
  c_classify->add_option("--train", classify.train, "Training samples CSV")->required();
  auto* test_opt = c_classify->add_option("--test", classify.test, "Test samples CSV");
  c_classify->add_option("--split", classify.split, "Train fraction when --test is absent")
      ->capture_default_str()->excludes(test_opt);
  c_classify->add_option("--model", classify.model, "Output model JSON")->required();
  c_classify->add_option("--confusion", classify.confusion, "Output confusion CSV")->required();
  add_forest_flags(c_classify, classify.forest);

  SelectArgs select;
  auto* c_select = app.add_subcommand("select", "Pearson filter then forest importance ranking");
  c_select->add_option("samples", select.samples, "Samples CSV")->required();
  c_select->add_option("--rho-max", select.rho_max, "Correlation threshold")->capture_default_str();
  c_select->add_option("-o,--output", select.output, "Output report JSON")->required();
  add_forest_flags(c_select, select.forest);

  RouteArgs route;
  auto* c_route = app.add_subcommand("route", "Compute the prompt of a cube and gate it over experts");
  c_route->add_option("input", route.input, "Input .hsc")->required();
  c_route->add_option("--weights", route.weights, "Weight bundle JSON (seeded weights if absent)")
      ;
  c_route->add_option("--write-weights", route.write_weights, "Write the weights used");
  c_route->add_option("--top-k", route.top_k)->capture_default_str();
  c_route->add_option("--experts", route.experts)->capture_default_str();
  c_route->add_option("--embed-dim", route.embed_dim, "Embedding size for seeded weights")
      ->capture_default_str();
  c_route->add_option("--mode", route.mode)->check(CLI::IsMember({"infer", "train"}))->capture_default_str();
  c_route->add_option("--seed", route.seed, "Seed for weights and train-mode noise")->capture_default_str();
  c_route->add_option("--noise-std", route.noise_std)->capture_default_str();
  c_route->add_flag("--renormalize", route.renormalize, "Rescale kept gates to sum 1");
  c_route->add_option("-o,--output", route.output, "Output JSON (stdout if absent)");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "PSNR and SSIM between two cubes");
  c_eval->add_option("a", eval.a, "Reference .hsc")->required();
  c_eval->add_option("b", eval.b, "Test .hsc")->required();
  c_eval->add_option("--peak", eval.peak, "Peak value (255 for 8-bit data)")->capture_default_str();

  PipelineArgs pipeline;
  auto* c_pipeline = app.add_subcommand("pipeline", "Synthesize, degrade, measure and classify");
  c_pipeline->add_option("config", pipeline.config, "Pipeline config JSON")->required();
  c_pipeline->add_option("--output-dir", pipeline.output_dir, "Override config output_dir");
  c_pipeline->add_option("--threads", pipeline.threads, "Override config threads");

  for (auto* sub : app.get_subcommands({})) sub->allow_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "hsdeg: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*c_synth) run_synth(synth);
    if (*c_degrade) run_degrade(degrade);
    if (*c_metrics) run_metrics(metrics);
    if (*c_classify) run_classify(classify);
    if (*c_select) run_select(select);
    if (*c_route) run_route(route);
    if (*c_eval) run_eval(eval);
    if (*c_pipeline) run_pipeline_cmd(pipeline);
  } catch (const DataError& e) {
    std::cerr << "hsdeg: data error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "hsdeg: invalid: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "hsdeg: data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hsdeg: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
