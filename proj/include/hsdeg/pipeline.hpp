#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsdeg/cube.hpp"
#include "hsdeg/degrade.hpp"
#include "hsdeg/select.hpp"

namespace hsdeg {

/// One degradation class of the synthetic dataset. Each recipe template is
/// {"kind": ..., "params": {...}} where a param value is a number, a list
/// of choices, or {"uniform": [lo, hi]}; one template is picked per cube.
struct ClassSpec {
  std::string label;
  std::size_t count = 0;
  std::vector<nlohmann::json> recipes;
};

enum class FeatureSet { Prompt, Registry };

struct PipelineConfig {
  SynthSpec scene;
  std::vector<ClassSpec> classes;
  double split = 0.8;
  ForestConfig forest;
  std::filesystem::path output_dir = "pipeline_out";
  std::uint64_t master_seed = 0;
  FeatureSet features = FeatureSet::Prompt;
  unsigned threads = 1;

  void validate() const;
};

/// The five-class setup: Gaussian noise sigma255 ~ U[30,70], Gaussian blur
/// K in {9,15}, super-resolution x{2,4}, inpainting rate in {0.7,0.8,0.9},
/// band drop rate in {0.1,0.2,0.3}; 32x32x31 scenes.
PipelineConfig default_pipeline_config(std::size_t per_class = 200);

/// Seed of item `index` of class `class_index`: splitmix64 mixing of the
/// master seed, class index and item index, so growing one class never
/// changes the cubes of another.
std::uint64_t item_seed(std::uint64_t master_seed, std::size_t class_index, std::size_t index);

/// Concrete recipe for one item, drawn from the class templates.
DegradationRecipe resolve_recipe(const ClassSpec& spec, std::uint64_t item_seed);

struct Dataset {
  LabeledSamples samples;
  std::vector<DegradationRecipe> recipes;
};

/// Synthesizes, degrades and measures every item. Output is independent of
/// config.threads.
Dataset build_dataset(const PipelineConfig& config);

struct PipelineResult {
  Dataset dataset;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  ForestModel model;
  std::vector<std::vector<std::size_t>> confusion;
  double accuracy = 0.0;
};

PipelineResult run_pipeline(const PipelineConfig& config);

/// samples.csv, train.csv, test.csv, model.json, confusion.csv,
/// distribution.csv and summary.json under config.output_dir.
void write_pipeline_outputs(const PipelineConfig& config, const PipelineResult& result);

std::string format_confusion_csv(const std::vector<std::string>& classes,
                                 const std::vector<std::vector<std::size_t>>& confusion);
std::string format_samples_csv(const LabeledSamples& samples);

void from_json(const nlohmann::json& j, PipelineConfig& config);

}  // namespace hsdeg
