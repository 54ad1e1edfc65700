#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "repconf/als.hpp"
#include "repconf/eval.hpp"
#include "repconf/grid.hpp"
#include "repconf/ingest.hpp"
#include "repconf/synth.hpp"
#include "repconf/weights.hpp"

namespace repconf::config {

enum class LabelMode { kDuration, kGap };

struct IngestConfig {
  ingest::Format format = ingest::Format::kCsv;
  bool has_header = false;
  bool strict = false;
  LabelMode label_mode = LabelMode::kDuration;
  std::int64_t threshold_s = 30;
  ingest::FilterConfig filter;
  bool apply_filter = true;
};

struct ExperimentConfig {
  std::vector<weights::Scheme> schemes = {
      weights::Scheme::kLinear,     weights::Scheme::kLog,        weights::Scheme::kLogPop,
      weights::Scheme::kSumPost,    weights::Scheme::kLogsumPost, weights::Scheme::kSumConf};
  int n_runs = 10;
  bool grid_search = false;
  std::vector<double> alpha_grid = {0.1, 0.5, 1.0, 1.5, 2.0, 10.0, 40.0, 100.0};
  std::vector<double> epsilon_grid = {0.1, 0.5, 0.8, 1.0, 1.5};
  std::vector<int> d_grid = {16, 32, 64};
  bool exclude_val_candidates = false;
  weights::Scheme ttest_scheme_a = weights::Scheme::kSumConf;
  weights::Scheme ttest_scheme_b = weights::Scheme::kLinear;
};

// Whole-pipeline configuration, read from a flat key=value file. Missing
// keys keep the defaults below; unknown keys are rejected. Lists are
// comma-separated. '#' lines and blank lines are ignored.
struct PipelineConfig {
  IngestConfig ingest;
  grid::GridConfig grid;
  bool grid_apply_1d_filter = false;
  weights::WeightConfig weights;
  als::AlsConfig als;
  eval::SplitConfig split;
  synth::SynthConfig synth;
  ExperimentConfig experiment;
  std::string workspace = "workspace";
};

PipelineConfig parse_config(std::istream& source);
PipelineConfig load_config(const std::string& path);

// Applies one key=value pair; throws std::invalid_argument on unknown keys
// or unparsable values.
void apply_key(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Every key with its current value, one per line, in a fixed order.
std::string echo_config(const PipelineConfig& cfg);

}  // namespace repconf::config
