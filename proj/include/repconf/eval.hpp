#pragma once

#include <cstdint>
#include <map>
#include <unordered_set>
#include <vector>

#include "repconf/als.hpp"
#include "repconf/grid.hpp"
#include "repconf/types.hpp"
#include "repconf/weights.hpp"

namespace repconf::eval {

struct SplitConfig {
  double train_frac = 0.70;
  double val_frac_end = 0.85;
  int min_train_items_per_user = 10;
  int eval_items_per_user = 2;
};

// Time-based split. Every surviving user has at least
// min_train_items_per_user distinct train items and exactly
// eval_items_per_user val and test items; every val/test item appears in
// train globally and never in that user's train rows.
struct Split {
  std::vector<Interaction> train;
  std::map<std::int32_t, std::vector<std::int32_t>> val;   // user -> items, ascending
  std::map<std::int32_t, std::vector<std::int32_t>> test;  // user -> items, ascending
};

// Window boundaries at train_frac and val_frac_end of [min ts, max ts], then
// users failing any constraint are removed entirely until a fixpoint.
// Throws when no user survives. The result is re-verified internally.
Split time_split(const std::vector<Interaction>& ints, const SplitConfig& cfg);

double recall_at_k(const std::vector<std::int32_t>& ranked,
                   const std::unordered_set<std::int32_t>& relevant, int k);

// Binary relevance, 1/log2(position + 1) discounting, 1-based positions.
double ndcg_at_k(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& relevant, int k);

struct MetricSeries {
  std::vector<double> runs;

  double mean() const;
  double stddev() const;  // sample standard deviation, 0 for a single run
};

struct MetricsReport {
  int n_runs = 0;
  std::vector<std::uint64_t> seeds;
  MetricSeries recall10, recall20, ndcg10, ndcg20;
};

struct ExperimentOptions {
  int n_runs = 10;
  std::uint64_t base_seed = 0;
  bool on_validation = false;           // evaluate on val instead of test
  bool exclude_val_candidates = false;  // drop the user's val items from candidates
  unsigned threads = 1;
};

// Weights are computed once from split.train (they carry no randomness),
// then one model per run with seeds base_seed..base_seed+n_runs-1; metrics
// are macro-averaged over users. `grid` must be a train-fitted grid for the
// posterior schemes and may be null otherwise.
MetricsReport run_experiment(const Split& split, const weights::WeightConfig& weight_cfg,
                             const als::AlsConfig& als_cfg, const grid::PosteriorGrid* grid,
                             const ExperimentOptions& opts);

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};

// Welch's unequal-variance t-test, two-sided p-value from the Student-t CDF.
// Both samples need at least two values. Zero variance in both samples gives
// p = 1 on equal means and p = 0 otherwise.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace repconf::eval
