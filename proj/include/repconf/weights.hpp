#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "repconf/grid.hpp"
#include "repconf/types.hpp"

namespace repconf::weights {

enum class Scheme { kLinear, kLog, kLogPop, kSumPost, kLogsumPost, kSumConf };

// Names: linear, log, log_pop, sum_post, logsum_post, sum_conf.
Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme scheme);

// True for the schemes that read interpolated posterior estimates.
bool scheme_needs_grid(Scheme scheme);

struct WeightConfig {
  Scheme scheme = Scheme::kLinear;
  double scale_alpha = 1.0;
  double epsilon = 1.0;   // log and log_pop
  double cutoff_c = 0.1;  // sum_conf
};

// Per-item average positive-interaction count, over users with at least one
// positive interaction with the item. Items with no positives are absent.
struct ItemStats {
  std::unordered_map<std::int32_t, double> avg_pos_per_item;
};

struct WeightTriplet {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double w = 0.0;
};

// Sparse nonnegative confidence weights, one triplet per pair with at least
// one positive interaction, sorted by (user, item).
struct WeightMatrix {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<WeightTriplet> triplets;
};

// Positive-label counts per pair; pairs with zero positives are absent.
std::unordered_map<std::int64_t, std::int64_t> rep_counts(const std::vector<Interaction>& ints);

ItemStats item_avg_pos(const std::vector<Interaction>& ints);

// Raw scheme weight times scale_alpha per pair. `ann` must be the annotation
// of `ints` in the same order; `grid` may be null for the count-based
// schemes. Pairs whose weight comes out nonpositive are dropped with a
// warning on stderr.
WeightMatrix compute_weights(const std::vector<Interaction>& ints,
                             const std::vector<AnnotatedInteraction>& ann,
                             const grid::PosteriorGrid* grid, const ItemStats& item_stats,
                             const WeightConfig& cfg);

// CSV user,item,weight in (user, item) order; weights in shortest
// round-trip form.
void write_weights(const std::string& path, const WeightMatrix& w);
WeightMatrix read_weights(const std::string& path);

}  // namespace repconf::weights
