#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "repconf/types.hpp"

namespace repconf::ingest {

enum class Format { kCsv, kTsv };

struct ParseOptions {
  Format format = Format::kCsv;
  char delimiter = 0;       // 0 = take it from format
  bool has_header = false;
  bool strict = false;      // malformed row: throw instead of skip
};

struct ParseResult {
  std::vector<RawEvent> events;
  std::int64_t malformed_rows = 0;
};

// Rows are user_id,item_id,timestamp[,duration_ms]; duration may be an empty
// field. Malformed rows are counted and skipped in lenient mode.
ParseResult parse_events(std::istream& source, const ParseOptions& opts = {});
ParseResult parse_events_file(const std::string& path, const ParseOptions& opts = {});

struct LabeledData {
  std::vector<Interaction> interactions;  // sorted by (user, timestamp, input order)
  IdMap users;
  IdMap items;
  std::int64_t dropped_last_events = 0;   // gap mode only
};

// label = 1 iff duration_ms >= threshold_s * 1000. Every event must carry a
// duration; throws with the offending row index otherwise.
LabeledData derive_labels_duration(const std::vector<RawEvent>& events,
                                   std::int64_t threshold_s = 30);

// Gap labeling for logs without listening time: per user, an event is
// positive iff the gap to the user's next event is at least threshold_s.
// Each user's final event has no successor and is dropped.
LabeledData derive_labels_gap(const std::vector<RawEvent>& events, std::int64_t threshold_s = 30);

struct FilterConfig {
  std::int64_t min_items_per_user = 20;
  std::int64_t min_users_per_item = 100;
  std::optional<std::int64_t> rep_cap;  // drop pairs with more positives than this
};

// Iterates the user, item, and repetition-cap constraints to a fixpoint, so
// re-applying the filter is the identity. Counterpart counts are over unique
// ids regardless of label. Throws if nothing survives.
std::vector<Interaction> filter_dataset(std::vector<Interaction> ints, const FilterConfig& cfg);

DatasetStats compute_stats(const std::vector<Interaction>& ints);

// Canonical interaction file: header user,item,timestamp,label.
void write_interactions(const std::string& path, const std::vector<Interaction>& ints);
std::vector<Interaction> read_interactions(const std::string& path);

void write_id_map(const std::string& path, const IdMap& map);

// Flat key=value stats report.
void write_stats(const std::string& path, const DatasetStats& stats);

}  // namespace repconf::ingest
