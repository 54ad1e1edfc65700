#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace repconf {

// One raw log row before labeling. Ids are whatever the source uses.
struct RawEvent {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;               // seconds since epoch
  std::optional<std::int64_t> duration_ms;  // listened time, absent in gap-labeled logs
};

// Labeled interaction with dense integer ids.
struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;
  std::int64_t timestamp = 0;
  std::uint8_t label = 0;  // 1 = listening event, 0 = skip

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Interaction plus its position in the pair's history.
// playcount counts the pair's prior positive labels; recency_s is the time
// since the pair's last positive label and is absent before the first one.
struct AnnotatedInteraction {
  std::int32_t user = 0;
  std::int32_t item = 0;
  std::int64_t timestamp = 0;
  std::uint8_t label = 0;
  std::int32_t playcount = 0;
  std::optional<double> recency_s;
  std::int32_t seq_index = 1;  // 1-based position within the pair
};

// Packed (user, item) key for hash maps over pairs.
constexpr std::int64_t pair_key(std::int32_t user, std::int32_t item) {
  return (static_cast<std::int64_t>(user) << 32) | static_cast<std::uint32_t>(item);
}

// Dense id <-> original string id, in first-appearance order.
struct IdMap {
  std::vector<std::string> names;  // dense id -> original

  std::size_t size() const { return names.size(); }
};

// Repetition statistics over per-pair positive counts (pairs with >= 1 positive).
struct DatasetStats {
  std::int64_t n_users = 0;
  std::int64_t n_items = 0;
  std::int64_t n_interactions = 0;
  double median_rep = 0.0;
  double mean_rep = 0.0;
  std::int64_t max_rep = 0;
  std::int64_t p99_rep = 0;
};

}  // namespace repconf
