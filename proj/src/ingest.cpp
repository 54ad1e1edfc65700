#include "repconf/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "repconf/detail/csv.hpp"

namespace repconf::ingest {

namespace {

using detail::parse_int;
using detail::split_line;

char effective_delimiter(const ParseOptions& opts) {
  if (opts.delimiter != 0) return opts.delimiter;
  return opts.format == Format::kTsv ? '\t' : ',';
}

struct Densifier {
  std::unordered_map<std::string, std::int32_t> index;
  IdMap map;

  std::int32_t get(const std::string& name) {
    auto [it, inserted] = index.try_emplace(name, static_cast<std::int32_t>(map.names.size()));
    if (inserted) map.names.push_back(name);
    return it->second;
  }
};

// Canonical order: (user, timestamp, input order). The index tiebreak keeps
// the sort stable under equal timestamps.
void sort_canonical(std::vector<Interaction>& ints, const std::vector<std::size_t>& input_order) {
  std::vector<std::size_t> perm(ints.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t l, std::size_t r) {
    const Interaction& a = ints[l];
    const Interaction& b = ints[r];
    if (a.user != b.user) return a.user < b.user;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return input_order[l] < input_order[r];
  });
  std::vector<Interaction> sorted;
  sorted.reserve(ints.size());
  for (std::size_t i : perm) sorted.push_back(ints[i]);
  ints = std::move(sorted);
}

}  // namespace

ParseResult parse_events(std::istream& source, const ParseOptions& opts) {
  if (!source) throw std::runtime_error("unreadable event source");
  const char delim = effective_delimiter(opts);
  ParseResult result;
  std::string line;
  std::vector<std::string_view> fields;
  std::int64_t row = 0;
  bool skipped_header = !opts.has_header;
  while (std::getline(source, line)) {
    detail::strip_cr(line);
    ++row;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    if (line.empty()) continue;
    split_line(line, delim, fields);
    bool ok = fields.size() == 3 || fields.size() == 4;
    RawEvent ev;
    if (ok) {
      ev.user_id = std::string(fields[0]);
      ev.item_id = std::string(fields[1]);
      auto ts = parse_int(fields[2]);
      ok = !ev.user_id.empty() && !ev.item_id.empty() && ts.has_value() && *ts >= 0;
      if (ok) ev.timestamp = *ts;
      if (ok && fields.size() == 4 && !fields[3].empty()) {
        auto dur = parse_int(fields[3]);
        ok = dur.has_value() && *dur >= 0;
        if (ok) ev.duration_ms = *dur;
      }
    }
    if (!ok) {
      if (opts.strict) {
        throw std::runtime_error("malformed row " + std::to_string(row) + ": " + line);
      }
      ++result.malformed_rows;
      continue;
    }
    result.events.push_back(std::move(ev));
  }
  return result;
}

ParseResult parse_events_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event file: " + path);
  return parse_events(in, opts);
}

LabeledData derive_labels_duration(const std::vector<RawEvent>& events, std::int64_t threshold_s) {
  LabeledData out;
  Densifier users, items;
  out.interactions.reserve(events.size());
  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const RawEvent& ev = events[i];
    if (!ev.duration_ms.has_value()) {
      throw std::runtime_error("event " + std::to_string(i) + " has no duration_ms");
    }
    Interaction it;
    it.user = users.get(ev.user_id);
    it.item = items.get(ev.item_id);
    it.timestamp = ev.timestamp;
    it.label = *ev.duration_ms >= threshold_s * 1000 ? 1 : 0;
    order[out.interactions.size()] = i;
    out.interactions.push_back(it);
  }
  sort_canonical(out.interactions, order);
  out.users = std::move(users.map);
  out.items = std::move(items.map);
  return out;
}

LabeledData derive_labels_gap(const std::vector<RawEvent>& events, std::int64_t threshold_s) {
  LabeledData out;
  Densifier users, items;
  struct Row {
    std::int32_t user, item;
    std::int64_t timestamp;
    std::size_t input_index;
  };
  std::vector<Row> rows;
  rows.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    rows.push_back({users.get(events[i].user_id), items.get(events[i].item_id),
                    events[i].timestamp, i});
  }
  // Per user in time order, ties by input order.
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.input_index < b.input_index;
  });
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bool last_of_user = i + 1 == rows.size() || rows[i + 1].user != rows[i].user;
    if (last_of_user) {
      ++out.dropped_last_events;  // no successor, label indeterminate
      continue;
    }
    Interaction it;
    it.user = rows[i].user;
    it.item = rows[i].item;
    it.timestamp = rows[i].timestamp;
    it.label = rows[i + 1].timestamp - rows[i].timestamp >= threshold_s ? 1 : 0;
    order.push_back(rows[i].input_index);
    out.interactions.push_back(it);
  }
  sort_canonical(out.interactions, order);
  out.users = std::move(users.map);
  out.items = std::move(items.map);
  return out;
}

std::vector<Interaction> filter_dataset(std::vector<Interaction> ints, const FilterConfig& cfg) {
  const std::size_t initial = ints.size();
  bool changed = true;
  while (changed && !ints.empty()) {
    changed = false;

    std::unordered_map<std::int32_t, std::unordered_set<std::int32_t>> user_items, item_users;
    for (const Interaction& it : ints) {
      user_items[it.user].insert(it.item);
      item_users[it.item].insert(it.user);
    }
    auto keep = [&](const Interaction& it) {
      return static_cast<std::int64_t>(user_items[it.user].size()) >= cfg.min_items_per_user &&
             static_cast<std::int64_t>(item_users[it.item].size()) >= cfg.min_users_per_item;
    };
    std::size_t before = ints.size();
    std::erase_if(ints, [&](const Interaction& it) { return !keep(it); });
    changed |= ints.size() != before;

    if (cfg.rep_cap.has_value()) {
      std::unordered_map<std::int64_t, std::int64_t> positives;
      for (const Interaction& it : ints) {
        if (it.label) ++positives[pair_key(it.user, it.item)];
      }
      before = ints.size();
      std::erase_if(ints, [&](const Interaction& it) {
        auto found = positives.find(pair_key(it.user, it.item));
        return found != positives.end() && found->second > *cfg.rep_cap;
      });
      changed |= ints.size() != before;
    }
  }
  if (ints.empty()) {
    throw std::runtime_error("filter_dataset removed all interactions (input " +
                             std::to_string(initial) +
                             " rows; thresholds min_items_per_user=" +
                             std::to_string(cfg.min_items_per_user) + ", min_users_per_item=" +
                             std::to_string(cfg.min_users_per_item) + ")");
  }
  return ints;
}

DatasetStats compute_stats(const std::vector<Interaction>& ints) {
  if (ints.empty()) throw std::invalid_argument("compute_stats on empty interaction list");
  DatasetStats stats;
  stats.n_interactions = static_cast<std::int64_t>(ints.size());
  std::unordered_set<std::int32_t> users, items;
  std::unordered_map<std::int64_t, std::int64_t> positives;
  for (const Interaction& it : ints) {
    users.insert(it.user);
    items.insert(it.item);
    if (it.label) ++positives[pair_key(it.user, it.item)];
  }
  stats.n_users = static_cast<std::int64_t>(users.size());
  stats.n_items = static_cast<std::int64_t>(items.size());
  if (positives.empty()) return stats;

  std::vector<std::int64_t> counts;
  counts.reserve(positives.size());
  for (const auto& [pair, count] : positives) counts.push_back(count);
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();
  stats.max_rep = counts.back();
  stats.mean_rep =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0})) /
      static_cast<double>(n);
  stats.median_rep = n % 2 == 1
                         ? static_cast<double>(counts[n / 2])
                         : 0.5 * static_cast<double>(counts[n / 2 - 1] + counts[n / 2]);
  // Nearest-rank percentile.
  std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  stats.p99_rep = counts[rank - 1];
  return stats;
}

void write_interactions(const std::string& path, const std::vector<Interaction>& ints) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user,item,timestamp,label\n";
  for (const Interaction& it : ints) {
    out << it.user << ',' << it.item << ',' << it.timestamp << ',' << int(it.label) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Interaction> read_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path);
  std::vector<Interaction> ints;
  std::string line;
  std::vector<std::string_view> fields;
  bool first = true;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    ++row;
    if (first) {
      first = false;
      if (line == "user,item,timestamp,label") continue;
    }
    if (line.empty()) continue;
    split_line(line, ',', fields);
    auto fail = [&] {
      throw std::runtime_error(path + ": malformed interaction row " + std::to_string(row));
    };
    if (fields.size() != 4) fail();
    auto user = parse_int(fields[0]);
    auto item = parse_int(fields[1]);
    auto ts = parse_int(fields[2]);
    auto label = parse_int(fields[3]);
    if (!user || !item || !ts || !label || (*label != 0 && *label != 1)) fail();
    ints.push_back({static_cast<std::int32_t>(*user), static_cast<std::int32_t>(*item), *ts,
                    static_cast<std::uint8_t>(*label)});
  }
  return ints;
}

void write_id_map(const std::string& path, const IdMap& map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "dense_id,original_id\n";
  for (std::size_t i = 0; i < map.names.size(); ++i) {
    out << i << ',' << map.names[i] << '\n';
  }
}

void write_stats(const std::string& path, const DatasetStats& stats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "n_users=" << stats.n_users << '\n'
      << "n_items=" << stats.n_items << '\n'
      << "n_interactions=" << stats.n_interactions << '\n'
      << "median_rep=" << detail::format_double(stats.median_rep) << '\n'
      << "mean_rep=" << detail::format_double(stats.mean_rep) << '\n'
      << "max_rep=" << stats.max_rep << '\n'
      << "p99_rep=" << stats.p99_rep << '\n';
}

}  // namespace repconf::ingest
