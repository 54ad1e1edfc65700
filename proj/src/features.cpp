#include "repconf/features.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "repconf/detail/csv.hpp"

namespace repconf::features {

namespace {

struct PairState {
  std::int32_t playcount = 0;
  std::int64_t last_positive_ts = 0;
  bool has_positive = false;
  std::int64_t last_ts = 0;
  std::int32_t seq = 0;
};

}  // namespace

std::vector<AnnotatedInteraction> annotate(const std::vector<Interaction>& ints) {
  std::unordered_map<std::int64_t, PairState> state;
  state.reserve(ints.size());
  std::vector<AnnotatedInteraction> out;
  out.reserve(ints.size());
  for (const Interaction& it : ints) {
    PairState& ps = state[pair_key(it.user, it.item)];
    if (ps.seq > 0 && it.timestamp < ps.last_ts) {
      throw std::runtime_error("annotate: pair (" + std::to_string(it.user) + "," +
                               std::to_string(it.item) + ") not in timestamp order");
    }
    AnnotatedInteraction a;
    a.user = it.user;
    a.item = it.item;
    a.timestamp = it.timestamp;
    a.label = it.label;
    a.playcount = ps.playcount;
    if (ps.has_positive) {
      a.recency_s = static_cast<double>(it.timestamp - ps.last_positive_ts);
    }
    a.seq_index = ++ps.seq;
    out.push_back(a);

    ps.last_ts = it.timestamp;
    if (it.label) {
      ++ps.playcount;
      ps.last_positive_ts = it.timestamp;
      ps.has_positive = true;
    }
  }
  return out;
}

std::vector<AnnotatedInteraction> select_first_after_le(
    const std::vector<AnnotatedInteraction>& ann) {
  std::unordered_map<std::int64_t, std::uint8_t> prev_label;
  prev_label.reserve(ann.size());
  std::vector<AnnotatedInteraction> out;
  for (const AnnotatedInteraction& a : ann) {
    const std::int64_t key = pair_key(a.user, a.item);
    auto found = prev_label.find(key);
    const bool first = found == prev_label.end();
    const bool after_le = !first && found->second == 1;
    const bool repeat_le = a.label == 1 && a.playcount >= 1;
    if (first || after_le || repeat_le) out.push_back(a);
    prev_label[key] = a.label;
  }
  return out;
}

std::vector<AnnotatedInteraction> exclude_single_le_pairs(
    const std::vector<AnnotatedInteraction>& ann) {
  struct Tally {
    std::int32_t count = 0;
    std::uint8_t label = 0;
  };
  std::unordered_map<std::int64_t, Tally> tallies;
  tallies.reserve(ann.size());
  for (const AnnotatedInteraction& a : ann) {
    Tally& t = tallies[pair_key(a.user, a.item)];
    ++t.count;
    t.label = a.label;
  }
  std::vector<AnnotatedInteraction> out;
  out.reserve(ann.size());
  for (const AnnotatedInteraction& a : ann) {
    const Tally& t = tallies[pair_key(a.user, a.item)];
    if (t.count == 1 && t.label == 1) continue;
    out.push_back(a);
  }
  return out;
}

void write_annotated(const std::string& path, const std::vector<AnnotatedInteraction>& ann) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "user,item,timestamp,label,playcount,recency_s\n";
  for (const AnnotatedInteraction& a : ann) {
    out << a.user << ',' << a.item << ',' << a.timestamp << ',' << int(a.label) << ','
        << a.playcount << ',';
    if (a.recency_s.has_value()) out << detail::format_double(*a.recency_s);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace repconf::features
