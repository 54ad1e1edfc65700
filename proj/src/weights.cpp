#include "repconf/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "repconf/detail/csv.hpp"

namespace repconf::weights {

Scheme parse_scheme(std::string_view name) {
  if (name == "linear") return Scheme::kLinear;
  if (name == "log") return Scheme::kLog;
  if (name == "log_pop") return Scheme::kLogPop;
  if (name == "sum_post") return Scheme::kSumPost;
  if (name == "logsum_post") return Scheme::kLogsumPost;
  if (name == "sum_conf") return Scheme::kSumConf;
  throw std::invalid_argument("unknown weighting scheme: " + std::string(name));
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kLinear: return "linear";
    case Scheme::kLog: return "log";
    case Scheme::kLogPop: return "log_pop";
    case Scheme::kSumPost: return "sum_post";
    case Scheme::kLogsumPost: return "logsum_post";
    case Scheme::kSumConf: return "sum_conf";
  }
  throw std::logic_error("unreachable");
}

bool scheme_needs_grid(Scheme scheme) {
  return scheme == Scheme::kSumPost || scheme == Scheme::kLogsumPost ||
         scheme == Scheme::kSumConf;
}

std::unordered_map<std::int64_t, std::int64_t> rep_counts(const std::vector<Interaction>& ints) {
  std::unordered_map<std::int64_t, std::int64_t> reps;
  reps.reserve(ints.size());
  for (const Interaction& it : ints) {
    if (it.label) ++reps[pair_key(it.user, it.item)];
  }
  return reps;
}

ItemStats item_avg_pos(const std::vector<Interaction>& ints) {
  struct Tally {
    std::int64_t positives = 0;
    std::int64_t last_user = -1;
    std::int64_t users = 0;
  };
  std::unordered_map<std::int32_t, Tally> per_item;
  std::unordered_map<std::int64_t, std::int64_t> pair_pos = rep_counts(ints);
  for (const auto& [key, count] : pair_pos) {
    auto item = static_cast<std::int32_t>(key & 0xffffffff);
    Tally& t = per_item[item];
    t.positives += count;
    ++t.users;
  }
  ItemStats stats;
  stats.avg_pos_per_item.reserve(per_item.size());
  for (const auto& [item, t] : per_item) {
    stats.avg_pos_per_item[item] =
        static_cast<double>(t.positives) / static_cast<double>(t.users);
  }
  return stats;
}

WeightMatrix compute_weights(const std::vector<Interaction>& ints,
                             const std::vector<AnnotatedInteraction>& ann,
                             const grid::PosteriorGrid* grid, const ItemStats& item_stats,
                             const WeightConfig& cfg) {
  const bool posterior_scheme = scheme_needs_grid(cfg.scheme);
  if (posterior_scheme) {
    if (grid == nullptr) {
      throw std::invalid_argument(std::string(scheme_name(cfg.scheme)) +
                                  " weighting requires a fitted grid");
    }
    if (ann.size() != ints.size()) {
      throw std::invalid_argument("annotation does not match interactions");
    }
  }
  if (cfg.scale_alpha <= 0.0) throw std::invalid_argument("scale_alpha must be positive");
  if ((cfg.scheme == Scheme::kLog || cfg.scheme == Scheme::kLogPop) && cfg.epsilon <= 0.0) {
    throw std::invalid_argument("epsilon must be positive");
  }

  auto reps = rep_counts(ints);

  std::unordered_map<std::int64_t, double> sums;
  if (posterior_scheme) {
    sums.reserve(reps.size());
    for (const AnnotatedInteraction& a : ann) {
      const std::int64_t key = pair_key(a.user, a.item);
      if (!reps.contains(key)) continue;
      grid::InterpolatedEstimate est = grid::interpolate(
          *grid, static_cast<double>(a.playcount), a.recency_s);
      const double term = cfg.scheme == Scheme::kSumConf
                              ? est.pi_hat / (cfg.cutoff_c + est.hdi_width_hat)
                              : est.pi_hat;
      sums[key] += term;
    }
  }

  WeightMatrix out;
  for (const Interaction& it : ints) {
    out.n_users = std::max(out.n_users, it.user + 1);
    out.n_items = std::max(out.n_items, it.item + 1);
  }
  out.triplets.reserve(reps.size());
  for (const auto& [key, r] : reps) {
    const auto user = static_cast<std::int32_t>(key >> 32);
    const auto item = static_cast<std::int32_t>(key & 0xffffffff);
    double w = 0.0;
    switch (cfg.scheme) {
      case Scheme::kLinear:
        w = static_cast<double>(r);
        break;
      case Scheme::kLog:
        w = std::log1p(static_cast<double>(r) / cfg.epsilon);
        break;
      case Scheme::kLogPop: {
        auto found = item_stats.avg_pos_per_item.find(item);
        if (found == item_stats.avg_pos_per_item.end()) {
          throw std::runtime_error("item " + std::to_string(item) +
                                   " missing from item stats; stats were built from other data");
        }
        w = std::log1p(static_cast<double>(r) / (found->second * cfg.epsilon));
        break;
      }
      case Scheme::kSumPost:
        w = sums[key];
        break;
      case Scheme::kLogsumPost:
        w = std::log1p(sums[key]);
        break;
      case Scheme::kSumConf:
        w = sums[key];
        break;
    }
    w *= cfg.scale_alpha;
    if (!(w > 0.0) || !std::isfinite(w)) {
      std::cerr << "warning: dropping pair (" << user << "," << item
                << ") with nonpositive weight\n";
      continue;
    }
    out.triplets.push_back({user, item, w});
  }
  std::sort(out.triplets.begin(), out.triplets.end(),
            [](const WeightTriplet& a, const WeightTriplet& b) {
              if (a.user != b.user) return a.user < b.user;
              return a.item < b.item;
            });
  return out;
}

void write_weights(const std::string& path, const WeightMatrix& w) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# n_users=" << w.n_users << " n_items=" << w.n_items << '\n';
  out << "user,item,weight\n";
  for (const WeightTriplet& t : w.triplets) {
    out << t.user << ',' << t.item << ',' << detail::format_double(t.w) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

WeightMatrix read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  WeightMatrix w;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty weight file");
  detail::strip_cr(line);
  {
    std::istringstream meta(line.substr(line.empty() || line[0] != '#' ? 0 : 1));
    if (line.empty() || line[0] != '#') throw std::runtime_error(path + ": missing metadata");
    std::string token;
    while (meta >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos) throw std::runtime_error(path + ": bad metadata " + token);
      auto value = detail::parse_int(std::string_view(token).substr(eq + 1));
      if (!value) throw std::runtime_error(path + ": bad metadata " + token);
      std::string key = token.substr(0, eq);
      if (key == "n_users") {
        w.n_users = static_cast<std::int32_t>(*value);
      } else if (key == "n_items") {
        w.n_items = static_cast<std::int32_t>(*value);
      } else {
        throw std::runtime_error(path + ": unknown metadata key " + key);
      }
    }
  }
  std::vector<std::string_view> fields;
  bool header_seen = false;
  std::int64_t row = 1;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    ++row;
    if (!header_seen) {
      header_seen = true;
      if (line == "user,item,weight") continue;
    }
    if (line.empty()) continue;
    detail::split_line(line, ',', fields);
    auto fail = [&] {
      throw std::runtime_error(path + ": malformed weight row " + std::to_string(row));
    };
    if (fields.size() != 3) fail();
    auto user = detail::parse_int(fields[0]);
    auto item = detail::parse_int(fields[1]);
    auto weight = detail::parse_double(fields[2]);
    if (!user || !item || !weight) fail();
    w.triplets.push_back(
        {static_cast<std::int32_t>(*user), static_cast<std::int32_t>(*item), *weight});
  }
  return w;
}

}  // namespace repconf::weights
