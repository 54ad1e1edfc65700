#include "repconf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "repconf/bayes.hpp"
#include "repconf/features.hpp"

namespace repconf::eval {

namespace {

using FirstTs = std::unordered_map<std::int32_t, std::int64_t>;  // item -> earliest ts

struct UserWindows {
  std::unordered_set<std::int32_t> train_items;
  FirstTs val_first_ts;
  FirstTs test_first_ts;
};

void note_first_ts(FirstTs& firsts, std::int32_t item, std::int64_t ts) {
  auto [it, inserted] = firsts.try_emplace(item, ts);
  if (!inserted) it->second = std::min(it->second, ts);
}

std::vector<std::int32_t> pick_earliest(const FirstTs& firsts,
                                        const std::unordered_set<std::int32_t>& train_pool,
                                        const std::unordered_set<std::int32_t>& own_train,
                                        int count) {
  std::vector<std::pair<std::int64_t, std::int32_t>> eligible;
  for (const auto& [item, ts] : firsts) {
    if (train_pool.contains(item) && !own_train.contains(item)) eligible.emplace_back(ts, item);
  }
  std::sort(eligible.begin(), eligible.end());
  std::vector<std::int32_t> chosen;
  for (int i = 0; i < count && i < static_cast<int>(eligible.size()); ++i) {
    chosen.push_back(eligible[i].second);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void verify_split(const Split& split, const SplitConfig& cfg) {
  std::unordered_map<std::int32_t, std::unordered_set<std::int32_t>> train_items;
  std::unordered_set<std::int32_t> pool;
  for (const Interaction& it : split.train) {
    train_items[it.user].insert(it.item);
    pool.insert(it.item);
  }
  const auto check = [&](const std::map<std::int32_t, std::vector<std::int32_t>>& part) {
    for (const auto& [user, items] : part) {
      if (static_cast<int>(items.size()) != cfg.eval_items_per_user) {
        throw std::logic_error("split verification: wrong eval item count");
      }
      const auto& own = train_items.at(user);
      for (std::int32_t v : items) {
        if (!pool.contains(v) || own.contains(v)) {
          throw std::logic_error("split verification: ineligible eval item");
        }
      }
    }
  };
  for (const auto& [user, items] : train_items) {
    if (static_cast<int>(items.size()) < cfg.min_train_items_per_user) {
      throw std::logic_error("split verification: user below train item minimum");
    }
    if (!split.val.contains(user) || !split.test.contains(user)) {
      throw std::logic_error("split verification: train user without eval entries");
    }
  }
  if (split.val.size() != train_items.size() || split.test.size() != train_items.size()) {
    throw std::logic_error("split verification: eval entries for non-train users");
  }
  check(split.val);
  check(split.test);
}

}  // namespace

Split time_split(const std::vector<Interaction>& ints, const SplitConfig& cfg) {
  if (!(0.0 < cfg.train_frac && cfg.train_frac < cfg.val_frac_end && cfg.val_frac_end < 1.0)) {
    throw std::invalid_argument("time_split: need 0 < train_frac < val_frac_end < 1");
  }
  if (cfg.min_train_items_per_user < 1 || cfg.eval_items_per_user < 1) {
    throw std::invalid_argument("time_split: invalid per-user minima");
  }
  if (ints.empty()) throw std::invalid_argument("time_split: no interactions");

  std::int64_t tmin = ints.front().timestamp, tmax = ints.front().timestamp;
  for (const Interaction& it : ints) {
    tmin = std::min(tmin, it.timestamp);
    tmax = std::max(tmax, it.timestamp);
  }
  const double b1 = tmin + cfg.train_frac * static_cast<double>(tmax - tmin);
  const double b2 = tmin + cfg.val_frac_end * static_cast<double>(tmax - tmin);

  std::unordered_map<std::int32_t, UserWindows> windows;
  for (const Interaction& it : ints) {
    UserWindows& w = windows[it.user];
    if (it.timestamp < b1) {
      w.train_items.insert(it.item);
    } else if (it.timestamp < b2) {
      note_first_ts(w.val_first_ts, it.item, it.timestamp);
    } else {
      note_first_ts(w.test_first_ts, it.item, it.timestamp);
    }
  }

  std::unordered_set<std::int32_t> survivors;
  for (const auto& [user, w] : windows) {
    if (static_cast<int>(w.train_items.size()) >= cfg.min_train_items_per_user) {
      survivors.insert(user);
    }
  }

  const auto count_eligible = [](const FirstTs& firsts,
                                 const std::unordered_set<std::int32_t>& pool,
                                 const std::unordered_set<std::int32_t>& own) {
    int n = 0;
    for (const auto& [item, ts] : firsts) {
      if (pool.contains(item) && !own.contains(item)) ++n;
    }
    return n;
  };

  bool changed = true;
  while (changed && !survivors.empty()) {
    changed = false;
    std::unordered_set<std::int32_t> pool;
    for (std::int32_t user : survivors) {
      for (std::int32_t item : windows[user].train_items) pool.insert(item);
    }
    for (auto it = survivors.begin(); it != survivors.end();) {
      const UserWindows& w = windows[*it];
      const bool ok =
          count_eligible(w.val_first_ts, pool, w.train_items) >= cfg.eval_items_per_user &&
          count_eligible(w.test_first_ts, pool, w.train_items) >= cfg.eval_items_per_user;
      if (ok) {
        ++it;
      } else {
        it = survivors.erase(it);
        changed = true;
      }
    }
  }
  if (survivors.empty()) {
    throw std::runtime_error(
        "time_split: no user satisfies the constraints (" + std::to_string(windows.size()) +
        " users, window [" + std::to_string(tmin) + "," + std::to_string(tmax) + "])");
  }

  Split split;
  std::unordered_set<std::int32_t> pool;
  for (std::int32_t user : survivors) {
    for (std::int32_t item : windows[user].train_items) pool.insert(item);
  }
  for (const Interaction& it : ints) {
    if (it.timestamp < b1 && survivors.contains(it.user)) split.train.push_back(it);
  }
  for (std::int32_t user : survivors) {
    const UserWindows& w = windows[user];
    split.val[user] = pick_earliest(w.val_first_ts, pool, w.train_items, cfg.eval_items_per_user);
    split.test[user] =
        pick_earliest(w.test_first_ts, pool, w.train_items, cfg.eval_items_per_user);
  }
  verify_split(split, cfg);
  return split;
}

double recall_at_k(const std::vector<std::int32_t>& ranked,
                   const std::unordered_set<std::int32_t>& relevant, int k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
  int hits = 0;
  for (int p = 0; p < k && p < static_cast<int>(ranked.size()); ++p) {
    hits += relevant.contains(ranked[p]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& relevant, int k) {
  if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
  double dcg = 0.0;
  for (int p = 0; p < k && p < static_cast<int>(ranked.size()); ++p) {
    if (relevant.contains(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  double idcg = 0.0;
  const int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  for (int p = 1; p <= ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
  return dcg / idcg;
}

double MetricSeries::mean() const {
  if (runs.empty()) return 0.0;
  double sum = 0.0;
  for (double v : runs) sum += v;
  return sum / static_cast<double>(runs.size());
}

double MetricSeries::stddev() const {
  if (runs.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : runs) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(runs.size() - 1));
}

MetricsReport run_experiment(const Split& split, const weights::WeightConfig& weight_cfg,
                             const als::AlsConfig& als_cfg, const grid::PosteriorGrid* grid,
                             const ExperimentOptions& opts) {
  if (opts.n_runs < 1) throw std::invalid_argument("run_experiment: n_runs < 1");

  const std::vector<AnnotatedInteraction> ann = features::annotate(split.train);
  const weights::ItemStats item_stats = weights::item_avg_pos(split.train);
  const weights::WeightMatrix wm =
      weights::compute_weights(split.train, ann, grid, item_stats, weight_cfg);

  std::unordered_map<std::int32_t, std::unordered_set<std::int32_t>> exclude;
  for (const Interaction& it : split.train) exclude[it.user].insert(it.item);
  if (opts.exclude_val_candidates) {
    for (const auto& [user, items] : split.val) {
      for (std::int32_t v : items) exclude[user].insert(v);
    }
  }
  const auto& target = opts.on_validation ? split.val : split.test;

  MetricsReport report;
  report.n_runs = opts.n_runs;
  for (int run = 0; run < opts.n_runs; ++run) {
    als::AlsConfig run_cfg = als_cfg;
    run_cfg.seed = opts.base_seed + static_cast<std::uint64_t>(run);
    report.seeds.push_back(run_cfg.seed);
    const als::FactorModel model = als::train(wm, run_cfg, opts.threads);

    double r10 = 0.0, r20 = 0.0, n10 = 0.0, n20 = 0.0;
    for (const auto& [user, items] : target) {
      const std::unordered_set<std::int32_t> relevant(items.begin(), items.end());
      std::vector<std::int32_t> ranked;
      ranked.reserve(20);
      for (const auto& [item, score] : als::recommend(model, user, exclude[user], 20)) {
        ranked.push_back(item);
      }
      r10 += recall_at_k(ranked, relevant, 10);
      r20 += recall_at_k(ranked, relevant, 20);
      n10 += ndcg_at_k(ranked, relevant, 10);
      n20 += ndcg_at_k(ranked, relevant, 20);
    }
    const auto n_users = static_cast<double>(target.size());
    report.recall10.runs.push_back(r10 / n_users);
    report.recall20.runs.push_back(r20 / n_users);
    report.ndcg10.runs.push_back(n10 / n_users);
    report.ndcg20.runs.push_back(n20 / n_users);
  }
  return report;
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_t_test: both samples need >= 2 values");
  }
  const auto stats = [](const std::vector<double>& s) {
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - m) * (v - m);
    var /= static_cast<double>(s.size() - 1);
    return std::pair<double, double>(m, var);
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;

  TTestResult result;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 1.0, 0.0};
    result.t_stat = ma < mb ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
    result.df = 0.0;
    return result;
  }
  result.t_stat = (ma - mb) / std::sqrt(se2);
  const double ia = (va / na) * (va / na) / (na - 1.0);
  const double ib = (vb / nb) * (vb / nb) / (nb - 1.0);
  result.df = se2 * se2 / (ia + ib);
  const double t2 = result.t_stat * result.t_stat;
  result.p_value = bayes::reg_inc_beta(result.df / (result.df + t2), result.df / 2.0, 0.5);
  return result;
}

}  // namespace repconf::eval
