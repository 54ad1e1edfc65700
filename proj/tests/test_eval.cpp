#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "repconf/eval.hpp"

using namespace repconf;
using eval::Split;
using eval::SplitConfig;

namespace {

void add(std::vector<Interaction>& ints, std::int32_t user, std::int32_t item, std::int64_t ts) {
  ints.push_back({user, item, ts, 1});
}

// Two self-sufficient users (0 and 1) spanning [0, 100]: boundary rows sit at
// exactly t = 70 (validation) and t = 85 (test).
std::vector<Interaction> two_user_dataset() {
  std::vector<Interaction> ints;
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 0, i, 2 * i);  // items 0..9, t 0..18
  add(ints, 0, 30, 70);
  add(ints, 0, 20, 71);
  add(ints, 0, 21, 71);
  add(ints, 0, 22, 73);
  add(ints, 0, 23, 90);
  add(ints, 0, 24, 91);
  add(ints, 0, 25, 100);  // never trained by anyone: ineligible
  const std::int32_t b_train[] = {20, 21, 22, 23, 24, 30, 0, 1, 2, 3};
  std::int64_t t = 11;
  for (std::int32_t item : b_train) add(ints, 1, item, t++);
  add(ints, 1, 5, 75);
  add(ints, 1, 6, 76);
  add(ints, 1, 0, 77);  // in user 1's own train: ineligible
  add(ints, 1, 9, 85);
  add(ints, 1, 7, 86);
  add(ints, 1, 8, 87);
  add(ints, 2, 0, 95);  // user 2 has no train window at all
  add(ints, 2, 1, 96);
  return ints;
}

}  // namespace

TEST_CASE("time_split windows, eligibility and earliest-two selection") {
  const Split split = eval::time_split(two_user_dataset(), SplitConfig{});

  CHECK(split.val.size() == 2);
  CHECK(split.test.size() == 2);
  CHECK(split.val.count(2) == 0);

  // t = 70 is already validation; the tie at t = 71 breaks toward item 20.
  CHECK(split.val.at(0) == std::vector<std::int32_t>{20, 30});
  CHECK(split.test.at(0) == std::vector<std::int32_t>{23, 24});
  CHECK(split.val.at(1) == std::vector<std::int32_t>{5, 6});
  // t = 85 is already test; 9 and 7 arrive before 8.
  CHECK(split.test.at(1) == std::vector<std::int32_t>{7, 9});

  CHECK(split.train.size() == 20);
  for (const Interaction& it : split.train) {
    CHECK(it.timestamp < 70);
    CHECK(it.user < 2);
  }
}

TEST_CASE("constraint failures cascade through the shared train pool") {
  std::vector<Interaction> ints;
  // User 0 never reaches the validation window, so it is removed first; user
  // 1's eval items were only trained by user 0, so it follows in the next
  // round. Users 2 and 3 sustain each other.
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 0, i, i);
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 1, 10 + i, 10 + i);
  add(ints, 1, 0, 71);
  add(ints, 1, 1, 72);
  add(ints, 1, 2, 86);
  add(ints, 1, 3, 87);
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 2, 50 + i, 20 + i);
  add(ints, 2, 70, 71);
  add(ints, 2, 71, 72);
  add(ints, 2, 72, 86);
  add(ints, 2, 73, 87);
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 3, 70 + i, 30 + i);
  add(ints, 3, 50, 73);
  add(ints, 3, 51, 74);
  add(ints, 3, 52, 88);
  add(ints, 3, 53, 89);
  add(ints, 3, 80, 100);

  const Split split = eval::time_split(ints, SplitConfig{});
  CHECK(split.val.size() == 2);
  CHECK(split.val.count(2) == 1);
  CHECK(split.val.count(3) == 1);
  CHECK(split.val.at(2) == std::vector<std::int32_t>{70, 71});
  CHECK(split.test.at(2) == std::vector<std::int32_t>{72, 73});
  CHECK(split.val.at(3) == std::vector<std::int32_t>{50, 51});
  CHECK(split.test.at(3) == std::vector<std::int32_t>{52, 53});
  for (const Interaction& it : split.train) CHECK(it.user >= 2);
}

TEST_CASE("time_split rejects bad configs and hopeless data") {
  std::vector<Interaction> ints;
  add(ints, 0, 0, 0);
  SplitConfig bad;
  bad.train_frac = 0.9;
  bad.val_frac_end = 0.8;
  CHECK_THROWS_AS(eval::time_split(ints, bad), std::invalid_argument);
  bad = SplitConfig{};
  bad.eval_items_per_user = 0;
  CHECK_THROWS_AS(eval::time_split(ints, bad), std::invalid_argument);
  CHECK_THROWS_AS(eval::time_split({}, SplitConfig{}), std::invalid_argument);
  // A single sparse user cannot satisfy the constraints.
  add(ints, 0, 1, 100);
  CHECK_THROWS_AS(eval::time_split(ints, SplitConfig{}), std::runtime_error);
}

TEST_CASE("recall counts hits over the relevant size") {
  const std::vector<std::int32_t> ranked = {1, 2, 3, 4};
  CHECK(eval::recall_at_k(ranked, {2, 9}, 10) == 0.5);
  CHECK(eval::recall_at_k(ranked, {1, 2}, 2) == 1.0);
  CHECK(eval::recall_at_k(ranked, {9}, 4) == 0.0);
  CHECK(eval::recall_at_k(ranked, {4}, 3) == 0.0);  // hit is past the cutoff
  CHECK_THROWS_AS(eval::recall_at_k(ranked, {}, 10), std::invalid_argument);
}

TEST_CASE("ndcg discounts by log2 of the 1-based position") {
  CHECK(eval::ndcg_at_k({1, 5, 6}, {1}, 10) == 1.0);
  const double third = eval::ndcg_at_k({7, 8, 2, 4}, {2, 9}, 10);
  const double expected = (1.0 / std::log2(4.0)) / (1.0 / std::log2(2.0) + 1.0 / std::log2(3.0));
  CHECK(std::abs(third - expected) < 1e-10);
  CHECK(std::abs(third - 0.3066) < 1e-4);
  CHECK(eval::ndcg_at_k({7, 8}, {2}, 10) == 0.0);
  CHECK_THROWS_AS(eval::ndcg_at_k({1}, {}, 10), std::invalid_argument);
}

TEST_CASE("ndcg is 1 exactly when the relevant items fill the top ranks") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int32_t> ranked(20);
    for (std::int32_t i = 0; i < 20; ++i) ranked[i] = i;
    std::shuffle(ranked.begin(), ranked.end(), rng);
    const int n_rel = 1 + static_cast<int>(rng() % 5);
    std::unordered_set<std::int32_t> relevant;
    while (static_cast<int>(relevant.size()) < n_rel) {
      relevant.insert(static_cast<std::int32_t>(rng() % 20));
    }
    const double v = eval::ndcg_at_k(ranked, relevant, 10);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    bool top_block = true;
    for (int p = 0; p < n_rel; ++p) top_block = top_block && relevant.contains(ranked[p]);
    if (top_block) {
      CHECK(v == 1.0);
    } else {
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("ranks past the cutoff never affect the metrics") {
  std::mt19937_64 rng(9001);
  std::vector<std::int32_t> ranked(30);
  for (std::int32_t i = 0; i < 30; ++i) ranked[i] = i;
  const std::unordered_set<std::int32_t> relevant = {3, 12, 25};
  const double r = eval::recall_at_k(ranked, relevant, 10);
  const double n = eval::ndcg_at_k(ranked, relevant, 10);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(ranked.begin() + 10, ranked.end(), rng);
    CHECK(eval::recall_at_k(ranked, relevant, 10) == r);
    CHECK(eval::ndcg_at_k(ranked, relevant, 10) == n);
  }
}

TEST_CASE("metric series aggregate as sample statistics") {
  eval::MetricSeries s;
  s.runs = {1.0, 2.0, 3.0, 4.0};
  CHECK(s.mean() == 2.5);
  CHECK(std::abs(s.stddev() - std::sqrt(5.0 / 3.0)) < 1e-12);
  s.runs = {0.5};
  CHECK(s.mean() == 0.5);
  CHECK(s.stddev() == 0.0);
}

TEST_CASE("welch t-test matches the textbook example") {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {2, 3, 4, 5, 6};
  const auto r = eval::welch_t_test(a, b);
  CHECK(std::abs(r.t_stat - (-1.0)) < 1e-12);
  CHECK(std::abs(r.df - 8.0) < 1e-12);
  CHECK(std::abs(r.p_value - oracle::t_two_sided_p(r.t_stat, r.df)) < 1e-6);
  CHECK(std::abs(r.p_value - 0.3466) < 1e-3);

  const auto sym = eval::welch_t_test(b, a);
  CHECK(sym.t_stat == -r.t_stat);
  CHECK(sym.p_value == r.p_value);
}

TEST_CASE("welch t-test degenerate and invalid inputs") {
  CHECK(eval::welch_t_test({1, 1}, {1, 1}).p_value == 1.0);
  const auto apart = eval::welch_t_test({1, 1}, {2, 2});
  CHECK(apart.p_value == 0.0);
  CHECK(apart.t_stat == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(eval::welch_t_test({1.0}, {1, 2}), std::invalid_argument);
}

TEST_CASE("experiments are reproducible run for run") {
  std::vector<Interaction> ints;
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 2, 50 + i, 20 + i);
  add(ints, 2, 70, 71);
  add(ints, 2, 71, 72);
  add(ints, 2, 72, 86);
  add(ints, 2, 73, 87);
  for (std::int32_t i = 0; i < 10; ++i) add(ints, 3, 70 + i, 30 + i);
  add(ints, 3, 50, 73);
  add(ints, 3, 51, 74);
  add(ints, 3, 52, 88);
  add(ints, 3, 53, 89);
  add(ints, 3, 80, 0);  // widen the span so both users' rows stay in train
  add(ints, 3, 80, 100);
  const Split split = eval::time_split(ints, SplitConfig{});
  REQUIRE(split.val.size() == 2);

  weights::WeightConfig wcfg;
  als::AlsConfig acfg;
  acfg.n_factors = 4;
  acfg.n_iterations = 3;
  eval::ExperimentOptions opts;
  opts.n_runs = 2;
  opts.base_seed = 11;

  const auto r1 = eval::run_experiment(split, wcfg, acfg, nullptr, opts);
  const auto r2 = eval::run_experiment(split, wcfg, acfg, nullptr, opts);
  CHECK(r1.n_runs == 2);
  CHECK(r1.seeds == std::vector<std::uint64_t>{11, 12});
  CHECK(r1.recall10.runs == r2.recall10.runs);
  CHECK(r1.ndcg20.runs == r2.ndcg20.runs);
  for (double v : r1.ndcg10.runs) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  eval::ExperimentOptions on_val = opts;
  on_val.on_validation = true;
  on_val.exclude_val_candidates = true;
  const auto rv = eval::run_experiment(split, wcfg, acfg, nullptr, on_val);
  CHECK(rv.recall10.runs.size() == 2);
}
