#include "repconf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "repconf/detail/hash.hpp"
#include "repconf/detail/parallel.hpp"

namespace repconf::synth {

namespace {

constexpr double kDaySeconds = 86400.0;

void validate(const SynthConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_items < 1) throw std::invalid_argument("synth: empty population");
  if (!(0.0 < cfg.base_prob && cfg.base_prob <= cfg.peak_prob && cfg.peak_prob < 1.0)) {
    throw std::invalid_argument("synth: need 0 < base_prob <= peak_prob < 1");
  }
  if (cfg.peak_exposure < 1) throw std::invalid_argument("synth: peak_exposure < 1");
  if (cfg.satiation_rate < 0.0 || cfg.daily_boost < 0.0 || cfg.daily_sigma_s <= 0.0) {
    throw std::invalid_argument("synth: invalid modulation parameters");
  }
  if (cfg.mean_events_per_pair < 1.0 || cfg.short_gap_median_s <= 0.0 ||
      cfg.short_gap_sigma <= 0.0 || cfg.daily_gap_sigma <= 0.0 || cfg.daily_fraction < 0.0 ||
      cfg.daily_fraction > 1.0 || cfg.start_window_s < 0) {
    throw std::invalid_argument("synth: invalid gap parameters");
  }
}

struct PairRng {
  std::mt19937_64 rng;

  explicit PairRng(std::uint64_t sub_seed) : rng(sub_seed) {}

  double u01() { return static_cast<double>(rng() >> 11) * 0x1p-53; }  // [0, 1)

  double gaussian() {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

std::int64_t draw_event_count(PairRng& rng, double mean) {
  const double stop = 1.0 / mean;
  const double u = rng.u01();
  if (stop >= 1.0) return 1;
  return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-stop)));
}

std::int64_t draw_gap(PairRng& rng, const SynthConfig& cfg) {
  const bool daily = rng.u01() < cfg.daily_fraction;
  const double mu = daily ? std::log(kDaySeconds) : std::log(cfg.short_gap_median_s);
  const double sigma = daily ? cfg.daily_gap_sigma : cfg.short_gap_sigma;
  const double gap = std::exp(mu + sigma * rng.gaussian());
  return std::max<std::int64_t>(1, std::llround(gap));
}

// Replays pair (u, v) from its sub-seed; the first pass only counts, the
// second emits into a preallocated slice.
std::int64_t run_pair(const SynthConfig& cfg, std::int32_t user, std::int32_t item,
                      Interaction* out) {
  PairRng rng(detail::combine_seed(cfg.seed, static_cast<std::uint64_t>(user),
                                   static_cast<std::uint64_t>(item)));
  const std::int64_t n_events = draw_event_count(rng, cfg.mean_events_per_pair);
  if (out == nullptr) return n_events;

  std::int64_t t = cfg.start_window_s > 0
                       ? static_cast<std::int64_t>(rng.u01() * static_cast<double>(cfg.start_window_s))
                       : 0;
  int k = 0;
  std::int64_t last_positive = -1;
  for (std::int64_t i = 0; i < n_events; ++i) {
    std::optional<double> recency;
    if (last_positive >= 0) recency = static_cast<double>(t - last_positive);
    const double p = true_prob(cfg, k, recency);
    const std::uint8_t label = rng.u01() < p ? 1 : 0;
    out[i] = Interaction{user, item, t, label};
    if (label) {
      ++k;
      last_positive = t;
    }
    if (i + 1 < n_events) t += draw_gap(rng, cfg);
  }
  return n_events;
}

}  // namespace

double true_prob(const SynthConfig& cfg, int k, std::optional<double> recency_s) {
  const double x = static_cast<double>(k) / cfg.peak_exposure;
  double p = cfg.base_prob + (cfg.peak_prob - cfg.base_prob) * x * std::exp(1.0 - x);
  if (recency_s.has_value() && cfg.daily_boost > 0.0) {
    const double phase = std::fmod(*recency_s, kDaySeconds);
    const double dist = std::min(phase, kDaySeconds - phase);
    const double bump = std::exp(-dist * dist / (2.0 * cfg.daily_sigma_s * cfg.daily_sigma_s));
    p *= 1.0 + cfg.daily_boost * bump;
  }
  if (k > cfg.peak_exposure) {
    p *= std::exp(-cfg.satiation_rate * (k - cfg.peak_exposure));
  }
  return std::clamp(p, 0.01, 0.99);
}

SynthData generate(const SynthConfig& cfg, unsigned threads) {
  validate(cfg);
  const std::size_t n_pairs =
      static_cast<std::size_t>(cfg.n_users) * static_cast<std::size_t>(cfg.n_items);

  std::vector<std::int64_t> offsets(n_pairs + 1, 0);
  detail::parallel_for(n_pairs, threads, [&](std::size_t p) {
    const auto user = static_cast<std::int32_t>(p / cfg.n_items);
    const auto item = static_cast<std::int32_t>(p % cfg.n_items);
    offsets[p + 1] = run_pair(cfg, user, item, nullptr);
  });
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());

  SynthData data;
  data.truth.config = cfg;
  data.interactions.resize(static_cast<std::size_t>(offsets.back()));
  detail::parallel_for(n_pairs, threads, [&](std::size_t p) {
    const auto user = static_cast<std::int32_t>(p / cfg.n_items);
    const auto item = static_cast<std::int32_t>(p % cfg.n_items);
    run_pair(cfg, user, item, data.interactions.data() + offsets[p]);
  });

  std::sort(data.interactions.begin(), data.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              if (a.user != b.user) return a.user < b.user;
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.item < b.item;
            });
  return data;
}

}  // namespace repconf::synth
