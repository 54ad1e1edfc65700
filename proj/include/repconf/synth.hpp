#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "repconf/types.hpp"

namespace repconf::synth {

// Generator of repeated-consumption behavior: listen probability rises to a
// peak at peak_exposure plays, decays with satiation beyond it, and can be
// boosted when the time since the last listen sits near a whole day.
struct SynthConfig {
  std::int32_t n_users = 100;
  std::int32_t n_items = 50;
  int peak_exposure = 10;  // k*
  double base_prob = 0.55;
  double peak_prob = 0.85;
  double satiation_rate = 0.02;
  double daily_boost = 0.0;
  double daily_sigma_s = 7200.0;  // width of the near-day bump
  // Inter-event gaps: log-normal mixture of a short-session mode and a
  // 24-hour mode.
  double short_gap_median_s = 1800.0;
  double short_gap_sigma = 1.0;
  double daily_gap_sigma = 0.25;
  double daily_fraction = 0.5;
  double mean_events_per_pair = 8.0;  // geometric stopping
  std::int64_t start_window_s = 2592000;  // pair start offsets spread over 30 days
  std::uint64_t seed = 1;
};

// Listen probability at exposure k with the given time since the last
// listen; absent recency skips the periodic factor. Clamped to [0.01, 0.99].
double true_prob(const SynthConfig& cfg, int k, std::optional<double> recency_s);

struct GroundTruth {
  SynthConfig config;

  double prob(int k, std::optional<double> recency_s) const {
    return true_prob(config, k, recency_s);
  }
};

struct SynthData {
  std::vector<Interaction> interactions;  // canonical (user, timestamp) order
  GroundTruth truth;
};

// Simulates every user x item pair from a per-pair sub-seed, so output is
// byte-identical for a fixed seed regardless of thread count.
SynthData generate(const SynthConfig& cfg, unsigned threads = 1);

}  // namespace repconf::synth
