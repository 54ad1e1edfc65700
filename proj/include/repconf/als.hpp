#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "repconf/weights.hpp"

namespace repconf::als {

struct AlsConfig {
  int n_factors = 32;
  double reg_lambda = 0.01;
  int n_iterations = 15;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
};

struct FactorModel {
  Eigen::MatrixXd user_factors;  // n_users x d
  Eigen::MatrixXd item_factors;  // n_items x d
  AlsConfig config;
};

// Alternating least squares on the implicit objective
//   sum_{u,v} c_uv (p_uv - x_u . y_v)^2 + lambda (|X|_F^2 + |Y|_F^2)
// with c = 1 + w, p = 1 for stored pairs and c = 1, p = 0 elsewhere.
// Row solves use the rank-restricted update with a precomputed Gram matrix;
// the init is seeded Gaussian noise drawn identically on every platform.
// Identical inputs give bit-identical factors regardless of thread count.
// When given, half_sweep_objectives receives the objective value after every
// user-side and item-side solve (2 * n_iterations entries).
FactorModel train(const weights::WeightMatrix& w, const AlsConfig& cfg, unsigned threads = 1,
                  std::vector<double>* half_sweep_objectives = nullptr);

// Exact objective value via the Gram expansion of the all-pairs term.
double objective(const FactorModel& model, const weights::WeightMatrix& w);

// Top-k items by dot-product score, excluding `exclude`; ties break toward
// the smaller item id. k beyond the candidate pool returns the whole pool.
std::vector<std::pair<std::int32_t, double>> recommend(
    const FactorModel& model, std::int32_t user, const std::unordered_set<std::int32_t>& exclude,
    int k);

// Text dump: one '#' header line, then factor rows in shortest round-trip
// form (users first). Import is bit-exact.
void write_model(const std::string& path, const FactorModel& model);
FactorModel read_model(const std::string& path);

}  // namespace repconf::als
