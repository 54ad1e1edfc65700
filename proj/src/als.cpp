#include "repconf/als.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "repconf/detail/csv.hpp"
#include "repconf/detail/parallel.hpp"

namespace repconf::als {

namespace {

// Box-Muller on top of mt19937_64 rather than std::normal_distribution,
// whose stream is implementation-defined.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;          // [0, 1)
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = mag * std::sin(angle);
    has_spare_ = true;
    return mag * std::cos(angle);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Neighbor {
  std::int32_t index = 0;
  double w = 0.0;
};

using Adjacency = std::vector<std::vector<Neighbor>>;

// Solves one side's rows against the frozen side G. For row u with neighbors
// (v, w): (G^T G + sum_v w y_v y_v^T + lambda I) x = sum_v (1 + w) y_v.
void solve_side(Eigen::MatrixXd& rows, const Eigen::MatrixXd& frozen, const Adjacency& adj,
                double lambda, unsigned threads) {
  const int d = static_cast<int>(frozen.cols());
  Eigen::MatrixXd gram = frozen.transpose() * frozen;
  gram.diagonal().array() += lambda;
  detail::parallel_for(adj.size(), threads, [&](std::size_t u) {
    Eigen::MatrixXd a = gram;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (const Neighbor& nb : adj[u]) {
      const auto y = frozen.row(nb.index).transpose();
      a.noalias() += nb.w * y * y.transpose();
      b.noalias() += (1.0 + nb.w) * y;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
      std::cerr << "warning: jittering singular system for row " << u << "\n";
      a.diagonal().array() += lambda;
      ldlt.compute(a);
      if (ldlt.info() != Eigen::Success) {
        throw std::runtime_error("row solve failed after jitter");
      }
    }
    rows.row(u) = ldlt.solve(b).transpose();
  });
}

}  // namespace

FactorModel train(const weights::WeightMatrix& w, const AlsConfig& cfg, unsigned threads,
                  std::vector<double>* half_sweep_objectives) {
  if (w.triplets.empty()) throw std::invalid_argument("train: empty weight matrix");
  if (cfg.n_factors < 1 || cfg.reg_lambda <= 0.0 || cfg.n_iterations < 1 ||
      cfg.init_scale <= 0.0) {
    throw std::invalid_argument("train: invalid config");
  }
  const int d = cfg.n_factors;

  FactorModel model;
  model.config = cfg;
  model.user_factors.resize(w.n_users, d);
  model.item_factors.resize(w.n_items, d);
  GaussianSource noise(cfg.seed);
  for (std::int32_t u = 0; u < w.n_users; ++u) {
    for (int f = 0; f < d; ++f) model.user_factors(u, f) = cfg.init_scale * noise.next();
  }
  for (std::int32_t v = 0; v < w.n_items; ++v) {
    for (int f = 0; f < d; ++f) model.item_factors(v, f) = cfg.init_scale * noise.next();
  }

  Adjacency by_user(w.n_users), by_item(w.n_items);
  for (const weights::WeightTriplet& t : w.triplets) {
    by_user[t.user].push_back({t.item, t.w});
    by_item[t.item].push_back({t.user, t.w});
  }

  for (int iter = 0; iter < cfg.n_iterations; ++iter) {
    solve_side(model.user_factors, model.item_factors, by_user, cfg.reg_lambda, threads);
    if (half_sweep_objectives != nullptr) half_sweep_objectives->push_back(objective(model, w));
    solve_side(model.item_factors, model.user_factors, by_item, cfg.reg_lambda, threads);
    if (half_sweep_objectives != nullptr) half_sweep_objectives->push_back(objective(model, w));
    if (!model.user_factors.allFinite() || !model.item_factors.allFinite()) {
      throw std::runtime_error("train: non-finite factors at sweep " + std::to_string(iter + 1));
    }
  }
  return model;
}

double objective(const FactorModel& model, const weights::WeightMatrix& w) {
  const Eigen::MatrixXd& x = model.user_factors;
  const Eigen::MatrixXd& y = model.item_factors;
  const Eigen::MatrixXd gram = y.transpose() * y;
  // sum over all pairs of (x . y)^2, then corrected per stored pair.
  double value = (x * gram).cwiseProduct(x).sum();
  for (const weights::WeightTriplet& t : w.triplets) {
    const double s = x.row(t.user).dot(y.row(t.item));
    value += (1.0 + t.w) * (1.0 - s) * (1.0 - s) - s * s;
  }
  value += model.config.reg_lambda * (x.squaredNorm() + y.squaredNorm());
  return value;
}

std::vector<std::pair<std::int32_t, double>> recommend(
    const FactorModel& model, std::int32_t user, const std::unordered_set<std::int32_t>& exclude,
    int k) {
  if (user < 0 || user >= model.user_factors.rows()) {
    throw std::out_of_range("recommend: unknown user " + std::to_string(user));
  }
  std::vector<std::pair<std::int32_t, double>> scored;
  if (k <= 0) return scored;
  const Eigen::VectorXd scores = model.item_factors * model.user_factors.row(user).transpose();
  const auto n_items = static_cast<std::int32_t>(model.item_factors.rows());
  scored.reserve(n_items);
  for (std::int32_t v = 0; v < n_items; ++v) {
    if (exclude.contains(v)) continue;
    scored.emplace_back(v, scores(v));
  }
  const auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (static_cast<std::size_t>(k) < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

void write_model(const std::string& path, const FactorModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# n_users=" << model.user_factors.rows() << " n_items=" << model.item_factors.rows()
      << " d=" << model.user_factors.cols() << " seed=" << model.config.seed << '\n';
  const auto dump = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        out << detail::format_double(m(r, c));
      }
      out << '\n';
    }
  };
  dump(model.user_factors);
  dump(model.item_factors);
  if (!out) throw std::runtime_error("write failed: " + path);
}

FactorModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw std::runtime_error(path + ": missing model header");
  }
  detail::strip_cr(line);
  std::int64_t n_users = -1, n_items = -1, d = -1;
  std::uint64_t seed = 0;
  {
    std::istringstream meta(line.substr(1));
    std::string token;
    while (meta >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos) throw std::runtime_error(path + ": bad header " + token);
      auto value = detail::parse_int(std::string_view(token).substr(eq + 1));
      if (!value) throw std::runtime_error(path + ": bad header " + token);
      std::string key = token.substr(0, eq);
      if (key == "n_users") {
        n_users = *value;
      } else if (key == "n_items") {
        n_items = *value;
      } else if (key == "d") {
        d = *value;
      } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(*value);
      } else {
        throw std::runtime_error(path + ": unknown header key " + key);
      }
    }
  }
  if (n_users < 1 || n_items < 1 || d < 1) {
    throw std::runtime_error(path + ": incomplete model header");
  }
  FactorModel model;
  model.config.n_factors = static_cast<int>(d);
  model.config.seed = seed;
  model.user_factors.resize(n_users, d);
  model.item_factors.resize(n_items, d);
  std::vector<std::string_view> fields;
  for (std::int64_t r = 0; r < n_users + n_items; ++r) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated model");
    detail::strip_cr(line);
    detail::split_line(line, ',', fields);
    if (static_cast<std::int64_t>(fields.size()) != d) {
      throw std::runtime_error(path + ": bad factor row " + std::to_string(r));
    }
    Eigen::MatrixXd& m = r < n_users ? model.user_factors : model.item_factors;
    const std::int64_t row = r < n_users ? r : r - n_users;
    for (std::int64_t c = 0; c < d; ++c) {
      auto v = detail::parse_double(fields[c]);
      if (!v) throw std::runtime_error(path + ": bad factor value in row " + std::to_string(r));
      m(row, c) = *v;
    }
  }
  return model;
}

}  // namespace repconf::als
