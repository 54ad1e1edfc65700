#pragma once

#include <cstdint>

namespace repconf::bayes {

// Beta distribution shape parameters. Named a/b rather than alpha/beta to
// avoid colliding with the confidence-scale hyperparameter alpha.
struct BetaParams {
  double a = 1.0;
  double b = 1.0;

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

// Highest-density interval of a Beta distribution.
struct Hdi {
  double lo = 0.0;
  double hi = 1.0;
  double mass = 0.95;

  double width() const { return hi - lo; }
};

// Conjugate update with binomial evidence: y successes out of n trials.
// Exact arithmetic, no approximation. Throws std::invalid_argument on y > n
// or negative counts.
BetaParams posterior_update(const BetaParams& prior, std::int64_t successes, std::int64_t trials);

// Posterior mean a / (a + b).
double beta_mean(const BetaParams& p);

// Regularized incomplete beta I_x(a, b): the Beta(a, b) CDF at x.
// Continued-fraction evaluation with the symmetry switch at
// x > (a+1)/(a+b+2); absolute accuracy around 1e-12 for the shape range this
// project produces. Throws std::runtime_error if the fraction does not
// converge within the iteration cap.
double reg_inc_beta(double x, double a, double b);

// Inverse CDF: the x with |I_x(a,b) - q| <= 1e-9, by safeguarded
// Newton-bisection on the bracket [0, 1].
double beta_quantile(const BetaParams& p, double q);

// Narrowest interval containing `mass` of the Beta probability.
// Requires a > 1 and b > 1 for unimodality; golden-section search over the
// left tail probability. Falls back to the equal-tailed interval for
// non-unimodal shapes.
Hdi beta_hdi(const BetaParams& p, double mass = 0.95);

}  // namespace repconf::bayes
