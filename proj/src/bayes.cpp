#include "repconf/bayes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace repconf::bayes {

namespace {

constexpr int kMaxCfIterations = 300;
constexpr double kCfTolerance = 1e-12;

void check_params(const BetaParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0) || !std::isfinite(p.a) || !std::isfinite(p.b)) {
    throw std::invalid_argument("beta shape parameters must be positive and finite");
  }
}

// Continued fraction for the incomplete beta (Lentz's algorithm). Converges
// quickly when x < (a+1)/(a+b+2); callers switch via the symmetry relation
// otherwise.
double beta_continued_fraction(double x, double a, double b) {
  const double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxCfIterations; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kCfTolerance) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge (a=" +
                           std::to_string(a) + ", b=" + std::to_string(b) +
                           ", x=" + std::to_string(x) + ")");
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Beta density, safe at the endpoints.
double beta_pdf(double x, double a, double b) {
  if (x <= 0.0) {
    if (a > 1.0) return 0.0;
    if (a == 1.0) return b;  // 1 / B(1, b)
    return std::numeric_limits<double>::infinity();
  }
  if (x >= 1.0) {
    if (b > 1.0) return 0.0;
    if (b == 1.0) return a;  // 1 / B(a, 1)
    return std::numeric_limits<double>::infinity();
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

}  // namespace

BetaParams posterior_update(const BetaParams& prior, std::int64_t successes, std::int64_t trials) {
  check_params(prior);
  if (successes < 0 || trials < 0) {
    throw std::invalid_argument("negative evidence counts");
  }
  if (successes > trials) {
    throw std::invalid_argument("successes exceed trials (" + std::to_string(successes) + " > " +
                                std::to_string(trials) + ")");
  }
  return {prior.a + static_cast<double>(successes),
          prior.b + static_cast<double>(trials - successes)};
}

double beta_mean(const BetaParams& p) {
  check_params(p);
  return p.a / (p.a + p.b);
}

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("reg_inc_beta requires positive shape parameters");
  }
  if (!(x >= 0.0) || !(x <= 1.0)) {
    throw std::invalid_argument("reg_inc_beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double beta_quantile(const BetaParams& p, double q) {
  check_params(p);
  if (!(q > 0.0) || !(q < 1.0)) {
    throw std::invalid_argument("beta_quantile requires q in (0, 1)");
  }
  constexpr double kCdfTol = 1e-9;
  double lo = 0.0, hi = 1.0;
  // Newton from the mean, falling back to bisection whenever a step leaves
  // the bracket or makes no progress.
  double x = p.a / (p.a + p.b);
  for (int it = 0; it < 200; ++it) {
    double f = reg_inc_beta(x, p.a, p.b) - q;
    if (std::fabs(f) <= kCdfTol) return x;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double dens = beta_pdf(x, p.a, p.b);
    double next = (dens > 0.0 && std::isfinite(dens)) ? x - f / dens : lo;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)) {
      return 0.5 * (lo + hi);
    }
    x = next;
  }
  throw std::runtime_error("beta_quantile bracket failed (a=" + std::to_string(p.a) +
                           ", b=" + std::to_string(p.b) + ", q=" + std::to_string(q) + ")");
}

Hdi beta_hdi(const BetaParams& p, double mass) {
  check_params(p);
  if (!(mass > 0.0) || !(mass < 1.0)) {
    throw std::invalid_argument("hdi mass must lie in (0, 1)");
  }
  if (p.a <= 1.0 || p.b <= 1.0) {
    // Not unimodal in the interior; use the equal-tailed interval.
    double tail = 0.5 * (1.0 - mass);
    return {beta_quantile(p, tail), beta_quantile(p, tail + mass), mass};
  }
  // Interval width Q(t + mass) - Q(t) is unimodal in t for a unimodal Beta;
  // golden-section over the left tail probability t in [0, 1 - mass].
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  const double eps = 1e-12;  // quantiles at t = 0 / 1 - mass are undefined
  double lo = eps;
  double hi = (1.0 - mass) - eps;
  if (lo >= hi) {
    double tail = 0.5 * (1.0 - mass);
    return {beta_quantile(p, tail), beta_quantile(p, tail + mass), mass};
  }
  auto width_at = [&](double t) { return beta_quantile(p, t + mass) - beta_quantile(p, t); };
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double w1 = width_at(x1);
  double w2 = width_at(x2);
  // Stop once further refinement cannot change the width beyond tolerance:
  // the t-interval is shrunk well below the 1e-6 width tolerance.
  while (hi - lo > 1e-10) {
    if (w1 <= w2) {
      hi = x2;
      x2 = x1;
      w2 = w1;
      x1 = hi - gr * (hi - lo);
      w1 = width_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      w1 = w2;
      x2 = lo + gr * (hi - lo);
      w2 = width_at(x2);
    }
  }
  double t = 0.5 * (lo + hi);
  return {beta_quantile(p, t), beta_quantile(p, t + mass), mass};
}

}  // namespace repconf::bayes
