#include "iondetect/motional_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/special_functions/laguerre.hpp>
#include <boost/math/tools/minima.hpp>

#include "iondetect/errors.hpp"

namespace iondetect {

namespace {

constexpr std::size_t kMaxFockOrder = 4000;

std::vector<double> poisson_populations(double beta, std::size_t n_max) {
  std::vector<double> p(n_max + 1, 0.0);
  if (beta == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double b2 = beta * beta;
  const double log_b2 = std::log(b2);
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double nn = static_cast<double>(n);
    p[n] = std::exp(-b2 + nn * log_b2 - std::lgamma(nn + 1.0));
  }
  return p;
}

// Automatic cutoffs aim well below kFockTailTolerance so that truncated
// sums agree with untruncated ones to round-off.
constexpr double kAutoOrderTail = 1e-16;

std::size_t coherent_auto_order(double beta) {
  if (beta == 0.0) return 0;
  const double b2 = beta * beta;
  const double log_b2 = std::log(b2);
  for (std::size_t n = 0; n < kMaxFockOrder; ++n) {
    const double nn = static_cast<double>(n);
    if (nn + 2.0 <= b2) continue;
    // tail beyond n is bounded by p(n) r / (1 - r) with r = b2 / (n + 2)
    const double r = b2 / (nn + 2.0);
    const double pn = std::exp(-b2 + nn * log_b2 - std::lgamma(nn + 1.0));
    if (pn * r / (1.0 - r) < kAutoOrderTail) return n;
  }
  throw TruncationError("coherent_distribution: beta too large for the Fock cutoff");
}

std::size_t thermal_auto_order(double nbar) {
  if (nbar == 0.0) return 0;
  const double ratio = nbar / (1.0 + nbar);
  // tail beyond n is ratio^(n+1)
  const double n = std::ceil(std::log(kAutoOrderTail) / std::log(ratio)) - 1.0;
  const auto order = static_cast<std::size_t>(std::max(0.0, n));
  if (order >= kMaxFockOrder) throw TruncationError("thermal_distribution: nbar too large");
  return order;
}

std::vector<double> geometric_populations(double nbar, std::size_t n_max) {
  std::vector<double> p(n_max + 1, 0.0);
  if (nbar == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double ratio = nbar / (1.0 + nbar);
  double term = 1.0 / (1.0 + nbar);
  for (std::size_t n = 0; n <= n_max; ++n) {
    p[n] = term;
    term *= ratio;
  }
  return p;
}

double clamped_log(double x) {
  return std::log(std::max(x, std::numeric_limits<double>::min()));
}

}  // namespace

FockDistribution::FockDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DomainError("FockDistribution: empty population vector");
  for (double p : probs_) {
    if (!(p >= 0.0)) throw DomainError("FockDistribution: negative or NaN population");
  }
  const double sum = total();
  if (sum > 1.0 + 1e-12) throw DomainError("FockDistribution: total population exceeds 1");
  if (sum < 1.0 - kFockTailTolerance) {
    throw TruncationError("FockDistribution: truncation leaves tail mass " + std::to_string(1.0 - sum));
  }
}

double FockDistribution::total() const {
  return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

double FockDistribution::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
  return m;
}

std::vector<std::string> SidebandConfig::violations() const {
  std::vector<std::string> out;
  if (!(omega1 >= 0.0)) out.emplace_back("omega1: must be >= 0");
  if (!(t_rsb >= 0.0)) out.emplace_back("t_rsb: must be >= 0");
  if (!(exact_eta >= 0.0)) out.emplace_back("exact_eta: must be >= 0");
  return out;
}

FockDistribution coherent_distribution(double beta, std::optional<std::size_t> n_max) {
  if (!(beta >= 0.0)) throw DomainError("coherent_distribution: beta must be >= 0");
  return FockDistribution(poisson_populations(beta, n_max.value_or(coherent_auto_order(beta))));
}

FockDistribution thermal_distribution(double nbar, std::optional<std::size_t> n_max) {
  if (!(nbar >= 0.0)) throw DomainError("thermal_distribution: nbar must be >= 0");
  return FockDistribution(geometric_populations(nbar, n_max.value_or(thermal_auto_order(nbar))));
}

FockDistribution displaced_thermal(double beta, double nbar, std::optional<std::size_t> n_max) {
  if (!(beta >= 0.0) || !(nbar >= 0.0)) {
    throw DomainError("displaced_thermal: beta and nbar must be >= 0");
  }
  std::size_t order = n_max.value_or(std::max(coherent_auto_order(beta), thermal_auto_order(nbar)));
  for (;;) {
    const auto margin = 4 * static_cast<std::size_t>(std::ceil(beta * beta)) + 20;
    const std::size_t dim = order + margin + 1;
    Eigen::MatrixXd generator = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t n = 1; n < dim; ++n) {
      const double s = beta * std::sqrt(static_cast<double>(n));
      generator(n, n - 1) = s;   // beta a^dagger
      generator(n - 1, n) = -s;  // -beta a
    }
    const Eigen::MatrixXd displacement = generator.exp();
    const std::vector<double> thermal = geometric_populations(nbar, dim - 1);

    std::vector<double> p(order + 1, 0.0);
    for (std::size_t k = 0; k <= order; ++k) {
      double acc = 0.0;
      for (std::size_t n = 0; n < dim; ++n) {
        const double d = displacement(k, n);
        acc += thermal[n] * d * d;
      }
      p[k] = acc;
    }
    const double mass = std::accumulate(p.begin(), p.end(), 0.0);
    if (mass >= 1.0 - kFockTailTolerance) {
      // entries beyond unit mass are round-off from the exponential
      if (mass > 1.0) {
        for (double& x : p) x /= mass;
      }
      return FockDistribution(std::move(p));
    }
    if (n_max) {
      throw TruncationError("displaced_thermal: n_max = " + std::to_string(order) +
                            " leaves tail mass " + std::to_string(1.0 - mass));
    }
    order = order + order / 4 + 4;
    if (order > kMaxFockOrder) throw TruncationError("displaced_thermal: cutoff limit reached");
  }
}

double rsb_rate_factor(std::size_t n, double exact_eta) {
  if (n == 0) return 0.0;
  const double root_n = std::sqrt(static_cast<double>(n));
  if (exact_eta == 0.0) return root_n;
  // Omega_{n,n-1} / Omega_{1,0} = L_{n-1}^1(eta^2) / sqrt(n)
  return boost::math::laguerre(static_cast<unsigned>(n - 1), 1u, exact_eta * exact_eta) / root_n;
}

double rsb_population(const FockDistribution& dist, const SidebandConfig& cfg) {
  // 1 - sum p sin^2 rather than sum p cos^2: exact at t = 0 and for vacuum
  double flipped = 0.0;
  const auto probs = dist.probs();
  for (std::size_t n = 1; n < probs.size(); ++n) {
    const double s = std::sin(cfg.omega1 * rsb_rate_factor(n, cfg.exact_eta) * cfg.t_rsb);
    flipped += probs[n] * s * s;
  }
  return std::clamp(1.0 - flipped, 0.0, 1.0);
}

double rsb_population_dbeta(double beta, const SidebandConfig& cfg) {
  if (!(beta >= 0.0)) throw DomainError("rsb_population_dbeta: beta must be >= 0");
  if (beta == 0.0) return 0.0;
  const std::size_t order = coherent_auto_order(beta) + 10;
  const auto p = poisson_populations(beta, order);
  double acc = 0.0;
  for (std::size_t n = 0; n <= order; ++n) {
    const double c = std::cos(cfg.omega1 * rsb_rate_factor(n, cfg.exact_eta) * cfg.t_rsb);
    const double dp = p[n] * (2.0 * static_cast<double>(n) / beta - 2.0 * beta);
    acc += dp * c * c;
  }
  return acc;
}

std::vector<double> rsb_flopping_curve(const FockDistribution& dist, double omega1,
                                       std::span<const double> times, double exact_eta) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(rsb_population(dist, SidebandConfig{omega1, t, exact_eta}));
  return out;
}

BetaFit fit_coherent_beta(std::span<const RsbObservation> curve, double omega1, double beta_max) {
  if (curve.size() < 5) throw DomainError("fit_coherent_beta: need at least 5 time points");
  for (const auto& obs : curve) {
    if (obs.trials < 1) throw DomainError("fit_coherent_beta: trial counts must be >= 1");
    if (!(obs.p_down >= 0.0 && obs.p_down <= 1.0)) {
      throw DomainError("fit_coherent_beta: observed fractions must lie in [0, 1]");
    }
  }
  const bool all_same = std::all_of(curve.begin(), curve.end(),
                                    [&](const RsbObservation& o) { return o.p_down == curve[0].p_down; });
  const bool informative_times = std::any_of(curve.begin(), curve.end(),
                                             [](const RsbObservation& o) { return o.t > 0.0; });
  if (!informative_times || (all_same && curve[0].p_down != 1.0)) {
    throw NonIdentifiableError("fit_coherent_beta: flopping curve carries no amplitude information");
  }

  auto log_likelihood = [&](double beta) {
    const auto dist = coherent_distribution(std::abs(beta));
    double ll = 0.0;
    for (const auto& obs : curve) {
      const double p = rsb_population(dist, SidebandConfig{omega1, obs.t, 0.0});
      const double k = obs.successes();
      const double n = static_cast<double>(obs.trials);
      if (k > 0.0) ll += k * clamped_log(p);
      if (n - k > 0.0) ll += (n - k) * clamped_log(1.0 - p);
    }
    return ll;
  };

  constexpr double step = 0.01;
  double best_beta = 0.0;
  double best_ll = log_likelihood(0.0);
  for (double b = step; b <= beta_max + 0.5 * step; b += step) {
    const double ll = log_likelihood(b);
    if (ll > best_ll) {
      best_ll = ll;
      best_beta = b;
    }
  }
  const double lo = std::max(0.0, best_beta - step);
  const double hi = std::min(beta_max, best_beta + step);
  const auto [beta_hat, neg_ll] = boost::math::tools::brent_find_minima(
      [&](double b) { return -log_likelihood(b); }, lo, hi, 26);

  BetaFit fit;
  fit.beta = beta_hat;
  fit.log_likelihood = -neg_ll;
  if (best_ll > fit.log_likelihood) {
    fit.beta = best_beta;
    fit.log_likelihood = best_ll;
  }
  const double h = 1e-4 * std::max(1.0, fit.beta);
  const double curvature =
      (log_likelihood(fit.beta + h) - 2.0 * fit.log_likelihood + log_likelihood(fit.beta - h)) / (h * h);
  fit.sigma = curvature < 0.0 ? 1.0 / std::sqrt(-curvature) : std::numeric_limits<double>::infinity();
  fit.lower = std::max(0.0, fit.beta - fit.sigma);
  fit.upper = fit.beta + fit.sigma;
  return fit;
}

}  // namespace iondetect
