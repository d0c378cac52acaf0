#include "voliv/blackscholes.hpp"

#include <cmath>
#include <limits>

#include "voliv/errors.hpp"
#include "voliv/numerics.hpp"

namespace voliv {

namespace {

constexpr double kBoundTolerance = 1e-14;
constexpr double kResolvableVol = 1e-9;

// Undiscounted out-of-the-money option value: put when K <= F, call otherwise.
double otm_undiscounted(double forward, double strike, double total_vol) {
  if (total_vol <= 0.0) return 0.0;
  const double lm = std::log(forward / strike);
  const double d1 = lm / total_vol + 0.5 * total_vol;
  const double d2 = d1 - total_vol;
  if (strike <= forward) {
    return strike * normal_cdf(-d2) - forward * normal_cdf(-d1);
  }
  return forward * normal_cdf(d1) - strike * normal_cdf(d2);
}

}  // namespace

void ForwardContract::validate() const {
  if (!(forward > 0.0) || !std::isfinite(forward)) throw DomainError("ForwardContract: forward must be > 0");
  if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("ForwardContract: maturity must be > 0");
  if (!std::isfinite(rate)) throw DomainError("ForwardContract: rate must be finite");
}

double ForwardContract::discount() const { return std::exp(-rate * maturity); }

void Smile::validate() const {
  if (log_moneyness.size() != implied_vol.size()) throw DomainError("Smile: column length mismatch");
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (!(implied_vol[i] > 0.0) || !std::isfinite(implied_vol[i])) {
      throw DomainError("Smile: implied vols must be positive and finite");
    }
    if (i > 0 && !(log_moneyness[i] > log_moneyness[i - 1])) {
      throw DomainError("Smile: log-moneyness must be strictly increasing");
    }
  }
}

double bs_put(const ForwardContract& c, double strike, double vol) {
  c.validate();
  if (!(strike > 0.0)) throw DomainError("bs_put: strike must be > 0");
  if (vol < 0.0 || std::isnan(vol)) throw DomainError("bs_put: negative vol");
  const double df = c.discount();
  const double otm = otm_undiscounted(c.forward, strike, vol * std::sqrt(c.maturity));
  if (strike <= c.forward) return df * otm;
  return df * (otm + (strike - c.forward));
}

double bs_put_vega(const ForwardContract& c, double strike, double vol) {
  c.validate();
  const double sqrt_t = std::sqrt(c.maturity);
  if (vol <= 0.0) return 0.0;
  const double d1 = std::log(c.forward / strike) / (vol * sqrt_t) + 0.5 * vol * sqrt_t;
  return c.discount() * c.forward * sqrt_t * normal_pdf(d1);
}

double implied_vol(const ForwardContract& c, double strike, double put_price) {
  c.validate();
  if (!(strike > 0.0)) throw DomainError("implied_vol: strike must be > 0");
  if (!std::isfinite(put_price)) throw DomainError("implied_vol: non-finite price");
  const double df = c.discount();
  const double lower = df * std::max(strike - c.forward, 0.0);
  const double upper = df * strike;
  const double slack = kBoundTolerance * upper;
  if (put_price <= lower + slack) {
    throw BoundsError("implied_vol: price at or below intrinsic lower bound", BoundsError::Bound::lower);
  }
  if (put_price >= upper - slack) {
    throw BoundsError("implied_vol: price at or above discounted-strike upper bound",
                      BoundsError::Bound::upper);
  }

  // Invert on the out-of-the-money side: the time value is what carries the
  // volatility information.
  const double target = put_price / df - std::max(strike - c.forward, 0.0);
  const double sqrt_t = std::sqrt(c.maturity);
  auto objective = [&](double vol) { return otm_undiscounted(c.forward, strike, vol * sqrt_t) - target; };

  double lo = 1e-6;
  double hi = 5.0;
  if (objective(lo) > 0.0) lo = 0.0;
  while (objective(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e4) {
      throw BoundsError("implied_vol: price too close to the upper bound to invert", BoundsError::Bound::upper);
    }
  }
  const double vol = find_root(objective, lo, hi, 1e-15);

  // Rounding noise in the quoted price mapped through vega. When it exceeds
  // kResolvableVol the price no longer pins the vol down and is treated like a
  // bound hit.
  const double eps = std::numeric_limits<double>::epsilon();
  const double noise = 2.0 * eps * (put_price / df + std::abs(strike - c.forward) + target);
  const double vega = bs_put_vega(ForwardContract{c.forward, 0.0, c.maturity}, strike, vol);
  if (!(vega > 0.0) || noise / vega > kResolvableVol) {
    const bool near_lower = target < 0.5 * std::min(strike, c.forward);
    throw BoundsError("implied_vol: price indistinguishable from the arbitrage bound at double precision",
                      near_lower ? BoundsError::Bound::lower : BoundsError::Bound::upper);
  }
  return vol;
}

double normalized_put(double z, double sigma, double theta) {
  if (!(theta > 0.0)) throw DomainError("normalized_put: theta must be > 0");
  if (sigma < 0.0 || std::isnan(sigma)) throw DomainError("normalized_put: sigma must be >= 0");
  const double sqrt_t = std::sqrt(theta);
  if (sigma == 0.0) {
    return std::max(std::expm1(sqrt_t * z), 0.0) / sqrt_t;
  }
  const double a = z / sigma;
  const double b = 0.5 * sigma * sqrt_t;
  return (normal_cdf(a + b) * std::exp(sqrt_t * z) - normal_cdf(a - b)) / sqrt_t;
}

double normalized_put_vega(double z, double sigma, double theta) {
  if (!(sigma > 0.0)) return 0.0;
  return normal_pdf(z / sigma - 0.5 * sigma * std::sqrt(theta));
}

std::pair<double, double> f1_f2(double k, double theta, double vol) {
  const double s = std::sqrt(theta) * vol;
  return {k / s - 0.5 * s, k / s + 0.5 * s};
}

AtmDerivatives skew_from_distribution(const std::function<double(double)>& cdf_at,
                                      const std::function<double(double)>& density_at,
                                      double sigma0, double theta, double smile_vol_at_0) {
  if (!(sigma0 > 0.0) || !(theta > 0.0) || !(smile_vol_at_0 > 0.0)) {
    throw DomainError("skew_from_distribution: sigma0, theta and ATM vol must be positive");
  }
  const double prob_below = cdf_at(0.0);
  const double density = density_at(0.0);
  if (!std::isfinite(prob_below) || !std::isfinite(density)) {
    throw PropagationError("skew_from_distribution: non-finite cdf or density");
  }
  const double sqrt_t = std::sqrt(theta);
  const double f2 = f1_f2(0.0, theta, smile_vol_at_0).second;
  const double phi_f2 = normal_pdf(f2);

  AtmDerivatives out;
  out.skew = (prob_below - normal_cdf(f2)) / (sqrt_t * phi_f2);
  // vol * d_k f1 * d_k f2 at k = 0, expanded analytically.
  const double f_product = 1.0 / (theta * smile_vol_at_0) -
                           0.25 * theta * out.skew * out.skew * smile_vol_at_0;
  out.curvature = density / (sigma0 * sqrt_t * phi_f2) - f_product;
  return out;
}

}  // namespace voliv
