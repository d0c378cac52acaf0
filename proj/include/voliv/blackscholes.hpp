#pragma once

#include <functional>
#include <utility>

#include <Eigen/Core>

namespace voliv {

// Forward F = S0 * exp(r * theta), flat rate r, maturity theta in years.
struct ForwardContract {
  double forward = 1.0;
  double rate = 0.0;
  double maturity = 1.0;

  void validate() const;
  [[nodiscard]] double discount() const;
};

// One maturity slice of the implied volatility surface.
struct Smile {
  double maturity = 0.0;
  Eigen::VectorXd log_moneyness;
  Eigen::VectorXd implied_vol;

  void validate() const;
  [[nodiscard]] Eigen::Index size() const { return log_moneyness.size(); }
};

// Black put on the forward, discounted at r. vol == 0 gives the discounted
// intrinsic value.
double bs_put(const ForwardContract& c, double strike, double vol);

// Put vega dP/dvol.
double bs_put_vega(const ForwardContract& c, double strike, double vol);

// Inverts bs_put. Prices within 1e-14 (relative to the discounted strike) of
// either no-arbitrage bound raise BoundsError naming the violated bound, as do
// prices whose rounding error alone would move the vol by more than 1e-9.
double implied_vol(const ForwardContract& c, double strike, double put_price);

// P(sigma) = P_BS(F e^{sqrt(theta) z}, theta, sigma) / (F e^{-r theta} sqrt(theta)).
// Strictly increasing in sigma; sigma == 0 returns the intrinsic limit.
double normalized_put(double z, double sigma, double theta);

// dP/dsigma = phi(z / sigma - sigma sqrt(theta) / 2).
double normalized_put_vega(double z, double sigma, double theta);

// (f1, f2) = k / (sqrt(theta) vol) -/+ sqrt(theta) vol / 2.
std::pair<double, double> f1_f2(double k, double theta, double vol);

struct AtmDerivatives {
  double skew = 0.0;
  double curvature = 0.0;
};

// Exact ATM skew and curvature from the law of the normalised return X:
// cdf_at(x) = Q(X <= x), density_at(x) = density of X. sigma0 is the standard
// deviation of the log return and smile_vol_at_0 the ATM implied vol.
AtmDerivatives skew_from_distribution(const std::function<double(double)>& cdf_at,
                                      const std::function<double(double)>& density_at,
                                      double sigma0, double theta, double smile_vol_at_0);

}  // namespace voliv
