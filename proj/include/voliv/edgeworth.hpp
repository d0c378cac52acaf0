#pragma once

#include <string>
#include <vector>

#include "voliv/numerics.hpp"

namespace voliv {

// Scaling data shared by every expansion. sigma0 is the standard deviation of
// the log return over [0, theta]; kappa3 theta^beta1 and kappa4 theta^beta2 are
// the skewness and excess-kurtosis scales of the normalised return.
struct CumulantData {
  double theta = 1.0;
  double sigma0 = 0.2;
  double kappa2 = 0.2;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double beta0 = 0.5;
  double beta1 = 0.5;
  double beta2 = 1.0;
  double m = 0.0;
  double n = 0.0;

  // Checks positivity, finiteness and sigma0 == kappa2 * theta^beta0 (1e-12).
  void validate() const;

  // Builds a consistent record with sigma0 = kappa2 * theta^beta0.
  static CumulantData from_kappa2(double theta, double kappa2, double kappa3, double kappa4, double beta1,
                                  double beta2, double m, double n, double beta0 = 0.5);
};

struct ExpansionTerm {
  std::string label;
  double value = 0.0;
};

struct ExpansionResult {
  double value = 0.0;
  std::vector<ExpansionTerm> leading_terms;
  std::string order_label;

  [[nodiscard]] double term(const std::string& label) const;
};

// Signed density approximator of the normalised return.
double q_density(double x, const CumulantData& c);

// Fourier transform of q_density: integral of e^{iux} q(x) dx.
Complex phi_mn(Complex u, const CumulantData& c);

// Normalised put p(F e^{sigma0 z}) / (F e^{-r theta} sigma0). Terms are
// labelled "bs", "kappa3", "kappa4" and "kappa3^2".
ExpansionResult put_expansion(double z, const CumulantData& c);

// Implied vol at log-moneyness k = sqrt(theta) z. Requires beta0 == 1/2.
// Terms: "kappa2", "kappa3", "kappa3^2", "kappa4".
ExpansionResult iv_expansion(double z, const CumulantData& c);

// Which exponent multiplies the kappa3 group of the curvature.
enum class CurvatureExponent {
  beta1_minus_beta0,  // theta^{beta1 - beta0}
  beta1_plus_beta0    // theta^{beta1 + beta0}
};

struct AtmAsymptotics {
  ExpansionResult skew;
  ExpansionResult curvature;
};

// Leading ATM skew ("kappa3", "kappa4") and curvature ("kappa4", "kappa3^2",
// "kappa3") for general beta0.
AtmAsymptotics atm_asymptotics(const CumulantData& c,
                               CurvatureExponent exponent = CurvatureExponent::beta1_minus_beta0);

// Alternative approximator with beta1 = H, beta2 = 2H and (m, n) = (1, 0): H is
// read from c.beta1. c.sigma0 plays the role of the perturbed sigma0.
double q_tilde_density(double x, const CumulantData& c);

}  // namespace voliv
