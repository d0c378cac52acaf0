#include "voliv/edgeworth.hpp"

#include <cmath>
#include <cstdio>

#include "voliv/errors.hpp"

namespace voliv {

namespace {

double beta_bar(const CumulantData& c) {
  return std::min({c.beta2 + c.beta0, 2.0 * c.beta1, 2.0 * c.beta2, c.beta1 + c.beta2});
}

std::string little_o(double exponent) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "o(theta^%.6g)", exponent);
  return buf;
}

ExpansionResult assemble(std::vector<ExpansionTerm> terms, double order) {
  ExpansionResult r;
  for (const auto& t : terms) r.value += t.value;
  r.leading_terms = std::move(terms);
  r.order_label = little_o(order);
  return r;
}

}  // namespace

void CumulantData::validate() const {
  for (double v : {theta, sigma0, kappa2, kappa3, kappa4, beta0, beta1, beta2, m, n}) {
    if (!std::isfinite(v)) throw DomainError("CumulantData: non-finite field");
  }
  if (!(theta > 0.0) || !(sigma0 > 0.0) || !(kappa2 > 0.0)) {
    throw DomainError("CumulantData: theta, sigma0 and kappa2 must be positive");
  }
  if (!(beta0 > 0.0) || !(beta1 > 0.0) || !(beta2 > 0.0)) {
    throw DomainError("CumulantData: beta0, beta1 and beta2 must be positive");
  }
  const double implied = kappa2 * std::pow(theta, beta0);
  if (std::abs(sigma0 - implied) > 1e-12 * std::max(1.0, sigma0)) {
    throw DomainError("CumulantData: sigma0 != kappa2 * theta^beta0");
  }
}

CumulantData CumulantData::from_kappa2(double theta, double kappa2, double kappa3, double kappa4, double beta1,
                                       double beta2, double m, double n, double beta0) {
  CumulantData c;
  c.theta = theta;
  c.kappa2 = kappa2;
  c.sigma0 = kappa2 * std::pow(theta, beta0);
  c.kappa3 = kappa3;
  c.kappa4 = kappa4;
  c.beta0 = beta0;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.m = m;
  c.n = n;
  c.validate();
  return c;
}

double ExpansionResult::term(const std::string& label) const {
  for (const auto& t : leading_terms) {
    if (t.label == label) return t.value;
  }
  throw DomainError("ExpansionResult: no term labelled " + label);
}

double q_density(double x, const CumulantData& c) {
  const double s = c.sigma0;
  const double y = x + 0.5 * s;
  const double t1 = std::pow(c.theta, c.beta1);
  const double t2 = std::pow(c.theta, c.beta2);
  const double phi_y = normal_pdf(y);
  const double skew = c.kappa3 * (hermite(3, y) - c.m * s * hermite(2, y)) * t1;
  const double kurt = c.kappa4 * (hermite(4, y) - c.n * s * hermite(3, y)) * t2;
  return phi_y * (1.0 + skew + kurt) + normal_pdf(x) * 0.5 * c.kappa3 * c.kappa3 * hermite(6, x) * t1 * t1;
}

Complex phi_mn(Complex u, const CumulantData& c) {
  const Complex i(0.0, 1.0);
  const double s = c.sigma0;
  const double t1 = std::pow(c.theta, c.beta1);
  const double t2 = std::pow(c.theta, c.beta2);
  const Complex u2 = u * u;
  const Complex u3 = u2 * u;
  const Complex u4 = u2 * u2;
  const Complex u6 = u3 * u3;
  const Complex base = std::exp(-i * u * (0.5 * s) - 0.5 * u2);
  const Complex bracket = 1.0 - c.kappa3 * (i * u3 - c.m * s * u2) * t1 - 0.5 * c.kappa3 * c.kappa3 * u6 * t1 * t1 +
                          c.kappa4 * (u4 + i * u3 * (c.n * s)) * t2;
  return base * bracket;
}

ExpansionResult put_expansion(double z, const CumulantData& c) {
  c.validate();
  const double s = c.sigma0;
  const double t1 = std::pow(c.theta, c.beta1);
  const double t2 = std::pow(c.theta, c.beta2);
  const double y = z + 0.5 * s;
  const double growth = std::exp(s * z);
  const double phi_y = normal_pdf(y);

  std::vector<ExpansionTerm> terms;
  terms.push_back({"bs", (normal_cdf(y) * growth -
                          (1.0 + c.m * c.kappa3 * s * s * s * t1) * normal_cdf(z - 0.5 * s)) / s});
  terms.push_back({"kappa3", c.kappa3 * phi_y * (hermite(1, y) + (1.0 - c.m) * s) * growth * t1});
  terms.push_back({"kappa4", phi_y * c.kappa4 * (hermite(2, y) + (1.0 - c.n) * s * hermite(1, y)) * growth * t2});
  terms.push_back({"kappa3^2", normal_pdf(z) * 0.5 * c.kappa3 * c.kappa3 * hermite(4, z) * t1 * t1});
  return assemble(std::move(terms), beta_bar(c));
}

ExpansionResult iv_expansion(double z, const CumulantData& c) {
  c.validate();
  if (c.beta0 != 0.5) {
    throw UnsupportedScalingError("iv_expansion: requires beta0 = 1/2; use atm_asymptotics for general beta0");
  }
  const double k2 = c.kappa2;
  const double sqrt_t = std::sqrt(c.theta);
  const double t1 = std::pow(c.theta, c.beta1);
  const double t2 = std::pow(c.theta, c.beta2);
  const double zk = z / k2;

  double m_group = 0.0;
  if (c.m != 0.0) {
    const double a = zk - 0.5 * k2 * sqrt_t;
    m_group = c.m * normal_cdf(a) * k2 * k2 * c.theta / normal_pdf(a);
  }
  std::vector<ExpansionTerm> terms;
  terms.push_back({"kappa2", k2});
  terms.push_back({"kappa3", k2 * c.kappa3 * (zk + (1.5 - c.m) * k2 * sqrt_t - m_group) * t1});
  terms.push_back({"kappa3^2", k2 * (1.5 - 3.0 * zk * zk) * c.kappa3 * c.kappa3 * t1 * t1});
  terms.push_back({"kappa4", k2 * c.kappa4 * (-1.0 + zk * zk + (2.0 - c.n) * z * sqrt_t) * t2});
  return assemble(std::move(terms), beta_bar(c));
}

AtmAsymptotics atm_asymptotics(const CumulantData& c, CurvatureExponent exponent) {
  c.validate();
  const double th = c.theta;
  const double k2 = c.kappa2;
  const double k3 = c.kappa3;
  const double k4 = c.kappa4;
  const double bb = beta_bar(c);

  AtmAsymptotics out;
  out.skew = assemble({{"kappa3", k3 * std::pow(th, c.beta1 - c.beta0)},
                       {"kappa4", (2.0 - c.n) * k2 * k4 * std::pow(th, c.beta2)}},
                      std::min(c.beta1 + c.beta0, bb - c.beta0));

  const double k3_exponent =
      exponent == CurvatureExponent::beta1_minus_beta0 ? c.beta1 - c.beta0 : c.beta1 + c.beta0;
  const double k3_group = ((1.0 - 2.0 * c.m) / 8.0 * k2 * k2 * k3 -
                           0.5 * kSqrt2Pi * c.m * k2 * k3 * std::pow(th, c.beta0)) *
                          std::pow(th, k3_exponent);
  out.curvature = assemble({{"kappa4", 2.0 * k4 / k2 * std::pow(th, c.beta2 - 2.0 * c.beta0)},
                            {"kappa3^2", -6.0 * k3 * k3 / k2 * std::pow(th, 2.0 * c.beta1 - 2.0 * c.beta0)},
                            {"kappa3", k3_group}},
                           bb - 2.0 * c.beta0);
  return out;
}

double q_tilde_density(double x, const CumulantData& c) {
  const double s = c.sigma0;
  const double y = x + 0.5 * s;
  const double th = std::pow(c.theta, c.beta1);
  const double first = normal_pdf(y) * (1.0 + c.kappa3 * (hermite(3, y) - s * hermite(2, y)) * th);
  const double second =
      normal_pdf(x) * (c.kappa4 * hermite(4, x) + 0.5 * c.kappa3 * c.kappa3 * hermite(6, x)) * th * th;
  return first + second;
}

}  // namespace voliv
