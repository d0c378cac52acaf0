#include "voliv/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "voliv/errors.hpp"
#include "voliv/parallel.hpp"

namespace voliv {

namespace {

void check_strip(const CharacteristicFn& cf, double shift) {
  const Complex at = cf(Complex(0.0, shift));
  if (!std::isfinite(at.real()) || !std::isfinite(at.imag()) || !(at.real() > 0.0) ||
      std::abs(at.imag()) > 1e-10 * at.real()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "put_from_cf: contour Im u = %.6g lies outside the analyticity strip", shift);
    throw StripError(buf);
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ForwardContract unit_contract(double theta) { return {1.0, 0.0, theta}; }

}  // namespace

void PricingGrid::validate() const {
  if (!(maturity > 0.0) || !std::isfinite(maturity)) throw DomainError("PricingGrid: maturity must be > 0");
  if (!(damping > 0.0) || !std::isfinite(damping)) throw DomainError("PricingGrid: damping must be > 0");
  if (log_moneyness.empty()) throw DomainError("PricingGrid: empty moneyness grid");
  bool has_zero = false;
  for (std::size_t i = 0; i < log_moneyness.size(); ++i) {
    if (!std::isfinite(log_moneyness[i])) throw DomainError("PricingGrid: non-finite moneyness");
    if (i > 0 && !(log_moneyness[i] > log_moneyness[i - 1])) {
      throw DomainError("PricingGrid: moneyness must be strictly increasing");
    }
    has_zero = has_zero || log_moneyness[i] == 0.0;
  }
  if (!has_zero) throw DomainError("PricingGrid: moneyness grid must contain 0");
  quad.validate();
}

double put_from_cf(const CharacteristicFn& cf, const ForwardContract& c, double strike, double damping,
                   const QuadratureSpec& quad, double sigma0) {
  c.validate();
  if (!(strike > 0.0) || !std::isfinite(strike)) throw DomainError("put_from_cf: strike must be > 0");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError("put_from_cf: sigma0 must be > 0");
  if (!(damping > 0.0)) throw StripError("put_from_cf: damping must be > 0");

  // Above the forward the same integrand taken below both poles (w = 0 and
  // w = -i sigma0) yields the out-of-the-money call; parity restores the put.
  const double k = std::log(strike / c.forward);
  const bool via_call = k > 0.0;
  const double shift = via_call ? -(sigma0 + damping) : damping;
  check_strip(cf, shift);

  const double z = k / sigma0;
  const Complex i(0.0, 1.0);
  auto integrand = [&](double s) {
    const Complex w(s, shift);
    const Complex v = std::exp(-i * w * z) * cf(w) / ((-i * w) * (sigma0 - i * w));
    return v.real();
  };
  const double integral = integrate(integrand, 0.0, INFINITY, quad).value;
  const double otm = c.discount() * c.forward * std::exp(k) * sigma0 / std::numbers::pi * integral;
  return via_call ? otm + c.discount() * (strike - c.forward) : otm;
}

double density_from_cf(const CharacteristicFn& cf, double x, const QuadratureSpec& quad) {
  const Complex i(0.0, 1.0);
  auto integrand = [&](double u) { return (std::exp(-i * u * x) * cf(Complex(u, 0.0))).real(); };
  return integrate(integrand, 0.0, INFINITY, quad).value / std::numbers::pi;
}

double put_from_density(const std::function<double(double)>& density_at, const ForwardContract& c,
                        double strike, double sigma0, const QuadratureSpec& quad, double lower) {
  c.validate();
  if (!(strike > 0.0)) throw DomainError("put_from_density: strike must be > 0");
  if (!(sigma0 > 0.0)) throw DomainError("put_from_density: sigma0 must be > 0");
  const double z = std::log(strike / c.forward) / sigma0;
  auto outer = [&](double zeta) {
    const double cdf = integrate(density_at, lower, zeta, quad).value;
    return cdf * std::exp(sigma0 * zeta);
  };
  if (!(z > lower)) return 0.0;
  return c.discount() * c.forward * sigma0 * integrate(outer, lower, z, quad).value;
}

SmileResult smile_from_cf(const CharacteristicFn& cf, const ForwardContract& c, const PricingGrid& grid,
                          double sigma0) {
  grid.validate();
  c.validate();
  const std::size_t n = grid.log_moneyness.size();
  std::vector<double> price(n);
  std::vector<double> vol(n);
  std::vector<std::string> error(n);
  parallel_for(n, [&](std::size_t j) {
    const double strike = c.forward * std::exp(grid.log_moneyness[j]);
    price[j] = put_from_cf(cf, c, strike, grid.damping, grid.quad, sigma0);
    try {
      vol[j] = implied_vol(c, strike, price[j]);
    } catch (const BoundsError& e) {
      error[j] = e.what();
    }
  });

  SmileResult out;
  out.smile.maturity = grid.maturity;
  std::vector<double> kept_k;
  std::vector<double> kept_vol;
  for (std::size_t j = 0; j < n; ++j) {
    if (!error[j].empty()) {
      out.dropped.push_back({grid.log_moneyness[j], error[j]});
      continue;
    }
    kept_k.push_back(grid.log_moneyness[j]);
    kept_vol.push_back(vol[j]);
    out.price.push_back(price[j]);
  }
  if (5 * out.dropped.size() > n) {
    throw SmileQualityError("smile_from_cf: " + std::to_string(out.dropped.size()) + " of " + std::to_string(n) +
                            " points dropped");
  }
  out.smile.log_moneyness = Eigen::Map<Eigen::VectorXd>(kept_k.data(), static_cast<Eigen::Index>(kept_k.size()));
  out.smile.implied_vol = Eigen::Map<Eigen::VectorXd>(kept_vol.data(), static_cast<Eigen::Index>(kept_vol.size()));
  return out;
}

AtmStencil atm_stencil(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("atm_stencil: h must be > 0");
  AtmStencil s{};
  s.offsets = {-2.0 * h, -h, 0.0, h, 2.0 * h};
  const double d1 = 12.0 * h;
  const double d2 = 12.0 * h * h;
  s.skew_weights = {1.0 / d1, -8.0 / d1, 0.0, 8.0 / d1, -1.0 / d1};
  s.curvature_weights = {-1.0 / d2, 16.0 / d2, -30.0 / d2, 16.0 / d2, -1.0 / d2};
  return s;
}

AtmDerivatives numerical_atm(const std::function<double(double)>& smile_fn, double h) {
  const AtmStencil st = atm_stencil(h);
  AtmDerivatives d;
  for (int i = 0; i < 5; ++i) {
    const double v = smile_fn(st.offsets[i]);
    if (!std::isfinite(v)) throw PropagationError("numerical_atm: non-finite smile value");
    d.skew += st.skew_weights[i] * v;
    d.curvature += st.curvature_weights[i] * v;
  }
  return d;
}

namespace {

struct Row {
  double skew_numeric = 0.0;
  double skew_asym = 0.0;
  double curv_numeric = 0.0;
  double curv_asym = 0.0;
  double skew_se = 0.0;
  double curv_se = 0.0;
};

Row fourier_row(const ModelSpec& model, double theta, const TermStructureOptions& opts) {
  const CumulantData c = model_cumulants(model, theta);
  const CharacteristicFn cf = model_cf(model, theta);
  const ForwardContract fc = unit_contract(theta);
  auto smile = [&](double k) {
    const double strike = std::exp(k);
    return implied_vol(fc, strike, put_from_cf(cf, fc, strike, opts.damping, opts.quad, c.sigma0));
  };
  const AtmDerivatives num = numerical_atm(smile, kAtmStepFactor * c.sigma0);
  const AtmAsymptotics asym = atm_asymptotics(c, opts.exponent);
  return {num.skew, asym.skew.value, num.curvature, asym.curvature.value, 0.0, 0.0};
}

Row heston_row(const HestonDLParams& p, double theta, const TermStructureOptions& opts) {
  const McAtm mc = mc_atm(p, theta, opts.mc);
  const AtmAsymptotics asym = atm_asymptotics(heston_cumulants(p, theta), opts.exponent);
  return {mc.skew.value, asym.skew.value, mc.curvature.value, asym.curvature.value, mc.skew.std_error,
          mc.curvature.std_error};
}

}  // namespace

TermStructureResult term_structure(const ModelSpec& model, const std::vector<double>& thetas,
                                   const TermStructureOptions& opts) {
  const bool fourier = has_cf(model);
  const auto* heston = std::get_if<HestonDLParams>(&model);
  if (!fourier && heston == nullptr) {
    throw DomainError("term_structure: no numeric engine for model " + model_name(model));
  }
  for (double t : thetas) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("term_structure: thetas must lie in (0, 1]");
  }

  const std::size_t n = thetas.size();
  std::vector<Row> rows(n);
  std::vector<std::string> errors(n);
  auto one = [&](std::size_t i) {
    try {
      rows[i] = fourier ? fourier_row(model, thetas[i], opts) : heston_row(*heston, thetas[i], opts);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  };
  // Monte Carlo parallelises over paths, so maturities run in sequence there.
  if (fourier) {
    parallel_for(n, one);
  } else {
    for (std::size_t i = 0; i < n; ++i) one(i);
  }

  TermStructureResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      out.failures.push_back({thetas[i], errors[i]});
      continue;
    }
    auto& r = out.rows;
    r.thetas.push_back(thetas[i]);
    r.skew_numeric.push_back(rows[i].skew_numeric);
    r.skew_asym.push_back(rows[i].skew_asym);
    r.curv_numeric.push_back(rows[i].curv_numeric);
    r.curv_asym.push_back(rows[i].curv_asym);
    r.skew_std_error.push_back(rows[i].skew_se);
    r.curv_std_error.push_back(rows[i].curv_se);
  }
  if (n > 0 && out.rows.size() == 0) {
    throw Error("term_structure: every maturity failed; first: " + out.failures.front().reason);
  }
  return out;
}

std::vector<double> geometric_grid(double hi, double lo, int n) {
  if (!(hi > 0.0) || !(lo > 0.0) || n < 1) throw DomainError("geometric_grid: need hi, lo > 0 and n >= 1");
  if (n == 1) return {hi};
  std::vector<double> g(static_cast<std::size_t>(n));
  const double ratio = std::log(lo / hi) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = hi * std::exp(ratio * i);
  g.back() = lo;
  return g;
}

ConvexOrderReport convex_order_diagnostic(const ModelSpec& model, const std::vector<double>& thetas,
                                          const std::vector<double>& strikes, const TermStructureOptions& opts) {
  if (!has_cf(model)) throw DomainError("convex_order_diagnostic: model has no characteristic function");
  ConvexOrderReport r;
  r.thetas = thetas;
  std::sort(r.thetas.begin(), r.thetas.end());
  r.strikes = strikes;
  r.call.assign(r.thetas.size(), std::vector<double>(strikes.size()));
  parallel_for(r.thetas.size(), [&](std::size_t i) {
    const double theta = r.thetas[i];
    const CumulantData c = model_cumulants(model, theta);
    const CharacteristicFn cf = model_cf(model, theta);
    const ForwardContract fc = unit_contract(theta);
    for (std::size_t j = 0; j < strikes.size(); ++j) {
      const double put = put_from_cf(cf, fc, strikes[j], opts.damping, opts.quad, c.sigma0);
      r.call[i][j] = put + 1.0 - strikes[j];
    }
  });
  r.monotone.assign(strikes.size(), true);
  for (std::size_t j = 0; j < strikes.size(); ++j) {
    for (std::size_t i = 1; i < r.thetas.size(); ++i) {
      if (r.call[i][j] < r.call[i - 1][j] - 1e-10) r.monotone[j] = false;
    }
  }
  return r;
}

std::string smile_csv(const std::vector<SmileResult>& slices) {
  std::string out = "theta,k,iv,price\n";
  for (const auto& s : slices) {
    for (Eigen::Index j = 0; j < s.smile.size(); ++j) {
      out += num(s.smile.maturity) + ',' + num(s.smile.log_moneyness[j]) + ',' + num(s.smile.implied_vol[j]) + ',' +
             num(s.price[static_cast<std::size_t>(j)]) + '\n';
    }
  }
  return out;
}

std::string term_structure_csv(const AtmTermStructure& ts) {
  const bool with_errors =
      std::any_of(ts.skew_std_error.begin(), ts.skew_std_error.end(), [](double e) { return e != 0.0; });
  std::string out = "theta,skew_numeric,skew_asym,curv_numeric,curv_asym";
  out += with_errors ? ",skew_std_error,curv_std_error\n" : "\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += num(ts.thetas[i]) + ',' + num(ts.skew_numeric[i]) + ',' + num(ts.skew_asym[i]) + ',' +
           num(ts.curv_numeric[i]) + ',' + num(ts.curv_asym[i]);
    if (with_errors) out += ',' + num(ts.skew_std_error[i]) + ',' + num(ts.curv_std_error[i]);
    out += '\n';
  }
  return out;
}

}  // namespace voliv
