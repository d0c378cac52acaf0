#include <cfloat>
#include <cmath>

#include "doctest.h"
#include "voliv/models.hpp"

using namespace voliv;

namespace {

GammaReturnParams fig_gamma(double alpha_bar) {
  GammaReturnParams p;
  p.alpha_bar = alpha_bar;
  return p;
}

CgmyReturnParams fig_cgmy(double alpha_G) {
  CgmyReturnParams p;
  p.alpha_G = alpha_G;
  return p;
}

// Cumulants of X from finite differences of log phi(-i t) = log E[e^{tX}],
// Richardson-extrapolated over steps h and h/2.
struct FdCumulants {
  double k2, k3, k4;
};

template <typename Cf>
FdCumulants cf_cumulants(Cf cf, double h) {
  auto K = [&](double t) { return std::log(cf(Complex(0.0, -t)).real()); };
  auto at = [&](double s) {
    const double f0 = K(0.0), f1 = K(s), fm1 = K(-s), f2 = K(2 * s), fm2 = K(-2 * s);
    FdCumulants r{};
    r.k2 = (f1 - 2 * f0 + fm1) / (s * s);
    r.k3 = (f2 - 2 * f1 + 2 * fm1 - fm2) / (2 * s * s * s);
    r.k4 = (f2 - 4 * f1 + 6 * f0 - 4 * fm1 + fm2) / (s * s * s * s);
    return r;
  };
  const FdCumulants a = at(h);
  const FdCumulants b = at(0.5 * h);
  return {(4 * b.k2 - a.k2) / 3, (4 * b.k3 - a.k3) / 3, (4 * b.k4 - a.k4) / 3};
}

}  // namespace

TEST_CASE("gamma cumulants at theta = 1") {
  const ReturnMoments m = gamma_moments(fig_gamma(-0.1), 1.0);
  CHECK(m.skewness == doctest::Approx(-1.0 / std::pow(6.5, 1.5)).epsilon(1e-14));
  CHECK(m.skewness == doctest::Approx(-0.060342).epsilon(1e-5));
  CHECK(m.excess_kurtosis == doctest::Approx(0.923077).epsilon(1e-6));
  CHECK(m.sigma0 == doctest::Approx(0.254951).epsilon(1e-6));

  GammaReturnParams sym = fig_gamma(-0.1);
  sym.c_kbar = 0.0;
  CHECK(gamma_moments(sym, 0.3).skewness == 0.0);

  for (double theta : {1.0, 0.1, 0.01}) {
    const CumulantData c = gamma_cumulants(fig_gamma(0.4), theta);
    CHECK(std::abs(c.sigma0 - c.kappa2 * std::sqrt(theta)) < 1e-12);
    CHECK(c.m == 0.0);
    CHECK(c.beta1 == doctest::Approx(0.4 + 0.3));
    CHECK(c.beta2 == doctest::Approx(0.2));
    const ReturnMoments mom = gamma_moments(fig_gamma(0.4), theta);
    CHECK(c.kappa3 * std::pow(theta, c.beta1) == doctest::Approx(mom.skewness / 6.0).epsilon(1e-13));
    CHECK(c.kappa4 * std::pow(theta, c.beta2) == doctest::Approx(mom.excess_kurtosis / 24.0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(gamma_cumulants(fig_gamma(0.4), 1.5), DomainError);
  CHECK_THROWS_AS(gamma_cumulants(fig_gamma(-0.3), 0.5), DomainError);
}

TEST_CASE("gamma characteristic function") {
  const GammaReturnParams p = fig_gamma(-0.1);
  CHECK(std::abs(gamma_cf(Complex(0.0, 0.0), p, 0.05) - Complex(1.0, 0.0)) < 1e-15);
  for (double u : {0.4, 2.0, 7.5}) {
    CHECK(std::abs(gamma_cf(Complex(-u, 0.0), p, 0.05) - std::conj(gamma_cf(Complex(u, 0.0), p, 0.05))) < 1e-15);
  }
  // High-precision reference evaluated from the displayed product form.
  const Complex ref(0.0357581970488432505314848212602, 0.000803915392644148329965606850564);
  CHECK(std::abs(gamma_cf(Complex(3.0, 0.0), p, 0.05) - ref) < 1e-13);

  // Modulus decomposition: |phi| = (1 + g^2 u^2/s^2)^{-k} (1 + g^2 u^2 / s^2)^{-kbar/2}.
  const double theta = 0.05;
  const double k = 3.0 * std::pow(theta, -0.2);
  const double kbar = 0.5 * std::pow(theta, -0.1);
  const double g = 0.1 * std::pow(theta, 0.6);
  const double s0 = std::sqrt(2 * k + kbar) * g;
  const double base = 1.0 + g * g * 9.0 / (s0 * s0);
  CHECK(std::abs(gamma_cf(Complex(3.0, 0.0), p, theta)) ==
        doctest::Approx(std::pow(base, -k) * std::pow(base, -0.5 * kbar)).epsilon(1e-13));

  // Martingale normalisation: E[e^{sigma0 X}] = 1.
  CHECK(std::abs(gamma_cf(Complex(0.0, -s0), p, theta) - Complex(1.0, 0.0)) < 1e-13);

  GammaReturnParams wide = p;
  wide.c_gamma = 2.0;
  CHECK_THROWS_AS(gamma_cf(Complex(1.0, 0.0), wide, 1.0), DomainError);
}

TEST_CASE("cgmy cumulants") {
  const ReturnMoments m = cgmy_moments(fig_cgmy(-0.5), 1.0);
  CHECK(m.sigma0 == doctest::Approx(0.403510621636102127).epsilon(1e-13));
  CHECK(m.skewness == doctest::Approx(-0.0206568531885004978).epsilon(1e-12));
  CHECK(m.excess_kurtosis == doctest::Approx(0.206430448859908479).epsilon(1e-12));
  CHECK(cgmy_cumulant(4, fig_cgmy(-0.5), 1.0) == m.excess_kurtosis);

  CgmyReturnParams sym = fig_cgmy(0.0);
  sym.c_G = 0.0;
  CHECK(cgmy_moments(sym, 0.2).skewness == 0.0);

  for (double theta : {1.0, 0.1, 0.01}) {
    const CumulantData c = cgmy_cumulants(fig_cgmy(0.2), theta);
    CHECK(std::abs(c.sigma0 - c.kappa2 * std::sqrt(theta)) < 1e-12);
    CHECK(c.beta1 == doctest::Approx(0.2 + 1.2 - 0.5));
    CHECK(c.beta2 == doctest::Approx(0.2));
  }
  CgmyReturnParams pole = fig_cgmy(0.0);
  pole.Y = 1.0;
  CHECK_THROWS_AS(cgmy_cumulants(pole, 0.5), DomainError);
  CgmyReturnParams negative_g = fig_cgmy(0.0);
  negative_g.c_G = -6.0;
  CHECK_THROWS_AS(negative_g.validate(), DomainError);
}

TEST_CASE("cgmy characteristic function") {
  const CgmyReturnParams p = fig_cgmy(-0.5);
  CHECK(std::abs(cgmy_cf(Complex(0.0, 0.0), p, 1.0) - Complex(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(cgmy_cf(Complex(0.7, 0.0), p, 1.0) -
                 Complex(0.776576286419948298356662898639, -0.109525971930112674699689240651)) < 1e-13);
  CHECK(std::abs(cgmy_cf(Complex(0.5, 1.2), p, 1.0) -
                 Complex(1.70886277045393593087049648467, -1.54800658680567557998013210155)) < 1e-12);
  CHECK(std::abs(cgmy_cf(Complex(-2.0, 0.0), p, 0.3) - std::conj(cgmy_cf(Complex(2.0, 0.0), p, 0.3))) < 1e-15);

  const double h = 1e-3;
  auto logphi = [&](double u) { return std::log(cgmy_cf(Complex(u, 0.0), p, 0.25)); };
  const double second = ((logphi(h) - 2.0 * logphi(0.0) + logphi(-h)) / (h * h)).real();
  CHECK(std::abs(-second - 1.0) < 1e-4);

  CgmyReturnParams low_m = p;
  low_m.c_M = 0.9;
  low_m.c_G = 0.0;
  CHECK_THROWS_AS(cgmy_cf(Complex(1.0, 0.0), low_m, 1.0), DomainError);
}

TEST_CASE("characteristic functions carry the closed-form cumulants") {
  for (double theta : {1.0, 0.25, 0.05, 0.01}) {
    {
      const GammaReturnParams p = fig_gamma(0.4);
      const FdCumulants fd = cf_cumulants([&](Complex u) { return gamma_cf(u, p, theta); }, 1e-2);
      const ReturnMoments m = gamma_moments(p, theta);
      CHECK(std::abs(fd.k2 - 1.0) < 1e-6);
      CHECK(fd.k3 == doctest::Approx(m.skewness).epsilon(1e-5));
      CHECK(fd.k4 == doctest::Approx(m.excess_kurtosis).epsilon(1e-5));
    }
    {
      const CgmyReturnParams p = fig_cgmy(-0.5);
      const FdCumulants fd = cf_cumulants([&](Complex u) { return cgmy_cf(u, p, theta); }, 1e-2);
      const ReturnMoments m = cgmy_moments(p, theta);
      CHECK(std::abs(fd.k2 - 1.0) < 1e-6);
      CHECK(fd.k3 == doctest::Approx(m.skewness).epsilon(1e-5));
      CHECK(fd.k4 == doctest::Approx(m.excess_kurtosis).epsilon(1e-5));
    }
  }
}

TEST_CASE("stochastic volatility coefficients") {
  HestonDLParams h;
  const CumulantData c = heston_cumulants(h, 0.01);
  CHECK(c.kappa3 == doctest::Approx(-0.4375).epsilon(1e-15));
  CHECK(std::abs(c.kappa3 - -0.7 * 0.5 / (4.0 * std::sqrt(0.04))) <= 4.0 * DBL_EPSILON * 0.4375);
  CHECK(c.kappa4 == doctest::Approx((1.0 + 2.0 * 0.49) * 0.25 / (24.0 * 0.04)).epsilon(1e-15));
  CHECK(c.m == 1.0);
  CHECK(c.n == 2.0);
  CHECK(c.beta1 == 0.5);
  CHECK(c.beta2 == 1.0);

  const CumulantData flat = svm_coeffs(0.2, 0.25, 0.3, 0.0, 0.5, 0.04, 0.2);
  CHECK(flat.kappa3 == 0.0);
  CHECK(flat.kappa4 == doctest::Approx(0.25 * 0.25 / (6.0 * 0.04)));
  CHECK_THROWS_AS(svm_coeffs(0.0, 0.25, 0.3, 0.0, 0.5, 0.04, 0.2), DomainError);

  // Decaying leverage: kappa4 sees rho_theta, skew sees kappa3 theta^{alpha_rho}.
  h.alpha_rho = 0.5;
  const CumulantData d = heston_cumulants(h, 0.04);
  const double rho_t = -0.7 * 0.2;
  CHECK(d.kappa4 == doctest::Approx((1.0 + 2.0 * rho_t * rho_t) * 0.25 / (24.0 * 0.04)).epsilon(1e-14));
  CHECK(d.beta1 == 1.0);
  const AtmAsymptotics a = atm_asymptotics(d);
  CHECK(a.skew.value == doctest::Approx(d.kappa3 * 0.2).epsilon(1e-14));

  // kappa2: time-averaged expected variance.
  CHECK(heston_kappa2(HestonDLParams{}, 1e-12) == doctest::Approx(0.2).epsilon(1e-10));
  const double x = 1.0;
  CHECK(heston_kappa2(HestonDLParams{}, 1.0) ==
        doctest::Approx(std::sqrt(0.06 + (0.04 - 0.06) * (1 - std::exp(-x)) / x)).epsilon(1e-14));
}

TEST_CASE("3/2 model keeps the tabulated row and reports the discrepancy") {
  ThreeHalvesParams p;
  std::string warning;
  const CumulantData c = three_halves_coeffs(p, 0.02, &warning);
  CHECK(c.kappa3 == doctest::Approx(-0.7 * 2.0 * 0.2 / 4.0));
  CHECK(c.kappa4 == doctest::Approx((1.0 + 3.0 * 0.49) * 4.0 * 0.0016 / 6.0));
  CHECK(three_halves_general_kappa4(p, 0.02) == doctest::Approx((1.0 + 4.0 * 0.49) * 4.0 * 0.04 / 24.0));
  CHECK(warning.find("differs") != std::string::npos);
}

TEST_CASE("rough Bergomi coefficients") {
  RoughBergomiAsymParams p;
  p.hurst = 0.1;
  p.eta = 1.9;
  p.rho = -0.9;
  p.v0_curve = [](double) { return 0.04; };
  QuadratureSpec tight;
  tight.abs_tol = 1e-13;
  tight.rel_tol = 1e-12;
  const double H = p.hurst;
  for (double theta : {0.5, 0.01}) {
    const CumulantData c = rough_bergomi_coeffs(p, theta, tight);
    const double closed = p.rho * p.eta * std::sqrt(H / 2.0) / ((H + 0.5) * (H + 1.5));
    CHECK(std::abs(c.kappa3 - closed) < 1e-8 * std::abs(closed));
    CHECK(c.kappa2 == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(c.beta1 == doctest::Approx(0.1));
    CHECK(c.beta2 == doctest::Approx(0.2));
  }
  p.rho = 0.0;
  const CumulantData z = rough_bergomi_coeffs(p, 0.1);
  CHECK(z.kappa3 == 0.0);
  CHECK(z.kappa4 == doctest::Approx(1.9 * 1.9 * H / (8.0 * (H + 0.5) * (H + 0.5) * (H + 1.0))).epsilon(1e-14));

  // Skew order theta^{H - 1/2}: constant at H = 1/2.
  p.hurst = 0.5;
  p.rho = -0.5;
  const CumulantData half = rough_bergomi_coeffs(p, 0.1);
  CHECK(half.beta1 - half.beta0 == doctest::Approx(0.0));

  // A non-flat curve: increasing forward variance.
  p.hurst = 0.2;
  p.v0_curve = [](double t) { return 0.04 + 0.02 * t; };
  const CumulantData slope = rough_bergomi_coeffs(p, 0.5);
  CHECK(slope.kappa2 == doctest::Approx(std::sqrt(0.04 + 0.005)).epsilon(1e-10));
  CHECK(std::isfinite(slope.kappa3));
}

TEST_CASE("config round trip") {
  const ConfigMap cfg = parse_config(
      "# figure defaults\nmodel = \"cgmy\"\nc_C = 0.1\nalpha_G = 0.2  # regime\nthetas = [0.1, 0.05]\n");
  CHECK(cfg.at("model") == "cgmy");
  CHECK(cfg.at("thetas") == "[0.1, 0.05]");
  const ModelSpec m = model_from_config(cfg);
  REQUIRE(std::holds_alternative<CgmyReturnParams>(m));
  CHECK(std::get<CgmyReturnParams>(m).alpha_G == 0.2);
  const ModelSpec back = model_from_config(parse_config(model_to_config(m)));
  CHECK(std::get<CgmyReturnParams>(back).alpha_G == 0.2);
  CHECK(std::get<CgmyReturnParams>(back).c_G == -0.5);

  for (const char* name : {"gamma", "heston", "three_halves", "rough_bergomi"}) {
    ConfigMap c;
    c["model"] = name;
    const ModelSpec spec = model_from_config(c);
    CHECK(model_name(spec) == name);
    CHECK(model_to_config(model_from_config(parse_config(model_to_config(spec)))) == model_to_config(spec));
  }
  CHECK_THROWS_AS(model_from_config(parse_config("model = \"sabr\"")), ConfigError);
  CHECK_THROWS_AS(model_from_config(parse_config("model = gamma\nalpha = abc")), ConfigError);
  CHECK_THROWS_AS(parse_config("just words"), ConfigError);
  CHECK_THROWS_AS(parse_config("a = 1\na = 2"), ConfigError);
}
