#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "voliv/mc_heston.hpp"
#include "voliv/pricer.hpp"

using namespace voliv;

namespace {

McConfig small_config(std::int64_t paths = 200'000) {
  McConfig cfg;
  cfg.n_paths = paths;
  cfg.seed = 7;
  return cfg;
}

// Integral of the CIR mean v(t) over [0, theta].
double integrated_mean_variance(const HestonDLParams& p, double theta) {
  return p.vbar * theta + (p.v0 - p.vbar) * (1.0 - std::exp(-p.kappa * theta)) / p.kappa;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("McConfig validation") {
  McConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_paths = 9'998;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.n_paths = 10'001;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.antithetic = false;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_steps_per_year = 100;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK(McConfig{}.steps_for(0.01) == 20);
  CHECK(McConfig{}.steps_for(1e-6) == 1);
}

TEST_CASE("samples are reproducible and independent of the thread count") {
  const HestonDLParams p;
  const McConfig cfg = small_config(20'000);
  setenv("VOLIV_THREADS", "1", 1);
  const std::vector<double> one = simulate_terminal(p, 0.05, cfg);
  setenv("VOLIV_THREADS", "3", 1);
  const std::vector<double> three = simulate_terminal(p, 0.05, cfg);
  unsetenv("VOLIV_THREADS");
  CHECK(one == three);
  CHECK(one == simulate_terminal(p, 0.05, cfg));
  McConfig other = cfg;
  other.seed = 8;
  CHECK(one != simulate_terminal(p, 0.05, other));
}

TEST_CASE("deterministic variance gives a Gaussian log return") {
  HestonDLParams p;
  p.eta = 0.0;
  const double theta = 0.1;
  McConfig cfg = small_config();
  cfg.antithetic = false;
  const std::vector<double> z = simulate_terminal(p, theta, cfg);
  const McEstimate mean = sample_mean(z, false, [](double x) { return x; });
  const McEstimate second = sample_mean(z, false, [&](double x) { return (x - mean.value) * (x - mean.value); });
  const double target = integrated_mean_variance(p, theta);
  // Euler on the linear mean ODE is accurate to O(dt) in relative terms.
  CHECK(std::abs(second.value - target) < 3.0 * second.std_error + 1e-3 * target);

  const McSmile s = mc_smile(p, theta, {-0.05, 0.0, 0.05}, small_config());
  const double flat = std::sqrt(target / theta);
  REQUIRE(s.smile.size() == 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(std::abs(s.smile.implied_vol[j] - flat) < 3.0 * s.vol[static_cast<std::size_t>(j)].std_error + 1e-4 * flat);
  }
}

TEST_CASE("zero correlation gives a symmetric log return") {
  HestonDLParams p;
  p.rho = 0.0;
  for (double alpha_rho : {0.0, 0.5}) {
    p.alpha_rho = alpha_rho;
    McConfig cfg = small_config();
    cfg.antithetic = false;
    const std::vector<double> z = simulate_terminal(p, 0.1, cfg);
    const double m = sample_mean(z, false, [](double x) { return x; }).value;
    const double var = sample_mean(z, false, [m](double x) { return (x - m) * (x - m); }).value;
    const double sd = std::sqrt(var);
    const McEstimate skew = sample_mean(z, false, [&](double x) { return std::pow((x - m) / sd, 3); });
    CHECK(std::abs(skew.value) < 3.0 * skew.std_error);
  }
}

TEST_CASE("discounted price is a martingale") {
  for (double alpha_rho : {0.0, 0.5, 1.0}) {
    HestonDLParams p;
    p.alpha_rho = alpha_rho;
    for (double theta : {0.01, 0.1}) {
      const std::vector<double> z = simulate_terminal(p, theta, small_config());
      const McEstimate e = sample_mean(z, true, [](double x) { return std::exp(x); });
      INFO("alpha_rho=", alpha_rho, " theta=", theta);
      CHECK(std::abs(e.value - 1.0) < 3.0 * e.std_error);
    }
  }
}

TEST_CASE("antithetic pairing reduces the ATM price error") {
  const HestonDLParams p;
  McConfig anti = small_config();
  McConfig plain = anti;
  plain.antithetic = false;
  auto atm_put = [](double x) { return std::max(1.0 - std::exp(x), 0.0); };
  const McEstimate a = sample_mean(simulate_terminal(p, 0.01, anti), true, atm_put);
  const McEstimate b = sample_mean(simulate_terminal(p, 0.01, plain), false, atm_put);
  CHECK(a.std_error < b.std_error);
}

TEST_CASE("doubling the step count moves the ATM vol by less than one standard error") {
  const HestonDLParams p;
  for (double theta : {0.01, 0.04}) {
    McConfig coarse = small_config();
    coarse.brownian_substeps = 2;
    McConfig fine = small_config();
    fine.n_steps_per_year *= 2;
    const McSmile a = mc_smile(p, theta, {0.0}, coarse);
    const McSmile b = mc_smile(p, theta, {0.0}, fine);
    INFO("theta=", theta);
    CHECK(std::abs(a.smile.implied_vol[0] - b.smile.implied_vol[0]) < b.vol[0].std_error);
  }
}

TEST_CASE("plain Euler carries the O(1/steps) skew bias that the corrected scheme removes") {
  const HestonDLParams p;
  McConfig corrected = small_config(400'000);
  McConfig euler = corrected;
  euler.scheme = McConfig::Scheme::full_truncation_euler;
  const McAtm c = mc_atm(p, 0.01, corrected);
  const McAtm e = mc_atm(p, 0.01, euler);
  const double kappa3 = heston_cumulants(p, 0.01).kappa3;
  // Same paths: the difference is the missing within-step leverage, about kappa3 / 20.
  CHECK(std::abs((c.skew.value - e.skew.value) - kappa3 / 20.0) < 0.2 * std::abs(kappa3) / 20.0);
  CHECK(std::abs(c.skew.value - kappa3) < 3.0 * c.skew.std_error);
}

TEST_CASE("points at an arbitrage bound are dropped with a warning") {
  const McSmile s = mc_smile(HestonDLParams{}, 0.01, {0.0, 3.0}, small_config(20'000));
  CHECK(s.smile.size() == 1);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("k=3") == 0);
}

TEST_CASE("Heston term structure converges to the leverage skew") {
  TermStructureOptions opts;
  opts.mc = small_config(400'000);
  const TermStructureResult r = term_structure(HestonDLParams{}, {0.04, 0.01}, opts);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows.skew_asym[1] == doctest::Approx(-0.4375).epsilon(1e-14));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(r.rows.skew_numeric[i] + 0.4375) < 3.0 * r.rows.skew_std_error[i] + 0.01);
    CHECK(r.rows.skew_std_error[i] > 0.0);
  }
  CHECK(term_structure_csv(r.rows).find("skew_std_error,curv_std_error") != std::string::npos);
}
