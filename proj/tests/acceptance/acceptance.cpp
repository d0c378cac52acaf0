// Acceptance suite. With no argument every criterion runs; with an argument
// 1..10 only that one. One PASS/FAIL line per criterion; exit status 1 if any
// criterion that ran failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "voliv/blackscholes.hpp"
#include "voliv/edgeworth.hpp"
#include "voliv/empirical.hpp"
#include "voliv/errors.hpp"
#include "voliv/models.hpp"
#include "voliv/pricer.hpp"

using namespace voliv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note("FAILED " + what);
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const QuadratureSpec kTight{QuadratureSpec::Scheme::adaptive_gauss_kronrod, 1e-14, 1e-12, 2000};

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / x.size();
    my += y[i] / y.size();
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Log-log slope of v against theta.
double loglog_slope(const std::vector<double>& theta, const std::vector<double>& v) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    lx.push_back(std::log(theta[i]));
    ly.push_back(std::log(std::abs(v[i])));
  }
  return ols_slope(lx, ly);
}

Outcome bs_round_trip() {
  Outcome out;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> F(0.5, 200.0);
  std::uniform_real_distribution<double> T(1e-3, 1.0);
  std::uniform_real_distribution<double> S(0.05, 1.0);
  std::uniform_real_distribution<double> K(-0.5, 0.5);
  std::uniform_real_distribution<double> R(-0.02, 0.08);
  int inverted = 0;
  int bounded = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ForwardContract c{F(rng), R(rng), T(rng)};
    const double vol = S(rng);
    const double strike = c.forward * std::exp(K(rng));
    const double price = bs_put(c, strike, vol);
    try {
      worst = std::max(worst, std::abs(implied_vol(c, strike, price) - vol));
      ++inverted;
    } catch (const BoundsError&) {
      // Only contracts whose time value is below rounding may be refused.
      const double time_value = price - c.discount() * std::max(strike - c.forward, 0.0);
      out.require(time_value <= 1e-7 * c.discount() * strike, "bound refusal with visible time value");
      ++bounded;
    }
  }
  out.require(worst < 1e-8, "max |iv - vol| < 1e-8");
  out.note("inverted " + std::to_string(inverted) + ", refused at a bound " + std::to_string(bounded) +
           ", max error " + fmt("%.2e", worst));
  return out;
}

Outcome edgeworth_identities() {
  Outcome out;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> k(-0.5, 0.5);
  std::uniform_real_distribution<double> s(0.01, 0.5);
  std::uniform_real_distribution<double> b(0.05, 2.0);
  std::uniform_real_distribution<double> th(0.005, 1.0);
  std::uniform_real_distribution<double> mn(-2.0, 2.0);
  double worst_mass = 0.0;
  double worst_moment = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double theta = th(rng);
    const double sigma0 = s(rng);
    const CumulantData c =
        CumulantData::from_kappa2(theta, sigma0 / std::sqrt(theta), k(rng), k(rng), b(rng), b(rng), mn(rng), mn(rng));
    const double mass = integrate([&](double x) { return q_density(x, c); }, -INFINITY, INFINITY, kTight).value;
    const double moment =
        integrate([&](double x) { return std::exp(c.sigma0 * x) * q_density(x, c); }, -INFINITY, INFINITY, kTight)
            .value;
    const double t1 = std::pow(theta, c.beta1);
    const double t2 = std::pow(theta, c.beta2);
    const double s0 = c.sigma0;
    const double expected = 1.0 + (1.0 - c.m) * c.kappa3 * std::pow(s0, 3) * t1 +
                            (1.0 - c.n) * c.kappa4 * std::pow(s0, 4) * t2 +
                            0.5 * c.kappa3 * c.kappa3 * std::pow(s0, 6) * std::exp(0.5 * s0 * s0) * t1 * t1;
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    worst_moment = std::max(worst_moment, std::abs(moment - expected));
  }
  out.require(worst_mass <= 1e-9, "normalisation within 1e-9");
  out.require(worst_moment <= 1e-9, "exponential moment within 1e-9");
  out.note("max mass error " + fmt("%.2e", worst_mass) + ", max moment error " + fmt("%.2e", worst_moment));
  return out;
}

// Draw domain: kappa2 in [0.1, 0.4], kappa3 and kappa4 in [-0.3, 0.3],
// beta1 in [0.3, 1], beta2 in [0.5, 1.5], m in {0, 1}, n in {0, 1, 2}; a draw
// is kept when q >= 0 on a fine grid for every theta in the family below.
// The first 40 kept draws are tested.
Outcome put_expansion_oracle() {
  Outcome out;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::vector<double> thetas = {0.04, 0.02, 0.01};
  int used = 0;
  int amplitude_ok = 0;
  double worst_ratio = 0.0;
  double worst_margin = INFINITY;
  std::string worst_draw;
  for (int d = 0; d < 1000 && used < 40; ++d) {
    const double k2 = 0.1 + 0.3 * U(rng);
    const double k3 = -0.3 + 0.6 * U(rng);
    const double k4 = -0.3 + 0.6 * U(rng);
    const double b1 = 0.3 + 0.7 * U(rng);
    const double b2 = 0.5 + 1.0 * U(rng);
    const double m = std::floor(2.0 * U(rng));
    const double n = std::floor(3.0 * U(rng));
    bool positive = true;
    for (double th : {1.0, 0.5, 0.2, 0.1, 0.04, 0.02, 0.01}) {
      const CumulantData c = CumulantData::from_kappa2(th, k2, k3, k4, b1, b2, m, n);
      for (double x = -12.0; x <= 12.0 && positive; x += 0.01) positive = q_density(x, c) >= 0.0;
    }
    if (!positive) continue;
    ++used;

    const double order = std::min(b2 + 0.5, 2.0 * b1);
    std::vector<double> gaps;
    double ratio = 0.0;
    for (double th : thetas) {
      const CumulantData c = CumulantData::from_kappa2(th, k2, k3, k4, b1, b2, m, n);
      const ForwardContract fc{1.0, 0.0, th};
      double gap = 0.0;
      for (double z : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
        const double exact = put_from_density([&](double x) { return q_density(x, c); }, fc,
                                              std::exp(c.sigma0 * z), c.sigma0, kTight, -INFINITY) /
                             c.sigma0;
        gap = std::max(gap, std::abs(exact - put_expansion(z, c).value));
      }
      gaps.push_back(gap);
      ratio = std::max(ratio, gap / (1e-3 * std::pow(th, order)));
    }
    const double margin = loglog_slope(thetas, gaps) - order;
    worst_margin = std::min(worst_margin, margin);
    if (ratio <= 1.0) ++amplitude_ok;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      char buf[160];
      std::snprintf(buf, sizeof buf, "kappa=(%.2f, %.2f, %.2f) beta=(%.2f, %.2f) m=%g n=%g", k2, k3, k4, b1, b2, m,
                    n);
      worst_draw = buf;
    }
  }
  out.require(used == 40, "40 admissible draws");
  out.require(worst_margin >= -0.15, "decay slope >= order - 0.15");
  out.require(amplitude_ok == used, "gap <= 1e-3 theta^order on every draw");
  out.note(std::to_string(amplitude_ok) + "/" + std::to_string(used) + " draws within the amplitude bound, worst ratio " +
           fmt("%.2f", worst_ratio) + " at " + worst_draw + ", min slope margin " + fmt("%+.3f", worst_margin));
  return out;
}

Outcome iv_atm_consistency() {
  Outcome out;
  const std::vector<std::pair<std::string, ModelSpec>> models = {{"gamma", GammaReturnParams{}},
                                                                 {"cgmy", CgmyReturnParams{}}};
  for (const auto& [name, model] : models) {
    const CumulantData c = model_cumulants(model, 0.01);
    const double h = 1e-2;
    const double st = std::sqrt(c.theta);
    auto iv = [&](double z) { return iv_expansion(z, c).value; };
    const double d1 = (8.0 * (iv(h) - iv(-h)) - (iv(2 * h) - iv(-2 * h))) / (12.0 * h) / st;
    const double d2 = (16.0 * (iv(h) + iv(-h)) - (iv(2 * h) + iv(-2 * h)) - 30.0 * iv(0.0)) / (12.0 * h * h) / c.theta;
    const AtmAsymptotics a = atm_asymptotics(c);
    const double rs = std::abs(d1 - a.skew.value) / std::abs(a.skew.value);
    const double rc = std::abs(d2 - a.curvature.value) / std::abs(a.curvature.value);
    out.require(rs <= 1e-3, name + " skew");
    out.require(rc <= 1e-3, name + " curvature");
    out.note(name + " skew rel " + fmt("%.1e", rs) + ", curvature rel " + fmt("%.1e", rc));
  }
  return out;
}

Outcome figure1_properties() {
  Outcome out;
  std::vector<std::pair<std::string, ModelSpec>> models;
  for (double ab : {-0.1, 0.4, 0.6}) {
    GammaReturnParams p;
    p.alpha_bar = ab;
    models.emplace_back("gamma alpha_bar=" + fmt("%g", ab), p);
  }
  for (double ag : {-0.5, 0.0, 0.2}) {
    CgmyReturnParams p;
    p.alpha_G = ag;
    models.emplace_back("cgmy alpha_G=" + fmt("%g", ag), p);
  }
  const std::vector<double> thetas = geometric_grid(0.05, 0.0005, 9);
  for (std::size_t j = 0; j < models.size(); ++j) {
    const auto& [name, model] = models[j];
    const TermStructureResult r = term_structure(model, thetas);
    if (!r.failures.empty() || r.rows.size() != thetas.size()) {
      out.require(false, name + " numeric skew on every maturity");
      continue;
    }
    std::vector<double> rel;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      rel.push_back(std::abs(r.rows.skew_numeric[i] - r.rows.skew_asym[i]) / std::abs(r.rows.skew_numeric[i]));
    }
    double worst = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      worst = std::max(worst, rel[i]);
      if (i > 0 && rel[i] > rel[i - 1] * (1.0 + 1e-9)) monotone = false;
    }
    out.require(worst <= 0.10, name + " relative error <= 0.10");
    out.require(monotone, name + " relative error shrinking with theta");
    std::string line = name + " rel err " + fmt("%.3f", rel.front()) + " -> " + fmt("%.3f", rel.back());
    // Sign flip at small theta against a negative kappa3.
    if (j == 2 || j == 5) {
      const CumulantData c = model_cumulants(model, thetas.back());
      out.require(c.kappa3 < 0.0 && r.rows.skew_numeric.back() > 0.0, name + " positive skew with kappa3 < 0");
      line += ", kappa3 " + fmt("%.3g", c.kappa3) + ", skew " + fmt("%.3g", r.rows.skew_numeric.back());
    }
    out.note(line);
  }
  return out;
}

Outcome heston_row() {
  Outcome out;
  double worst = 0.0;
  for (double rho : {-0.9, -0.7, 0.0, 0.3}) {
    for (double eta : {0.2, 0.5, 1.1}) {
      for (double v0 : {0.01, 0.04, 0.09}) {
        for (double theta : {0.001, 0.01, 0.3}) {
          HestonDLParams p;
          p.rho = rho;
          p.eta = eta;
          p.v0 = v0;
          const CumulantData c = heston_cumulants(p, theta);
          const double k3 = rho * eta / (4.0 * std::sqrt(v0));
          const double k4 = (1.0 + 2.0 * rho * rho) * eta * eta / (24.0 * v0);
          worst = std::max({worst, std::abs(c.kappa3 - k3) / std::max(std::abs(k3), 1e-300),
                            std::abs(c.kappa4 - k4) / k4});
        }
      }
    }
  }
  out.require(worst <= 4.0 * 2.220446049250313e-16, "relative agreement within 4 ulp");
  out.note("max relative difference " + fmt("%.2e", worst));
  return out;
}

Outcome figure2_properties() {
  Outcome out;
  TermStructureOptions opts;  // 2e6 paths, 2000 steps per year
  {
    HestonDLParams p;
    const TermStructureResult r = term_structure(p, {0.01}, opts);
    if (r.rows.size() != 1) {
      out.require(false, "alpha_rho=0 run");
    } else {
      const double skew = r.rows.skew_numeric[0];
      const double se = r.rows.skew_std_error[0];
      out.require(se < 0.01, "SE < 0.01");
      out.require(std::abs(skew + 0.4375) <= 3.0 * se, "within 3 SE of -0.4375");
      out.note("alpha_rho=0 skew " + fmt("%.5f", skew) + " SE " + fmt("%.5f", se));
    }
  }
  {
    HestonDLParams p;
    p.alpha_rho = 0.5;
    const std::vector<double> thetas = {0.16, 0.04, 0.01};
    const TermStructureResult r = term_structure(p, thetas, opts);
    if (r.rows.size() != thetas.size()) {
      out.require(false, "alpha_rho=0.5 run");
    } else {
      const double slope = loglog_slope(thetas, r.rows.skew_numeric);
      out.require(std::abs(slope - 0.5) <= 0.1, "slope 0.5 +- 0.1");
      std::string line = "alpha_rho=0.5 slope " + fmt("%.3f", slope) + " (skews";
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        line += " " + fmt("%.4f", r.rows.skew_numeric[i]) + "+-" + fmt("%.4f", r.rows.skew_std_error[i]);
      }
      out.note(line + ")");
    }
  }
  return out;
}

Outcome rough_approximator_gap() {
  Outcome out;
  const double H = 0.3;
  const std::vector<double> thetas = {0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
  std::vector<double> sup;
  for (double th : thetas) {
    const CumulantData c = CumulantData::from_kappa2(th, 0.2, -0.4, 0.3, H, 2.0 * H, 1.0, 0.0);
    double s = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.005) {
      s = std::max(s, std::abs(q_density(x, c) - q_tilde_density(x, c)) * std::pow(1.0 + x * x, 2));
    }
    sup.push_back(s);
  }
  const double slope = loglog_slope(thetas, sup);
  out.require(slope >= 2.0 * H - 0.15, "slope >= 2H - 0.15");
  out.note("weighted sup gap " + fmt("%.2e", sup.front()) + " -> " + fmt("%.2e", sup.back()) + ", slope " +
           fmt("%.3f", slope) + " vs 2H = " + fmt("%.1f", 2.0 * H));
  return out;
}

Date plus_days(const Date& d, long n) {
  const long target = d.days() + n;
  Date out = d;
  while (out.days() < target) {
    out.day += 1;
    try {
      Date::parse(out.iso());
    } catch (const DomainError&) {
      out.day = 1;
      if (++out.month > 12) {
        out.month = 1;
        ++out.year;
      }
    }
  }
  return out;
}

std::vector<OptionQuote> smile_quotes(const Date& today, long days, const std::function<double(double)>& smile) {
  const double theta = static_cast<double>(days) / 365.0;
  const double scale = smile(0.0) * std::sqrt(theta);
  std::vector<OptionQuote> out;
  for (int j = -10; j <= 10; ++j) {
    const double k = 0.7 * scale * j / 10.0;
    OptionQuote q;
    q.quote_date = today;
    q.expiry = plus_days(today, days);
    q.symbol = "SPX";
    q.forward = 4000.0;
    q.strike = 4000.0 * std::exp(k);
    q.option_type = k < 0.0 ? OptionQuote::Type::put : OptionQuote::Type::call;
    q.implied_vol = smile(k);
    q.volume = 10;
    q.open_interest = 100;
    out.push_back(q);
  }
  return out;
}

Outcome empirical_pipeline(const std::string& source_dir) {
  Outcome out;

  const auto quotes = read_quotes_csv(source_dir + "/tests/fixtures/quotes_synthetic.csv");
  const FilterResult f = filter_quotes(quotes);
  std::map<std::string, int> reasons;
  for (const auto& r : f.rejected) ++reasons[r.reason];
  bool once = true;
  for (const char* rule : {"open-interest", "volume", "maturity-window", "implied-vol", "symbol", "moneyness"}) {
    once = once && reasons[rule] == 1;
  }
  out.require(once && f.rejected.size() == 6, "each filter rule triggered exactly once");
  out.note("fixture: " + std::to_string(f.kept.size()) + " kept, " + std::to_string(f.rejected.size()) +
           " rejected one per rule");

  std::vector<SmilePoint> quad;
  for (int j = 0; j < 15; ++j) {
    const double k = -0.75 + 1.5 * j / 14.0;
    quad.push_back({k, 0.2 + 0.3 * k + k * k});
  }
  const SplineAtm s = spline_atm(quad);
  const double spline_err = std::max({std::abs(s.atm_vol - 0.2), std::abs(s.skew - 0.3), std::abs(s.curvature - 2.0)});
  out.require(spline_err <= 1e-3, "spline quadratic recovery");
  out.note("spline max error " + fmt("%.1e", spline_err));

  const std::vector<double> t = {0.02, 0.05, 0.1, 0.2};
  std::mt19937_64 rng(20230103);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  double worst_exp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v;
    for (double x : t) v.push_back(2.0 * std::pow(x, -0.4) * (1.0 + noise(rng)));
    worst_exp = std::max(worst_exp, std::abs(fit_power_law(t, v).exponent + 0.4));
  }
  out.require(worst_exp <= 0.02, "power law exponent under 1% noise");
  out.note("power law worst exponent error " + fmt("%.4f", worst_exp));

  GammaReturnParams p;
  p.alpha_bar = 0.4;
  const CumulantData c0 = model_cumulants(p, 0.01);
  const double leading = std::min(c0.beta1 - c0.beta0, c0.beta2);
  const Date today = Date::parse("2023-01-03");
  std::vector<OptionQuote> synthetic;
  for (long days : {3, 5, 8, 13, 21, 34, 55, 89}) {
    const double theta = static_cast<double>(days) / 365.0;
    const CumulantData c = model_cumulants(p, theta);
    const ForwardContract fc{1.0, 0.0, theta};
    const auto cf = model_cf(p, theta);
    const auto smile = [&](double k) {
      return implied_vol(fc, std::exp(k), put_from_cf(cf, fc, std::exp(k), 1.5, kTight, c.sigma0));
    };
    for (const auto& q : smile_quotes(today, days, smile)) synthetic.push_back(q);
  }
  const EmpiricalResult r = run_empirical(synthetic);
  if (!r.skew_fit.fit) {
    out.require(false, "end-to-end skew fit (" + r.skew_fit.skip_reason + ")");
  } else {
    const double e = r.skew_fit.fit->exponent;
    out.require(std::abs(e - leading) <= 0.05, "end-to-end exponent within 0.05");
    out.note("end-to-end exponent " + fmt("%.4f", e) + " vs leading " + fmt("%.2f", leading));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism(const std::string& cli, const std::string& source_dir, const std::string& work_dir) {
  Outcome out;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(fs::path(source_dir) / "configs")) {
    if (e.path().extension() == ".toml") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  out.require(configs.size() == 8, "eight figure configs");
  int identical = 0;
  for (const auto& cfg : configs) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int threads : {1, 4}) {
      const fs::path dir = fs::path(work_dir) / (cfg.stem().string() + "_t" + std::to_string(threads));
      fs::remove_all(dir);
      fs::create_directories(dir);
      const std::string cmd = "VOLIV_THREADS=" + std::to_string(threads) + " \"" + cli +
                              "\" term-structure --config \"" + cfg.string() + "\" -o \"" + dir.string() +
                              "\" > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      out.require(status == 0, cfg.stem().string() + " exit status");
      std::map<std::string, std::string> files;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") files[e.path().filename().string()] = slurp(e.path());
      }
      runs.push_back(files);
    }
    const bool same = !runs[0].empty() && runs[0] == runs[1];
    out.require(same, cfg.stem().string() + " byte-identical CSVs");
    if (same) ++identical;
  }
  out.note(std::to_string(identical) + "/" + std::to_string(configs.size()) +
           " configs byte-identical across VOLIV_THREADS=1 and 4");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Black-Scholes round trip", bs_round_trip},
      {"Edgeworth normalisation and exponential moment", edgeworth_identities},
      {"put expansion against the density integral", put_expansion_oracle},
      {"iv expansion derivatives against ATM asymptotics", iv_atm_consistency},
      {"Gamma and CGMY skew term structures", figure1_properties},
      {"Heston cumulant coefficients", heston_row},
      {"Heston Monte Carlo skew", figure2_properties},
      {"rough approximator gap decay", rough_approximator_gap},
      {"empirical pipeline", [] { return empirical_pipeline(VOLIV_SOURCE_DIR); }},
      {"CLI determinism", [] { return cli_determinism(VOLIV_CLI, VOLIV_SOURCE_DIR, VOLIV_WORK_DIR); }},
  };

  std::vector<int> which;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [1..%zu]\n", argv[0], criteria.size());
      return 2;
    }
    which.push_back(n);
  } else {
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) which.push_back(n);
  }

  int failed = 0;
  for (int n : which) {
    const auto& [name, run] = criteria[n - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s (%.1f s): %s\n", n, o.pass ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
