#include "voliv/mc_heston.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "voliv/errors.hpp"
#include "voliv/parallel.hpp"
#include "voliv/pricer.hpp"

namespace voliv {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// Pairs per parallel task; fixed so the partition never depends on threads.
constexpr std::int64_t kChunk = 4096;

double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

struct NormalPair {
  double a;
  double b;
};

NormalPair normals(std::uint64_t stream, std::uint32_t step, std::array<std::uint32_t, 2> key) {
  const auto r = philox4x32({step, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0u},
                            key);
  const double radius = std::sqrt(-2.0 * std::log(uniform_open(r[0], r[1])));
  const double angle = 2.0 * std::numbers::pi * uniform_open(r[2], r[3]);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

// Sum in fixed blocks so the rounding pattern is independent of scheduling.
double block_sum(const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t start = 0; start < v.size(); start += static_cast<std::size_t>(kChunk)) {
    const std::size_t stop = std::min(v.size(), start + static_cast<std::size_t>(kChunk));
    double part = 0.0;
    for (std::size_t i = start; i < stop; ++i) part += v[i];
    total += part;
  }
  return total;
}

McEstimate unit_estimate(const std::vector<double>& units) {
  const auto n = static_cast<std::int64_t>(units.size());
  if (n < 2) throw DomainError("Monte Carlo: need at least two sampling units");
  const double mean = block_sum(units) / static_cast<double>(n);
  std::vector<double> sq(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) sq[i] = (units[i] - mean) * (units[i] - mean);
  const double var = block_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

// Per-unit values of f: pair averages under antithetic sampling.
std::vector<double> units_of(const std::vector<double>& z, bool antithetic, const std::function<double(double)>& f) {
  if (!antithetic) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = f(z[i]);
    return out;
  }
  std::vector<double> out(z.size() / 2);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * (f(z[2 * j]) + f(z[2 * j + 1]));
  return out;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

void McConfig::validate() const {
  if (n_paths < 10'000) throw DomainError("McConfig: n_paths must be >= 10^4");
  if (n_steps_per_year < 250) throw DomainError("McConfig: n_steps_per_year must be >= 250");
  if (antithetic && n_paths % 2 != 0) throw DomainError("McConfig: n_paths must be even with antithetic pairing");
  if (brownian_substeps < 1) throw DomainError("McConfig: brownian_substeps must be >= 1");
}

int McConfig::steps_for(double theta) const {
  return std::max(1, static_cast<int>(std::ceil(n_steps_per_year * theta - 1e-9)));
}

std::vector<double> simulate_terminal(const HestonDLParams& p, double theta, const McConfig& cfg) {
  p.validate();
  cfg.validate();
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("simulate_terminal: theta must be > 0");

  const int steps = cfg.steps_for(theta);
  const double dt = theta / steps;
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> rho(steps);
  std::vector<double> rho_bar(steps);
  for (int i = 0; i < steps; ++i) {
    rho[i] = p.rho * std::pow(i * dt, p.alpha_rho);
    rho_bar[i] = std::sqrt(std::max(0.0, 1.0 - rho[i] * rho[i]));
  }
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(cfg.seed),
                                            static_cast<std::uint32_t>(cfg.seed >> 32)};
  const int substeps = cfg.brownian_substeps;
  const double substep_scale = 1.0 / std::sqrt(static_cast<double>(substeps));
  const bool corrected = cfg.scheme == McConfig::Scheme::full_truncation_euler_leverage_corrected;
  const int per_stream = cfg.antithetic ? 2 : 1;
  const std::int64_t streams = cfg.n_paths / per_stream;
  const std::int64_t chunks = (streams + kChunk - 1) / kChunk;

  std::vector<double> z(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t chunk) {
    const std::int64_t first = static_cast<std::int64_t>(chunk) * kChunk;
    const std::int64_t last = std::min(streams, first + kChunk);
    for (std::int64_t s = first; s < last; ++s) {
      for (int leg = 0; leg < per_stream; ++leg) {
        const double sign = leg == 0 ? 1.0 : -1.0;
        double v = p.v0;
        double logs = 0.0;
        for (int i = 0; i < steps; ++i) {
          double w = 0.0;
          double w_perp = 0.0;
          for (int j = 0; j < substeps; ++j) {
            const NormalPair g =
                normals(static_cast<std::uint64_t>(s), static_cast<std::uint32_t>(i * substeps + j), key);
            w += g.a;
            w_perp += g.b;
          }
          w *= sign * substep_scale;
          w_perp *= sign * substep_scale;
          const double vp = std::max(v, 0.0);
          const double vol = std::sqrt(vp);
          const double db = rho[i] * w + rho_bar[i] * w_perp;
          logs += -0.5 * vp * dt + vol * sqrt_dt * db;
          if (corrected && v > 0.0) logs += 0.25 * p.eta * dt * (w * db - rho[i]);
          v += p.kappa * (p.vbar - vp) * dt + p.eta * vol * sqrt_dt * w;
        }
        z[static_cast<std::size_t>(s * per_stream + leg)] = logs;
      }
    }
  });
  return z;
}

McEstimate sample_mean(const std::vector<double>& z, bool antithetic, const std::function<double(double)>& f) {
  return unit_estimate(units_of(z, antithetic, f));
}

McSmile mc_smile(const HestonDLParams& p, double theta, const std::vector<double>& ks, const McConfig& cfg) {
  const std::vector<double> z = simulate_terminal(p, theta, cfg);
  const ForwardContract c{1.0, 0.0, theta};
  McSmile out;
  out.smile.maturity = theta;
  std::vector<double> kept_k;
  std::vector<double> kept_vol;
  for (double k : ks) {
    const double strike = std::exp(k);
    const McEstimate price =
        sample_mean(z, cfg.antithetic, [strike](double x) { return std::max(strike - std::exp(x), 0.0); });
    try {
      const double vol = implied_vol(c, strike, price.value);
      const double vega = bs_put_vega(c, strike, vol);
      kept_k.push_back(k);
      kept_vol.push_back(vol);
      out.price.push_back(price);
      out.vol.push_back({vol, price.std_error / vega, price.n_effective});
    } catch (const BoundsError& e) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "k=%.6g dropped: ", k);
      out.warnings.push_back(buf + std::string(e.what()));
    }
  }
  out.smile.log_moneyness = Eigen::Map<const Eigen::VectorXd>(kept_k.data(), static_cast<Eigen::Index>(kept_k.size()));
  out.smile.implied_vol =
      Eigen::Map<const Eigen::VectorXd>(kept_vol.data(), static_cast<Eigen::Index>(kept_vol.size()));
  return out;
}

McAtm mc_atm(const HestonDLParams& p, double theta, const McConfig& cfg, double h) {
  if (h <= 0.0) h = kAtmStepFactor * heston_kappa2(p, theta) * std::sqrt(theta);
  const AtmStencil st = atm_stencil(h);
  const std::vector<double> z = simulate_terminal(p, theta, cfg);
  const ForwardContract c{1.0, 0.0, theta};

  std::array<double, 5> vol{};
  std::array<double, 5> vega{};
  std::array<double, 5> strike{};
  std::array<std::vector<double>, 5> payoff_units;
  for (int i = 0; i < 5; ++i) {
    strike[i] = std::exp(st.offsets[i]);
    const double K = strike[i];
    payoff_units[i] = units_of(z, cfg.antithetic, [K](double x) { return std::max(K - std::exp(x), 0.0); });
    vol[i] = implied_vol(c, K, block_sum(payoff_units[i]) / static_cast<double>(payoff_units[i].size()));
    vega[i] = bs_put_vega(c, K, vol[i]);
  }

  // Linearised per-unit contributions of each stencil combination.
  auto combine = [&](const std::array<double, 5>& weights, double value) {
    std::vector<double> units(payoff_units[0].size());
    for (std::size_t j = 0; j < units.size(); ++j) {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i) acc += weights[i] * payoff_units[i][j] / vega[i];
      units[j] = acc;
    }
    McEstimate e = unit_estimate(units);
    e.value = value;
    return e;
  };
  double skew = 0.0;
  double curv = 0.0;
  for (int i = 0; i < 5; ++i) {
    skew += st.skew_weights[i] * vol[i];
    curv += st.curvature_weights[i] * vol[i];
  }
  McAtm out;
  out.atm_vol = combine({0.0, 0.0, 1.0, 0.0, 0.0}, vol[2]);
  out.skew = combine(st.skew_weights, skew);
  out.curvature = combine(st.curvature_weights, curv);
  return out;
}

}  // namespace voliv
