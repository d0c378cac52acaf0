#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "voliv/blackscholes.hpp"
#include "voliv/models.hpp"

namespace voliv {

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

struct McConfig {
  // Both schemes advance v by full-truncation Euler. The corrected one adds
  // the Milstein cross term (eta/4)(dW dB - rho_t dt) to the log-price step,
  // which removes the O(1/steps) bias of the ATM skew.
  enum class Scheme { full_truncation_euler, full_truncation_euler_leverage_corrected };

  std::int64_t n_paths = 2'000'000;
  int n_steps_per_year = 2000;
  std::uint64_t seed = 20230103;
  bool antithetic = true;
  Scheme scheme = Scheme::full_truncation_euler_leverage_corrected;
  // Each step sums this many unit draws (scaled by 1/sqrt(n)), so a run with
  // n steps and 2 substeps shares its Brownian path with one of 2n steps.
  int brownian_substeps = 1;

  void validate() const;
  // ceil(n_steps_per_year * theta), at least one step.
  [[nodiscard]] int steps_for(double theta) const;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_effective = 0;
};

// Terminal log returns Z_theta, Z_0 = 0, for the Heston model with leverage
// rho t^alpha_rho. With antithetic pairing paths 2j and 2j+1 use negated
// normals. Identical for any thread count.
std::vector<double> simulate_terminal(const HestonDLParams& p, double theta, const McConfig& cfg);

// Sample mean of f(Z) with standard error over independent units (antithetic
// pairs count as one unit).
McEstimate sample_mean(const std::vector<double>& z, bool antithetic, const std::function<double(double)>& f);

struct McSmile {
  Smile smile;
  std::vector<McEstimate> price;  // undiscounted puts on F = 1, aligned with smile
  std::vector<McEstimate> vol;
  std::vector<std::string> warnings;
};

// Put smile on a unit forward at zero rate. Points priced at an arbitrage
// bound are dropped with a warning.
McSmile mc_smile(const HestonDLParams& p, double theta, const std::vector<double>& ks, const McConfig& cfg);

struct McAtm {
  McEstimate atm_vol;
  McEstimate skew;
  McEstimate curvature;
};

// Five-point ATM skew and curvature from one path set, errors propagated per
// unit through the Black vega. h <= 0 picks 0.05 sigma0.
McAtm mc_atm(const HestonDLParams& p, double theta, const McConfig& cfg, double h = 0.0);

}  // namespace voliv
