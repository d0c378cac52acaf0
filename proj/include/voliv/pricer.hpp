#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "voliv/blackscholes.hpp"
#include "voliv/mc_heston.hpp"
#include "voliv/models.hpp"
#include "voliv/numerics.hpp"

namespace voliv {

using CharacteristicFn = std::function<Complex(Complex)>;

struct PricingGrid {
  double maturity = 0.05;
  std::vector<double> log_moneyness;
  double damping = 1.5;
  QuadratureSpec quad{QuadratureSpec::Scheme::adaptive_gauss_kronrod, 1e-14, 1e-12, 2000};

  // Strictly increasing moneyness containing 0, positive damping.
  void validate() const;
};

// Put price from the characteristic function of the normalised return X.
// Strikes up to the forward integrate along Im u = damping, strikes above it
// price the call along Im u = -(sigma0 + damping). sigma0 is the standard
// deviation of the log return. A contour outside the strip, detected through a
// non-real or non-positive phi on the imaginary axis, raises StripError.
double put_from_cf(const CharacteristicFn& cf, const ForwardContract& c, double strike, double damping,
                   const QuadratureSpec& quad, double sigma0);

// Density of X by Fourier inversion on the real axis.
double density_from_cf(const CharacteristicFn& cf, double x, const QuadratureSpec& quad);

// Put price as the iterated integral sigma0 F D int_{lower}^{z} Q(lower < X <= zeta) e^{sigma0 zeta} dzeta,
// with the distribution function itself integrated from density_at. lower
// truncates the left tail of X; pass -INFINITY for densities that are cheap
// far out.
double put_from_density(const std::function<double(double)>& density_at, const ForwardContract& c,
                        double strike, double sigma0, const QuadratureSpec& quad, double lower = -30.0);

struct DroppedPoint {
  double log_moneyness = 0.0;
  std::string reason;
};

struct SmileResult {
  Smile smile;
  std::vector<double> price;  // aligned with smile
  std::vector<DroppedPoint> dropped;
};

// Implied vols on grid.log_moneyness. Points whose price cannot be inverted
// are dropped and recorded; more than 20% dropped raises SmileQualityError.
SmileResult smile_from_cf(const CharacteristicFn& cf, const ForwardContract& c, const PricingGrid& grid,
                          double sigma0);

// Offsets {-2, -1, 0, 1, 2} * h and the fourth-order weights of the first and
// second derivative at 0.
struct AtmStencil {
  std::array<double, 5> offsets;
  std::array<double, 5> skew_weights;
  std::array<double, 5> curvature_weights;
};
AtmStencil atm_stencil(double h);

// Five-point skew and curvature of smile_fn at k = 0.
AtmDerivatives numerical_atm(const std::function<double(double)>& smile_fn, double h);

// Step 0.05 sigma0 used for smile derivatives.
inline constexpr double kAtmStepFactor = 0.05;

struct AtmTermStructure {
  std::vector<double> thetas;
  std::vector<double> skew_numeric;
  std::vector<double> skew_asym;
  std::vector<double> curv_numeric;
  std::vector<double> curv_asym;
  std::vector<double> skew_std_error;  // zero for Fourier-priced rows
  std::vector<double> curv_std_error;

  [[nodiscard]] std::size_t size() const { return thetas.size(); }
};

struct TermStructureFailure {
  double theta = 0.0;
  std::string reason;
};

struct TermStructureOptions {
  double damping = 1.5;
  QuadratureSpec quad{QuadratureSpec::Scheme::adaptive_gauss_kronrod, 1e-14, 1e-12, 2000};
  McConfig mc;
  CurvatureExponent exponent = CurvatureExponent::beta1_minus_beta0;
};

struct TermStructureResult {
  AtmTermStructure rows;  // successful maturities, in input order
  std::vector<TermStructureFailure> failures;
};

// Numeric (Fourier for return models, Monte Carlo for Heston) and asymptotic
// ATM skew and curvature per maturity. Per-maturity failures are recorded;
// if every maturity fails the first failure is rethrown as an Error.
TermStructureResult term_structure(const ModelSpec& model, const std::vector<double>& thetas,
                                   const TermStructureOptions& opts = {});

// Geometric grid from hi down to lo with n points.
std::vector<double> geometric_grid(double hi, double lo, int n);

// Undiscounted call E[(e^{sigma0(s) X_s} - a)^+] on a grid of maturities and
// strikes, with a flag per strike telling whether it is non-decreasing in s.
struct ConvexOrderReport {
  std::vector<double> thetas;
  std::vector<double> strikes;
  std::vector<std::vector<double>> call;  // call[i][j] at thetas[i], strikes[j]
  std::vector<bool> monotone;
};
ConvexOrderReport convex_order_diagnostic(const ModelSpec& model, const std::vector<double>& thetas,
                                          const std::vector<double>& strikes, const TermStructureOptions& opts = {});

// CSV writers with a header row and %.17g numbers.
std::string smile_csv(const std::vector<SmileResult>& slices);
std::string term_structure_csv(const AtmTermStructure& ts);

}  // namespace voliv
