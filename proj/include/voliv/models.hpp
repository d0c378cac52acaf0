#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>

#include "voliv/edgeworth.hpp"
#include "voliv/numerics.hpp"

namespace voliv {

// Difference of two gamma variables with maturity-dependent shape and scale:
// k = c_k theta^alpha, kbar = c_kbar theta^alpha_bar, gamma = c_gamma theta^beta.
struct GammaReturnParams {
  double c_k = 3.0;
  double c_kbar = 0.5;
  double c_gamma = 0.1;
  double alpha = -0.2;
  double alpha_bar = -0.1;

  void validate() const;
  [[nodiscard]] double beta() const { return 0.5 * (1.0 - alpha); }
};

// M = c_M theta^alpha_M, G = M + c_G theta^alpha_G, C = c_C theta^beta.
// c_G is signed: c_G < 0 makes G < M and the return negatively skewed.
struct CgmyReturnParams {
  double c_C = 0.1;
  double c_G = -0.5;
  double c_M = 5.0;
  double alpha_M = -0.6;
  double alpha_G = -0.5;
  double Y = 1.5;

  void validate() const;
  [[nodiscard]] double beta() const { return 1.0 - (Y - 2.0) * alpha_M; }
};

// Heston with leverage rho_t = rho t^alpha_rho.
struct HestonDLParams {
  double kappa = 1.0;
  double vbar = 0.06;
  double eta = 0.5;
  double rho = -0.7;
  double v0 = 0.04;
  double alpha_rho = 0.0;

  void validate() const;
  [[nodiscard]] double feller_ratio() const { return 2.0 * kappa * vbar / (eta * eta); }
};

// dv = kappa v (vbar - v) dt + epsilon v^{3/2} dW.
struct ThreeHalvesParams {
  double kappa = 2.0;
  double vbar = 0.04;
  double epsilon = 2.0;
  double rho = -0.7;
  double v0 = 0.04;
  double alpha_rho = 0.0;

  void validate() const;
};

struct RoughBergomiAsymParams {
  double hurst = 0.1;
  double eta = 1.9;
  double rho = -0.9;
  // Forward variance curve xi(t). Config files carry a flat level only.
  std::function<double(double)> v0_curve = [](double) { return 0.04; };

  void validate() const;
};

using ModelSpec =
    std::variant<GammaReturnParams, CgmyReturnParams, HestonDLParams, ThreeHalvesParams, RoughBergomiAsymParams>;

// Raw distribution data of a Levy-type return at one maturity.
struct ReturnMoments {
  double sigma0 = 0.0;
  double skewness = 0.0;         // third cumulant of X
  double excess_kurtosis = 0.0;  // fourth cumulant of X
};

ReturnMoments gamma_moments(const GammaReturnParams& p, double theta);
CumulantData gamma_cumulants(const GammaReturnParams& p, double theta);
// Characteristic function of the normalised return X. Valid for
// |Im u| < sigma0 / gamma.
Complex gamma_cf(Complex u, const GammaReturnParams& p, double theta);

ReturnMoments cgmy_moments(const CgmyReturnParams& p, double theta);
CumulantData cgmy_cumulants(const CgmyReturnParams& p, double theta);
// Valid for -M sigma0 < Im u < G sigma0.
Complex cgmy_cf(Complex u, const CgmyReturnParams& p, double theta);
// n-th cumulant of the normalised CGMY return, n >= 2.
double cgmy_cumulant(int order, const CgmyReturnParams& p, double theta);

// Regular stochastic volatility with f = sqrt(v), g = f' c evaluated at the
// initial state.
CumulantData svm_coeffs(double f0, double g0, double gprime_c0, double rho, double alpha_rho, double theta,
                        double kappa2);

// sqrt of the time-averaged expected Heston variance over [0, theta].
double heston_kappa2(const HestonDLParams& p, double theta);
CumulantData heston_cumulants(const HestonDLParams& p, double theta);

// Tabulated 3/2-model coefficients. kappa4 disagrees with the general
// stochastic-volatility formula; if warning is non-null it receives a note
// carrying both values.
CumulantData three_halves_coeffs(const ThreeHalvesParams& p, double theta, std::string* warning = nullptr);
// kappa4 from the general stochastic-volatility formula, for comparison.
double three_halves_general_kappa4(const ThreeHalvesParams& p, double theta);

// kappa2 is sqrt((1/theta) * integral of xi over [0, theta]).
CumulantData rough_bergomi_coeffs(const RoughBergomiAsymParams& p, double theta, const QuadratureSpec& quad = {});

// Dispatches to the model's cumulant routine.
CumulantData model_cumulants(const ModelSpec& model, double theta);

// Exact characteristic function of X; only the two return models have one.
std::function<Complex(Complex)> model_cf(const ModelSpec& model, double theta);
[[nodiscard]] bool has_cf(const ModelSpec& model);

std::string model_name(const ModelSpec& model);

// Flat key = value configuration (TOML-compatible subset: comments, quoted
// strings, numbers, one-line arrays).
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
ConfigMap read_config_file(const std::string& path);

// Builds a model from "model" plus field-named keys. Unknown model names or
// malformed numbers raise ConfigError. Missing keys keep the defaults.
ModelSpec model_from_config(const ConfigMap& cfg);
std::string model_to_config(const ModelSpec& model);

}  // namespace voliv
