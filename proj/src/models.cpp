#include "voliv/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "voliv/errors.hpp"

namespace voliv {

namespace {

void check_theta(double theta, const char* who) {
  if (!(theta > 0.0) || !(theta <= 1.0)) {
    throw DomainError(std::string(who) + ": theta must lie in (0, 1]");
  }
}

void check_finite(std::initializer_list<double> values, const char* who) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(who) + ": non-finite parameter");
  }
}

struct GammaState {
  double k;
  double kbar;
  double gamma;
  double sigma0;
};

GammaState gamma_state(const GammaReturnParams& p, double theta) {
  p.validate();
  check_theta(theta, "gamma model");
  GammaState s{};
  s.k = p.c_k * std::pow(theta, p.alpha);
  s.kbar = p.c_kbar * std::pow(theta, p.alpha_bar);
  s.gamma = p.c_gamma * std::pow(theta, p.beta());
  s.sigma0 = std::sqrt(2.0 * s.k + s.kbar) * s.gamma;
  return s;
}

struct CgmyState {
  double C;
  double G;
  double M;
  double sigma0;
};

CgmyState cgmy_state(const CgmyReturnParams& p, double theta) {
  p.validate();
  check_theta(theta, "CGMY model");
  CgmyState s{};
  s.M = p.c_M * std::pow(theta, p.alpha_M);
  s.G = s.M + p.c_G * std::pow(theta, p.alpha_G);
  s.C = p.c_C * std::pow(theta, p.beta());
  s.sigma0 = std::sqrt(s.C * gamma_fn(2.0 - p.Y) * (std::pow(s.M, p.Y - 2.0) + std::pow(s.G, p.Y - 2.0)));
  return s;
}

double config_number(const ConfigMap& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string& text = it->second;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Kahan's compensated log(1 + z).
Complex log1p_c(Complex z) {
  const Complex w = 1.0 + z;
  if (w == Complex(1.0, 0.0)) return z;
  return z * std::log(w) / (w - 1.0);
}

Complex expm1_c(Complex z) {
  const Complex h = 0.5 * z;
  return 2.0 * std::exp(h) * std::sinh(h);
}

// b^Y ((1 + z)^Y - 1) without cancellation for small z.
Complex scaled_power_increment(double b, Complex z, double Y) {
  return std::pow(b, Y) * expm1_c(Y * log1p_c(z));
}

}  // namespace

void GammaReturnParams::validate() const {
  check_finite({c_k, c_kbar, c_gamma, alpha, alpha_bar}, "GammaReturnParams");
  if (!(c_k > 0.0) || !(c_gamma > 0.0) || c_kbar < 0.0) {
    throw DomainError("GammaReturnParams: c_k, c_gamma must be > 0 and c_kbar >= 0");
  }
  if (!(alpha > -1.0 && alpha < 0.0)) throw DomainError("GammaReturnParams: alpha must lie in (-1, 0)");
  if (!(alpha_bar > alpha)) throw DomainError("GammaReturnParams: alpha_bar must exceed alpha");
}

void CgmyReturnParams::validate() const {
  check_finite({c_C, c_G, c_M, alpha_M, alpha_G, Y}, "CgmyReturnParams");
  if (!(c_C > 0.0) || !(c_M > 0.0)) throw DomainError("CgmyReturnParams: c_C and c_M must be > 0");
  // G = c_M theta^alpha_M + c_G theta^alpha_G is smallest relative to M at
  // theta = 1, so positivity on (0, 1] reduces to c_M + c_G > 0.
  if (!(c_M + c_G > 0.0)) throw DomainError("CgmyReturnParams: G_theta must stay positive (c_M + c_G > 0)");
  if (!(alpha_M > -1.0 && alpha_M < -0.5)) throw DomainError("CgmyReturnParams: alpha_M must lie in (-1, -0.5)");
  if (!(alpha_G > alpha_M)) throw DomainError("CgmyReturnParams: alpha_G must exceed alpha_M");
  if (!(Y > 0.0 && Y < 2.0) || Y == 1.0) throw DomainError("CgmyReturnParams: Y must lie in (0, 2) without 1");
}

void HestonDLParams::validate() const {
  check_finite({kappa, vbar, eta, rho, v0, alpha_rho}, "HestonDLParams");
  if (!(kappa > 0.0) || !(vbar > 0.0) || eta < 0.0 || !(v0 > 0.0)) {
    throw DomainError("HestonDLParams: kappa, vbar, v0 must be > 0 and eta >= 0");
  }
  if (std::abs(rho) > 1.0) throw DomainError("HestonDLParams: |rho| must be <= 1");
  if (alpha_rho < 0.0) throw DomainError("HestonDLParams: alpha_rho must be >= 0");
}

void ThreeHalvesParams::validate() const {
  check_finite({kappa, vbar, epsilon, rho, v0, alpha_rho}, "ThreeHalvesParams");
  if (!(kappa > 0.0) || !(vbar > 0.0) || !(epsilon > 0.0) || !(v0 > 0.0)) {
    throw DomainError("ThreeHalvesParams: kappa, vbar, epsilon, v0 must be > 0");
  }
  if (std::abs(rho) > 1.0) throw DomainError("ThreeHalvesParams: |rho| must be <= 1");
  if (alpha_rho < 0.0) throw DomainError("ThreeHalvesParams: alpha_rho must be >= 0");
}

void RoughBergomiAsymParams::validate() const {
  check_finite({hurst, eta, rho}, "RoughBergomiAsymParams");
  if (!(hurst > 0.0 && hurst <= 0.5)) throw DomainError("RoughBergomiAsymParams: hurst must lie in (0, 0.5]");
  if (!(eta > 0.0)) throw DomainError("RoughBergomiAsymParams: eta must be > 0");
  if (std::abs(rho) > 1.0) throw DomainError("RoughBergomiAsymParams: |rho| must be <= 1");
  if (!v0_curve) throw DomainError("RoughBergomiAsymParams: missing forward variance curve");
}

ReturnMoments gamma_moments(const GammaReturnParams& p, double theta) {
  const GammaState s = gamma_state(p, theta);
  const double shape = 2.0 * s.k + s.kbar;
  return {s.sigma0, -2.0 * s.kbar / std::pow(shape, 1.5), 6.0 / shape};
}

CumulantData gamma_cumulants(const GammaReturnParams& p, double theta) {
  const ReturnMoments mom = gamma_moments(p, theta);
  CumulantData c;
  c.theta = theta;
  c.sigma0 = mom.sigma0;
  c.beta0 = 0.5;
  c.kappa2 = mom.sigma0 / std::sqrt(theta);
  c.beta1 = p.alpha_bar - 1.5 * p.alpha;
  c.beta2 = -p.alpha;
  c.kappa3 = mom.skewness / 6.0 * std::pow(theta, -c.beta1);
  c.kappa4 = mom.excess_kurtosis / 24.0 * std::pow(theta, p.alpha);
  c.m = 0.0;
  c.n = 0.0;
  c.validate();
  return c;
}

Complex gamma_cf(Complex u, const GammaReturnParams& p, double theta) {
  const GammaState s = gamma_state(p, theta);
  if (!(s.gamma < 1.0)) throw DomainError("gamma_cf: gamma_theta must be < 1");
  const Complex i(0.0, 1.0);
  const double w = s.k * std::log1p(-s.gamma) + (s.k + s.kbar) * std::log1p(s.gamma);
  const Complex a = i * (s.gamma / s.sigma0) * u;
  // (1 + gamma^2 u^2 / sigma0^2) split into its two linear factors so that
  // each principal power stays on the right branch off the real axis.
  const Complex log_cf = i * u * (w / s.sigma0) - s.k * log1p_c(-a) - (s.k + s.kbar) * log1p_c(a);
  return std::exp(log_cf);
}

ReturnMoments cgmy_moments(const CgmyReturnParams& p, double theta) {
  const CgmyState s = cgmy_state(p, theta);
  return {s.sigma0, cgmy_cumulant(3, p, theta), cgmy_cumulant(4, p, theta)};
}

double cgmy_cumulant(int order, const CgmyReturnParams& p, double theta) {
  if (order < 2) throw DomainError("cgmy_cumulant: order must be >= 2");
  const CgmyState s = cgmy_state(p, theta);
  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  const double raw =
      s.C * gamma_fn(order - p.Y) * (std::pow(s.M, p.Y - order) + sign * std::pow(s.G, p.Y - order));
  return raw / std::pow(s.sigma0, order);
}

CumulantData cgmy_cumulants(const CgmyReturnParams& p, double theta) {
  if (p.Y == 1.0 || p.Y == 2.0) throw DomainError("cgmy_cumulants: Y in {1, 2} hits a gamma pole");
  const ReturnMoments mom = cgmy_moments(p, theta);
  CumulantData c;
  c.theta = theta;
  c.sigma0 = mom.sigma0;
  c.beta0 = 0.5;
  c.kappa2 = mom.sigma0 / std::sqrt(theta);
  c.beta1 = p.alpha_G - 2.0 * p.alpha_M - 0.5;
  c.beta2 = -2.0 * p.alpha_M - 1.0;
  c.kappa3 = mom.skewness / 6.0 * std::pow(theta, -c.beta1);
  c.kappa4 = mom.excess_kurtosis / 24.0 * std::pow(theta, -c.beta2);
  c.m = 0.0;
  c.n = 0.0;
  c.validate();
  return c;
}

Complex cgmy_cf(Complex u, const CgmyReturnParams& p, double theta) {
  const CgmyState s = cgmy_state(p, theta);
  if (!(s.M > 1.0)) throw DomainError("cgmy_cf: M_theta must be > 1");
  const Complex i(0.0, 1.0);
  const double Y = p.Y;
  const double level = s.C * gamma_fn(-Y);
  const double w = -level * (std::pow(s.M, Y) * std::expm1(Y * std::log1p(-1.0 / s.M)) +
                             std::pow(s.G, Y) * std::expm1(Y * std::log1p(1.0 / s.G)));
  const Complex x = u / s.sigma0;
  const Complex jump =
      level * (scaled_power_increment(s.M, -i * x / s.M, Y) + scaled_power_increment(s.G, i * x / s.G, Y));
  return std::exp(i * x * w + jump);
}

CumulantData svm_coeffs(double f0, double g0, double gprime_c0, double rho, double alpha_rho, double theta,
                        double kappa2) {
  check_finite({f0, g0, gprime_c0, rho, alpha_rho, theta, kappa2}, "svm_coeffs");
  if (!(f0 > 0.0)) throw DomainError("svm_coeffs: f0 must be > 0");
  if (!(theta > 0.0)) throw DomainError("svm_coeffs: theta must be > 0");
  if (alpha_rho < 0.0) throw DomainError("svm_coeffs: alpha_rho must be >= 0");
  const double rho_t = rho * std::pow(theta, alpha_rho);
  const double ratio = g0 / f0;
  CumulantData c;
  c.theta = theta;
  c.kappa2 = kappa2;
  c.sigma0 = kappa2 * std::sqrt(theta);
  c.beta0 = 0.5;
  c.beta1 = 0.5 + alpha_rho;
  c.beta2 = 1.0;
  c.kappa3 = rho * ratio / 2.0;
  c.kappa4 = rho_t * rho_t / 6.0 * (gprime_c0 / f0) + (1.0 + 2.0 * rho_t * rho_t) / 6.0 * ratio * ratio;
  c.m = 1.0;
  c.n = 2.0;
  c.validate();
  return c;
}

double heston_kappa2(const HestonDLParams& p, double theta) {
  p.validate();
  const double x = p.kappa * theta;
  // (1 - e^{-x}) / x, stable for small x.
  const double decay = (x < 1e-8) ? 1.0 - 0.5 * x : -std::expm1(-x) / x;
  return std::sqrt(p.vbar + (p.v0 - p.vbar) * decay);
}

CumulantData heston_cumulants(const HestonDLParams& p, double theta) {
  p.validate();
  const double f0 = std::sqrt(p.v0);
  // v(x) = x, c(x) = eta sqrt(x): g = f' c = eta / 2 and g' = 0.
  return svm_coeffs(f0, 0.5 * p.eta, 0.0, p.rho, p.alpha_rho, theta, heston_kappa2(p, theta));
}

double three_halves_general_kappa4(const ThreeHalvesParams& p, double theta) {
  p.validate();
  const double rho_t = p.rho * std::pow(theta, p.alpha_rho);
  const double f0 = std::sqrt(p.v0);
  // c(v) = epsilon v^{3/2}: g = epsilon v / 2 and g' c = epsilon^2 v^{3/2} / 2.
  const double g0 = 0.5 * p.epsilon * p.v0;
  const double gprime_c = 0.5 * p.epsilon * p.epsilon * std::pow(p.v0, 1.5);
  return rho_t * rho_t / 6.0 * gprime_c / f0 + (1.0 + 2.0 * rho_t * rho_t) / 6.0 * (g0 / f0) * (g0 / f0);
}

CumulantData three_halves_coeffs(const ThreeHalvesParams& p, double theta, std::string* warning) {
  p.validate();
  if (!(theta > 0.0)) throw DomainError("three_halves_coeffs: theta must be > 0");
  const double rho_t = p.rho * std::pow(theta, p.alpha_rho);
  CumulantData c;
  c.theta = theta;
  c.kappa2 = std::sqrt(p.v0);
  c.sigma0 = c.kappa2 * std::sqrt(theta);
  c.beta0 = 0.5;
  c.beta1 = 0.5 + p.alpha_rho;
  c.beta2 = 1.0;
  c.kappa3 = p.rho * p.epsilon * std::sqrt(p.v0) / 4.0;
  c.kappa4 = (1.0 + 3.0 * rho_t * rho_t) * p.epsilon * p.epsilon * p.v0 * p.v0 / 6.0;
  c.m = 1.0;
  c.n = 2.0;
  c.validate();
  if (warning != nullptr) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "3/2 model: tabulated kappa4 = %.10g differs from the general formula value %.10g",
                  c.kappa4, three_halves_general_kappa4(p, theta));
    *warning = buf;
  }
  return c;
}

CumulantData rough_bergomi_coeffs(const RoughBergomiAsymParams& p, double theta, const QuadratureSpec& quad) {
  p.validate();
  if (!(theta > 0.0)) throw DomainError("rough_bergomi_coeffs: theta must be > 0");
  const double H = p.hurst;
  auto xi = [&](double t) {
    const double v = p.v0_curve(t);
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("rough_bergomi_coeffs: forward variance must be > 0");
    return v;
  };

  // Everything is rescaled to [0, 1] in time and by the average variance so
  // that the quadrature works on O(1) quantities.
  const double mean_var = integrate([&](double tau) { return xi(theta * tau); }, 0.0, 1.0, quad).value;

  QuadratureSpec inner_spec = quad;
  inner_spec.scheme = QuadratureSpec::Scheme::tanh_sinh;
  auto inner = [&](double tau) {
    if (tau <= 0.0) return 0.0;
    // r = tau - s carries the (t - s)^{H - 1/2} singularity to r = 0.
    auto g = [&](double r) { return std::pow(r, H - 0.5) * std::sqrt(xi(theta * (tau - r)) / mean_var); };
    return integrate(g, 0.0, tau, inner_spec).value * xi(theta * tau) / mean_var;
  };
  const double scaled_I = integrate(inner, 0.0, 1.0, quad).value;

  CumulantData c;
  c.theta = theta;
  c.kappa2 = std::sqrt(mean_var);
  c.sigma0 = c.kappa2 * std::sqrt(theta);
  c.beta0 = 0.5;
  c.beta1 = H;
  c.beta2 = 2.0 * H;
  c.kappa3 = p.rho * p.eta * std::sqrt(0.5 * H) * scaled_I;
  const double rho2 = p.rho * p.rho;
  const double eta2 = p.eta * p.eta;
  c.kappa4 = ((1.0 + 2.0 * rho2) * eta2 * H + 4.0 * rho2 * eta2 * H * (H + 1.0) * beta_fn(H + 1.5, H + 1.5)) /
             (8.0 * (H + 0.5) * (H + 0.5) * (H + 1.0));
  c.m = 1.0;
  c.n = 2.0;
  c.validate();
  return c;
}

CumulantData model_cumulants(const ModelSpec& model, double theta) {
  return std::visit(
      [theta](const auto& p) -> CumulantData {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaReturnParams>) return gamma_cumulants(p, theta);
        if constexpr (std::is_same_v<T, CgmyReturnParams>) return cgmy_cumulants(p, theta);
        if constexpr (std::is_same_v<T, HestonDLParams>) return heston_cumulants(p, theta);
        if constexpr (std::is_same_v<T, ThreeHalvesParams>) return three_halves_coeffs(p, theta);
        if constexpr (std::is_same_v<T, RoughBergomiAsymParams>) return rough_bergomi_coeffs(p, theta);
      },
      model);
}

bool has_cf(const ModelSpec& model) {
  return std::holds_alternative<GammaReturnParams>(model) || std::holds_alternative<CgmyReturnParams>(model);
}

std::function<Complex(Complex)> model_cf(const ModelSpec& model, double theta) {
  if (const auto* g = std::get_if<GammaReturnParams>(&model)) {
    return [p = *g, theta](Complex u) { return gamma_cf(u, p, theta); };
  }
  if (const auto* c = std::get_if<CgmyReturnParams>(&model)) {
    return [p = *c, theta](Complex u) { return cgmy_cf(u, p, theta); };
  }
  throw DomainError("model_cf: " + model_name(model) + " has no closed-form characteristic function");
}

std::string model_name(const ModelSpec& model) {
  switch (model.index()) {
    case 0: return "gamma";
    case 1: return "cgmy";
    case 2: return "heston";
    case 3: return "three_halves";
    default: return "rough_bergomi";
  }
}

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (out.count(key) != 0) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ModelSpec model_from_config(const ConfigMap& cfg) {
  auto it = cfg.find("model");
  const std::string name = (it == cfg.end()) ? "gamma" : it->second;
  if (name == "gamma") {
    GammaReturnParams p;
    p.c_k = config_number(cfg, "c_k", p.c_k);
    p.c_kbar = config_number(cfg, "c_kbar", p.c_kbar);
    p.c_gamma = config_number(cfg, "c_gamma", p.c_gamma);
    p.alpha = config_number(cfg, "alpha", p.alpha);
    p.alpha_bar = config_number(cfg, "alpha_bar", p.alpha_bar);
    return p;
  }
  if (name == "cgmy") {
    CgmyReturnParams p;
    p.c_C = config_number(cfg, "c_C", p.c_C);
    p.c_G = config_number(cfg, "c_G", p.c_G);
    p.c_M = config_number(cfg, "c_M", p.c_M);
    p.alpha_M = config_number(cfg, "alpha_M", p.alpha_M);
    p.alpha_G = config_number(cfg, "alpha_G", p.alpha_G);
    p.Y = config_number(cfg, "Y", p.Y);
    return p;
  }
  if (name == "heston") {
    HestonDLParams p;
    p.kappa = config_number(cfg, "kappa", p.kappa);
    p.vbar = config_number(cfg, "vbar", p.vbar);
    p.eta = config_number(cfg, "eta", p.eta);
    p.rho = config_number(cfg, "rho", p.rho);
    p.v0 = config_number(cfg, "v0", p.v0);
    p.alpha_rho = config_number(cfg, "alpha_rho", p.alpha_rho);
    return p;
  }
  if (name == "three_halves") {
    ThreeHalvesParams p;
    p.kappa = config_number(cfg, "kappa", p.kappa);
    p.vbar = config_number(cfg, "vbar", p.vbar);
    p.epsilon = config_number(cfg, "epsilon", p.epsilon);
    p.rho = config_number(cfg, "rho", p.rho);
    p.v0 = config_number(cfg, "v0", p.v0);
    p.alpha_rho = config_number(cfg, "alpha_rho", p.alpha_rho);
    return p;
  }
  if (name == "rough_bergomi") {
    RoughBergomiAsymParams p;
    p.hurst = config_number(cfg, "hurst", p.hurst);
    p.eta = config_number(cfg, "eta", p.eta);
    p.rho = config_number(cfg, "rho", p.rho);
    const double xi0 = config_number(cfg, "xi0", 0.04);
    if (!(xi0 > 0.0)) throw ConfigError("config: xi0 must be > 0");
    p.v0_curve = [xi0](double) { return xi0; };
    return p;
  }
  throw ConfigError("config: unknown model '" + name + "'");
}

std::string model_to_config(const ModelSpec& model) {
  std::ostringstream out;
  out << "model = \"" << model_name(model) << "\"\n";
  std::visit(
      [&out](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        auto put = [&out](const char* key, double v) { out << key << " = " << fmt(v) << "\n"; };
        if constexpr (std::is_same_v<T, GammaReturnParams>) {
          put("c_k", p.c_k);
          put("c_kbar", p.c_kbar);
          put("c_gamma", p.c_gamma);
          put("alpha", p.alpha);
          put("alpha_bar", p.alpha_bar);
        } else if constexpr (std::is_same_v<T, CgmyReturnParams>) {
          put("c_C", p.c_C);
          put("c_G", p.c_G);
          put("c_M", p.c_M);
          put("alpha_M", p.alpha_M);
          put("alpha_G", p.alpha_G);
          put("Y", p.Y);
        } else if constexpr (std::is_same_v<T, HestonDLParams>) {
          put("kappa", p.kappa);
          put("vbar", p.vbar);
          put("eta", p.eta);
          put("rho", p.rho);
          put("v0", p.v0);
          put("alpha_rho", p.alpha_rho);
        } else if constexpr (std::is_same_v<T, ThreeHalvesParams>) {
          put("kappa", p.kappa);
          put("vbar", p.vbar);
          put("epsilon", p.epsilon);
          put("rho", p.rho);
          put("v0", p.v0);
          put("alpha_rho", p.alpha_rho);
        } else {
          put("hurst", p.hurst);
          put("eta", p.eta);
          put("rho", p.rho);
          put("xi0", p.v0_curve(0.0));
        }
      },
      model);
  return out.str();
}

}  // namespace voliv
