#include "voliv/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

namespace voliv {

double gamma_fn(double x) {
  if (!std::isfinite(x)) throw DomainError("gamma_fn: non-finite argument");
  if (x <= 0.0 && x == std::floor(x)) {
    throw DomainError("gamma_fn: pole at non-positive integer");
  }
  // glibc's tgamma is accurate to a few ulp on the whole real line and
  // handles negative arguments by reflection internally.
  return std::tgamma(x);
}

double beta_fn(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta_fn: arguments must be positive");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

Complex complex_pow(Complex z, double y) {
  if (z == Complex(0.0, 0.0)) {
    if (y > 0.0) return {0.0, 0.0};
    throw DomainError("complex_pow: zero base with non-positive exponent");
  }
  return std::exp(y * std::log(z));
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double fa = f(lo);
  const double fb = f(hi);
  if (!std::isfinite(fa) || !std::isfinite(fb)) {
    throw BracketError("find_root: non-finite function value at bracket end");
  }
  if (fa == 0.0) return lo;
  if (fb == 0.0) return hi;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw BracketError("find_root: no sign change on [lo, hi]");
  }
  auto checked = [&f](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw BracketError("find_root: non-finite function value");
    return v;
  };
  constexpr double eps = std::numeric_limits<double>::epsilon();
  auto done = [tol](double a, double b) { return std::abs(b - a) <= 4.0 * eps * std::abs(b) + tol; };
  std::uintmax_t max_iter = 300;
  const auto [a, b] = boost::math::tools::toms748_solve(checked, lo, hi, fa, fb, done, max_iter);
  return std::abs(checked(a)) <= std::abs(checked(b)) ? a : b;
}

}  // namespace voliv
