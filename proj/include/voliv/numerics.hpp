#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <type_traits>
#include <vector>

#include "voliv/errors.hpp"

namespace voliv {

using Complex = std::complex<double>;

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110453;

// Probabilists' Hermite polynomial He_n by three-term recurrence.
// Degrees above 10 are rejected; the expansions only need He_1..He_6.
template <typename Scalar>
Scalar hermite(int n, Scalar x) {
  if (n < 0 || n > 10) {
    throw UnsupportedDegreeError("hermite: degree must be in [0, 10]");
  }
  if (n == 0) return Scalar(1);
  Scalar prev(1);
  Scalar cur = x;
  for (int k = 1; k < n; ++k) {
    Scalar next = x * cur - Scalar(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

template <typename Scalar>
Scalar normal_pdf(Scalar x) {
  using std::exp;
  return Scalar(kInvSqrt2Pi) * exp(-Scalar(0.5) * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440084436210484903928); }

// Euler gamma on the real line; poles at non-positive integers raise.
double gamma_fn(double x);

// Euler beta B(a, b) for positive arguments.
double beta_fn(double a, double b);

// exp(y * Log z) on the principal branch, Log z with arg in (-pi, pi].
Complex complex_pow(Complex z, double y);

struct QuadratureSpec {
  enum class Scheme { adaptive_gauss_kronrod, tanh_sinh };

  Scheme scheme = Scheme::adaptive_gauss_kronrod;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 500;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1) {
      throw DomainError("QuadratureSpec: tolerances must be positive and max_subdivisions >= 1");
    }
  }
};

template <typename Value>
struct QuadratureResult {
  Value value{};
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208931722941, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <typename Value>
bool is_finite_value(const Value& v) {
  if constexpr (std::is_floating_point_v<Value>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

template <typename Value>
struct Segment {
  double a;
  double b;
  Value value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <typename Value, typename F>
Segment<Value> gauss_kronrod_21(F& f, double a, double b, int& evaluations) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const Value fc = f(center);
  Value kronrod = fc * kKronrodWeights[10];
  Value gauss{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const Value sum = f(center - dx) + f(center + dx);
    kronrod += sum * kKronrodWeights[j];
    if (j % 2 == 1) gauss += sum * kGaussWeights[j / 2];
  }
  evaluations += 21;
  kronrod *= half;
  gauss *= half;
  if (!is_finite_value(kronrod)) {
    throw DomainError("integrate: integrand returned a non-finite value");
  }
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

template <typename Value, typename F>
QuadratureResult<Value> adaptive_gauss_kronrod(F& f, double a, double b, const QuadratureSpec& spec) {
  QuadratureResult<Value> out;
  std::priority_queue<Segment<Value>> heap;
  auto first = gauss_kronrod_21<Value>(f, a, b, out.evaluations);
  Value total = first.value;
  double error = first.error;
  heap.push(first);
  // Segments too narrow to split are parked here; they still count.
  std::vector<Segment<Value>> frozen;

  int subdivisions = 0;
  while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (heap.empty() || subdivisions >= spec.max_subdivisions) {
      throw AccuracyError("integrate: tolerance not reached", std::abs(total), error);
    }
    Segment<Value> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen.push_back(worst);
      continue;
    }
    auto left = gauss_kronrod_21<Value>(f, worst.a, mid, out.evaluations);
    auto right = gauss_kronrod_21<Value>(f, mid, worst.b, out.evaluations);
    ++subdivisions;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Final re-summation so the incremental updates leave no round-off trail.
  total = Value{};
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  for (const auto& s : frozen) {
    total += s.value;
    error += s.error;
  }
  out.value = total;
  out.error = error;
  return out;
}

template <typename Value, typename F>
QuadratureResult<Value> tanh_sinh(F& f, double a, double b, const QuadratureSpec& spec) {
  constexpr double half_pi = 0.5 * std::numbers::pi;
  const double width = b - a;
  QuadratureResult<Value> out;

  // Contribution of the symmetric node pair at abscissa t >= 0. Points are
  // built from the distance to the nearer endpoint so that integrands with
  // endpoint singularities see exact small offsets.
  auto pair = [&](double t, bool& negligible) -> Value {
    const double u = half_pi * std::sinh(t);
    const double e = std::exp(-2.0 * u);
    const double dist = width * e / (1.0 + e);
    const double weight = 0.5 * width * half_pi * std::cosh(t) * 4.0 * e / ((1.0 + e) * (1.0 + e));
    if (dist <= std::numeric_limits<double>::min() || weight == 0.0) {
      negligible = true;
      return Value{};
    }
    // A node that rounds onto an endpoint carries no information and may hit
    // the singularity itself; it is dropped.
    const double left = a + dist;
    const double right = b - dist;
    Value v{};
    if (left != a) {
      v += f(left);
      ++out.evaluations;
    }
    if (right != b) {
      v += f(right);
      ++out.evaluations;
    }
    v *= weight;
    negligible = std::abs(v) < 1e-300;
    return v;
  };

  double h = 1.0;
  out.evaluations += 1;
  Value sum = f(0.5 * (a + b)) * (0.5 * width * half_pi);
  for (int j = 1;; ++j) {
    bool negligible = false;
    sum += pair(j * h, negligible);
    if (negligible || j > 64) break;
  }
  Value estimate = sum * h;

  const int max_levels = std::min(spec.max_subdivisions, 14);
  double error = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= max_levels; ++level) {
    h *= 0.5;
    Value fresh{};
    for (int j = 1;; j += 2) {
      bool negligible = false;
      fresh += pair(j * h, negligible);
      if (negligible || j * h > 8.0) break;
    }
    sum += fresh;
    const Value next = sum * h;
    if (!is_finite_value(next)) {
      throw DomainError("integrate: integrand returned a non-finite value");
    }
    error = std::abs(next - estimate);
    estimate = next;
    if (level >= 3 && error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(estimate))) {
      out.value = estimate;
      out.error = error;
      return out;
    }
  }
  throw AccuracyError("integrate: tanh-sinh tolerance not reached", std::abs(estimate), error);
}

}  // namespace detail

// Integrates f over (a, b); either endpoint may be infinite, in which case the
// variable substitution x = t / (1 - t^2) maps the range onto a finite one.
// f may return double or std::complex<double>.
template <typename F>
auto integrate(F&& f, double a, double b, const QuadratureSpec& spec = {})
    -> QuadratureResult<std::invoke_result_t<F&, double>> {
  using Value = std::invoke_result_t<F&, double>;
  spec.validate();
  if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate: NaN endpoint");
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, spec);
    r.value = -r.value;
    return r;
  }

  auto run = [&](auto&& g, double lo, double hi) {
    if (spec.scheme == QuadratureSpec::Scheme::tanh_sinh) {
      return detail::tanh_sinh<Value>(g, lo, hi, spec);
    }
    return detail::adaptive_gauss_kronrod<Value>(g, lo, hi, spec);
  };

  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) {
    return run(f, a, b);
  }
  // Far out in a mapped tail the integrand is assumed to have decayed; a
  // non-finite value there (typically 0 * inf from an overflowing factor) is
  // read as zero.
  constexpr double far_tail = 700.0;
  auto mapped = [&](double x, double t) -> Value {
    const double d = 1.0 - t * t;
    const Value v = f(x) * ((1.0 + t * t) / (d * d));
    if (!detail::is_finite_value(v) && std::abs(t / d) > far_tail) return Value{};
    return v;
  };
  if (lo_inf && hi_inf) {
    auto g = [&](double t) -> Value { return mapped(t / (1.0 - t * t), t); };
    return run(g, -1.0, 1.0);
  }
  if (hi_inf) {
    auto g = [&](double t) -> Value { return mapped(a + t / (1.0 - t * t), t); };
    return run(g, 0.0, 1.0);
  }
  auto g = [&](double t) -> Value { return mapped(b - t / (1.0 - t * t), t); };
  return run(g, 0.0, 1.0);
}

// Bracketed root finder (TOMS 748 from Boost.Math) on a sign-changing
// bracket. Terminates once the bracket is narrower than tol.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace voliv
