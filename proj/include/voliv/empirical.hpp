#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voliv/errors.hpp"

namespace voliv {

// Calendar date; days() counts from 1970-01-01.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  // Strict YYYY-MM-DD; invalid dates raise DomainError.
  static Date parse(const std::string& iso);
  [[nodiscard]] long days() const;
  [[nodiscard]] std::string iso() const;
  friend bool operator==(const Date&, const Date&) = default;
  friend auto operator<=>(const Date&, const Date&) = default;
};

struct OptionQuote {
  enum class Type { call, put };

  Date quote_date;
  Date expiry;
  std::string symbol;
  double strike = 0.0;
  Type option_type = Type::put;
  std::optional<double> implied_vol;
  std::int64_t volume = 0;
  std::int64_t open_interest = 0;
  double forward = 0.0;

  [[nodiscard]] long days_to_expiry() const { return expiry.days() - quote_date.days(); }
  // ACT/365.
  [[nodiscard]] double theta() const { return static_cast<double>(days_to_expiry()) / 365.0; }
  [[nodiscard]] double log_moneyness() const;
};

// Header, in order: quote_date, expiry, symbol, option_type, strike, forward,
// implied_vol, volume, open_interest. An empty implied_vol is missing. The
// first offending cell raises SchemaError with its row (header = 1) and column.
std::vector<OptionQuote> parse_quotes_csv(const std::string& text);
std::vector<OptionQuote> read_quotes_csv(const std::string& path);
std::string quotes_csv(const std::vector<OptionQuote>& quotes);

struct RejectedQuote {
  OptionQuote quote;
  std::string reason;
};

struct FilterResult {
  std::vector<OptionQuote> kept;
  std::vector<RejectedQuote> rejected;
};

inline constexpr double kMaxStandardizedMoneyness = 0.75;

// Row rules in order, each rejection naming the first rule failed:
// "open-interest", "volume", "maturity-window" (3 to 365 days), "implied-vol",
// "symbol" (SPX), "moneyness". Standardized moneyness is
// k / (atm_vol sqrt(theta)) with atm_vol the implied vol of the quote closest
// to k = 0 among those in the same (quote_date, expiry) slice that pass the
// first five rules. If that quote itself fails the moneyness rule the whole
// slice does. Input order is preserved in both outputs.
FilterResult filter_quotes(const std::vector<OptionQuote>& raw);

struct MaturityBucket {
  Date quote_date;
  Date expiry;
  double theta = 0.0;
  double atm_vol = 0.0;
  std::vector<OptionQuote> quotes;
};

// Groups kept quotes by (quote_date, expiry), ordered by quote date then expiry.
std::vector<MaturityBucket> build_buckets(const std::vector<OptionQuote>& kept);

struct SmilePoint {
  double k = 0.0;
  double vol = 0.0;
};

struct BucketDiagnostics {
  bool accepted = false;
  std::string reason;  // empty when accepted
  double max_standardized_moneyness = 0.0;
  int otm_puts = 0;
  int otm_calls = 0;
  int outliers = 0;
  std::vector<SmilePoint> points;  // cleaned out-of-the-money smile, increasing k
};

// Out-of-the-money quotes (puts below the forward, calls above, both at it)
// sorted by k, equal k averaged. A point at k = 0 counts toward neither side. A point is an outlier when it sits more than
// five median absolute deviations from the median of the five-point window
// around it. Rejection reasons, first failing: "moneyness-range" (max
// |standardized moneyness| < 0.5), "otm-put-count", "otm-call-count" (four of
// each needed after outlier removal).
BucketDiagnostics validate_bucket(const MaturityBucket& b);

enum class SplineBoundary { not_a_knot, natural };

class CubicSpline {
 public:
  // Needs at least four strictly increasing nodes.
  CubicSpline(std::vector<double> x, std::vector<double> y, SplineBoundary boundary = SplineBoundary::not_a_knot);

  [[nodiscard]] double value(double t) const;
  [[nodiscard]] double derivative(double t) const;
  [[nodiscard]] double second_derivative(double t) const;

 private:
  [[nodiscard]] std::size_t segment(double t) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the nodes
};

struct SplineAtm {
  double atm_vol = 0.0;
  double skew = 0.0;
  double curvature = 0.0;
};

// Spline of the cleaned smile evaluated at k = 0. Fewer than four points
// raise InsufficientDataError.
SplineAtm spline_atm(const std::vector<SmilePoint>& points, SplineBoundary boundary = SplineBoundary::not_a_knot);
SplineAtm spline_atm(const MaturityBucket& b, SplineBoundary boundary = SplineBoundary::not_a_knot);

struct PowerLawFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  int n_points = 0;
  int sign = 1;
};

// OLS of log|value| on log theta after averaging values that share a
// maturity. Raises FitError: count (< 4 maturities), sign (mixed or zero
// values), ordering (first three magnitudes by increasing theta not monotone).
PowerLawFit fit_power_law(const std::vector<double>& thetas, const std::vector<double>& values);

struct BucketRow {
  Date quote_date;
  Date expiry;
  double theta = 0.0;
  double atm_vol = 0.0;
  double skew = 0.0;
  double curvature = 0.0;
  bool accepted = false;
  std::string reject_reason;
};

struct FitOutcome {
  std::optional<PowerLawFit> fit;
  std::string skip_reason;  // "count", "ordering" or "sign" when skipped
};

struct EmpiricalResult {
  FilterResult filtered;
  std::vector<BucketRow> buckets;
  FitOutcome skew_fit;
  FitOutcome curvature_fit;
};

// Filter, bucket, validate, spline and fit both term structures.
EmpiricalResult run_empirical(const std::vector<OptionQuote>& quotes,
                              SplineBoundary boundary = SplineBoundary::not_a_knot);

// Columns theta, atm_iv, skew, curvature, accepted, reject_reason; rejected
// buckets leave skew and curvature empty.
std::string buckets_csv(const std::vector<BucketRow>& rows);
// {"skew": {...}, "curvature": {...}}, each a fit record or
// {"skipped": true, "reason": ...}.
std::string fit_json(const EmpiricalResult& r);

}  // namespace voliv
