#include "voliv/empirical.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "voliv/parallel.hpp"

namespace voliv {

namespace {

const std::vector<std::string> kColumns = {"quote_date", "expiry", "symbol", "option_type", "strike",
                                           "forward",    "implied_vol", "volume", "open_interest"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_real(const std::string& text, std::size_t row, const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw SchemaError("quotes: column '" + column + "' expects a number, got '" + text + "'", row, column);
  }
  return v;
}

std::int64_t parse_count(const std::string& text, std::size_t row, const std::string& column) {
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || v < 0) {
    throw SchemaError("quotes: column '" + column + "' expects a non-negative integer, got '" + text + "'", row,
                      column);
  }
  return v;
}

bool same_slice(const OptionQuote& a, const OptionQuote& b) {
  return a.quote_date == b.quote_date && a.expiry == b.expiry;
}

bool otm(const OptionQuote& q) {
  const double k = q.log_moneyness();
  return q.option_type == OptionQuote::Type::put ? k <= 0.0 : k >= 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Index of the quote closest to the money; ties go to the earlier quote.
std::size_t closest_to_atm(const std::vector<const OptionQuote*>& quotes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < quotes.size(); ++i) {
    if (std::abs(quotes[i]->log_moneyness()) < std::abs(quotes[best]->log_moneyness())) best = i;
  }
  return best;
}

double standardized(const OptionQuote& q, double atm_vol) {
  return q.log_moneyness() / (atm_vol * std::sqrt(q.theta()));
}

std::vector<SmilePoint> otm_points(const MaturityBucket& b, std::vector<bool>* is_put = nullptr) {
  std::vector<std::pair<SmilePoint, bool>> raw;
  for (const auto& q : b.quotes) {
    if (!q.implied_vol || !otm(q)) continue;
    raw.push_back({{q.log_moneyness(), *q.implied_vol}, q.option_type == OptionQuote::Type::put});
  }
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& c) { return a.first.k < c.first.k; });
  std::vector<SmilePoint> out;
  std::vector<bool> puts;
  for (std::size_t i = 0; i < raw.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < raw.size() && raw[j].first.k == raw[i].first.k) sum += raw[j++].first.vol;
    out.push_back({raw[i].first.k, sum / static_cast<double>(j - i)});
    puts.push_back(raw[i].first.k < 0.0);
    i = j;
  }
  if (is_put != nullptr) *is_put = std::move(puts);
  return out;
}

}  // namespace

Date Date::parse(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw DomainError("date: expected YYYY-MM-DD, got '" + iso + "'");
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (iso[i] < '0' || iso[i] > '9') throw DomainError("date: expected YYYY-MM-DD, got '" + iso + "'");
  }
  Date d;
  d.year = std::stoi(iso.substr(0, 4));
  d.month = static_cast<unsigned>(std::stoi(iso.substr(5, 2)));
  d.day = static_cast<unsigned>(std::stoi(iso.substr(8, 2)));
  if (!std::chrono::year_month_day{std::chrono::year{d.year}, std::chrono::month{d.month}, std::chrono::day{d.day}}.ok()) {
    throw DomainError("date: no such calendar day '" + iso + "'");
  }
  return d;
}

long Date::days() const {
  namespace ch = std::chrono;
  return ch::sys_days{ch::year_month_day{ch::year{year}, ch::month{month}, ch::day{day}}}.time_since_epoch().count();
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

double OptionQuote::log_moneyness() const { return std::log(strike / forward); }

std::vector<OptionQuote> parse_quotes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("quotes: missing header", 0, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_row(line);
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (c >= header.size() || header[c] != kColumns[c]) {
      throw SchemaError("quotes: header column " + std::to_string(c + 1) + " must be '" + kColumns[c] + "'", 1,
                        kColumns[c]);
    }
  }
  if (header.size() != kColumns.size()) {
    throw SchemaError("quotes: unexpected extra header column '" + header[kColumns.size()] + "'", 1,
                      header[kColumns.size()]);
  }

  std::vector<OptionQuote> quotes;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != kColumns.size()) {
      const std::string& col = kColumns[std::min(cells.size(), kColumns.size() - 1)];
      throw SchemaError("quotes: expected 9 cells, found " + std::to_string(cells.size()), row, col);
    }
    OptionQuote q;
    auto date = [&](std::size_t c) {
      try {
        return Date::parse(cells[c]);
      } catch (const DomainError& e) {
        throw SchemaError(std::string("quotes: ") + e.what(), row, kColumns[c]);
      }
    };
    q.quote_date = date(0);
    q.expiry = date(1);
    if (q.expiry < q.quote_date) throw SchemaError("quotes: expiry precedes quote_date", row, "expiry");
    q.symbol = cells[2];
    if (cells[3] == "call" || cells[3] == "C") {
      q.option_type = OptionQuote::Type::call;
    } else if (cells[3] == "put" || cells[3] == "P") {
      q.option_type = OptionQuote::Type::put;
    } else {
      throw SchemaError("quotes: option_type must be call or put, got '" + cells[3] + "'", row, "option_type");
    }
    q.strike = parse_real(cells[4], row, "strike");
    if (!(q.strike > 0.0)) throw SchemaError("quotes: strike must be > 0", row, "strike");
    q.forward = parse_real(cells[5], row, "forward");
    if (!(q.forward > 0.0)) throw SchemaError("quotes: forward must be > 0", row, "forward");
    if (!cells[6].empty()) {
      q.implied_vol = parse_real(cells[6], row, "implied_vol");
      if (!(*q.implied_vol > 0.0)) throw SchemaError("quotes: implied_vol must be > 0", row, "implied_vol");
    }
    q.volume = parse_count(cells[7], row, "volume");
    q.open_interest = parse_count(cells[8], row, "open_interest");
    quotes.push_back(std::move(q));
  }
  return quotes;
}

std::vector<OptionQuote> read_quotes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("quotes: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_quotes_csv(buf.str());
}

std::string quotes_csv(const std::vector<OptionQuote>& quotes) {
  std::string out;
  for (std::size_t c = 0; c < kColumns.size(); ++c) out += (c ? "," : "") + kColumns[c];
  out += '\n';
  for (const auto& q : quotes) {
    out += q.quote_date.iso() + ',' + q.expiry.iso() + ',' + q.symbol + ',' +
           (q.option_type == OptionQuote::Type::call ? "call" : "put") + ',' + num(q.strike) + ',' + num(q.forward) +
           ',' + (q.implied_vol ? num(*q.implied_vol) : "") + ',' + std::to_string(q.volume) + ',' +
           std::to_string(q.open_interest) + '\n';
  }
  return out;
}

FilterResult filter_quotes(const std::vector<OptionQuote>& raw) {
  std::vector<std::string> reason(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const OptionQuote& q = raw[i];
    const long days = q.days_to_expiry();
    if (q.open_interest <= 0) {
      reason[i] = "open-interest";
    } else if (q.volume <= 0) {
      reason[i] = "volume";
    } else if (days < 3 || days > 365) {
      reason[i] = "maturity-window";
    } else if (!q.implied_vol) {
      reason[i] = "implied-vol";
    } else if (q.symbol != "SPX") {
      reason[i] = "symbol";
    }
  }

  // Moneyness needs the slice's ATM vol, taken from survivors of the row rules.
  std::vector<bool> done(raw.size(), false);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (done[i] || !reason[i].empty()) continue;
    std::vector<std::size_t> members;
    std::vector<const OptionQuote*> slice;
    for (std::size_t j = i; j < raw.size(); ++j) {
      if (reason[j].empty() && !done[j] && same_slice(raw[i], raw[j])) {
        members.push_back(j);
        slice.push_back(&raw[j]);
        done[j] = true;
      }
    }
    const OptionQuote& atm = *slice[closest_to_atm(slice)];
    const double atm_vol = *atm.implied_vol;
    const bool atm_fails = std::abs(standardized(atm, atm_vol)) > kMaxStandardizedMoneyness;
    for (std::size_t j : members) {
      if (atm_fails || std::abs(standardized(raw[j], atm_vol)) > kMaxStandardizedMoneyness) reason[j] = "moneyness";
    }
  }

  FilterResult out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (reason[i].empty()) {
      out.kept.push_back(raw[i]);
    } else {
      out.rejected.push_back({raw[i], reason[i]});
    }
  }
  return out;
}

std::vector<MaturityBucket> build_buckets(const std::vector<OptionQuote>& kept) {
  std::map<std::pair<long, long>, MaturityBucket> groups;
  for (const auto& q : kept) {
    auto& b = groups[{q.quote_date.days(), q.expiry.days()}];
    b.quote_date = q.quote_date;
    b.expiry = q.expiry;
    b.theta = q.theta();
    b.quotes.push_back(q);
  }
  std::vector<MaturityBucket> out;
  for (auto& [key, b] : groups) {
    std::vector<const OptionQuote*> with_vol;
    for (const auto& q : b.quotes) {
      if (q.implied_vol) with_vol.push_back(&q);
    }
    if (!with_vol.empty()) b.atm_vol = *with_vol[closest_to_atm(with_vol)]->implied_vol;
    out.push_back(std::move(b));
  }
  return out;
}

BucketDiagnostics validate_bucket(const MaturityBucket& b) {
  BucketDiagnostics d;
  for (const auto& q : b.quotes) {
    if (q.implied_vol && b.atm_vol > 0.0) {
      d.max_standardized_moneyness = std::max(d.max_standardized_moneyness, std::abs(standardized(q, b.atm_vol)));
    }
  }

  std::vector<bool> is_put;
  const std::vector<SmilePoint> pts = otm_points(b, &is_put);
  const std::size_t n = pts.size();
  std::vector<bool> outlier(n, false);
  if (n >= 5) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, n - 5);
      std::vector<double> window;
      for (std::size_t j = lo; j < lo + 5; ++j) window.push_back(pts[j].vol);
      const double med = median(window);
      std::vector<double> dev;
      for (double v : window) dev.push_back(std::abs(v - med));
      const double mad = median(dev);
      const double gap = std::abs(pts[i].vol - med);
      outlier[i] = gap > 5.0 * mad && gap > 1e-12 * med;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (outlier[i]) {
      ++d.outliers;
      continue;
    }
    d.points.push_back(pts[i]);
    if (is_put[i]) {
      ++d.otm_puts;
    } else if (pts[i].k > 0.0) {
      ++d.otm_calls;
    }
  }

  if (d.max_standardized_moneyness < 0.5) {
    d.reason = "moneyness-range";
  } else if (d.otm_puts < 4) {
    d.reason = "otm-put-count";
  } else if (d.otm_calls < 4) {
    d.reason = "otm-call-count";
  }
  d.accepted = d.reason.empty();
  return d;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y, SplineBoundary boundary)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 4 || y_.size() != n) throw InsufficientDataError("CubicSpline: needs at least four nodes");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw DomainError("CubicSpline: nodes must be strictly increasing");
  }
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  for (Eigen::Index i = 1; i + 1 < N; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    A(i, i - 1) = h0;
    A(i, i) = 2.0 * (h0 + h1);
    A(i, i + 1) = h1;
    rhs(i) = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  if (boundary == SplineBoundary::natural) {
    A(0, 0) = 1.0;
    A(N - 1, N - 1) = 1.0;
  } else {
    // Third derivative continuous across the second and penultimate nodes.
    const double h0 = x_[1] - x_[0];
    const double h1 = x_[2] - x_[1];
    A(0, 0) = h1;
    A(0, 1) = -(h0 + h1);
    A(0, 2) = h0;
    const double g0 = x_[n - 2] - x_[n - 3];
    const double g1 = x_[n - 1] - x_[n - 2];
    A(N - 1, N - 3) = g1;
    A(N - 1, N - 2) = -(g0 + g1);
    A(N - 1, N - 1) = g0;
  }
  const Eigen::VectorXd m = A.partialPivLu().solve(rhs);
  m_.assign(m.data(), m.data() + N);
}

std::size_t CubicSpline::segment(double t) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double CubicSpline::value(double t) const {
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double t) const {
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) * h * m_[i] / 6.0 + (3.0 * b * b - 1.0) * h * m_[i + 1] / 6.0;
}

double CubicSpline::second_derivative(double t) const {
  const std::size_t i = segment(t);
  const double h = x_[i + 1] - x_[i];
  return ((x_[i + 1] - t) * m_[i] + (t - x_[i]) * m_[i + 1]) / h;
}

SplineAtm spline_atm(const std::vector<SmilePoint>& points, SplineBoundary boundary) {
  if (points.size() < 4) throw InsufficientDataError("spline_atm: fewer than four smile points");
  std::vector<double> k;
  std::vector<double> v;
  for (const auto& p : points) {
    k.push_back(p.k);
    v.push_back(p.vol);
  }
  const CubicSpline s(std::move(k), std::move(v), boundary);
  return {s.value(0.0), s.derivative(0.0), s.second_derivative(0.0)};
}

SplineAtm spline_atm(const MaturityBucket& b, SplineBoundary boundary) {
  return spline_atm(validate_bucket(b).points, boundary);
}

PowerLawFit fit_power_law(const std::vector<double>& thetas, const std::vector<double>& values) {
  if (thetas.size() != values.size()) throw DomainError("fit_power_law: thetas and values differ in length");
  std::map<double, std::pair<double, int>> by_theta;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0) || !std::isfinite(values[i])) throw DomainError("fit_power_law: bad input point");
    auto& slot = by_theta[thetas[i]];
    slot.first += values[i];
    slot.second += 1;
  }
  std::vector<double> t;
  std::vector<double> v;
  for (const auto& [theta, acc] : by_theta) {
    t.push_back(theta);
    v.push_back(acc.first / acc.second);
  }
  if (t.size() < 4) {
    throw FitError("fit_power_law: " + std::to_string(t.size()) + " distinct maturities, need 4",
                   FitError::Kind::count);
  }
  const bool positive = v[0] > 0.0;
  for (double x : v) {
    if (x == 0.0 || (x > 0.0) != positive) throw FitError("fit_power_law: values change sign", FitError::Kind::sign);
  }
  const double a0 = std::abs(v[0]);
  const double a1 = std::abs(v[1]);
  const double a2 = std::abs(v[2]);
  if (!((a0 <= a1 && a1 <= a2) || (a0 >= a1 && a1 >= a2))) {
    throw FitError("fit_power_law: first three magnitudes are not monotone", FitError::Kind::ordering);
  }

  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(t[static_cast<std::size_t>(i)]);
    y(i) = std::log(std::abs(v[static_cast<std::size_t>(i)]));
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  PowerLawFit fit;
  fit.exponent = beta(1);
  fit.amplitude = std::exp(beta(0));
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - resid.squaredNorm() / ss_tot, 0.0, 1.0) : 1.0;
  fit.n_points = static_cast<int>(n);
  fit.sign = positive ? 1 : -1;
  return fit;
}

namespace {

FitOutcome try_fit(const std::vector<double>& t, const std::vector<double>& v) {
  FitOutcome out;
  try {
    out.fit = fit_power_law(t, v);
  } catch (const FitError& e) {
    switch (e.kind()) {
      case FitError::Kind::count: out.skip_reason = "count"; break;
      case FitError::Kind::ordering: out.skip_reason = "ordering"; break;
      case FitError::Kind::sign: out.skip_reason = "sign"; break;
    }
  }
  return out;
}

nlohmann::ordered_json fit_record(const FitOutcome& f) {
  nlohmann::ordered_json j;
  if (!f.fit) {
    j["skipped"] = true;
    j["reason"] = f.skip_reason;
    return j;
  }
  j["exponent"] = f.fit->exponent;
  j["amplitude"] = f.fit->amplitude;
  j["r_squared"] = f.fit->r_squared;
  j["n_points"] = f.fit->n_points;
  j["sign"] = f.fit->sign;
  return j;
}

}  // namespace

EmpiricalResult run_empirical(const std::vector<OptionQuote>& quotes, SplineBoundary boundary) {
  EmpiricalResult r;
  r.filtered = filter_quotes(quotes);
  const std::vector<MaturityBucket> buckets = build_buckets(r.filtered.kept);
  r.buckets.resize(buckets.size());
  parallel_for(buckets.size(), [&](std::size_t i) {
    const MaturityBucket& b = buckets[i];
    BucketRow& row = r.buckets[i];
    row.quote_date = b.quote_date;
    row.expiry = b.expiry;
    row.theta = b.theta;
    row.atm_vol = b.atm_vol;
    const BucketDiagnostics d = validate_bucket(b);
    row.accepted = d.accepted;
    row.reject_reason = d.reason;
    if (d.accepted) {
      const SplineAtm s = spline_atm(d.points, boundary);
      row.atm_vol = s.atm_vol;
      row.skew = s.skew;
      row.curvature = s.curvature;
    }
  });
  std::vector<double> t;
  std::vector<double> skew;
  std::vector<double> curv;
  for (const BucketRow& row : r.buckets) {
    if (!row.accepted) continue;
    t.push_back(row.theta);
    skew.push_back(row.skew);
    curv.push_back(row.curvature);
  }
  r.skew_fit = try_fit(t, skew);
  r.curvature_fit = try_fit(t, curv);
  return r;
}

std::string buckets_csv(const std::vector<BucketRow>& rows) {
  std::string out = "theta,atm_iv,skew,curvature,accepted,reject_reason\n";
  for (const auto& r : rows) {
    out += num(r.theta) + ',' + num(r.atm_vol) + ',' + (r.accepted ? num(r.skew) : "") + ',' +
           (r.accepted ? num(r.curvature) : "") + ',' + (r.accepted ? "true" : "false") + ',' + r.reject_reason + '\n';
  }
  return out;
}

std::string fit_json(const EmpiricalResult& r) {
  nlohmann::ordered_json j;
  j["skew"] = fit_record(r.skew_fit);
  j["curvature"] = fit_record(r.curvature_fit);
  return j.dump(2) + "\n";
}

}  // namespace voliv
