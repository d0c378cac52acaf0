#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svg_plot.hpp"
#include "voliv/empirical.hpp"
#include "voliv/pricer.hpp"

namespace fs = std::filesystem;
using namespace voliv;

namespace {

// Bad flags, configs or grids; exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// ---------------------------------------------------------------------------
// Configuration layers

const std::map<std::string, ConfigMap>& figure_defaults() {
  static const std::map<std::string, ConfigMap> figs = [] {
    std::map<std::string, ConfigMap> m;
    const ConfigMap fig1_grid = {{"theta_hi", "0.25"}, {"theta_lo", "0.004"}, {"theta_n", "12"}};
    auto gamma = [&](const char* alpha_bar) {
      ConfigMap c = fig1_grid;
      c.insert({{"model", "gamma"}, {"c_k", "3"}, {"c_kbar", "0.5"}, {"c_gamma", "0.1"}, {"alpha", "-0.2"},
                {"alpha_bar", alpha_bar}});
      return c;
    };
    auto cgmy = [&](const char* alpha_G) {
      ConfigMap c = fig1_grid;
      c.insert({{"model", "cgmy"}, {"c_C", "0.1"}, {"c_G", "-0.5"}, {"c_M", "5"}, {"alpha_M", "-0.6"},
                {"alpha_G", alpha_G}, {"Y", "1.5"}});
      return c;
    };
    auto heston = [](const char* alpha_rho) {
      return ConfigMap{{"model", "heston"},      {"kappa", "1"},         {"vbar", "0.06"},
                       {"eta", "0.5"},           {"rho", "-0.7"},        {"v0", "0.04"},
                       {"alpha_rho", alpha_rho}, {"theta", "[0.16, 0.08, 0.04, 0.02, 0.01]"},
                       {"n_paths", "200000"},    {"n_steps_per_year", "2000"}};
    };
    m["1a"] = gamma("-0.1");
    m["1b"] = gamma("0.4");
    m["1c"] = gamma("0.6");
    m["1d"] = cgmy("-0.5");
    m["1e"] = cgmy("0");
    m["1f"] = cgmy("0.2");
    m["2a"] = heston("0");
    m["2b"] = heston("0.5");
    return m;
  }();
  return figs;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "command", "figure", "model", "theta", "theta_hi", "theta_lo", "theta_n", "k", "output_dir", "format",
      "seed", "n_paths", "n_steps_per_year", "damping", "curvature_exponent", "c_k", "c_kbar", "c_gamma", "alpha",
      "alpha_bar", "c_C", "c_G", "c_M", "alpha_M", "alpha_G", "Y", "kappa", "vbar", "eta", "rho", "v0",
      "alpha_rho", "epsilon", "hurst", "xi0"};
  return keys;
}

// A layer that sets either form of the maturity grid replaces the other form.
void overlay(ConfigMap& base, const ConfigMap& top) {
  const bool explicit_grid = top.count("theta") != 0;
  const bool geometric_grid_set = top.count("theta_hi") || top.count("theta_lo") || top.count("theta_n");
  if (explicit_grid) {
    base.erase("theta_hi");
    base.erase("theta_lo");
    base.erase("theta_n");
  }
  if (geometric_grid_set) base.erase("theta");
  for (const auto& [k, v] : top) base[k] = v;
}

struct Layers {
  std::string config_path;
  ConfigMap flags;
};

ConfigMap resolve(const std::string& command, const Layers& layers) {
  ConfigMap file;
  if (!layers.config_path.empty()) file = read_config_file(layers.config_path);
  for (const auto& [k, v] : file) {
    if (known_keys().count(k) == 0) throw UsageError("config: unknown key '" + k + "'");
  }
  if (auto it = file.find("command"); it != file.end() && it->second != command) {
    throw UsageError("config is for command '" + it->second + "', not '" + command + "'");
  }

  std::string figure;
  if (auto it = file.find("figure"); it != file.end()) figure = it->second;
  if (auto it = layers.flags.find("figure"); it != layers.flags.end()) figure = it->second;

  ConfigMap merged;
  if (!figure.empty()) {
    const auto it = figure_defaults().find(figure);
    if (it == figure_defaults().end()) throw UsageError("unknown figure '" + figure + "'");
    merged = it->second;
  }
  overlay(merged, file);
  overlay(merged, layers.flags);
  return merged;
}

std::vector<double> parse_list(const std::string& key, std::string text) {
  text = trim(text);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw UsageError(key + ": unterminated list");
    text = text.substr(1, text.size() - 2);
  }
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size() || !std::isfinite(v)) {
      throw UsageError(key + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

double get_number(const ConfigMap& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (it->second.empty() || end != it->second.c_str() + it->second.size() || !std::isfinite(v)) {
    throw UsageError(key + ": '" + it->second + "' is not a number");
  }
  return v;
}

std::int64_t get_integer(const ConfigMap& cfg, const std::string& key, std::int64_t fallback) {
  const double v = get_number(cfg, key, static_cast<double>(fallback));
  if (v != std::floor(v) || v < 0.0 || v > 9.0e18) throw UsageError(key + ": expects a non-negative integer");
  return static_cast<std::int64_t>(v);
}

std::string get_string(const ConfigMap& cfg, const std::string& key, const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

std::vector<double> theta_grid(const ConfigMap& cfg) {
  std::vector<double> thetas;
  if (auto it = cfg.find("theta"); it != cfg.end()) {
    thetas = parse_list("theta", it->second);
  } else if (cfg.count("theta_hi") || cfg.count("theta_lo") || cfg.count("theta_n")) {
    const double hi = get_number(cfg, "theta_hi", 0.1);
    const double lo = get_number(cfg, "theta_lo", 0.001);
    const std::int64_t n = get_integer(cfg, "theta_n", 10);
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw UsageError("theta grid: need 0 < theta_lo <= theta_hi, theta_n >= 1");
    thetas = geometric_grid(hi, lo, static_cast<int>(n));
  } else {
    throw UsageError("no maturity grid: give --theta or --theta-hi/--theta-lo/--theta-n");
  }
  if (thetas.empty()) throw UsageError("theta grid is empty");
  for (double t : thetas) {
    if (!(t > 0.0 && t <= 1.0)) throw UsageError("theta grid: " + num(t) + " is outside (0, 1]");
  }
  return thetas;
}

ModelSpec resolve_model(const ConfigMap& cfg) {
  ModelSpec m = model_from_config(cfg);
  try {
    std::visit([](const auto& p) { p.validate(); }, m);
  } catch (const DomainError& e) {
    throw UsageError(std::string("model parameters: ") + e.what());
  }
  return m;
}

McConfig mc_config(const ConfigMap& cfg) {
  McConfig mc;
  mc.n_paths = get_integer(cfg, "n_paths", mc.n_paths);
  mc.n_steps_per_year = static_cast<int>(get_integer(cfg, "n_steps_per_year", mc.n_steps_per_year));
  mc.seed = static_cast<std::uint64_t>(get_integer(cfg, "seed", static_cast<std::int64_t>(mc.seed)));
  try {
    mc.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("monte carlo: ") + e.what());
  }
  return mc;
}

CurvatureExponent curvature_exponent(const ConfigMap& cfg) {
  const std::string v = get_string(cfg, "curvature_exponent", "beta1_minus_beta0");
  if (v == "beta1_minus_beta0") return CurvatureExponent::beta1_minus_beta0;
  if (v == "beta1_plus_beta0") return CurvatureExponent::beta1_plus_beta0;
  throw UsageError("curvature_exponent must be beta1_minus_beta0 or beta1_plus_beta0");
}

// ---------------------------------------------------------------------------
// Output

struct Output {
  fs::path dir;
  std::string format;

  explicit Output(const ConfigMap& cfg)
      : dir(get_string(cfg, "output_dir", ".")), format(get_string(cfg, "format", "csv")) {
    if (format != "csv" && format != "json" && format != "svg") throw UsageError("format must be csv, json or svg");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("output_dir '" + dir.string() + "' is not writable");
  }

  void write(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw UsageError("cannot write '" + p.string() + "'");
    std::cout << "wrote " << p.string() << "\n";
  }

  // CSV in csv/svg mode, a JSON array of row objects in json mode.
  void table(const std::string& stem, const std::string& csv) const {
    if (format != "json") {
      write(stem + ".csv", csv);
      return;
    }
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
      std::istringstream h(line);
      std::string cell;
      while (std::getline(h, cell, ',')) header.push_back(cell);
    }
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    while (std::getline(in, line)) {
      nlohmann::ordered_json row;
      std::istringstream r(line);
      std::string cell;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (!std::getline(r, cell, ',')) cell.clear();
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty()) {
          row[header[c]] = nullptr;
        } else if (end == cell.c_str() + cell.size()) {
          row[header[c]] = v;
        } else {
          row[header[c]] = cell;
        }
      }
      rows.push_back(row);
    }
    write(stem + ".json", rows.dump(2) + "\n");
  }

  void svg(const std::string& stem, const plot::Figure& fig) const {
    if (format == "svg") write(stem + ".svg", plot::render_svg(fig));
  }
};

// ---------------------------------------------------------------------------
// Commands

int cmd_asymptotics(const ConfigMap& cfg) {
  const ModelSpec model = resolve_model(cfg);
  const std::vector<double> thetas = theta_grid(cfg);
  const std::vector<double> ks = cfg.count("k") ? parse_list("k", cfg.at("k")) : std::vector<double>{};
  const CurvatureExponent exponent = curvature_exponent(cfg);
  const Output out(cfg);

  std::string csv = "theta,sigma0,kappa2,kappa3,kappa4,beta0,beta1,beta2,m,n,skew_asym,curv_asym,skew_order,curv_order\n";
  std::string expansion = "theta,k,put_expansion,iv_expansion\n";
  std::vector<double> skew;
  for (double theta : thetas) {
    CumulantData c;
    if (const auto* p = std::get_if<ThreeHalvesParams>(&model)) {
      std::string warning;
      c = three_halves_coeffs(*p, theta, &warning);
      if (!warning.empty() && theta == thetas.front()) std::cerr << "warning: " << warning << "\n";
    } else {
      c = model_cumulants(model, theta);
    }
    const AtmAsymptotics a = atm_asymptotics(c, exponent);
    skew.push_back(a.skew.value);
    csv += num(theta) + ',' + num(c.sigma0) + ',' + num(c.kappa2) + ',' + num(c.kappa3) + ',' + num(c.kappa4) + ',' +
           num(c.beta0) + ',' + num(c.beta1) + ',' + num(c.beta2) + ',' + num(c.m) + ',' + num(c.n) + ',' +
           num(a.skew.value) + ',' + num(a.curvature.value) + ',' + a.skew.order_label + ',' +
           a.curvature.order_label + '\n';
    for (double k : ks) {
      const double put = put_expansion(k / c.sigma0, c).value;
      const std::string iv = c.beta0 == 0.5 ? num(iv_expansion(k / std::sqrt(theta), c).value) : "";
      expansion += num(theta) + ',' + num(k) + ',' + num(put) + ',' + iv + '\n';
    }
  }
  out.table("asymptotics", csv);
  if (!ks.empty()) out.table("expansion", expansion);
  out.svg("asymptotics", {"Asymptotic ATM skew (" + model_name(model) + ")", "theta", "skew", true,
                          {{"asymptotic skew", thetas, skew}}});
  return 0;
}

std::vector<double> default_moneyness(double sigma0) {
  std::vector<double> ks;
  for (int j = -10; j <= 10; ++j) ks.push_back(sigma0 * j / 5.0);
  return ks;
}

int cmd_smile(const ConfigMap& cfg) {
  const ModelSpec model = resolve_model(cfg);
  const bool heston = std::holds_alternative<HestonDLParams>(model);
  if (!has_cf(model) && !heston) throw UsageError("smile: model '" + model_name(model) + "' has no pricing engine");
  const std::vector<double> thetas = theta_grid(cfg);
  const bool custom_k = cfg.count("k") != 0;
  const std::vector<double> user_k = custom_k ? parse_list("k", cfg.at("k")) : std::vector<double>{};
  const McConfig mc = heston ? mc_config(cfg) : McConfig{};
  const double damping = get_number(cfg, "damping", 1.5);
  const Output out(cfg);

  std::vector<SmileResult> slices;
  plot::Figure fig{"Implied volatility smile (" + model_name(model) + ")", "log-moneyness k", "implied vol", false, {}};
  for (double theta : thetas) {
    const CumulantData c = model_cumulants(model, theta);
    const std::vector<double> ks = custom_k ? user_k : default_moneyness(c.sigma0);
    SmileResult s;
    if (heston) {
      const McSmile m = mc_smile(std::get<HestonDLParams>(model), theta, ks, mc);
      for (const auto& w : m.warnings) std::cerr << "theta=" << num(theta) << ": " << w << "\n";
      s.smile = m.smile;
      for (const auto& p : m.price) s.price.push_back(p.value);
    } else {
      PricingGrid grid;
      grid.maturity = theta;
      grid.log_moneyness = ks;
      grid.damping = damping;
      try {
        grid.validate();
      } catch (const DomainError& e) {
        throw UsageError(std::string("smile grid: ") + e.what());
      }
      s = smile_from_cf(model_cf(model, theta), {1.0, 0.0, theta}, grid, c.sigma0);
      for (const auto& d : s.dropped) {
        std::cerr << "theta=" << num(theta) << ": k=" << num(d.log_moneyness) << " dropped: " << d.reason << "\n";
      }
    }
    plot::Series series{"theta=" + num(theta), {}, {}};
    for (Eigen::Index i = 0; i < s.smile.size(); ++i) {
      series.x.push_back(s.smile.log_moneyness[i]);
      series.y.push_back(s.smile.implied_vol[i]);
    }
    fig.series.push_back(std::move(series));
    slices.push_back(std::move(s));
  }
  out.table("smile", smile_csv(slices));
  out.svg("smile", fig);
  return 0;
}

int cmd_term_structure(const ConfigMap& cfg) {
  const ModelSpec model = resolve_model(cfg);
  const bool heston = std::holds_alternative<HestonDLParams>(model);
  if (!has_cf(model) && !heston) {
    throw UsageError("term-structure: model '" + model_name(model) + "' has no numeric engine");
  }
  const std::vector<double> thetas = theta_grid(cfg);
  TermStructureOptions opts;
  opts.damping = get_number(cfg, "damping", opts.damping);
  opts.exponent = curvature_exponent(cfg);
  if (heston) opts.mc = mc_config(cfg);
  const Output out(cfg);

  const TermStructureResult r = term_structure(model, thetas, opts);
  out.table("term_structure", term_structure_csv(r.rows));
  out.svg("term_structure", {"ATM skew (" + model_name(model) + ")",
                             "theta",
                             "skew",
                             true,
                             {{"numeric", r.rows.thetas, r.rows.skew_numeric, true},
                              {"asymptotic", r.rows.thetas, r.rows.skew_asym}}});
  for (const auto& f : r.failures) std::cerr << "theta=" << num(f.theta) << ": failed: " << f.reason << "\n";
  return r.failures.empty() ? 0 : 1;
}

int cmd_mc(const ConfigMap& cfg) {
  const ModelSpec model = resolve_model(cfg);
  const auto* p = std::get_if<HestonDLParams>(&model);
  if (p == nullptr) throw UsageError("mc: only the heston model is simulated");
  const std::vector<double> thetas = theta_grid(cfg);
  const std::vector<double> ks = cfg.count("k") ? parse_list("k", cfg.at("k")) : std::vector<double>{};
  const McConfig mc = mc_config(cfg);
  const Output out(cfg);

  std::string atm = "theta,atm_vol,atm_vol_se,skew,skew_se,curvature,curvature_se,skew_asym,curv_asym\n";
  std::string smile = "theta,k,price,price_se,iv,iv_se\n";
  std::vector<double> skew;
  std::vector<double> skew_asym;
  for (double theta : thetas) {
    const McAtm a = mc_atm(*p, theta, mc);
    const AtmAsymptotics asym = atm_asymptotics(model_cumulants(model, theta), curvature_exponent(cfg));
    skew.push_back(a.skew.value);
    skew_asym.push_back(asym.skew.value);
    atm += num(theta) + ',' + num(a.atm_vol.value) + ',' + num(a.atm_vol.std_error) + ',' + num(a.skew.value) + ',' +
           num(a.skew.std_error) + ',' + num(a.curvature.value) + ',' + num(a.curvature.std_error) + ',' +
           num(asym.skew.value) + ',' + num(asym.curvature.value) + '\n';
    if (ks.empty()) continue;
    const McSmile s = mc_smile(*p, theta, ks, mc);
    for (const auto& w : s.warnings) std::cerr << "theta=" << num(theta) << ": " << w << "\n";
    for (Eigen::Index i = 0; i < s.smile.size(); ++i) {
      const auto j = static_cast<std::size_t>(i);
      smile += num(theta) + ',' + num(s.smile.log_moneyness[i]) + ',' + num(s.price[j].value) + ',' +
               num(s.price[j].std_error) + ',' + num(s.vol[j].value) + ',' + num(s.vol[j].std_error) + '\n';
    }
  }
  out.table("mc_atm", atm);
  if (!ks.empty()) out.table("mc_smile", smile);
  out.svg("mc_atm", {"Monte Carlo ATM skew (heston)", "theta", "skew", true,
                     {{"monte carlo", thetas, skew, true}, {"asymptotic", thetas, skew_asym}}});
  return 0;
}

std::vector<OptionQuote> load_quotes(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read input '" + path + "'");
  return read_quotes_csv(path);
}

int cmd_empirical(const ConfigMap& cfg, const std::string& input, const std::string& boundary_name) {
  SplineBoundary boundary = SplineBoundary::not_a_knot;
  if (boundary_name == "natural") {
    boundary = SplineBoundary::natural;
  } else if (boundary_name != "not_a_knot") {
    throw UsageError("boundary must be not_a_knot or natural");
  }
  const Output out(cfg);
  const EmpiricalResult r = run_empirical(load_quotes(input), boundary);

  std::map<std::string, int> reasons;
  for (const auto& rej : r.filtered.rejected) ++reasons[rej.reason];
  std::cout << "kept " << r.filtered.kept.size() << " quotes, rejected " << r.filtered.rejected.size();
  for (const auto& [reason, n] : reasons) std::cout << " " << reason << "=" << n;
  std::cout << "\n";

  out.table("buckets", buckets_csv(r.buckets));
  out.write("fit.json", fit_json(r));

  plot::Figure fig{"Empirical ATM skew", "theta", "|skew|", true, {}};
  plot::Series pts{"|skew|", {}, {}, true};
  for (const auto& b : r.buckets) {
    if (!b.accepted) continue;
    pts.x.push_back(b.theta);
    pts.y.push_back(std::abs(b.skew));
  }
  fig.series.push_back(pts);
  if (r.skew_fit.fit) {
    plot::Series line{"power-law fit", {}, {}};
    for (double t : pts.x) {
      line.x.push_back(t);
      line.y.push_back(r.skew_fit.fit->amplitude * std::pow(t, r.skew_fit.fit->exponent));
    }
    fig.series.push_back(line);
  }
  out.svg("buckets", fig);
  return 0;
}

int cmd_fit(const ConfigMap& cfg, const std::string& input, const std::string& column) {
  const Output out(cfg);
  std::ifstream in(input, std::ios::binary);
  if (!in) throw UsageError("cannot read input '" + input + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(input + ": empty file", 0, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  const auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw SchemaError(input + ": no column '" + name + "' in header", 1, name);
  };
  const std::size_t ti = find("theta");
  const std::size_t vi = find(column);

  std::vector<double> thetas;
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream r(line);
    std::string cell;
    while (std::getline(r, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != header.size()) throw SchemaError(input + ": wrong number of cells", row, "");
    if (cells[vi].empty()) continue;
    auto parse = [&](std::size_t c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end != cells[c].c_str() + cells[c].size() || !std::isfinite(v)) {
        throw SchemaError(input + ": '" + cells[c] + "' is not a number", row, header[c]);
      }
      return v;
    };
    thetas.push_back(parse(ti));
    values.push_back(parse(vi));
  }

  nlohmann::ordered_json j;
  j["column"] = column;
  try {
    const PowerLawFit f = fit_power_law(thetas, values);
    j["exponent"] = f.exponent;
    j["amplitude"] = f.amplitude;
    j["r_squared"] = f.r_squared;
    j["n_points"] = f.n_points;
    j["sign"] = f.sign;
  } catch (const FitError& e) {
    static const char* const names[] = {"count", "ordering", "sign"};
    j["skipped"] = true;
    j["reason"] = names[static_cast<int>(e.kind())];
    std::cerr << "fit skipped: " << e.what() << "\n";
  }
  out.write("fit.json", j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// Flags

struct FlagSet {
  Layers layers;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& flag, const std::string& help, const std::string& alias = "") {
    std::string key = flag;
    for (char& ch : key) {
      if (ch == '-') ch = '_';
    }
    const std::string names = (alias.empty() ? "" : "-" + alias + ",") + "--" + flag;
    options.emplace_back(key, app->add_option(names, values[key], help));
  }

  void collect() {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) layers.flags[key] = values[key];
    }
  }
};

void add_config_flags(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.layers.config_path, "Config file (key = value); flags override it")
      ->check(CLI::ExistingFile);
  f.add(app, "figure", "Built-in figure defaults: 1a-1f, 2a, 2b (lowest precedence)");
  f.add(app, "output-dir", "Directory for output files (default .)", "o");
  f.add(app, "format", "csv, json or svg (svg also writes the CSV)");
}

void add_grid_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "theta", "Maturities in years, comma separated, each in (0, 1]");
  f.add(app, "theta-hi", "Largest maturity of a geometric grid");
  f.add(app, "theta-lo", "Smallest maturity of a geometric grid");
  f.add(app, "theta-n", "Number of points of the geometric grid");
}

void add_model_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "model", "gamma, cgmy, heston, three_halves or rough_bergomi");
  f.add(app, "c-k", "gamma: scale of k");
  f.add(app, "c-kbar", "gamma: scale of kbar");
  f.add(app, "c-gamma", "gamma: scale of gamma");
  f.add(app, "alpha", "gamma: exponent of k");
  f.add(app, "alpha-bar", "gamma: exponent of kbar");
  f.add(app, "c-C", "cgmy: scale of C");
  f.add(app, "c-G", "cgmy: signed scale of G - M");
  f.add(app, "c-M", "cgmy: scale of M");
  f.add(app, "alpha-M", "cgmy: exponent of M");
  f.add(app, "alpha-G", "cgmy: exponent of G - M");
  f.add(app, "Y", "cgmy: activity index");
  f.add(app, "kappa", "heston, three_halves: mean reversion");
  f.add(app, "vbar", "heston, three_halves: long-run variance");
  f.add(app, "eta", "heston, rough_bergomi: vol of vol");
  f.add(app, "epsilon", "three_halves: vol of vol");
  f.add(app, "rho", "heston, three_halves, rough_bergomi: correlation");
  f.add(app, "v0", "heston, three_halves: initial variance");
  f.add(app, "alpha-rho", "heston, three_halves: leverage decay exponent");
  f.add(app, "hurst", "rough_bergomi: Hurst index");
  f.add(app, "xi0", "rough_bergomi: flat forward variance");
  f.add(app, "curvature-exponent", "beta1_minus_beta0 or beta1_plus_beta0");
}

void add_mc_flags(CLI::App* app, FlagSet& f) {
  f.add(app, "seed", "Monte Carlo seed");
  f.add(app, "n-paths", "Monte Carlo paths (even, >= 10000)");
  f.add(app, "n-steps-per-year", "Monte Carlo time steps per year (>= 250)");
}

int run(int argc, char** argv) {
  CLI::App app{"Short-maturity implied volatility asymptotics"};
  app.require_subcommand(1);

  FlagSet asym;
  auto* c_asym = app.add_subcommand("asymptotics", "Cumulant coefficients and asymptotic ATM skew and curvature");
  add_config_flags(c_asym, asym);
  add_grid_flags(c_asym, asym);
  add_model_flags(c_asym, asym);
  asym.add(c_asym, "k", "Log-moneyness points for the put and implied-vol expansions");

  FlagSet smile;
  auto* c_smile = app.add_subcommand("smile", "Implied volatility smiles from the numeric engine");
  add_config_flags(c_smile, smile);
  add_grid_flags(c_smile, smile);
  add_model_flags(c_smile, smile);
  add_mc_flags(c_smile, smile);
  smile.add(c_smile, "k", "Log-moneyness grid, increasing and containing 0 (default +-2 sigma0)");
  smile.add(c_smile, "damping", "Fourier contour shift");

  FlagSet ts;
  auto* c_ts = app.add_subcommand("term-structure", "Numeric versus asymptotic ATM skew and curvature");
  add_config_flags(c_ts, ts);
  add_grid_flags(c_ts, ts);
  add_model_flags(c_ts, ts);
  add_mc_flags(c_ts, ts);
  ts.add(c_ts, "damping", "Fourier contour shift");

  FlagSet mc;
  auto* c_mc = app.add_subcommand("mc", "Heston Monte Carlo ATM skew, curvature and optional smile");
  add_config_flags(c_mc, mc);
  add_grid_flags(c_mc, mc);
  add_model_flags(c_mc, mc);
  add_mc_flags(c_mc, mc);
  mc.add(c_mc, "k", "Log-moneyness points for a Monte Carlo smile");

  FlagSet emp;
  std::string emp_input;
  std::string boundary = "not_a_knot";
  auto* c_emp = app.add_subcommand("empirical", "Filter quotes, spline smiles and fit power laws");
  c_emp->add_option("--input", emp_input, "Quote CSV")->required();
  c_emp->add_option("--boundary", boundary, "Spline end condition: not_a_knot or natural");
  add_config_flags(c_emp, emp);

  FlagSet fit;
  std::string fit_input;
  std::string column = "skew";
  auto* c_fit = app.add_subcommand("fit", "Power-law fit of one column of a CSV against theta");
  c_fit->add_option("--input", fit_input, "CSV with a theta column")->required();
  c_fit->add_option("--column", column, "Column to fit");
  add_config_flags(c_fit, fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto config_for = [](const std::string& command, FlagSet& f) {
    f.collect();
    return resolve(command, f.layers);
  };
  if (*c_asym) return cmd_asymptotics(config_for("asymptotics", asym));
  if (*c_smile) return cmd_smile(config_for("smile", smile));
  if (*c_ts) return cmd_term_structure(config_for("term-structure", ts));
  if (*c_mc) return cmd_mc(config_for("mc", mc));
  if (*c_emp) return cmd_empirical(config_for("empirical", emp), emp_input, boundary);
  return cmd_fit(config_for("fit", fit), fit_input, column);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const SchemaError& e) {
    std::cerr << "schema error at row " << e.row() << ", column '" << e.column() << "': " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
