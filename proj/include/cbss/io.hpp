#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "cbss/asymlab.hpp"
#include "cbss/error.hpp"
#include "cbss/estimators.hpp"
#include "cbss/genproc.hpp"
#include "cbss/linalg.hpp"

namespace cbss {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers: shortest round-trip formatting, strict parsing.

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
    throw ParseError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// CSV: header re_1,im_1,...,re_d,im_d then one row per time step (or matrix row).

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

inline std::string complex_header(std::size_t d) {
  std::string h;
  for (std::size_t k = 1; k <= d; ++k) {
    if (k > 1) h += ',';
    h += "re_" + std::to_string(k) + ",im_" + std::to_string(k);
  }
  return h;
}

} // namespace detail

inline void write_complex_rows(std::ostream& out, std::size_t rows, std::size_t cols,
                               const std::function<Complex(std::size_t, std::size_t)>& at) {
  out << detail::complex_header(cols) << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      const Complex v = at(r, c);
      out << format_double(v.real()) << ',' << format_double(v.imag());
    }
    out << '\n';
  }
}

struct ComplexTable {
  std::size_t rows = 0, cols = 0;
  std::vector<Complex> values;  // row-major
};

inline ComplexTable read_complex_rows(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  line = detail::strip(line);
  const auto header = detail::split_commas(line);
  if (header.size() % 2 != 0) throw ParseError(name + ": header must list re_k,im_k pairs");
  const std::size_t cols = header.size() / 2;
  for (std::size_t k = 0; k < cols; ++k) {
    const std::string re = "re_" + std::to_string(k + 1), im = "im_" + std::to_string(k + 1);
    if (detail::strip(std::string(header[2 * k])) != re || detail::strip(std::string(header[2 * k + 1])) != im)
      throw ParseError(name + ": header must be " + detail::complex_header(cols));
  }
  ComplexTable t;
  t.cols = cols;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip(line);
    if (line.empty()) continue;
    const auto cells = detail::split_commas(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() != 2 * cols) throw ParseError(where + ": expected " + std::to_string(2 * cols) + " fields");
    for (std::size_t k = 0; k < cols; ++k)
      t.values.emplace_back(parse_double(cells[2 * k], where), parse_double(cells[2 * k + 1], where));
    ++t.rows;
  }
  return t;
}

inline void write_csv(std::ostream& out, const TimeSeries& x) {
  write_complex_rows(out, x.length(), x.dim(), [&](std::size_t t, std::size_t k) { return x(t, k); });
}

inline void write_csv(std::ostream& out, const CMat& m) {
  write_complex_rows(out, m.rows(), m.cols(), [&](std::size_t r, std::size_t c) { return m(r, c); });
}

inline TimeSeries read_timeseries_csv(std::istream& in, const std::string& name = "csv") {
  ComplexTable t = read_complex_rows(in, name);
  if (t.rows == 0) throw ParseError(name + ": no data rows");
  return TimeSeries(t.rows, t.cols, std::move(t.values));
}

inline CMat read_matrix_csv(std::istream& in, const std::string& name = "csv") {
  ComplexTable t = read_complex_rows(in, name);
  if (t.rows == 0) throw ParseError(name + ": no data rows");
  return CMat(t.rows, t.cols, std::move(t.values));
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

} // namespace detail

inline TimeSeries read_timeseries_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_timeseries_csv(in, path);
}

inline CMat read_matrix_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_matrix_csv(in, path);
}

template <class T>
void write_csv(const std::string& path, const T& value) {
  auto out = detail::open_output(path);
  write_csv(out, value);
}

// ---------------------------------------------------------------------------
// JSON configs.

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& what) {
  if (!j.is_object()) throw ParseError(what + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(what + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline Json complex_matrix_json(const CMat& m) {
  Json re = Json::array(), im = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

inline CMat complex_matrix_from_json(const Json& j, std::size_t d) {
  if (j.is_string()) {
    if (j.get<std::string>() != "identity") throw ParseError("mixing: only the string \"identity\" is accepted");
    return CMat::identity(d);
  }
  check_keys(j, {"re", "im"}, "mixing");
  CMat m(d, d);
  for (int part = 0; part < 2; ++part) {
    const char* key = part ? "im" : "re";
    if (!j.contains(key)) continue;
    const Json& rows = j.at(key);
    if (!rows.is_array() || rows.size() != d) throw ParseError(std::string("mixing.") + key + ": need d rows");
    for (std::size_t r = 0; r < d; ++r) {
      if (!rows[r].is_array() || rows[r].size() != d) throw ParseError(std::string("mixing.") + key + ": need d columns");
      for (std::size_t c = 0; c < d; ++c) {
        const double v = rows[r][c].get<double>();
        m(r, c) += part ? Complex{0.0, v} : Complex{v, 0.0};
      }
    }
  }
  return m;
}

} // namespace detail

inline Json to_json(const LatentComponentSpec& c) {
  Json driver;
  switch (c.driver.kind) {
  case Driver::Kind::iid: driver = {{"kind", "iid"}}; break;
  case Driver::Kind::ar1: driver = {{"kind", "ar1"}, {"phi", c.driver.phi}}; break;
  case Driver::Kind::fgn: driver = {{"kind", "fgn"}, {"hurst", c.driver.hurst}}; break;
  }
  Json transform;
  switch (c.transform.kind) {
  case Transform::Kind::identity: transform = {{"kind", "identity"}}; break;
  case Transform::Kind::hermite: transform = {{"kind", "hermite"}, {"k", c.transform.degree}}; break;
  case Transform::Kind::square_centered: transform = {{"kind", "square_centered"}}; break;
  case Transform::Kind::coefficients: transform = {{"kind", "coefficients"}, {"a", c.transform.coefficients}}; break;
  }
  Json out = {{"driver", driver}, {"transform", transform}};
  if (c.declared_ranks) out["declared_ranks"] = {{"q1", c.declared_ranks->q1}, {"q2", c.declared_ranks->q2}};
  return out;
}

inline LatentComponentSpec component_from_json(const Json& j) {
  detail::check_keys(j, {"driver", "transform", "declared_ranks"}, "component");
  LatentComponentSpec c;
  const Json& dj = j.at("driver");
  detail::check_keys(dj, {"kind", "phi", "hurst"}, "driver");
  const auto dk = dj.at("kind").get<std::string>();
  if (dk == "iid")
    c.driver = Driver::iid();
  else if (dk == "ar1")
    c.driver = Driver::ar1(dj.at("phi").get<double>());
  else if (dk == "fgn")
    c.driver = Driver::fgn(dj.at("hurst").get<double>());
  else
    throw ParseError("driver: unknown kind '" + dk + "'");

  const Json tj = detail::get_or<Json>(j, "transform", Json{{"kind", "identity"}});
  detail::check_keys(tj, {"kind", "k", "a"}, "transform");
  const auto tk = tj.at("kind").get<std::string>();
  if (tk == "identity")
    c.transform = Transform::identity();
  else if (tk == "hermite")
    c.transform = Transform::hermite(tj.at("k").get<int>());
  else if (tk == "square_centered")
    c.transform = Transform::square_centered();
  else if (tk == "coefficients")
    c.transform = Transform::from_coefficients(tj.at("a").get<std::vector<double>>());
  else
    throw ParseError("transform: unknown kind '" + tk + "'");

  if (j.contains("declared_ranks")) {
    const Json& rj = j.at("declared_ranks");
    detail::check_keys(rj, {"q1", "q2"}, "declared_ranks");
    c.declared_ranks = HermiteRanks{rj.at("q1").get<int>(), rj.at("q2").get<int>()};
  }
  return c;
}

inline Json to_json(const ModelSpec& m) {
  Json comps = Json::array();
  for (const auto& c : m.components) comps.push_back(to_json(c));
  Json loc_re = Json::array(), loc_im = Json::array();
  for (const auto& v : m.location) {
    loc_re.push_back(v.real());
    loc_im.push_back(v.imag());
  }
  return {{"d", m.d},
          {"components", comps},
          {"mixing", detail::complex_matrix_json(m.mixing)},
          {"location", {{"re", loc_re}, {"im", loc_im}}},
          {"normalize", m.normalize},
          {"empirical_center", m.empirical_center}};
}

// Parses and validates. Semantic problems are reported as ParseError too.
inline ModelSpec model_from_json(const Json& j) {
  try {
    detail::check_keys(j, {"d", "components", "mixing", "location", "normalize", "empirical_center"}, "model");
    ModelSpec m;
    m.d = j.at("d").get<std::size_t>();
    if (m.d == 0 || m.d > 64) throw ParseError("model: d must be in [1, 64]");
    for (const auto& c : j.at("components")) m.components.push_back(component_from_json(c));
    m.mixing = j.contains("mixing") ? detail::complex_matrix_from_json(j.at("mixing"), m.d) : CMat::identity(m.d);
    m.location.assign(m.d, Complex{});
    if (j.contains("location")) {
      const Json& lj = j.at("location");
      detail::check_keys(lj, {"re", "im"}, "location");
      for (int part = 0; part < 2; ++part) {
        const char* key = part ? "im" : "re";
        if (!lj.contains(key)) continue;
        const auto v = lj.at(key).get<std::vector<double>>();
        if (v.size() != m.d) throw ParseError(std::string("location.") + key + ": need d entries");
        for (std::size_t k = 0; k < m.d; ++k) m.location[k] += part ? Complex{0.0, v[k]} : Complex{v[k], 0.0};
      }
    }
    m.normalize = detail::get_or(j, "normalize", true);
    m.empirical_center = detail::get_or(j, "empirical_center", true);
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

inline ErrorMetric error_metric_from_string(const std::string& s) {
  if (s == "md") return ErrorMetric::md;
  if (s == "frobenius_after_alignment" || s == "frobenius") return ErrorMetric::frobenius_after_alignment;
  if (s == "elementwise") return ErrorMetric::elementwise;
  throw ParseError("error_metric: unknown value '" + s + "'");
}

inline Json to_json(const RateExperimentConfig& cfg) {
  return {{"model", to_json(cfg.model)},
          {"tau", cfg.tau},
          {"t_grid", cfg.t_grid},
          {"replications", cfg.replications},
          {"seed", cfg.seed},
          {"error_metric", to_string(cfg.error_metric)},
          {"normality_replications", cfg.normality_replications},
          {"threads", cfg.threads}};
}

inline RateExperimentConfig rate_config_from_json(const Json& j) {
  try {
    detail::check_keys(j,
                       {"model", "tau", "t_grid", "replications", "seed", "error_metric", "normality_replications", "threads"},
                       "rate config");
    RateExperimentConfig cfg;
    cfg.model = model_from_json(j.at("model"));
    cfg.tau = detail::get_or<std::size_t>(j, "tau", 1);
    cfg.t_grid = j.at("t_grid").get<std::vector<std::size_t>>();
    cfg.replications = j.at("replications").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.error_metric = error_metric_from_string(detail::get_or<std::string>(j, "error_metric", "frobenius_after_alignment"));
    cfg.normality_replications = detail::get_or<std::size_t>(j, "normality_replications", 0);
    cfg.threads = detail::get_or<unsigned>(j, "threads", 0);
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("rate config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  auto in = detail::open_input(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Report output.

inline void write_report_csv(std::ostream& out, const RateExperimentReport& rep) {
  out << "T,median_error,iqr,diag_median,offdiag_median,replications,failures\n";
  for (const auto& r : rep.per_t)
    out << r.length << ',' << format_double(r.median_error) << ',' << format_double(r.iqr) << ','
        << format_double(r.diag_median) << ',' << format_double(r.offdiag_median) << ',' << r.replications << ','
        << r.failures << '\n';
}

inline const char* to_string(RateTheory::Regime r) {
  switch (r) {
  case RateTheory::Regime::short_range: return "short_range";
  case RateTheory::Regime::long_range: return "long_range";
  case RateTheory::Regime::boundary: return "boundary";
  }
  return "?";
}

inline Json summary_json(const RateExperimentReport& rep) {
  Json ks = Json::array();
  for (const auto& e : rep.gaussianity)
    ks.push_back({{"row", e.row + 1}, {"col", e.col + 1}, {"part", e.imaginary ? "im" : "re"},
                  {"statistic", e.ks.statistic}, {"n", e.ks.n}});
  auto fit = [](const LogLogFit& f) { return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope}}; };
  Json out = {{"fitted_slope", rep.fitted_slope},
              {"fitted_slope_stderr", rep.fitted_slope_stderr},
              {"theoretical_exponent", rep.theoretical_exponent},
              {"regime", to_string(rep.theory.regime)},
              {"gamma", rep.theory.gamma_formula},
              {"maximum_holds", rep.theory.maximum_holds},
              {"maximum2_holds", rep.theory.maximum2_holds},
              {"metric_fit", fit(rep.metric_fit)},
              {"diag_fit", fit(rep.diag_fit)},
              {"gaussianity", ks},
              {"max_ks", rep.max_ks()},
              {"scale_diag",
               {{"diag_constant", rep.scale_diag.diag_constant},
                {"offdiag_constant", rep.scale_diag.offdiag_constant},
                {"diag_skewness", rep.scale_diag.diag_skewness}}},
              {"replication_failures", rep.replication_failures},
              {"max_clamped_mass", rep.max_clamped_mass}};
  out["offdiag_fit"] = rep.offdiag_fit_valid ? fit(rep.offdiag_fit) : Json(nullptr);
  return out;
}

} // namespace cbss
