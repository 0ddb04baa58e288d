#ifndef SPATIALGOF_IO_HPP
#define SPATIALGOF_IO_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialgof/dataset.hpp"
#include "spatialgof/errors.hpp"
#include "spatialgof/goftest.hpp"
#include "spatialgof/simulation.hpp"
#include "spatialgof/variography.hpp"

namespace spatialgof {

/// Shortest round-trip decimal rendering; reading it back recovers the
/// exact double, which is what makes CSV round trips bit-identical.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "NA";
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError(where + ": cannot parse '" + cell + "' as a number");
  if (!std::isfinite(value))
    throw ParseError(where + ": non-finite value '" + cell + "'");
  return value;
}

}  // namespace detail

struct DatasetReadResult {
  SpatialDataset dataset;
  std::vector<std::string> warnings;
};

/// Reads the x,y,z dataset format: a header naming the columns (any order)
/// followed by numeric rows. Parse failures report the line number.
inline DatasetReadResult read_dataset_csv(std::istream& in,
                                          const std::string& name) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(name + ": empty file");
  const std::vector<std::string> header = detail::split_csv_line(line);
  int col_x = -1, col_y = -1, col_z = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string h = header[j];
    std::transform(h.begin(), h.end(), h.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (h == "x") col_x = static_cast<int>(j);
    else if (h == "y") col_y = static_cast<int>(j);
    else if (h == "z") col_z = static_cast<int>(j);
  }
  if (col_x < 0 || col_y < 0 || col_z < 0)
    throw ParseError(name + ":1: header must name columns x,y,z");

  std::vector<double> locations, responses;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() < header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " columns, got " + std::to_string(cells.size()));
    locations.push_back(detail::parse_double(cells[col_x], where));
    locations.push_back(detail::parse_double(cells[col_y], where));
    responses.push_back(detail::parse_double(cells[col_z], where));
  }
  if (responses.size() < 4)
    throw ParseError(name + ": need at least 4 data rows");

  DatasetReadResult out{SpatialDataset(2, std::move(locations),
                                       std::move(responses)),
                        {}};
  const auto dups = out.dataset.duplicate_locations();
  if (!dups.empty())
    out.warnings.push_back(name + ": " + std::to_string(dups.size()) +
                           " duplicate location pair(s)");
  return out;
}

inline DatasetReadResult read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_dataset_csv(in, path);
}

inline void write_dataset_csv(std::ostream& out, const SpatialDataset& data) {
  out << "x,y,z\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto loc = data.location(i);
    out << fmt_double(loc[0]) << ',' << fmt_double(loc[1]) << ','
        << fmt_double(data.responses()[i]) << '\n';
  }
}

inline void write_dataset_csv(const std::string& path,
                              const SpatialDataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  write_dataset_csv(out, data);
}

/// TestReport as JSON. Key set is frozen: t_n, p_value, B, bandwidth,
/// alpha, rejected, seed, and optionally asymptotic{b0,b1,v,z}.
inline nlohmann::json report_to_json(const TestReport& report, double alpha,
                                     std::uint64_t seed) {
  nlohmann::json j;
  j["t_n"] = report.t_n;
  j["p_value"] = report.p_value;
  j["B"] = report.bootstrap_stats.size();
  j["bandwidth"] = report.bandwidth.diagonal();
  j["alpha"] = alpha;
  j["rejected"] = report.p_value <= alpha;
  j["seed"] = seed;
  if (report.asymptotic) {
    j["asymptotic"] = {{"b0", report.asymptotic->b0},
                       {"b1", report.asymptotic->b1},
                       {"v", report.asymptotic->v},
                       {"z", report.asymptotic->z}};
  }
  return j;
}

/// Trace CSV, columns h1,h2,p_value,error; failed entries carry NA and the
/// failure reason.
inline void write_trace_csv(std::ostream& out,
                            const std::vector<TraceEntry>& trace) {
  out << "h1,h2,p_value,error\n";
  for (const auto& e : trace) {
    std::string error = e.error;
    std::replace(error.begin(), error.end(), ',', ';');
    out << fmt_double(e.bandwidth[0]) << ',' << fmt_double(e.bandwidth[1])
        << ',' << fmt_double(e.p_value) << ',' << error << '\n';
  }
}

/// Rejection table CSV with the frozen header
/// sigma,a_e,c,n,h1,h2,rejections,replicates,proportion.
inline void write_scenario_csv(std::ostream& out, const ScenarioResult& r) {
  out << "sigma,a_e,c,n,h1,h2,rejections,replicates,proportion\n";
  const double a_e = r.config.correlation == CorrelationKind::ExponentialFixed
                         ? r.config.range
                         : 1.0 / (r.config.lambda *
                                  static_cast<double>(r.config.sample_size()));
  for (const auto& row : r.rows) {
    out << fmt_double(r.config.sigma) << ',' << fmt_double(a_e) << ','
        << fmt_double(r.config.c) << ',' << r.config.sample_size() << ','
        << fmt_double(row.bandwidth[0]) << ',' << fmt_double(row.bandwidth[1])
        << ',' << row.rejections << ',' << row.valid_replicates << ','
        << fmt_double(row.proportion) << '\n';
  }
}

inline void write_empirical_variogram_csv(std::ostream& out,
                                          const EmpiricalVariogram& emp) {
  out << "lag,gamma,npairs\n";
  for (std::size_t j = 0; j < emp.size(); ++j)
    out << fmt_double(emp.bin_centers[j]) << ',' << fmt_double(emp.gamma_hat[j])
        << ',' << emp.pair_counts[j] << '\n';
}

/// Diagnostics CSV: the empirical bins plus the fitted semivariogram of
/// each family evaluated at the bin centers.
inline void write_variogram_fits_csv(
    std::ostream& out, const EmpiricalVariogram& emp,
    const std::vector<std::pair<std::string, VariogramModel>>& fits) {
  out << "lag,gamma,npairs";
  for (const auto& [name, model] : fits) {
    std::string column = name;
    std::replace(column.begin(), column.end(), '-', '_');
    out << ",fit_" << column;
  }
  out << '\n';
  for (std::size_t j = 0; j < emp.size(); ++j) {
    out << fmt_double(emp.bin_centers[j]) << ',' << fmt_double(emp.gamma_hat[j])
        << ',' << emp.pair_counts[j];
    for (const auto& [name, model] : fits)
      out << ',' << fmt_double(semivariance(model, emp.bin_centers[j]));
    out << '\n';
  }
}

/// Scenario configuration: `key = value` lines, '#' comments. Unknown keys
/// are errors so typos do not silently fall back to defaults.
inline ScenarioConfig parse_scenario_config(std::istream& in,
                                            const std::string& name) {
  ScenarioConfig cfg;
  cfg.bandwidths.clear();
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected key = value");
    kv[detail::trim(trimmed.substr(0, eq))] =
        detail::trim(trimmed.substr(eq + 1));
  }

  auto take = [&](const char* key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto as_double = [&](const char* key, const std::string& v) {
    return detail::parse_double(v, name + " key " + key);
  };

  if (auto v = take("design")) {
    if (*v == "grid") cfg.design = DesignType::RegularGrid;
    else if (*v == "uniform") cfg.design = DesignType::UniformRandom;
    else throw ConfigError(name + ": design must be grid or uniform");
  }
  if (auto v = take("side"))
    cfg.grid_side = static_cast<std::size_t>(as_double("side", *v));
  if (auto v = take("n"))
    cfg.n_random = static_cast<std::size_t>(as_double("n", *v));
  if (auto v = take("grid_convention")) {
    if (*v == "endpoints") cfg.grid_convention = GridConvention::InclusiveEndpoints;
    else if (*v == "centers") cfg.grid_convention = GridConvention::CellCenters;
    else throw ConfigError(name + ": grid_convention must be endpoints or centers");
  }
  if (auto v = take("trend")) {
    if (*v == "m1") cfg.trend = TrendKind::M1;
    else if (*v == "m2") cfg.trend = TrendKind::M2;
    else throw ConfigError(name + ": trend must be m1 or m2");
  }
  if (auto v = take("c")) cfg.c = as_double("c", *v);
  if (auto v = take("sigma")) cfg.sigma = as_double("sigma", *v);
  if (auto v = take("a_e")) cfg.range = as_double("a_e", *v);
  if (auto v = take("nugget_frac")) cfg.nugget_frac = as_double("nugget_frac", *v);
  if (auto v = take("correlation")) {
    if (*v == "exponential") cfg.correlation = CorrelationKind::ExponentialFixed;
    else if (*v == "shrinking") cfg.correlation = CorrelationKind::ExponentialShrinking;
    else throw ConfigError(name + ": correlation must be exponential or shrinking");
  }
  if (auto v = take("lambda")) cfg.lambda = as_double("lambda", *v);
  if (auto v = take("bandwidths")) {
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      const std::size_t cross = item.find('x');
      if (cross == std::string::npos) {
        const double h = as_double("bandwidths", item);
        cfg.bandwidths.push_back(BandwidthMatrix::scalar(2, h));
      } else {
        const double h1 = as_double("bandwidths", item.substr(0, cross));
        const double h2 = as_double("bandwidths", item.substr(cross + 1));
        cfg.bandwidths.push_back(BandwidthMatrix({h1, h2}));
      }
    }
  }
  if (auto v = take("alpha")) cfg.alpha = as_double("alpha", *v);
  if (auto v = take("replicates"))
    cfg.replicates = static_cast<int>(as_double("replicates", *v));
  if (auto v = take("B")) cfg.bootstrap_B = static_cast<int>(as_double("B", *v));
  if (auto v = take("seed"))
    cfg.seed = static_cast<std::uint64_t>(as_double("seed", *v));
  if (auto v = take("quad_points"))
    cfg.quad_points = static_cast<int>(as_double("quad_points", *v));
  if (auto v = take("trend_degree"))
    cfg.trend_degree = static_cast<std::size_t>(as_double("trend_degree", *v));
  if (auto v = take("variogram")) {
    if (*v == "exponential") cfg.fit_family = VariogramFamily::Exponential;
    else if (*v == "spherical") cfg.fit_family = VariogramFamily::Spherical;
    else if (*v == "rational-quadratic")
      cfg.fit_family = VariogramFamily::RationalQuadratic;
    else throw ConfigError(name + ": unknown variogram family '" + *v + "'");
  }
  if (auto v = take("kernel")) {
    if (*v == "triweight") cfg.kernel = KernelFamily::MultiplicativeTriweight;
    else if (*v == "gaussian") cfg.kernel = KernelFamily::Gaussian;
    else throw ConfigError(name + ": kernel must be triweight or gaussian");
  }
  if (auto v = take("threads"))
    cfg.threads = static_cast<int>(as_double("threads", *v));
  if (auto v = take("refit_variogram"))
    cfg.refit_variogram = (*v == "true" || *v == "1" || *v == "yes");

  if (!kv.empty())
    throw ConfigError(name + ": unknown key '" + kv.begin()->first + "'");
  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_scenario_config(in, path);
}

}  // namespace spatialgof

#endif  // SPATIALGOF_IO_HPP
