#include "csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "spectral_clt/errors.hpp"

namespace spectral_clt::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

Eigen::MatrixXd parse_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  if (in.peek() == 0xEF) {
    char bom[3];
    in.read(bom, 3);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_number(fields[i], values[i]);
    if (first_content) {
      first_content = false;
      width = fields.size();
      if (!numeric) continue;  // header
    }
    if (fields.size() != width) {
      throw Error(ErrorKind::Parse, source + ": row " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(width));
    }
    if (!numeric) {
      throw Error(ErrorKind::Parse,
                  source + ": row " + std::to_string(line_no) + " has a non-numeric field");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorKind::Parse, source + ": no data rows");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) X(i, j) = rows[i][j];
  }
  return X;
}

Eigen::MatrixXd read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_csv(in, path);
}

nlohmann::json to_json(const TestReport& r) {
  nlohmann::json j{{"statistic", r.statistic},
                   {"centering", r.centering},
                   {"mean_correction", r.mean_correction},
                   {"variance", r.variance},
                   {"z_score", r.z_score},
                   {"p_value", r.p_value},
                   {"rejected", r.rejected},
                   {"level", r.level},
                   {"two_sided", r.two_sided},
                   {"convention", std::string(to_string(r.convention))},
                   {"p", r.p},
                   {"n", r.n},
                   {"kappa", r.mpx.kappa},
                   {"alpha_x", r.mpx.alpha},
                   {"beta_x", r.mpx.beta}};
  if (r.mpy) {
    j["m"] = r.m;
    j["beta_y"] = r.mpy->beta;
  }
  return j;
}

nlohmann::json to_json(const SimulationSummary& s) {
  return {{"p", s.p},
          {"n", s.n},
          {"m", s.m},
          {"replications", s.replications},
          {"seed", s.seed},
          {"empirical_mean", s.empirical_mean},
          {"empirical_variance", s.empirical_variance},
          {"adjusted_mean", s.analytic_adjusted.mean},
          {"adjusted_variance", s.analytic_adjusted.variance},
          {"raw_mean", s.analytic_raw.mean},
          {"raw_variance", s.analytic_raw.variance},
          {"rejection_rate", s.rejection_rate},
          {"level", s.level}};
}

nlohmann::json to_json(const OscillationPoint& p) {
  return {{"m_half", p.m_half},
          {"n", p.n},
          {"theta", p.theta},
          {"reference_formula", p.reference_formula},
          {"exact", p.exact},
          {"empirical", std::isfinite(p.empirical) ? nlohmann::json(p.empirical) : nlohmann::json()}};
}

nlohmann::json to_json(const CounterexampleResult& r, const CounterexampleConfig& c) {
  auto opt = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return {{"example", std::string(to_string(c.example))},
          {"m_half", c.m_half},
          {"n", c.n},
          {"theta", c.theta},
          {"theta1", c.theta1},
          {"tau", c.tau},
          {"replications", c.reps},
          {"seed", c.seed},
          {"reference_formula", r.reference_formula},
          {"exact", r.exact},
          {"empirical", opt(r.empirical)},
          {"empirical_se", opt(r.empirical_se)}};
}

void write_rows(std::ostream& out, const std::vector<nlohmann::json>& rows, bool table) {
  if (rows.empty()) return;
  std::vector<std::string> keys;
  for (auto it = rows.front().begin(); it != rows.front().end(); ++it) keys.push_back(it.key());
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    std::vector<std::string> c;
    for (const auto& k : keys) c.push_back(r.contains(k) ? format_value(r.at(k)) : "");
    cells.push_back(std::move(c));
  }
  if (!table) {
    for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
    out << '\n';
    for (const auto& c : cells) {
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << csv_field(c[i]);
      out << '\n';
    }
    return;
  }
  std::vector<std::size_t> w(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    w[i] = keys[i].size();
    for (const auto& c : cells) w[i] = std::max(w[i], c[i].size());
  }
  for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "  " : "") << std::setw(int(w[i])) << keys[i];
  out << '\n';
  for (const auto& c : cells) {
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "  " : "") << std::setw(int(w[i])) << c[i];
    out << '\n';
  }
}

}  // namespace spectral_clt::cli
