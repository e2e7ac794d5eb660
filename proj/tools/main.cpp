// spectral-clt: corrected likelihood ratio tests, Marchenko-Pastur queries and
// Monte-Carlo studies from the command line.
//
// Exit codes: 0 success, 2 null hypothesis rejected at --level, 1 error (a
// diagnostic on stderr and no report).

#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csv_io.hpp"
#include "json.hpp"
#include "spectral_clt/errors.hpp"
#include "spectral_clt/hypothesis_tests.hpp"
#include "spectral_clt/montecarlo.hpp"

namespace sc = spectral_clt;
using nlohmann::json;

namespace {

struct Options {
  std::vector<std::string> inputs;
  std::string output;
  std::string format = "json";
  std::uint64_t seed = 1;
  int reps = 10000;
  std::string convention = "adjusted";
  std::optional<int> kappa;
  std::optional<double> alpha_x;
  std::optional<std::string> beta_x;
  std::optional<std::string> beta_y;
  double level = 0.05;
  bool two_sided = false;
  bool transpose = false;
  std::string preset;
  // mp
  double ratio = 0.5;
  std::string population = "1:1";
  std::string function = "x";
  // counterexample
  std::string example = "A3";
  int m_half = 50;
  int n = 200;
  double theta = 0.0;
  double theta1 = 0.0;
  double tau = 0.875;
};

struct Outcome {
  std::string text;
  int code = 0;
};

double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw sc::Error(sc::ErrorKind::InvalidArgument, std::string(what) + ": cannot parse '" + s + "'");
  }
  return v;
}

Eigen::MatrixXd load(const std::string& path, bool transpose) {
  Eigen::MatrixXd X = sc::cli::read_csv(path);
  if (transpose) X.transposeInPlace();
  return X;
}

sc::MomentParams moments(const Options& o, const std::optional<std::string>& beta,
                         const Eigen::MatrixXd& X, const char* which) {
  sc::MomentParams mp;
  mp.kappa = o.kappa.value_or(2);
  mp.alpha = o.alpha_x.value_or(mp.kappa == 2 ? 1.0 : 0.0);
  if (beta) {
    mp.beta = *beta == "estimate" ? sc::estimate_beta(X) : parse_double(*beta, which);
  }
  if (!o.kappa && !o.alpha_x && !beta) {
    std::cerr << "warning: moment parameters for " << which
              << " default to the real Gaussian case (kappa=2, alpha=1, beta=0)\n";
  }
  mp.validate();
  return mp;
}

std::vector<sc::SizeConvention> conventions(const std::string& c) {
  if (c == "both") return {sc::SizeConvention::Adjusted, sc::SizeConvention::Raw};
  return {sc::size_convention_from_string(c)};
}

std::string render(const Options& o, const json& single, const std::vector<json>& rows) {
  std::ostringstream out;
  if (o.format == "json") {
    out << single.dump(2) << '\n';
  } else {
    sc::cli::write_rows(out, rows, o.format == "table");
  }
  return out.str();
}

Outcome render_reports(const Options& o, const std::vector<sc::TestReport>& reports) {
  std::vector<json> rows;
  json single;
  for (const auto& r : reports) rows.push_back(sc::cli::to_json(r));
  if (reports.size() == 1) {
    single = rows.front();
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      single[std::string(sc::to_string(reports[i].convention))] = rows[i];
    }
  }
  return {render(o, single, rows), reports.front().rejected ? 2 : 0};
}

Outcome cmd_test_identity(const Options& o) {
  if (o.inputs.size() != 1) {
    throw sc::Error(sc::ErrorKind::InvalidArgument, "test-identity takes exactly one --input");
  }
  const Eigen::MatrixXd X = load(o.inputs[0], o.transpose);
  const sc::MomentParams mp = moments(o, o.beta_x, X, "x");
  std::vector<sc::TestReport> reports;
  for (auto c : conventions(o.convention)) {
    reports.push_back(sc::clrt_identity_test(X, mp, c, {o.level, o.two_sided}));
  }
  return render_reports(o, reports);
}

Outcome cmd_test_equality(const Options& o) {
  if (o.inputs.size() != 2) {
    throw sc::Error(sc::ErrorKind::InvalidArgument, "test-equality takes exactly two --input");
  }
  const Eigen::MatrixXd X = load(o.inputs[0], o.transpose);
  const Eigen::MatrixXd Y = load(o.inputs[1], o.transpose);
  if (X.cols() != Y.cols()) {
    throw sc::Error(sc::ErrorKind::ShapeMismatch,
                    "'" + o.inputs[0] + "' has " + std::to_string(X.cols()) + " variables but '" +
                        o.inputs[1] + "' has " + std::to_string(Y.cols()));
  }
  const sc::MomentParams mpx = moments(o, o.beta_x, X, "x");
  const sc::MomentParams mpy = moments(o, o.beta_y, Y, "y");
  std::vector<sc::TestReport> reports;
  for (auto c : conventions(o.convention)) {
    reports.push_back(sc::clrt_equality_test(X, Y, mpx, mpy, c, {o.level, o.two_sided}));
  }
  return render_reports(o, reports);
}

std::vector<sc::Atom> parse_population(const std::string& s) {
  std::vector<sc::Atom> atoms;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw sc::Error(sc::ErrorKind::InvalidArgument,
                      "population entries look like 'atom:weight', got '" + item + "'");
    }
    atoms.push_back({parse_double(item.substr(0, colon), "population atom"),
                     parse_double(item.substr(colon + 1), "population weight")});
  }
  return atoms;
}

Outcome cmd_mp(const Options& o) {
  const sc::SpectralModel model(o.ratio, parse_population(o.population));
  const sc::SupportInterval s = sc::mp_support(model);
  const sc::SpectralFunction g = sc::SpectralFunction::from_name(o.function);
  const double value = sc::mp_linear_functional(model, g);
  json pop = json::array();
  for (const auto& a : model.population()) pop.push_back({a.location, a.weight});
  json j{{"ratio", o.ratio},
         {"population", pop},
         {"support_lower", s.lower},
         {"support_upper", s.upper},
         {"atom_at_zero", s.atom_at_zero},
         {"function", o.function},
         {"functional", value}};
  json row = j;
  row["population"] = o.population;
  return {render(o, j, {row}), 0};
}

Outcome cmd_simulate(const Options& o) {
  sc::PopulationSpec gauss;
  std::vector<json> rows;
  if (o.preset == "table1") {
    for (auto [p, n] : sc::table1_grid()) {
      gauss.p = p;
      rows.push_back(sc::cli::to_json(sc::simulate_identity_table(p, n, o.reps, gauss, o.seed, {o.level})));
    }
  } else if (o.preset == "table2") {
    for (auto [p, n] : sc::table2_grid()) {
      gauss.p = p;
      rows.push_back(sc::cli::to_json(
          sc::simulate_equality_table(p, n, n, o.reps, gauss, gauss, o.seed, {o.level})));
    }
  } else if (o.preset.rfind("counterexample-", 0) == 0) {
    const auto ex = sc::counterexample_from_string(o.preset.substr(15));
    if (o.reps < 2) {
      throw sc::Error(sc::ErrorKind::InvalidArgument, "at least 2 replications are needed");
    }
    for (const auto& pt : sc::oscillation_demo(ex, {10, 20, 40, 80}, o.ratio, o.reps, o.seed, o.tau)) {
      rows.push_back(sc::cli::to_json(pt));
    }
  } else {
    throw sc::Error(sc::ErrorKind::InvalidArgument,
                    "unknown preset '" + o.preset +
                        "' (table1, table2, counterexample-A1, counterexample-A2, counterexample-A3)");
  }
  json j{{"preset", o.preset}, {"rows", rows}};
  return {render(o, j, rows), 0};
}

Outcome cmd_counterexample(const Options& o) {
  sc::CounterexampleConfig c;
  c.example = sc::counterexample_from_string(o.example);
  c.m_half = o.m_half;
  c.n = o.n;
  c.theta = o.theta;
  c.theta1 = o.theta1;
  c.tau = o.tau;
  c.reps = o.reps;
  c.seed = o.seed;
  if (c.reps < 2) throw sc::Error(sc::ErrorKind::InvalidArgument, "at least 2 replications are needed");
  const json j = sc::cli::to_json(sc::counterexample_variance(c), c);
  return {render(o, j, {j}), 0};
}

void add_output(CLI::App* app, Options& o) {
  app->add_option("-o,--output", o.output, "Write the report here instead of stdout");
  app->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "table"}));
}

void add_test_options(CLI::App* app, Options& o, bool two_samples) {
  app->add_option("-i,--input", o.inputs, "CSV file, one observation per row")->required();
  add_output(app, o);
  app->add_option("--convention", o.convention, "Sample-size convention for centering")
      ->check(CLI::IsMember({"adjusted", "raw", "both"}));
  app->add_option("--kappa", o.kappa, "2 for real data, 1 for complex data")
      ->check(CLI::IsMember({1, 2}));
  app->add_option("--alpha-x", o.alpha_x, "|E X^2|^2 of the innovations");
  app->add_option("--beta-x", o.beta_x, "Fourth-moment excess of x, or 'estimate'");
  if (two_samples) app->add_option("--beta-y", o.beta_y, "Fourth-moment excess of y, or 'estimate'");
  app->add_option("--level", o.level, "Test level")->check(CLI::Range(0.0, 1.0));
  app->add_flag("--two-sided", o.two_sided, "Two-sided p-value instead of the upper tail");
  app->add_flag("--transpose", o.transpose, "Input files hold one variable per row");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corrected likelihood ratio tests and spectral CLT tools"};
  app.require_subcommand(1);
  Options o;

  auto* ti = app.add_subcommand("test-identity", "Test H0: Sigma = I");
  add_test_options(ti, o, false);
  auto* te = app.add_subcommand("test-equality", "Test H0: Sigma_x = Sigma_y");
  add_test_options(te, o, true);

  auto* mp = app.add_subcommand("mp", "Support and linear functional of a Marchenko-Pastur law");
  mp->add_option("--ratio", o.ratio, "Aspect ratio y = p/n")->required();
  mp->add_option("--population", o.population, "Population spectrum as 'atom:weight,...'");
  mp->add_option("--function", o.function, "x, x2, log, lrt or 1");
  add_output(mp, o);

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo reproduction of the tables");
  sim->add_option("--preset", o.preset, "table1, table2 or counterexample-A1/A2/A3")->required();
  sim->add_option("--reps", o.reps, "Replications per configuration");
  sim->add_option("--seed", o.seed, "Master seed");
  sim->add_option("--level", o.level, "Level for the rejection rate")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--ratio", o.ratio, "p/n along the counterexample sequence");
  sim->add_option("--tau", o.tau, "Mixture weight for counterexamples A1 and A2");
  add_output(sim, o);

  auto* ce = app.add_subcommand("counterexample", "Variance of tr S0 - tr T for a counterexample");
  ce->add_option("--example", o.example, "A1, A2 or A3");
  ce->add_option("--m-half", o.m_half, "Half dimension m (p = 2m)");
  ce->add_option("--n", o.n, "Sample size");
  ce->add_option("--theta", o.theta, "theta_2m for A1, theta_m for A2 and A3");
  ce->add_option("--theta1", o.theta1, "theta_1m for A1");
  ce->add_option("--tau", o.tau, "Mixture weight");
  ce->add_option("--reps", o.reps, "Replications");
  ce->add_option("--seed", o.seed, "Master seed");
  add_output(ce, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Outcome out;
    if (*ti) out = cmd_test_identity(o);
    else if (*te) out = cmd_test_equality(o);
    else if (*mp) out = cmd_mp(o);
    else if (*sim) out = cmd_simulate(o);
    else out = cmd_counterexample(o);

    if (o.output.empty()) {
      std::cout << out.text;
    } else {
      std::ofstream f(o.output);
      if (!f || !(f << out.text)) {
        throw sc::Error(sc::ErrorKind::Io, "cannot write '" + o.output + "'");
      }
    }
    return out.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
