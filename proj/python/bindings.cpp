#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spectral_clt/clt_functionals.hpp"
#include "spectral_clt/errors.hpp"
#include "spectral_clt/estimators.hpp"
#include "spectral_clt/hypothesis_tests.hpp"
#include "spectral_clt/montecarlo.hpp"
#include "spectral_clt/mp_core.hpp"

namespace py = pybind11;
namespace sc = spectral_clt;
using namespace pybind11::literals;

namespace {

// Accepts a built-in name ("x", "x2", "log", "lrt", "1") or a Python callable
// complex -> complex.
sc::SpectralFunction to_function(const py::object& f) {
  if (py::isinstance<py::str>(f)) return sc::SpectralFunction::from_name(f.cast<std::string>());
  if (py::isinstance<sc::SpectralFunction>(f)) return f.cast<sc::SpectralFunction>();
  if (!PyCallable_Check(f.ptr())) {
    throw sc::Error(sc::ErrorKind::InvalidArgument, "expected a function name or a callable");
  }
  auto fn = py::reinterpret_borrow<py::function>(f);
  return sc::SpectralFunction("callable", [fn](sc::cplx z) {
    py::gil_scoped_acquire gil;
    return fn(z).cast<sc::cplx>();
  });
}

sc::MomentParams moments(int kappa, std::optional<double> alpha, double beta) {
  sc::MomentParams mp{kappa, alpha.value_or(kappa == 2 ? 1.0 : 0.0), beta};
  mp.validate();
  return mp;
}

py::dict report(const sc::TestReport& r) {
  py::dict d("statistic"_a = r.statistic, "centering"_a = r.centering,
             "mean_correction"_a = r.mean_correction, "variance"_a = r.variance,
             "z_score"_a = r.z_score, "p_value"_a = r.p_value, "rejected"_a = r.rejected,
             "convention"_a = std::string(sc::to_string(r.convention)), "p"_a = r.p, "n"_a = r.n,
             "kappa"_a = r.mpx.kappa, "alpha_x"_a = r.mpx.alpha, "beta_x"_a = r.mpx.beta);
  if (r.mpy) {
    d["m"] = r.m;
    d["beta_y"] = r.mpy->beta;
  }
  return d;
}

py::dict summary(const sc::SimulationSummary& s) {
  return py::dict("p"_a = s.p, "n"_a = s.n, "m"_a = s.m, "replications"_a = s.replications,
                  "seed"_a = s.seed, "empirical_mean"_a = s.empirical_mean,
                  "empirical_variance"_a = s.empirical_variance,
                  "adjusted"_a = py::make_tuple(s.analytic_adjusted.mean, s.analytic_adjusted.variance),
                  "raw"_a = py::make_tuple(s.analytic_raw.mean, s.analytic_raw.variance),
                  "rejection_rate"_a = s.rejection_rate);
}

std::vector<sc::Atom> atoms(const std::vector<std::pair<double, double>>& pop) {
  std::vector<sc::Atom> out;
  for (auto [t, w] : pop) out.push_back({t, w});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral CLT machinery and corrected likelihood ratio tests";

  static py::exception<sc::Error> error(m, "SpectralCltError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sc::Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      py::setattr(exc, "kind", py::str(std::string(sc::to_string(e.kind()))));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<sc::SpectralFunction>(m, "SpectralFunction")
      .def_static("from_name", &sc::SpectralFunction::from_name)
      .def_static("fisher_lrt", &sc::SpectralFunction::fisher_lrt, "y1"_a, "y2"_a)
      .def("__call__", [](const sc::SpectralFunction& f, sc::cplx z) { return f(z); })
      .def_property_readonly("name", &sc::SpectralFunction::name);

  py::class_<sc::SpectralModel>(m, "SpectralModel")
      .def(py::init([](double ratio, const std::vector<std::pair<double, double>>& pop) {
             return sc::SpectralModel(ratio, atoms(pop));
           }),
           "ratio"_a, "population"_a = std::vector<std::pair<double, double>>{{1.0, 1.0}})
      .def_property_readonly("ratio", &sc::SpectralModel::ratio)
      .def_property_readonly("population", [](const sc::SpectralModel& s) {
        std::vector<std::pair<double, double>> out;
        for (const auto& a : s.population()) out.emplace_back(a.location, a.weight);
        return out;
      });

  // mp_core
  m.def("solve_companion_stieltjes",
        [](const sc::SpectralModel& model, sc::cplx z) {
          return sc::solve_companion_stieltjes(model, z).value;
        },
        "model"_a, "z"_a);
  m.def("companion_derivative", &sc::companion_derivative, "model"_a, "z"_a);
  m.def("mp_support", [](const sc::SpectralModel& model) {
    const auto s = sc::mp_support(model);
    return py::dict("lower"_a = s.lower, "upper"_a = s.upper, "atom_at_zero"_a = s.atom_at_zero);
  });
  m.def("mp_density", &sc::mp_density, "model"_a, "x"_a);
  m.def("mp_linear_functional",
        [](const sc::SpectralModel& model, const py::object& g) {
          return sc::mp_linear_functional(model, to_function(g));
        },
        "model"_a, "g"_a);
  m.def("identity_case_centering", [](double y) {
    const auto c = sc::identity_case_centering(y);
    return py::make_tuple(c.functional, c.mean, c.variance);
  });

  // clt_functionals
  m.def("contour_I1", [](const py::object& f, double y) { return sc::contour_I1(to_function(f), y); });
  m.def("contour_I2", [](const py::object& f, double y) { return sc::contour_I2(to_function(f), y); });
  m.def("contour_J1", [](const py::object& f, const py::object& g, double y) {
    return sc::contour_J1(to_function(f), to_function(g), y);
  });
  m.def("contour_J2", [](const py::object& f, const py::object& g, double y) {
    return sc::contour_J2(to_function(f), to_function(g), y);
  });
  m.def("lss_mean_general",
        [](const py::object& f, const sc::SpectralModel& model, int kappa,
           std::optional<double> alpha, double beta) {
          return sc::lss_mean_general(to_function(f), model, moments(kappa, alpha, beta));
        },
        "f"_a, "model"_a, "kappa"_a = 2, "alpha"_a = py::none(), "beta"_a = 0.0);
  m.def("lss_cov_general",
        [](const py::object& f, const py::object& g, const sc::SpectralModel& model, int kappa,
           std::optional<double> alpha, double beta) {
          return sc::lss_cov_general(to_function(f), to_function(g), model,
                                     moments(kappa, alpha, beta));
        },
        "f"_a, "g"_a, "model"_a, "kappa"_a = 2, "alpha"_a = py::none(), "beta"_a = 0.0);
  m.def("mle_mean_shift", [](const py::object& g, const sc::SpectralModel& model) {
    return sc::mle_mean_shift(to_function(g), model);
  });
  m.def("fisher_lss_mean",
        [](const py::object& f, double y1, double y2, int kappa, double beta_x, double beta_y) {
          return sc::fisher_lss_mean(to_function(f), sc::FisherModel(y1, y2),
                                     moments(kappa, {}, beta_x), moments(kappa, {}, beta_y));
        },
        "f"_a, "y1"_a, "y2"_a, "kappa"_a = 2, "beta_x"_a = 0.0, "beta_y"_a = 0.0);
  m.def("fisher_lss_cov",
        [](const py::object& f, const py::object& g, double y1, double y2, int kappa,
           double beta_x, double beta_y) {
          return sc::fisher_lss_cov(to_function(f), to_function(g), sc::FisherModel(y1, y2),
                                    moments(kappa, {}, beta_x), moments(kappa, {}, beta_y));
        },
        "f"_a, "g"_a, "y1"_a, "y2"_a, "kappa"_a = 2, "beta_x"_a = 0.0, "beta_y"_a = 0.0);

  // estimators
  m.def("unbiased_cov", [](const Eigen::MatrixXd& X) { return sc::unbiased_cov(X).matrix; });
  m.def("mle_cov", [](const Eigen::MatrixXd& X) { return sc::mle_cov(X).matrix; });
  m.def("noncentered_cov", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& mu) {
    return sc::noncentered_cov(X, mu).matrix;
  });
  m.def("eigenvalues_sym", [](const Eigen::MatrixXd& M) { return sc::eigenvalues_sym(M).values; });
  m.def("fisher_spectrum", [](const Eigen::MatrixXd& Sx, const Eigen::MatrixXd& Sy) {
    return sc::fisher_spectrum(Sx, Sy).values;
  });
  m.def("lss", [](const std::vector<double>& spectrum, const py::object& g) {
    const auto v = sc::lss({spectrum, sc::SpectrumSource::Symmetric}, to_function(g));
    return py::make_tuple(v.sum, v.mean);
  });

  // hypothesis_tests
  m.def("clrt_identity_test",
        [](const Eigen::MatrixXd& X, int kappa, std::optional<double> alpha, double beta,
           const std::string& convention, double level, bool two_sided) {
          return report(sc::clrt_identity_test(X, moments(kappa, alpha, beta),
                                               sc::size_convention_from_string(convention),
                                               {level, two_sided}));
        },
        "X"_a, "kappa"_a = 2, "alpha"_a = py::none(), "beta"_a = 0.0,
        "convention"_a = "adjusted", "level"_a = 0.05, "two_sided"_a = false);
  m.def("clrt_equality_test",
        [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int kappa, double beta_x,
           double beta_y, const std::string& convention, double level, bool two_sided) {
          return report(sc::clrt_equality_test(X, Y, moments(kappa, {}, beta_x),
                                               moments(kappa, {}, beta_y),
                                               sc::size_convention_from_string(convention),
                                               {level, two_sided}));
        },
        "X"_a, "Y"_a, "kappa"_a = 2, "beta_x"_a = 0.0, "beta_y"_a = 0.0,
        "convention"_a = "adjusted", "level"_a = 0.05, "two_sided"_a = false);
  m.def("identity_test_terms",
        [](Eigen::Index p, Eigen::Index n, int kappa, double beta, const std::string& convention) {
          const auto t = sc::identity_test_terms(p, n, moments(kappa, {}, beta),
                                                 sc::size_convention_from_string(convention));
          return py::make_tuple(t.centering + t.mean_correction, t.variance);
        },
        "p"_a, "n"_a, "kappa"_a = 2, "beta"_a = 0.0, "convention"_a = "adjusted");
  m.def("equality_test_terms",
        [](Eigen::Index p, Eigen::Index n, Eigen::Index mm, int kappa, double beta_x,
           double beta_y, const std::string& convention) {
          const auto t = sc::equality_test_terms(p, n, mm, moments(kappa, {}, beta_x),
                                                 moments(kappa, {}, beta_y),
                                                 sc::size_convention_from_string(convention));
          return py::make_tuple(t.centering + t.mean_correction, t.variance);
        },
        "p"_a, "n"_a, "m"_a, "kappa"_a = 2, "beta_x"_a = 0.0, "beta_y"_a = 0.0,
        "convention"_a = "adjusted");

  // montecarlo
  m.def("simulate_identity_table",
        [](Eigen::Index p, Eigen::Index n, int reps, std::uint64_t seed) {
          sc::PopulationSpec spec;
          spec.p = p;
          py::gil_scoped_release release;
          return sc::simulate_identity_table(p, n, reps, spec, seed);
        },
        "p"_a, "n"_a, "reps"_a, "seed"_a = 1);
  m.def("simulate_equality_table",
        [](Eigen::Index p, Eigen::Index n, Eigen::Index mm, int reps, std::uint64_t seed) {
          sc::PopulationSpec spec;
          spec.p = p;
          py::gil_scoped_release release;
          return sc::simulate_equality_table(p, n, mm, reps, spec, spec, seed);
        },
        "p"_a, "n"_a, "m"_a, "reps"_a, "seed"_a = 1);
  py::class_<sc::SimulationSummary>(m, "SimulationSummary")
      .def("as_dict", &summary)
      .def_readonly("empirical_mean", &sc::SimulationSummary::empirical_mean)
      .def_readonly("empirical_variance", &sc::SimulationSummary::empirical_variance)
      .def_readonly("rejection_rate", &sc::SimulationSummary::rejection_rate);
  m.def("counterexample_variance",
        [](const std::string& example, int m_half, int n, double theta, double tau, int reps,
           std::uint64_t seed) {
          sc::CounterexampleConfig c;
          c.example = sc::counterexample_from_string(example);
          c.m_half = m_half;
          c.n = n;
          c.theta = theta;
          c.tau = tau;
          c.reps = reps;
          c.seed = seed;
          sc::CounterexampleResult r;
          {
            py::gil_scoped_release release;
            r = sc::counterexample_variance(c);
          }
          return py::dict("reference_formula"_a = r.reference_formula, "exact"_a = r.exact,
                          "empirical"_a = r.empirical, "empirical_se"_a = r.empirical_se);
        },
        "example"_a, "m_half"_a = 50, "n"_a = 200, "theta"_a = 0.0, "tau"_a = 0.875,
        "reps"_a = 0, "seed"_a = 1);
  m.def("sample_population",
        [](Eigen::Index p, Eigen::Index n, std::uint64_t seed, const std::string& family) {
          sc::PopulationSpec spec;
          spec.p = p;
          if (family == "real_gaussian") spec.family = sc::Family::RealGaussian;
          else if (family == "scaled_t5") spec.family = sc::Family::ScaledT5;
          else throw sc::Error(sc::ErrorKind::InvalidArgument, "unknown real family '" + family + "'");
          return sc::sample_population(spec, n, seed);
        },
        "p"_a, "n"_a, "seed"_a = 1, "family"_a = "real_gaussian");
}
