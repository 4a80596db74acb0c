#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "swg/diagnostics.hpp"
#include "swg/dist.hpp"
#include "swg/engine.hpp"
#include "swg/eval.hpp"
#include "swg/mcmc.hpp"
#include "swg/model.hpp"
#include "swg/simulate.hpp"
#include "swg/spline.hpp"
#include "swg/trend.hpp"

namespace py = pybind11;
using namespace swg;

namespace {

ModelSpec make_spec(const std::string& family, int season_dim, int year_dim) {
  ModelSpec spec;
  spec.family = family_from_name(family);
  spec.season_dim = season_dim;
  spec.year_dim = year_dim;
  return spec;
}

DailySeries series_from_arrays(const std::string& station, const std::string& season,
                               const std::vector<int>& years,
                               const std::vector<std::vector<double>>& values,
                               const std::vector<std::vector<bool>>& missing) {
  DailySeries s;
  s.station_id = station;
  s.season = season_from_name(season);
  s.years = years;
  s.values = values;
  s.missing = missing;
  for (const auto& row : values) s.season_day_count.push_back(static_cast<int>(row.size()));
  s.validate(200.0);
  return s;
}

MetricSeries metric_series_from(const std::vector<int>& years,
                                const std::vector<double>& values) {
  MetricSeries ms;
  ms.years = years;
  ms.values = values;
  return ms;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core: spline-basis construction, the 5-state precipitation HMM, forward/"
            "FFBS inference, MCMC, predictive simulation, convergence diagnostics, and "
            "nonparametric trend statistics";

  py::class_<SplineBasis>(m, "SplineBasis")
      .def_readonly("K", &SplineBasis::K)
      .def_readonly("penalized_count", &SplineBasis::penalized_count)
      .def_readonly("nullspace_count", &SplineBasis::nullspace_count)
      .def_readonly("grid", &SplineBasis::grid)
      .def_property_readonly("X", [](const SplineBasis& b) {
        std::vector<std::vector<double>> out(b.X.rows());
        for (int r = 0; r < b.X.rows(); ++r) {
          out[r].resize(b.X.cols());
          for (int c = 0; c < b.X.cols(); ++c) out[r][c] = b.X(r, c);
        }
        return out;
      });
  m.def("build_basis", &build_basis, py::arg("grid"), py::arg("K"));
  m.def("eval_curve", &eval_curve, py::arg("basis"), py::arg("beta0"), py::arg("beta"));

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init(&make_spec), py::arg("family") = "gamma", py::arg("season_dim") = 0,
           py::arg("year_dim") = 0)
      .def_readwrite("season_dim", &ModelSpec::season_dim)
      .def_readwrite("year_dim", &ModelSpec::year_dim)
      .def_readwrite("rounding_halfwidth_cm", &ModelSpec::rounding_halfwidth_cm)
      .def_readwrite("report_grid_cm", &ModelSpec::report_grid_cm);

  py::class_<ParamVector>(m, "ParamVector")
      .def_property_readonly("names",
                             [](const ParamVector& p) { return p.layout->names(); })
      .def("get", &ParamVector::get)
      .def("set", &ParamVector::set)
      .def_property_readonly("values", [](const ParamVector& p) { return p.v; });
  m.def("default_params", [](const ModelSpec& spec) {
    return make_default_params(make_layout(spec));
  });

  py::class_<DailySeries>(m, "DailySeries")
      .def(py::init(&series_from_arrays), py::arg("station"), py::arg("season"),
           py::arg("years"), py::arg("values"), py::arg("missing"))
      .def_readonly("years", &DailySeries::years)
      .def_readonly("values", &DailySeries::values)
      .def_property_readonly("missing", [](const DailySeries& s) {
        std::vector<std::vector<bool>> out(s.missing.begin(), s.missing.end());
        return out;
      });

  m.def("transition_matrix",
        [](const ParamVector& p, int s, int t, const SplineBasis* bs, const SplineBasis* bt) {
          Matrix5 mtx = transition_matrix(p, bs, bt, s, t);
          std::vector<std::vector<double>> out(5, std::vector<double>(5));
          for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) out[i][j] = mtx[i][j];
          return out;
        },
        py::arg("params"), py::arg("s") = 0, py::arg("t") = 0, py::arg("basis_s") = nullptr,
        py::arg("basis_t") = nullptr);
  m.def("emission_logprob",
        [](std::optional<double> r, int state, const ParamVector& p, int s, int t,
           double halfwidth) {
          return emission_logprob(r, state, p, nullptr, nullptr, s, t, halfwidth);
        },
        py::arg("r_cm"), py::arg("state"), py::arg("params"), py::arg("s") = 0,
        py::arg("t") = 0, py::arg("rounding_halfwidth_cm") = 0.0127);
  m.def("state_center", [](const ParamVector& p, int state) {
    return state_center(p, state, nullptr, nullptr, 0, 0);
  });
  m.def("check_constraints", [](const ParamVector& p, double max_obs) {
    std::vector<std::string> out;
    for (const auto& v : check_constraints(p, nullptr, nullptr, max_obs))
      out.push_back(violation_name(v.which));
    return out;
  });

  m.def("forward_loglik",
        [](const DailySeries& data, int year_idx, const ParamVector& p, double halfwidth) {
          return forward_loglik(data, year_idx, p, nullptr, nullptr, halfwidth);
        },
        py::arg("data"), py::arg("year_idx"), py::arg("params"),
        py::arg("rounding_halfwidth_cm") = 0.0127);

  py::class_<ChainConfig>(m, "ChainConfig")
      .def(py::init<>())
      .def_readwrite("n_iterations", &ChainConfig::n_iterations)
      .def_readwrite("burn_in", &ChainConfig::burn_in)
      .def_readwrite("thin", &ChainConfig::thin)
      .def_readwrite("n_chains", &ChainConfig::n_chains)
      .def_readwrite("seed", &ChainConfig::seed);

  m.def("fit_chains",
        [](const DailySeries& data, const ModelSpec& spec, const ChainConfig& cfg) {
          auto md = ModelData::create(data, spec);
          PosteriorSamples s = fit_chains(md, cfg);
          std::vector<std::vector<std::vector<double>>> draws;
          for (const auto& c : s.chains) draws.push_back(c.draws);
          return py::make_tuple(s.layout->names(), draws);
        },
        py::arg("data"), py::arg("spec"), py::arg("config"),
        "run the sampler; returns (param_names, draws[chain][saved][param])");

  m.def("simulate_series",
        [](const DailySeries& data, const ModelSpec& spec, const ParamVector& p,
           std::uint64_t seed) {
          auto md = ModelData::create(data, spec);
          Engine engine(md);
          engine.bind(p);
          auto rng = make_rng(seed, 0);
          return simulate_series(engine, rng).values;
        },
        py::arg("data"), py::arg("spec"), py::arg("params"), py::arg("seed") = 1);

  m.def("rhat", [](const std::vector<std::vector<double>>& chains) {
    return rhat(ChainsMatrix{chains}).value;
  });
  m.def("ess_bulk", [](const std::vector<std::vector<double>>& chains) {
    return ess(ChainsMatrix{chains}, EssKind::bulk).value;
  });
  m.def("ess_tail", [](const std::vector<std::vector<double>>& chains) {
    return ess(ChainsMatrix{chains}, EssKind::tail).value;
  });

  m.def("compute_metric",
        [](const std::vector<double>& days, const std::string& metric, double cutoff, int kday) {
          return compute_metric(days, metric_from_name(metric), cutoff, kday);
        },
        py::arg("days"), py::arg("metric"), py::arg("cutoff") = 0.3, py::arg("kday") = 40);
  m.def("sens_slope", [](const std::vector<int>& years, const std::vector<double>& values) {
    return sens_slope(metric_series_from(years, values));
  });
  m.def("mann_kendall", [](const std::vector<int>& years, const std::vector<double>& values) {
    MkResult r = mann_kendall(metric_series_from(years, values));
    return py::make_tuple(r.S, r.var_S, r.z, r.p);
  });
  m.def("waic", [](const std::vector<std::vector<double>>& year_ll) {
    WaicResult r = waic_from_matrix(year_ll);
    return py::make_tuple(r.waic, r.p_waic, r.lppd);
  });

  m.attr("__version__") = "0.1.0";
}
