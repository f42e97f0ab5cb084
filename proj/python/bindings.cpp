#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ppsel/error.hpp"
#include "ppsel/experiment.hpp"

namespace py = pybind11;
using namespace ppsel;

namespace {

using Coords = std::vector<std::array<double, 2>>;

Window to_window(const std::array<double, 4>& w) { return Window(w[0], w[1], w[2], w[3]); }

PointPattern to_pattern(const Coords& xy, const Window& w) {
  std::vector<Point> pts;
  pts.reserve(xy.size());
  for (const auto& [x, y] : xy) pts.push_back({x, y});
  return PointPattern(std::move(pts), w);
}

Coords to_coords(const PointPattern& p) {
  Coords out;
  out.reserve(p.size());
  for (const auto& u : p.points()) out.push_back({u.x, u.y});
  return out;
}

py::dict report_dict(const CriteriaReport& r) {
  py::dict d;
  d["loglik"] = r.loglik;
  d["p_l"] = r.p_l;
  d["p_star"] = r.p_star;
  for (auto c : kAllCriteria) d[py::str(std::string(criterion_name(c)))] = criterion_value(r, c);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Intensity model selection for spatial point patterns";

  py::register_exception<Error>(m, "PpselError");

  py::class_<CovariateSet>(m, "Covariates")
      .def_static(
          "synthetic",
          [](std::uint64_t seed, std::size_t p, const std::array<double, 4>& window,
             std::size_t nx, std::size_t ny) {
            return synth_covariates(seed, p, to_window(window), nx, ny);
          },
          py::arg("seed") = 1, py::arg("p") = 6,
          py::arg("window") = std::array<double, 4>{0, 1000, 0, 500}, py::arg("nx") = 201,
          py::arg("ny") = 101)
      .def("__len__", &CovariateSet::size);

  m.def(
      "simulate",
      [](const CovariateSet& cov, const std::vector<double>& beta, double mu,
         const std::array<double, 4>& window, std::uint64_t seed, const std::string& process,
         double kappa, double gamma) {
        const auto w = to_window(window);
        const IntensitySpec unit(1.0, beta, cov);
        const auto spec = unit.with_omega(calibrate_omega(unit, mu));
        if (process == "thomas") return to_coords(sim_thomas(spec, ThomasParams(kappa, gamma), w, seed));
        if (process != "poisson") throw InvalidArgument("process must be poisson or thomas");
        return to_coords(sim_poisson(spec, w, seed));
      },
      py::arg("covariates"), py::arg("beta"), py::arg("mu"), py::arg("window"),
      py::arg("seed") = 1, py::arg("process") = "poisson", py::arg("kappa") = 4e-4,
      py::arg("gamma") = 5.0, "Simulate a pattern with expected count mu; returns [(x, y), ...].");

  m.def(
      "fit",
      [](const Coords& xy, const std::array<double, 4>& window, const CovariateSet& cov,
         std::vector<std::size_t> subset, std::size_t dummies) {
        const auto p = to_pattern(xy, to_window(window));
        const auto r = fit(p, ModelSpec(std::move(subset)), cov, dummies ? dummies : 4 * p.size());
        py::dict d;
        d["beta"] = r.beta_hat;
        d["loglik"] = r.loglik;
        d["sensitivity"] = r.sensitivity;
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("points"), py::arg("window"), py::arg("covariates"), py::arg("subset"),
      py::arg("m") = 0, "Fit the log-linear intensity model with the given 0-based covariates.");

  m.def(
      "select",
      [](const Coords& xy, const std::array<double, 4>& window, const CovariateSet& cov,
         const std::string& pcf, std::size_t dummies, double r_max, bool estimate_once) {
        SelectOptions opts;
        if (pcf == "thomas") opts.pcf_fitting = PcfKind::thomas;
        else if (pcf != "poisson") throw InvalidArgument("pcf must be poisson or thomas");
        opts.m = dummies;
        opts.r_max = r_max;
        opts.estimate_once = estimate_once;
        const auto r = select(to_pattern(xy, to_window(window)), cov, opts);
        py::dict chosen;
        for (const auto& [c, i] : r.chosen) {
          chosen[py::str(std::string(criterion_name(c)))] = r.models[i].model.subset();
        }
        py::list models;
        for (const auto& o : r.models) {
          py::dict d = o.ok ? report_dict(o.report) : py::dict();
          d["subset"] = o.model.subset();
          d["ok"] = o.ok;
          if (!o.ok) d["failure"] = o.failure;
          models.append(d);
        }
        py::dict out;
        out["chosen"] = chosen;
        out["models"] = models;
        return out;
      },
      py::arg("points"), py::arg("window"), py::arg("covariates"), py::arg("pcf") = "poisson",
      py::arg("m") = 0, py::arg("r_max") = 20.0, py::arg("estimate_once") = false,
      "Fit every candidate model and report the choice of each criterion.");

  m.def(
      "k_theoretical",
      [](double kappa, double gamma, double r) { return k_theoretical(ThomasParams(kappa, gamma), r); },
      py::arg("kappa"), py::arg("gamma"), py::arg("r"));

  m.def(
      "run_config",
      [](const std::filesystem::path& config, std::optional<std::size_t> replicates,
         const std::filesystem::path& out, std::size_t threads) {
        auto cfg = load_config(config);
        if (replicates) cfg.replicates = *replicates;
        StudySummary s;
        {
          py::gil_scoped_release release;
          s = run_scenario(cfg, {out, threads, nullptr});
        }
        py::dict d;
        for (const auto& c : s.criteria) {
          py::dict row;
          row["tpr"] = c.tpr;
          row["fpr"] = c.fpr;
          row["mise"] = c.mise;
          row["mkl"] = c.mkl;
          row["mean_p_star"] = c.mean_p_star;
          row["sd_p_star"] = c.sd_p_star;
          d[py::str(std::string(criterion_name(c.criterion)))] = row;
        }
        return d;
      },
      py::arg("config"), py::arg("replicates") = py::none(),
      py::arg("out") = std::filesystem::path(), py::arg("threads") = 1,
      "Run a replicated study from a config file; returns per-criterion summaries.");
}
