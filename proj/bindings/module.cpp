#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maff/baselines.hpp"
#include "maff/cli.hpp"
#include "maff/errors.hpp"
#include "maff/kernels.hpp"
#include "maff/likelihood.hpp"
#include "maff/resampling.hpp"
#include "maff/sensitivity.hpp"
#include "maff/simulate.hpp"
#include "maff/survey.hpp"

namespace py = pybind11;
using namespace maff;

PYBIND11_MODULE(_maff, m) {
  m.doc() = "Malaria-attributable fever fraction estimation";

  py::register_exception<Error>(m, "MaffError");

  // ---- survey data ----
  py::class_<SurveyRecord>(m, "SurveyRecord")
      .def(py::init([](bool fever, double density) {
             return SurveyRecord{fever, density};
           }),
           py::arg("fever"), py::arg("density"))
      .def_readwrite("fever", &SurveyRecord::fever)
      .def_readwrite("density", &SurveyRecord::density);

  py::class_<SurveyDataset>(m, "SurveyDataset")
      .def(py::init([](const std::vector<std::pair<bool, double>> &rows) {
             SurveyDataset d;
             d.records.reserve(rows.size());
             for (const auto &[fever, density] : rows)
               d.records.push_back({fever, density});
             return d;
           }),
           py::arg("records"))
      .def_static("from_csv", &load_survey_csv, py::arg("path"))
      .def("__len__", &SurveyDataset::size)
      .def_property_readonly("records",
                             [](const SurveyDataset &d) { return d.records; })
      .def("febrile_count", &SurveyDataset::febrile_count)
      .def("afebrile_count", &SurveyDataset::afebrile_count)
      .def("max_density", &SurveyDataset::max_density);

  py::class_<SummaryTable>(m, "SummaryTable")
      .def_readonly("afebrile_zero", &SummaryTable::afebrile_zero)
      .def_readonly("afebrile_positive", &SummaryTable::afebrile_positive)
      .def_readonly("febrile_zero", &SummaryTable::febrile_zero)
      .def_readonly("febrile_positive", &SummaryTable::febrile_positive)
      .def("n", &SummaryTable::n)
      .def("fever_prevalence", &SummaryTable::fever_prevalence)
      .def("positive_given_febrile", &SummaryTable::positive_given_febrile)
      .def("positive_given_afebrile", &SummaryTable::positive_given_afebrile);

  m.def("summarize", &summarize, py::arg("dataset"));

  // ---- measurement kernels ----
  py::class_<MeasurementKernel>(m, "MeasurementKernel")
      .def_static("exact", &MeasurementKernel::exact)
      .def_static("poisson", &MeasurementKernel::poisson)
      .def_static("negbin", &MeasurementKernel::negbin, py::arg("r") = 6.0)
      .def_static("wbc_negbin",
                  [](double r) { return MeasurementKernel::wbc_negbin(r); },
                  py::arg("r") = 6.0)
      .def_property_readonly("name", &MeasurementKernel::name);

  m.def(
      "estimate_dispersion",
      [](const std::vector<std::tuple<double, double, double>> &rows) {
        std::vector<FalseNegativeRecord> records;
        records.reserve(rows.size());
        for (const auto &[mean_density, negatives, slides] : rows)
          records.push_back({mean_density, negatives, slides});
        const DispersionFit f = estimate_dispersion(records);
        return py::make_tuple(f.r_hat, f.loglik);
      },
      py::arg("records"),
      "(mean_density, negatives, slides) rows -> (r_hat, loglik)");

  // ---- model fit ----
  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("kernel", &FitConfig::kernel)
      .def_readwrite("beta", &FitConfig::beta)
      .def_readwrite("c0", &FitConfig::c0)
      .def_readwrite("m1", &FitConfig::m1)
      .def_readwrite("m2", &FitConfig::m2)
      .def_readwrite("grid_points", &FitConfig::grid_points)
      .def_readwrite("grid_max", &FitConfig::grid_max)
      .def_readwrite("grad_tol", &FitConfig::grad_tol)
      .def_readwrite("max_iterations", &FitConfig::max_iterations)
      .def_readwrite("multistart", &FitConfig::multistart);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("p_hat", &FitResult::p_hat)
      .def_readonly("lambda_star_hat", &FitResult::lambda_star_hat)
      .def_readonly("maff_hat", &FitResult::maff_hat)
      .def_readonly("objective", &FitResult::objective)
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("grad_norm", &FitResult::grad_norm)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("out_of_range", &FitResult::out_of_range)
      .def_property_readonly(
          "grid_values", [](const FitResult &r) { return r.grid.values; })
      .def_property_readonly(
          "g1_mass", [](const FitResult &r) { return r.g1.mass; })
      .def_property_readonly(
          "g2_mass", [](const FitResult &r) { return r.g2.mass; });

  m.def("fit", &fit, py::arg("dataset"), py::arg("config") = FitConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("adjust_or_to_maff", &adjust_or_to_maff, py::arg("lambda_star"),
        py::arg("p"));

  // ---- classical baselines ----
  py::class_<BaselineEstimate>(m, "BaselineEstimate")
      .def_readonly("estimate", &BaselineEstimate::estimate)
      .def_readonly("out_of_range", &BaselineEstimate::out_of_range);
  m.def("maff_rr_table", &maff_rr_table, py::arg("table"));
  m.def("maff_or_table", &maff_or_table, py::arg("table"));
  m.def(
      "maff_logistic",
      [](const SurveyDataset &d) {
        const LogisticMaff r = maff_logistic(d);
        return py::make_tuple(r.estimate, r.out_of_range);
      },
      py::arg("dataset"));
  m.def(
      "maff_power_logistic",
      [](const SurveyDataset &d) {
        const PowerLogisticMaff r = maff_power_logistic(d);
        return py::make_tuple(r.estimate, r.out_of_range);
      },
      py::arg("dataset"));

  py::class_<PropositionReport>(m, "PropositionReport")
      .def_readonly("p", &PropositionReport::p)
      .def_readonly("maff", &PropositionReport::maff)
      .def_readonly("rr_plim", &PropositionReport::rr_plim)
      .def_readonly("or_plim", &PropositionReport::or_plim)
      .def_readonly("resid_rr_is_maff", &PropositionReport::resid_rr_is_maff)
      .def_readonly("resid_or_is_lambda",
                    &PropositionReport::resid_or_is_lambda)
      .def_readonly("resid_rr_or_link", &PropositionReport::resid_rr_or_link)
      .def_readonly("resid_adjust_roundtrip",
                    &PropositionReport::resid_adjust_roundtrip);
  m.def(
      "verify_propositions",
      [](double a, double b) {
        PopulationSpec pop;
        pop.a = a;
        pop.b = b;
        return verify_propositions(pop);
      },
      py::arg("a"), py::arg("b"));

  // ---- simulation ----
  py::enum_<Scenario>(m, "Scenario")
      .value("ExpFamilyLike", Scenario::ExpFamilyLike)
      .value("NonExpFamily", Scenario::NonExpFamily);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &ScenarioConfig::scenario)
      .def_readwrite("n", &ScenarioConfig::n)
      .def_readwrite("q", &ScenarioConfig::q)
      .def_readwrite("beta", &ScenarioConfig::beta)
      .def_readwrite("kernel", &ScenarioConfig::kernel)
      .def_readwrite("target_p", &ScenarioConfig::target_p)
      .def_readwrite("target_maff", &ScenarioConfig::target_maff)
      .def_readwrite("mu1", &ScenarioConfig::mu1)
      .def_readwrite("sigma1", &ScenarioConfig::sigma1)
      .def_readwrite("mu2", &ScenarioConfig::mu2)
      .def_readwrite("sigma2", &ScenarioConfig::sigma2)
      .def_readwrite("q1", &ScenarioConfig::q1)
      .def_readwrite("q2", &ScenarioConfig::q2)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("threads", &ScenarioConfig::threads);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("a", &GroundTruth::a)
      .def_readonly("b", &GroundTruth::b)
      .def_readonly("true_p", &GroundTruth::true_p)
      .def_readonly("true_lambda_star", &GroundTruth::true_lambda_star)
      .def_readonly("true_maff", &GroundTruth::true_maff);

  py::class_<SimulatedSurvey>(m, "SimulatedSurvey")
      .def_readonly("dataset", &SimulatedSurvey::dataset)
      .def_readonly("truth", &SimulatedSurvey::truth);

  m.def("generate_dataset", &generate_dataset, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  // ---- sensitivity analysis ----
  py::class_<SensitivityResult>(m, "SensitivityResult")
      .def_readonly("delta1", &SensitivityResult::delta1)
      .def_readonly("tau", &SensitivityResult::tau)
      .def_readonly("maff", &SensitivityResult::maff)
      .def_readonly("feasible", &SensitivityResult::feasible)
      .def_readonly("capped", &SensitivityResult::capped)
      .def_readonly("fit", &SensitivityResult::fit);

  py::class_<SensitivityGrid>(m, "SensitivityGrid")
      .def_readonly("delta1_values", &SensitivityGrid::delta1_values)
      .def_readonly("tau_values", &SensitivityGrid::tau_values)
      .def("cell", &SensitivityGrid::cell, py::arg("i_delta"),
           py::arg("i_tau"), py::return_value_policy::reference_internal);

  m.def("generalized_maff",
        [](double lambda_star, double p, double tau) {
          bool feasible = true, capped = false;
          const double v =
              generalized_maff(lambda_star, p, tau, &feasible, &capped);
          return py::make_tuple(v, feasible, capped);
        },
        py::arg("lambda_star"), py::arg("p"), py::arg("tau"));
  m.def("sensitivity_grid", &sensitivity_grid, py::arg("dataset"),
        py::arg("config"), py::arg("delta1_max") = 1.0 / 40000.0,
        py::arg("tau_max") = 1.06, py::arg("n_delta") = 5,
        py::arg("n_tau") = 5, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());

  // ---- bootstrap ----
  m.def(
      "bootstrap_maff_se",
      [](const SurveyDataset &dataset, const FitConfig &config, std::size_t B,
         std::uint64_t seed, unsigned threads) {
        py::gil_scoped_release release;
        const BootstrapResult r = bootstrap_se(
            dataset,
            [&config](const SurveyDataset &d) { return fit(d, config).maff_hat; },
            B, seed, threads);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(r.estimate, r.se, r.failures);
      },
      py::arg("dataset"), py::arg("config"), py::arg("B"), py::arg("seed") = 1,
      py::arg("threads") = 1);

  // ---- command line ----
  m.def(
      "cli_run",
      [](const std::vector<std::string> &args) { return maff::cli::run(args); },
      py::arg("args"), "Run the command-line interface; returns its exit code");
}
