#include "maff/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maff/baselines.hpp"
#include "maff/errors.hpp"
#include "maff/kernels.hpp"
#include "maff/likelihood.hpp"
#include "maff/parallel.hpp"
#include "maff/resampling.hpp"
#include "maff/sensitivity.hpp"
#include "maff/simulate.hpp"
#include "maff/survey.hpp"

namespace maff::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

void write_text(const std::string &path, const std::string &content) {
  if (path.empty() || path == "-") {
    std::cout << content << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

unsigned resolve_threads(unsigned requested) {
  return requested ? requested : hardware_threads();
}

// ---- config files -----------------------------------------------------------

std::string trim_copy(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') &&
      out.back() == out.front())
    out = out.substr(1, out.size() - 2);
  return out;
}

// Short aliases that may stand in for a config key on the command line.
std::string short_alias(const std::string &key) {
  if (key == "input") return "-i";
  if (key == "output") return "-o";
  return "";
}

bool flag_present(const std::vector<std::string> &args,
                  const std::string &long_flag, const std::string &alias) {
  for (const std::string &a : args) {
    if (a == long_flag || a.rfind(long_flag + "=", 0) == 0) return true;
    if (!alias.empty() && a.rfind(alias, 0) == 0) return true;
  }
  return false;
}

// Flat key=value defaults file: '#' comments, CLI flags win over file
// values.  Expanded into ordinary long flags before CLI11 parses, since
// the keys belong to whichever subcommand was named.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
    } else {
      ++i;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim_copy(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0)
      throw maff::ParseError("config file '" + path + "' line " +
                             std::to_string(line_no) +
                             ": expected key=value");
    const std::string key = trim_copy(stripped.substr(0, eq));
    values[key] = trim_copy(stripped.substr(eq + 1));
  }
  for (const auto &[key, value] : values) {
    const std::string long_flag = "--" + key;
    if (flag_present(args, long_flag, short_alias(key))) continue;
    args.push_back(long_flag + "=" + value);
  }
  return args;
}

// ---- shared flag bundles --------------------------------------------------

struct KernelOpts {
  std::string name = "poisson";
  double dispersion = 6.0;
  std::string wbc_path;
};

void add_kernel_flags(CLI::App *cmd, KernelOpts &k, bool allow_exact) {
  std::vector<std::string> members = {"poisson", "negbin", "wbc-negbin"};
  if (allow_exact) members.insert(members.begin(), "exact");
  cmd->add_option("--kernel", k.name,
                  "Measurement-error model for observed densities")
      ->check(CLI::IsMember(members))
      ->capture_default_str();
  cmd->add_option("--dispersion", k.dispersion,
                  "Negative-binomial dispersion r (negbin/wbc-negbin)")
      ->capture_default_str();
  cmd->add_option("--wbc", k.wbc_path,
                  "CSV `wbc,prob` overriding the default white-blood-cell "
                  "count distribution (wbc-negbin only)");
}

MeasurementKernel make_kernel(const KernelOpts &k) {
  if (k.name == "exact") return MeasurementKernel::exact();
  if (k.name == "poisson") return MeasurementKernel::poisson();
  if (k.name == "negbin") return MeasurementKernel::negbin(k.dispersion);
  std::vector<WbcAtom> dist;
  if (!k.wbc_path.empty()) {
    std::ifstream in = open_input(k.wbc_path);
    dist = parse_wbc_csv(in);
  }
  return MeasurementKernel::wbc_negbin(k.dispersion, dist);
}

MeasurementKernel make_wbc(const KernelOpts &k) {
  KernelOpts copy = k;
  copy.name = "wbc-negbin";
  return make_kernel(copy);
}

struct FitOpts {
  std::string input;
  std::string output = "-";
  KernelOpts kernel;
  double beta = 1.0;
  double c0 = 1.0;
  std::size_t m1 = 4;
  std::size_t m2 = 3;
  std::size_t grid_points = 0;
  double grid_max = 0.0;
  bool no_multistart = false;
  double grad_tol = 1e-6;
  std::size_t max_iterations = 2000;
  unsigned threads = 0;
};

void add_fit_flags(CLI::App *cmd, FitOpts &o, bool with_beta,
                   bool allow_exact) {
  cmd->add_option("--input,-i", o.input, "Survey CSV (`fever,density`)")
      ->required();
  cmd->add_option("--output,-o", o.output, "Output path ('-' for stdout)")
      ->capture_default_str();
  add_kernel_flags(cmd, o.kernel, allow_exact);
  if (with_beta)
    cmd->add_option("--beta", o.beta,
                    "Assumed fever-killing survival factor in (0, 1]")
        ->capture_default_str();
  cmd->add_option("--c0", o.c0, "Penalty strength (0 = regular MLE)")
      ->capture_default_str();
  cmd->add_option("--m1", o.m1, "Spline degrees of freedom for g1")
      ->capture_default_str();
  cmd->add_option("--m2", o.m2, "Spline degrees of freedom for g2")
      ->capture_default_str();
  cmd->add_option("--grid-points", o.grid_points,
                  "Latent grid size (0 = automatic)")
      ->capture_default_str();
  cmd->add_option("--grid-max", o.grid_max,
                  "Largest latent density (0 = automatic)")
      ->capture_default_str();
  cmd->add_flag("--no-multistart", o.no_multistart,
                "Single optimizer start instead of five lambda* starts");
  cmd->add_option("--grad-tol", o.grad_tol,
                  "Projected-gradient convergence tolerance")
      ->capture_default_str();
  cmd->add_option("--max-iterations", o.max_iterations,
                  "Optimizer iteration cap")
      ->capture_default_str();
  cmd->add_option("--threads", o.threads,
                  "Worker threads (0 = machine parallelism)")
      ->capture_default_str();
}

FitConfig make_fit_config(const FitOpts &o) {
  FitConfig config;
  config.kernel = make_kernel(o.kernel);
  config.beta = o.beta;
  config.c0 = o.c0;
  config.m1 = o.m1;
  config.m2 = o.m2;
  config.grid_points = o.grid_points;
  config.grid_max = o.grid_max;
  config.grad_tol = o.grad_tol;
  config.max_iterations = o.max_iterations;
  config.multistart = !o.no_multistart;
  config.validate();
  return config;
}

ordered_json fit_config_json(const FitOpts &o, const FitConfig &config) {
  ordered_json j;
  j["kernel"] = config.kernel.name();
  if (config.kernel.family == KernelFamily::NegBin ||
      config.kernel.family == KernelFamily::WbcMixNegBin)
    j["dispersion"] = config.kernel.dispersion;
  if (config.kernel.family == KernelFamily::WbcMixNegBin)
    j["wbc"] = o.kernel.wbc_path.empty() ? "default" : o.kernel.wbc_path;
  j["beta"] = config.beta;
  j["c0"] = config.c0;
  j["m1"] = config.m1;
  j["m2"] = config.m2;
  j["grid_points"] = config.grid_points;
  j["grid_max"] = config.grid_max;
  j["grad_tol"] = config.grad_tol;
  j["max_iterations"] = config.max_iterations;
  j["multistart"] = config.multistart;
  return j;
}

std::string fit_config_line(const FitOpts &o, const FitConfig &config) {
  std::ostringstream s;
  s << "kernel=" << config.kernel.name();
  if (config.kernel.family == KernelFamily::NegBin ||
      config.kernel.family == KernelFamily::WbcMixNegBin)
    s << " dispersion=" << format_double(config.kernel.dispersion);
  if (config.kernel.family == KernelFamily::WbcMixNegBin)
    s << " wbc=" << (o.kernel.wbc_path.empty() ? "default" : o.kernel.wbc_path);
  s << " c0=" << format_double(config.c0) << " m1=" << config.m1
    << " m2=" << config.m2 << " grid_points=" << config.grid_points
    << " grid_max=" << format_double(config.grid_max)
    << " multistart=" << (config.multistart ? "on" : "off");
  return s.str();
}

void warn_rounded(std::size_t rounded) {
  if (rounded)
    std::cerr << "maff: warning: " << rounded
              << " observed densities were not multiples of 40 and were "
                 "rounded to the nearest count\n";
}

// ---- summary ---------------------------------------------------------------

struct SummaryOpts {
  std::string input;
  std::string output = "-";
};

void run_summary(const SummaryOpts &o) {
  const SurveyDataset dataset = load_survey_csv(o.input);
  const SummaryTable t = summarize(dataset);
  ordered_json j;
  j["command"] = "summary";
  j["input"] = o.input;
  j["counts"]["afebrile_positive"] = t.afebrile_positive;
  j["counts"]["afebrile_zero"] = t.afebrile_zero;
  j["counts"]["febrile_positive"] = t.febrile_positive;
  j["counts"]["febrile_zero"] = t.febrile_zero;
  j["n"] = t.n();
  j["febrile"] = t.febrile();
  j["afebrile"] = t.afebrile();
  j["fever_prevalence"] = t.fever_prevalence();
  j["positive_given_febrile"] = t.positive_given_febrile();
  j["positive_given_afebrile"] = t.positive_given_afebrile();
  write_text(o.output, j.dump(2) + "\n");
}

// ---- fit --------------------------------------------------------------------

struct FitCmdOpts {
  FitOpts fit;
  std::string dump_densities;
  std::string dump_basis;
  std::size_t bootstrap = 0;
  std::string bootstrap_dump;
  std::uint64_t seed = 1;
};

ordered_json fit_result_json(const FitResult &r) {
  ordered_json j;
  j["p_hat"] = r.p_hat;
  j["lambda_star_hat"] = r.lambda_star_hat;
  j["maff_hat"] = r.maff_hat;
  j["out_of_range"] = r.out_of_range;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["objective"] = r.objective;
  j["loglik"] = r.loglik;
  j["grad_norm"] = r.grad_norm;
  j["rounded_observations"] = r.rounded_observations;
  j["grid"]["size"] = r.grid.size();
  j["grid"]["max"] = r.grid.values.empty() ? 0.0 : r.grid.values.back();
  j["grid"]["beta"] = r.grid.beta;
  j["g1_zero_mass"] = r.g1.mass.empty() ? 0.0 : r.g1.mass.front();
  j["g1_mean"] = r.g1.mean(r.grid.values);
  j["g2_mean"] = r.g2.mean(r.grid.scaled());
  j["alpha1"] = r.alpha1;
  j["alpha2"] = r.alpha2;
  return j;
}

void dump_densities_csv(const std::string &path, const FitResult &r) {
  std::ostringstream s;
  s << "component,grid_value,mass\n";
  for (std::size_t j = 0; j < r.grid.size(); ++j)
    s << "g1," << format_double(r.grid.values[j]) << ","
      << format_double(r.g1.mass[j]) << "\n";
  const std::vector<double> scaled = r.grid.scaled();
  for (std::size_t j = 0; j < scaled.size(); ++j)
    s << "g2," << format_double(scaled[j]) << ","
      << format_double(r.g2.mass[j]) << "\n";
  write_text(path, s.str());
}

void dump_basis_csv(const std::string &path, const SurveyDataset &dataset,
                    const FitConfig &config) {
  const Grid grid = default_grid(dataset, config);
  LikelihoodModel model(dataset, grid, config.kernel, config.m1, config.m2);
  std::ostringstream s;
  s << "basis,grid_value,column,value\n";
  const Matrix &q1 = model.q1();
  for (std::size_t i = 0; i < q1.rows(); ++i)
    for (std::size_t c = 0; c < q1.cols(); ++c)
      s << "q1," << format_double(grid.values[i]) << "," << c << ","
        << format_double(q1(i, c)) << "\n";
  const Matrix &q2 = model.q2_positive();
  const std::vector<double> scaled = grid.scaled();
  for (std::size_t i = 0; i < q2.rows(); ++i)
    for (std::size_t c = 0; c < q2.cols(); ++c)
      s << "q2," << format_double(scaled[i + 1]) << "," << c << ","
        << format_double(q2(i, c)) << "\n";
  write_text(path, s.str());
}

void run_fit(const FitCmdOpts &o) {
  if (!o.bootstrap_dump.empty() && o.bootstrap == 0)
    throw ArgumentError("--bootstrap-dump requires --bootstrap");
  const SurveyDataset dataset = load_survey_csv(o.fit.input);
  const FitConfig config = make_fit_config(o.fit);
  const FitResult result = fit(dataset, config);
  warn_rounded(result.rounded_observations);

  ordered_json j;
  j["command"] = "fit";
  j["input"] = o.fit.input;
  j["config"] = fit_config_json(o.fit, config);
  j["result"] = fit_result_json(result);

  if (o.bootstrap > 0) {
    const BootstrapResult boot = bootstrap_se(
        dataset,
        [&config](const SurveyDataset &d) { return fit(d, config).maff_hat; },
        o.bootstrap, o.seed, resolve_threads(o.fit.threads));
    j["bootstrap"]["B"] = boot.replicates;
    j["bootstrap"]["seed"] = o.seed;
    j["bootstrap"]["se"] = boot.se;
    j["bootstrap"]["failures"] = boot.failures;
    j["bootstrap"]["used"] = boot.replicate_estimates.size();
    if (!o.bootstrap_dump.empty()) {
      std::ostringstream s;
      s << "replicate,estimate\n";
      for (std::size_t i = 0; i < boot.replicate_estimates.size(); ++i)
        s << i << "," << format_double(boot.replicate_estimates[i]) << "\n";
      write_text(o.bootstrap_dump, s.str());
    }
  }

  if (!o.dump_densities.empty()) dump_densities_csv(o.dump_densities, result);
  if (!o.dump_basis.empty()) dump_basis_csv(o.dump_basis, dataset, config);

  write_text(o.fit.output, j.dump(2) + "\n");
}

// ---- baselines ---------------------------------------------------------------

struct BaselinesOpts {
  std::string input;
  std::string output = "-";
  std::size_t bootstrap = 0;
  std::string bootstrap_dump;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

void run_baselines(const BaselinesOpts &o) {
  const SurveyDataset dataset = load_survey_csv(o.input);
  const SummaryTable table = summarize(dataset);

  struct Row {
    const char *name;
    double estimate;
    bool out_of_range;
    Estimator estimator;
  };
  const LogisticMaff logistic = maff_logistic(dataset);
  const PowerLogisticMaff power = maff_power_logistic(dataset);
  const BaselineEstimate rr = maff_rr_table(table);
  const BaselineEstimate orr = maff_or_table(table);
  std::vector<Row> rows = {
      {"rr_table", rr.estimate, rr.out_of_range,
       [](const SurveyDataset &d) {
         return maff_rr_table(summarize(d)).estimate;
       }},
      {"or_table", orr.estimate, orr.out_of_range,
       [](const SurveyDataset &d) {
         return maff_or_table(summarize(d)).estimate;
       }},
      {"logistic", logistic.estimate, logistic.out_of_range,
       [](const SurveyDataset &d) { return maff_logistic(d).estimate; }},
      {"power_logistic", power.estimate, power.out_of_range,
       [](const SurveyDataset &d) { return maff_power_logistic(d).estimate; }},
  };

  std::ostringstream s;
  s << "# maff baselines\n# input: " << o.input << "\n";
  std::ostringstream dump;
  if (o.bootstrap > 0) {
    s << "# bootstrap: B=" << o.bootstrap << " seed=" << o.seed << "\n";
    s << "estimator,estimate,out_of_range,bootstrap_se,bootstrap_failures\n";
    dump << "estimator,replicate,estimate\n";
    for (const Row &row : rows) {
      BootstrapResult boot;
      try {
        boot = bootstrap_se(dataset, row.estimator, o.bootstrap, o.seed,
                            resolve_threads(o.threads));
      } catch (BootstrapUnreliableError &e) {
        throw BootstrapUnreliableError(
            std::string(row.name) + ": " + e.what(), std::move(e.partial));
      }
      s << row.name << "," << format_double(row.estimate) << ","
        << (row.out_of_range ? 1 : 0) << "," << format_double(boot.se) << ","
        << boot.failures << "\n";
      for (std::size_t i = 0; i < boot.replicate_estimates.size(); ++i)
        dump << row.name << "," << i << ","
             << format_double(boot.replicate_estimates[i]) << "\n";
    }
  } else {
    s << "estimator,estimate,out_of_range\n";
    for (const Row &row : rows)
      s << row.name << "," << format_double(row.estimate) << ","
        << (row.out_of_range ? 1 : 0) << "\n";
  }
  if (!o.bootstrap_dump.empty()) {
    if (o.bootstrap == 0)
      throw ArgumentError("--bootstrap-dump requires --bootstrap");
    write_text(o.bootstrap_dump, dump.str());
  }
  write_text(o.output, s.str());
}

// ---- sweep-beta ---------------------------------------------------------------

struct SweepOpts {
  FitOpts fit;  // beta ignored; kernel name ignored (all three presets run)
  double step = 0.05;
  double max_kill = 0.95;
};

void run_sweep_beta(const SweepOpts &o) {
  const SurveyDataset dataset = load_survey_csv(o.fit.input);
  if (o.step <= 0 || o.step > 1)
    throw ValidationError("sweep step must be in (0, 1]");
  if (o.max_kill < 0 || o.max_kill >= 1)
    throw ValidationError("largest killing fraction must be in [0, 1)");

  const FitConfig base = make_fit_config(o.fit);
  std::vector<MeasurementKernel> kernels = {
      MeasurementKernel::poisson(),
      MeasurementKernel::negbin(o.fit.kernel.dispersion),
      make_wbc(o.fit.kernel)};

  std::vector<double> kills;
  const std::size_t steps =
      static_cast<std::size_t>(std::floor(o.max_kill / o.step + 1e-9)) + 1;
  for (std::size_t i = 0; i < steps; ++i)
    kills.push_back(std::round(static_cast<double>(i) * o.step * 1e9) / 1e9);

  const std::size_t cells = kills.size() * kernels.size();
  std::vector<double> maffs(cells,
                            std::numeric_limits<double>::quiet_NaN());
  parallel_for(cells, resolve_threads(o.fit.threads), [&](std::size_t idx) {
    FitConfig config = base;
    config.beta = 1.0 - kills[idx / kernels.size()];
    config.kernel = kernels[idx % kernels.size()];
    try {
      maffs[idx] = fit(dataset, config).maff_hat;
    } catch (const EstimationError &) {
      // leave the cell as nan: one failed fit must not sink the sweep
    }
  });

  std::ostringstream s;
  s << "# maff sweep-beta\n# input: " << o.fit.input << "\n# "
    << fit_config_line(o.fit, base) << "\n"
    << "# kernels: poisson, negbin(r=" << format_double(o.fit.kernel.dispersion)
    << "), wbc-negbin(r=" << format_double(o.fit.kernel.dispersion) << ")\n"
    << "# note: rows assume the given fraction of febrile parasite loads was "
       "killed; fractions above 0.5 are usually implausible, so treat 0.5 as "
       "a practical upper bound when reading the table.\n";
  s << "one_minus_beta,poisson,negbin,wbc_negbin\n";
  for (std::size_t i = 0; i < kills.size(); ++i) {
    s << format_double(kills[i]);
    for (std::size_t k = 0; k < kernels.size(); ++k)
      s << "," << format_double(maffs[i * kernels.size() + k]);
    s << "\n";
  }
  write_text(o.fit.output, s.str());
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOpts {
  std::string output;
  int scenario = 1;
  std::size_t n = 1000;
  double q = 0.2;
  double beta = 1.0;
  KernelOpts kernel;
  double target_p = 0.1;
  double target_maff = 0.5;
  double mu1 = 0.0, sigma1 = 0.0, mu2 = 0.0, sigma2 = 0.0;  // 0 = default
  double q1 = 0.125, q2 = 0.7;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

std::string truth_path(const std::string &csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".truth.json";
  return csv_path + ".truth.json";
}

void run_simulate(const SimulateOpts &o) {
  if (o.output.empty() || o.output == "-")
    throw ArgumentError("simulate writes a dataset and a truth sidecar; "
                        "--output must be a file path");
  ScenarioConfig config;
  config.scenario =
      o.scenario == 1 ? Scenario::ExpFamilyLike : Scenario::NonExpFamily;
  config.n = o.n;
  config.q = o.q;
  config.beta = o.beta;
  config.kernel = make_kernel(o.kernel);
  config.target_p = o.target_p;
  config.target_maff = o.target_maff;
  if (o.mu1 != 0.0) config.mu1 = o.mu1;
  if (o.sigma1 != 0.0) config.sigma1 = o.sigma1;
  if (o.mu2 != 0.0) config.mu2 = o.mu2;
  if (o.sigma2 != 0.0) config.sigma2 = o.sigma2;
  config.q1 = o.q1;
  config.q2 = o.q2;
  config.seed = o.seed;
  config.threads = resolve_threads(o.threads);
  config.validate();

  const SimulatedSurvey sim = generate_dataset(config);

  std::ostringstream line;
  line << "scenario=" << o.scenario << " n=" << config.n
       << " q=" << format_double(config.q)
       << " beta=" << format_double(config.beta)
       << " kernel=" << config.kernel.name();
  if (config.kernel.family == KernelFamily::NegBin ||
      config.kernel.family == KernelFamily::WbcMixNegBin)
    line << " dispersion=" << format_double(config.kernel.dispersion);
  line << " target_p=" << format_double(config.target_p)
       << " target_maff=" << format_double(config.target_maff)
       << " mu1=" << format_double(config.mu1)
       << " sigma1=" << format_double(config.sigma1)
       << " mu2=" << format_double(config.mu2)
       << " sigma2=" << format_double(config.sigma2);
  if (config.scenario == Scenario::NonExpFamily)
    line << " q1=" << format_double(config.q1)
         << " q2=" << format_double(config.q2);
  line << " seed=" << config.seed;

  std::ostringstream body;
  body << "# maff simulate\n# " << line.str() << "\n";
  serialize_survey_csv(sim.dataset, body);
  write_text(o.output, body.str());

  std::size_t malaria_fevers = 0, other_fevers = 0, killed = 0;
  for (std::size_t i = 0; i < config.n; ++i) {
    malaria_fevers += sim.truth.y_mi[i] != 0;
    other_fevers += sim.truth.y_nmi[i] != 0;
    killed += sim.truth.y_nmi[i] != 0 && sim.truth.y_mi[i] == 0;
  }
  ordered_json truth;
  truth["command"] = "simulate";
  truth["output"] = o.output;
  truth["config"]["scenario"] = o.scenario;
  truth["config"]["n"] = config.n;
  truth["config"]["q"] = config.q;
  truth["config"]["beta"] = config.beta;
  truth["config"]["kernel"] = config.kernel.name();
  if (config.kernel.family == KernelFamily::NegBin ||
      config.kernel.family == KernelFamily::WbcMixNegBin)
    truth["config"]["dispersion"] = config.kernel.dispersion;
  truth["config"]["target_p"] = config.target_p;
  truth["config"]["target_maff"] = config.target_maff;
  truth["config"]["mu1"] = config.mu1;
  truth["config"]["sigma1"] = config.sigma1;
  truth["config"]["mu2"] = config.mu2;
  truth["config"]["sigma2"] = config.sigma2;
  if (config.scenario == Scenario::NonExpFamily) {
    truth["config"]["q1"] = config.q1;
    truth["config"]["q2"] = config.q2;
  }
  truth["config"]["seed"] = config.seed;
  truth["truth"]["a"] = sim.truth.a;
  truth["truth"]["b"] = sim.truth.b;
  truth["truth"]["true_p"] = sim.truth.true_p;
  truth["truth"]["true_lambda_star"] = sim.truth.true_lambda_star;
  truth["truth"]["true_maff"] = sim.truth.true_maff;
  truth["realized"]["n"] = config.n;
  truth["realized"]["febrile"] = sim.dataset.febrile_count();
  truth["realized"]["malaria_fevers"] = malaria_fevers;
  truth["realized"]["other_fevers"] = other_fevers;
  truth["realized"]["killed"] = killed;
  write_text(truth_path(o.output), truth.dump(2) + "\n");
}

// ---- sensitivity ---------------------------------------------------------------

struct SensitivityOpts {
  FitOpts fit;
  double delta1_max = 1.0 / 40000.0;
  double tau_max = 1.06;
  std::size_t steps = 5;
  std::size_t bootstrap = 0;
  std::string bootstrap_dump;
  std::uint64_t seed = 1;
};

void run_sensitivity(const SensitivityOpts &o) {
  const SurveyDataset dataset = load_survey_csv(o.fit.input);
  const FitConfig config = make_fit_config(o.fit);
  const unsigned threads = resolve_threads(o.fit.threads);
  const SensitivityGrid grid = sensitivity_grid(
      dataset, config, o.delta1_max, o.tau_max, o.steps, o.steps, threads);
  if (!grid.cells.empty())
    warn_rounded(grid.cells.front().fit.rounded_observations);

  const std::size_t n_delta = grid.delta1_values.size();
  const std::size_t n_tau = grid.tau_values.size();
  const std::size_t n_cells = n_delta * n_tau;

  // Optional bootstrap: each replicate refits every delta1 row once and
  // reuses it across tau columns, mirroring the point-estimate grid.
  std::vector<double> cell_se;
  std::size_t boot_failures = 0;
  std::ostringstream dump;
  if (o.bootstrap > 0) {
    const SurveyDataset base = canonical_order(dataset);
    std::vector<std::vector<double>> rep_cells(o.bootstrap);
    parallel_for(o.bootstrap, threads, [&](std::size_t rep) {
      Rng rng(o.seed, rep);
      const SurveyDataset sample = resample_records(base, rng);
      try {
        std::vector<double> cells;
        cells.reserve(n_cells);
        for (double d1 : grid.delta1_values) {
          const FitResult fr = fit_tilted(sample, config, d1);
          for (double tau : grid.tau_values)
            cells.push_back(
                generalized_maff(fr.lambda_star_hat, fr.p_hat, tau));
        }
        rep_cells[rep] = std::move(cells);
      } catch (const Error &) {
        // failed replicate: dropped from the SE, counted below
      }
    });
    dump << "delta1,tau,replicate,estimate\n";
    cell_se.assign(n_cells, 0.0);
    std::vector<std::vector<double>> per_cell(n_cells);
    std::size_t rep_index = 0;
    for (std::size_t rep = 0; rep < o.bootstrap; ++rep) {
      if (rep_cells[rep].empty()) {
        ++boot_failures;
        continue;
      }
      for (std::size_t c = 0; c < n_cells; ++c) {
        per_cell[c].push_back(rep_cells[rep][c]);
        dump << format_double(grid.delta1_values[c / n_tau]) << ","
             << format_double(grid.tau_values[c % n_tau]) << "," << rep_index
             << "," << format_double(rep_cells[rep][c]) << "\n";
      }
      ++rep_index;
    }
    if (boot_failures * 5 > o.bootstrap) {
      BootstrapResult partial;
      partial.replicates = o.bootstrap;
      partial.failures = boot_failures;
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "sensitivity bootstrap: %zu of %zu replicates failed "
                    "(>20%%); standard errors are unreliable",
                    boot_failures, o.bootstrap);
      throw BootstrapUnreliableError(msg, std::move(partial));
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
      const std::vector<double> &v = per_cell[c];
      if (v.size() < 2) continue;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      cell_se[c] = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }

  std::ostringstream s;
  s << "# maff sensitivity\n# input: " << o.fit.input << "\n# "
    << fit_config_line(o.fit, config)
    << " beta=" << format_double(config.beta)
    << " delta1_max=" << format_double(o.delta1_max)
    << " tau_max=" << format_double(o.tau_max) << " steps=" << o.steps;
  if (o.bootstrap > 0)
    s << " bootstrap=" << o.bootstrap << " seed=" << o.seed;
  s << "\n";
  // delta1_scaled = 40000 x delta1: the 0-1 contour-plot axis that pairs
  // with the default delta1_max of 1/40000.
  s << "delta1,delta1_scaled,tau,maff,feasible,capped";
  if (o.bootstrap > 0) s << ",bootstrap_se";
  s << "\n";
  for (std::size_t i = 0; i < n_delta; ++i)
    for (std::size_t j = 0; j < n_tau; ++j) {
      const SensitivityResult &cell = grid.cell(i, j);
      s << format_double(cell.delta1) << ","
        << format_double(cell.delta1 * 40000.0) << ","
        << format_double(cell.tau) << ","
        << format_double(cell.maff) << "," << (cell.feasible ? 1 : 0) << ","
        << (cell.capped ? 1 : 0);
      if (o.bootstrap > 0) s << "," << format_double(cell_se[i * n_tau + j]);
      s << "\n";
    }
  if (!o.bootstrap_dump.empty()) {
    if (o.bootstrap == 0)
      throw ArgumentError("--bootstrap-dump requires --bootstrap");
    write_text(o.bootstrap_dump, dump.str());
  }
  write_text(o.fit.output, s.str());
}

// ---- dispersion ---------------------------------------------------------------

struct DispersionOpts {
  std::string input;
  std::string output = "-";
};

void run_dispersion(const DispersionOpts &o) {
  std::ifstream in = open_input(o.input);
  const std::vector<FalseNegativeRecord> records =
      parse_false_negative_csv(in);
  const DispersionFit fitted = estimate_dispersion(records);
  ordered_json j;
  j["command"] = "dispersion";
  j["input"] = o.input;
  j["records"] = records.size();
  j["r_hat"] = fitted.r_hat;
  j["loglik"] = fitted.loglik;
  write_text(o.output, j.dump(2) + "\n");
}

int run_parsed(int argc, const char *const *argv) {
  std::string config_sink;  // --config is expanded before parsing
  CLI::App app{
      "Estimate the malaria-attributable fraction of fevers from a "
      "two-group parasite-density survey."};
  app.require_subcommand(1);

  SummaryOpts summary_opts;
  auto *summary_cmd = app.add_subcommand(
      "summary", "Fever-by-parasitaemia 2x2 table and group fractions");
  summary_cmd->add_option("--input,-i", summary_opts.input,
                          "Survey CSV (`fever,density`)")
      ->required();
  summary_cmd->add_option("--output,-o", summary_opts.output,
                          "Output path ('-' for stdout)")
      ->capture_default_str();
  summary_cmd->add_option("--config", config_sink,
                          "Read option defaults from a key=value file");
  summary_cmd->callback([&] { run_summary(summary_opts); });

  FitCmdOpts fit_opts;
  auto *fit_cmd = app.add_subcommand(
      "fit", "Penalized mixture-deconvolution fit of the attributable "
             "fraction");
  add_fit_flags(fit_cmd, fit_opts.fit, /*with_beta=*/true,
                /*allow_exact=*/true);
  fit_cmd->add_option("--dump-densities", fit_opts.dump_densities,
                      "Write fitted g1/g2 masses as CSV (component,"
                      "grid_value,mass)");
  fit_cmd->add_option("--dump-basis", fit_opts.dump_basis,
                      "Write the spline basis matrices as CSV");
  fit_cmd->add_option("--bootstrap", fit_opts.bootstrap,
                      "Bootstrap replicates for the MAFF standard error");
  fit_cmd->add_option("--bootstrap-dump", fit_opts.bootstrap_dump,
                      "Write replicate estimates as CSV");
  fit_cmd->add_option("--seed", fit_opts.seed, "Bootstrap seed")
      ->capture_default_str();
  fit_cmd->add_option("--config", config_sink,
                      "Read option defaults from a key=value file");
  fit_cmd->callback([&] { run_fit(fit_opts); });

  BaselinesOpts baselines_opts;
  auto *baselines_cmd = app.add_subcommand(
      "baselines",
      "Classical 2x2-table and logistic attributable-fraction estimators");
  baselines_cmd->add_option("--input,-i", baselines_opts.input,
                            "Survey CSV (`fever,density`)")
      ->required();
  baselines_cmd->add_option("--output,-o", baselines_opts.output,
                            "Output path ('-' for stdout)")
      ->capture_default_str();
  baselines_cmd->add_option("--bootstrap", baselines_opts.bootstrap,
                            "Bootstrap replicates for standard errors");
  baselines_cmd->add_option("--bootstrap-dump", baselines_opts.bootstrap_dump,
                            "Write replicate estimates as CSV");
  baselines_cmd->add_option("--seed", baselines_opts.seed, "Bootstrap seed")
      ->capture_default_str();
  baselines_cmd->add_option("--threads", baselines_opts.threads,
                            "Worker threads (0 = machine parallelism)")
      ->capture_default_str();
  baselines_cmd->add_option("--config", config_sink,
                            "Read option defaults from a key=value file");
  baselines_cmd->callback([&] { run_baselines(baselines_opts); });

  SweepOpts sweep_opts;
  auto *sweep_cmd = app.add_subcommand(
      "sweep-beta",
      "Refit under a range of assumed fever-killing fractions for the "
      "poisson, negbin, and wbc-negbin kernels");
  add_fit_flags(sweep_cmd, sweep_opts.fit, /*with_beta=*/false,
                /*allow_exact=*/false);
  sweep_cmd->add_option("--step", sweep_opts.step,
                        "Killing-fraction increment")
      ->capture_default_str();
  sweep_cmd->add_option("--max-kill", sweep_opts.max_kill,
                        "Largest killing fraction")
      ->capture_default_str();
  sweep_cmd->add_option("--config", config_sink,
                        "Read option defaults from a key=value file");
  sweep_cmd->callback([&] { run_sweep_beta(sweep_opts); });

  SimulateOpts sim_opts;
  auto *sim_cmd = app.add_subcommand(
      "simulate", "Generate a synthetic survey plus a truth.json sidecar");
  sim_cmd->add_option("--output,-o", sim_opts.output, "Survey CSV path")
      ->required();
  sim_cmd->add_option("--scenario", sim_opts.scenario,
                      "1 = zero-inflated truncated normal (exponential-"
                      "family-like), 2 = normal/uniform mixtures")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  sim_cmd->add_option("--n", sim_opts.n, "Number of children")
      ->capture_default_str();
  sim_cmd->add_option("--q", sim_opts.q, "Zero mass of g1 (scenario 1)")
      ->capture_default_str();
  sim_cmd->add_option("--beta", sim_opts.beta,
                      "True fever-killing survival factor")
      ->capture_default_str();
  add_kernel_flags(sim_cmd, sim_opts.kernel, /*allow_exact=*/true);
  sim_cmd->add_option("--p", sim_opts.target_p, "Target fever prevalence")
      ->capture_default_str();
  sim_cmd->add_option("--maff", sim_opts.target_maff,
                      "Target attributable fraction")
      ->capture_default_str();
  sim_cmd->add_option("--mu1", sim_opts.mu1,
                      "g1 positive-part location (0 = default)");
  sim_cmd->add_option("--sigma1", sim_opts.sigma1,
                      "g1 positive-part scale (0 = default)");
  sim_cmd->add_option("--mu2", sim_opts.mu2, "g2 location (0 = default)");
  sim_cmd->add_option("--sigma2", sim_opts.sigma2, "g2 scale (0 = default)");
  sim_cmd->add_option("--q1", sim_opts.q1, "Zero mass of g1 (scenario 2)")
      ->capture_default_str();
  sim_cmd->add_option("--q2", sim_opts.q2,
                      "Truncated-normal share (scenario 2)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_opts.seed, "Generator seed")
      ->capture_default_str();
  sim_cmd->add_option("--threads", sim_opts.threads,
                      "Worker threads (0 = machine parallelism)")
      ->capture_default_str();
  sim_cmd->add_option("--config", config_sink,
                      "Read option defaults from a key=value file");
  sim_cmd->callback([&] { run_simulate(sim_opts); });

  SensitivityOpts sens_opts;
  auto *sens_cmd = app.add_subcommand(
      "sensitivity",
      "MAFF over a grid of assumption departures (density tilt delta1, "
      "fever-dependence tau)");
  add_fit_flags(sens_cmd, sens_opts.fit, /*with_beta=*/true,
                /*allow_exact=*/true);
  sens_cmd->add_option("--delta1-max", sens_opts.delta1_max,
                       "Largest exponential tilt of the febrile g1 copy")
      ->capture_default_str();
  sens_cmd->add_option("--tau-max", sens_opts.tau_max,
                       "Largest fever-dependence ratio")
      ->capture_default_str();
  sens_cmd->add_option("--steps", sens_opts.steps,
                       "Grid points per axis")
      ->capture_default_str();
  sens_cmd->add_option("--bootstrap", sens_opts.bootstrap,
                       "Bootstrap replicates for per-cell standard errors");
  sens_cmd->add_option("--bootstrap-dump", sens_opts.bootstrap_dump,
                       "Write replicate estimates as CSV");
  sens_cmd->add_option("--seed", sens_opts.seed, "Bootstrap seed")
      ->capture_default_str();
  sens_cmd->add_option("--config", config_sink,
                       "Read option defaults from a key=value file");
  sens_cmd->callback([&] { run_sensitivity(sens_opts); });

  DispersionOpts disp_opts;
  auto *disp_cmd = app.add_subcommand(
      "dispersion",
      "Negative-binomial dispersion from slide false-negative counts");
  disp_cmd->add_option("--input,-i", disp_opts.input,
                       "CSV `mean_density,negatives,slides`")
      ->required();
  disp_cmd->add_option("--output,-o", disp_opts.output,
                       "Output path ('-' for stdout)")
      ->capture_default_str();
  disp_cmd->add_option("--config", config_sink,
                       "Read option defaults from a key=value file");
  disp_cmd->callback([&] { run_dispersion(disp_opts); });

  try {
    app.parse(argc, argv);
    return kOk;
  } catch (const CLI::FileError &e) {
    std::cerr << "maff: io error: " << e.what() << "\n";
    return kIo;
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const maff::ParseError &e) {
    std::cerr << "maff: input error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError &e) {
    std::cerr << "maff: io error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError &e) {
    std::cerr << "maff: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ArgumentError &e) {
    std::cerr << "maff: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const BootstrapUnreliableError &e) {
    std::cerr << "maff: numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const EstimationError &e) {
    std::cerr << "maff: numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const maff::Error &e) {
    std::cerr << "maff: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "maff: unexpected error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int run(int argc, const char *const *argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<std::size_t>(argc) - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string> &args) {
  std::vector<std::string> storage;
  try {
    storage = expand_config(args);
  } catch (const maff::ParseError &e) {
    std::cerr << "maff: input error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError &e) {
    std::cerr << "maff: io error: " << e.what() << "\n";
    return kIo;
  }
  storage.insert(storage.begin(), "maff");
  std::vector<const char *> argv;
  argv.reserve(storage.size());
  for (const std::string &a : storage) argv.push_back(a.c_str());
  return run_parsed(static_cast<int>(argv.size()), argv.data());
}

}  // namespace maff::cli
