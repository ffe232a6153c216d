#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "msso/harness.hpp"
#include "msso/io.hpp"
#include "msso/verify.hpp"

namespace fs = std::filesystem;
using namespace msso;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitAdapterMissing = 3;

struct Common {
  std::vector<std::string> algs;
  std::string lambda_grid;
  Index trials = 0;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out = ".";
  std::string format = "csv";
  bool include_omp = false;
  bool gnuplot = false;
  double epsilon = 0.0;
  double delta = 1e-5;
  Index max_outer = 500;
};

// "lo:hi:count" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0;
    long count = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &count, &tail) != 3 || count < 1) {
      throw Error("bad lambda grid '" + text + "' (expected lo:hi:count)");
    }
    return linspace(lo, hi, count);
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw Error("");
    } catch (...) {
      throw Error("bad lambda grid entry '" + item + "'");
    }
  }
  if (out.empty()) throw Error("empty lambda grid");
  for (double v : out) {
    if (!(v >= 0.0)) throw Error("lambda grid values must be >= 0");
  }
  return out;
}

std::vector<Algorithm> pick_algorithms(const Common& c, std::vector<Algorithm> defaults,
                                       const ConeSolverAdapter* cone) {
  std::vector<Algorithm> out;
  if (c.algs.empty()) {
    out = std::move(defaults);
    if (c.include_omp) out.insert(out.begin() + 1, Algorithm::omp);
    if (cone) out.push_back(Algorithm::socp);
    return out;
  }
  for (const auto& name : c.algs) out.push_back(parse_algorithm(name));
  for (Algorithm a : out) {
    if (a == Algorithm::socp && !cone) throw Error("adapter missing");
  }
  return out;
}

RelaxParams relax_of(const Common& c) {
  RelaxParams r;
  r.epsilon = c.epsilon;
  r.delta_outer = c.delta;
  r.delta_inner = c.delta;
  r.max_outer = c.max_outer;
  return r;
}

nlohmann::json names(const std::vector<Algorithm>& algs) {
  nlohmann::json arr = nlohmann::json::array();
  for (Algorithm a : algs) arr.push_back(algorithm_name(a));
  return arr;
}

// One curve per algorithm (and per P or K for the recovery experiments).
std::string gnuplot_script(const std::string& data, const std::string& experiment,
                           const std::vector<ResultRow>& rows) {
  const bool is_mri = experiment == "mri";
  const bool is_noisy = experiment == "noisy";
  const int xcol = is_mri ? 6 : is_noisy ? 7 : 3;
  const int group_col = is_mri ? 0 : is_noisy ? 6 : 5;
  const std::string metric = is_mri ? "l2_error" : "recovery_fraction";
  std::vector<std::pair<std::string, Index>> curves;
  for (const auto& r : rows) {
    if (r.trial || r.metric_name != metric) continue;
    const std::pair<std::string, Index> key{r.algorithm, is_mri ? 0 : is_noisy ? r.K : r.P};
    if (std::find(curves.begin(), curves.end(), key) == curves.end()) curves.push_back(key);
  }
  std::string s = "set datafile separator ','\nset key outside\n";
  s += std::string("set xlabel '") + (is_mri ? "K" : is_noisy ? "SNR (dB)" : "M") + "'\n";
  s += std::string("set ylabel '") + (is_mri ? "l2 error" : "mean recovery fraction") + "'\nplot \\\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& [alg, group] = curves[i];
    std::string cond = "strcol(2) eq '" + alg + "' && strcol(9) eq 'mean' && strcol(10) eq '" + metric + "'";
    std::string title = alg;
    if (group_col > 0) {
      cond += " && $" + std::to_string(group_col) + " == " + std::to_string(group);
      title += (is_noisy ? " K=" : " P=") + std::to_string(group);
    }
    s += "  '" + data + "' every ::1 using " + std::to_string(xcol) + ":(" + cond +
         " ? $11 : 1/0) smooth unique with linespoints title '" + title + "'";
    s += i + 1 < curves.size() ? ", \\\n" : "\n";
  }
  return s;
}

void write_outputs(const Common& c, const std::string& experiment, const ExperimentResult& res,
                   nlohmann::json config, const std::vector<std::uint64_t>& seeds) {
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const bool json_out = c.format == "json";
  const fs::path data = dir / (experiment + (json_out ? ".json" : ".csv"));
  const std::string body = json_out ? results_to_json(res.rows) : results_to_csv(res.rows);
  write_text_atomic(data, body);
  if (json_out) {
    if (!nlohmann::json::parse(read_text(data)).is_array()) throw Error(data.string() + ": not a row array");
  } else {
    (void)results_from_csv(read_text(data));
  }

  nlohmann::json manifest;
  manifest["format"] = "msso-manifest";
  manifest["version"] = 1;
  manifest["experiment"] = experiment;
  manifest["library_version"] = library_version();
  manifest["config"] = std::move(config);
  manifest["seeds"] = seeds;
  manifest["results"] = data.filename().string();
  manifest["rows"] = res.rows.size();
  manifest["solves"] = res.solves;
  manifest["trace_violations"] = res.trace_violations;
  manifest["seconds"] = res.seconds;
  write_text_atomic(dir / (experiment + "_manifest.json"), manifest.dump(2) + "\n");
  if (c.gnuplot && !json_out) {
    write_text_atomic(dir / (experiment + ".gp"), gnuplot_script(data.filename().string(), experiment, res.rows));
  }
  std::cout << "wrote " << data.string() << " (" << res.rows.size() << " rows, " << res.solves
            << " solves, " << std::setprecision(3) << res.seconds << " s)\n";
}

void add_common(CLI::App* cmd, Common& c, bool experiment) {
  cmd->fallthrough();
  cmd->add_option("--alg", c.algs, "Algorithms (mp, omp, lsmp, irls, rbrs, cbcs, socp)")->delimiter(',');
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--epsilon", c.epsilon, "Smoothing guard (<= 0: 1e-8 (1 + |d|))");
  cmd->add_option("--delta", c.delta, "Stopping threshold on objective decrease")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-outer", c.max_outer, "Outer iteration cap")->check(CLI::PositiveNumber);
  if (!experiment) return;
  cmd->add_option("--trials", c.trials, "Trials per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-grid", c.lambda_grid, "lo:hi:count or comma list");
  cmd->add_option("--format", c.format, "Results format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--include-omp", c.include_omp, "Add OMP to the default algorithm set");
  cmd->add_flag("--gnuplot", c.gnuplot, "Also write a gnuplot script");
}

int cmd_solve(const Common& c, const std::string& problem_path, std::optional<Index> k, double lambda,
              const ConeSolverAdapter* cone) {
  if (c.algs.size() != 1) throw Error("solve needs exactly one --alg");
  const Algorithm a = parse_algorithm(c.algs.front());
  if (a == Algorithm::socp && !cone) {
    std::cerr << "adapter missing: set " << kConeSolverEnv << " to 'native' or a solver executable\n";
    return kExitAdapterMissing;
  }
  if (is_greedy(a) && !k) throw Error("--k is required for " + algorithm_name(a));
  const MssoProblem p = read_problem(problem_path);
  SolverConfig cfg;
  cfg.k = k.value_or(1);
  cfg.relax = relax_of(c);
  cfg.relax.lambda = lambda;
  cfg.cone = cone;
  const SolveResult res = solve_with(a, p, cfg);
  const SparsityProfile profile = is_greedy(a) ? res.report.selected : profile_of(res.g, k.value_or(p.N()));

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::map<std::string, double> extras = {{"objective", objective(p, res.g, lambda)},
                                          {"residual_norm", residual(p, res.g).norm()},
                                          {"lambda", lambda}};
  if (k) extras["k"] = static_cast<double>(*k);
  write_text_atomic(dir / "solution.csv", solution_to_csv(res.g));
  write_text_atomic(dir / "report.json", report_to_json(res.report, extras));
  write_text_atomic(dir / "profile.txt", profile_to_text(profile));
  (void)solution_from_csv(read_text(dir / "solution.csv"));
  if (!nlohmann::json::parse(read_text(dir / "report.json")).contains("objective_trace")) {
    throw Error("report.json: missing objective_trace");
  }
  std::cout << algorithm_name(a) << ": objective " << format_double(extras["objective"]) << ", "
            << profile.size() << " rows, " << res.report.iterations << " iterations\n";
  return 0;
}

std::vector<RecoveryCell> cross_cells(const std::vector<Index>& ms, const std::vector<Index>& ps, Index n,
                                      const std::vector<Index>& ks) {
  std::vector<RecoveryCell> cells;
  for (Index p : ps)
    for (Index m : ms)
      for (Index k : ks) cells.push_back({m, n, p, k, std::nullopt, std::nullopt});
  return cells;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous sparse approximation solvers and experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; keys go under [solve], [noiseless], ... (flags override)");
  app.set_version_flag("--version", library_version());

  Common c;
  std::unique_ptr<ConeSolverAdapter> cone;

  auto* solve = app.add_subcommand("solve", "Run one solver on a problem file");
  std::string problem_path;
  std::optional<Index> k;
  double lambda = 0.0;
  solve->add_option("problem", problem_path, "Problem JSON")->required()->check(CLI::ExistingFile);
  add_common(solve, c, false);
  solve->add_option("--k", k, "Sparsity level (greedy) / profile size")->check(CLI::PositiveNumber);
  solve->add_option("--lambda", lambda, "Penalty weight")->check(CLI::NonNegativeNumber);

  std::vector<Index> ms = {10, 15, 20, 25, 30, 35, 40};
  std::vector<Index> ps = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<Index> ks;
  std::vector<double> snrs = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
  Index n = 30;
  Index m_noisy = 25;
  Index p_noisy = 3;

  auto* noiseless = app.add_subcommand("noiseless", "Noiseless recovery with a lambda oracle");
  add_common(noiseless, c, true);
  noiseless->add_option("--M", ms, "Observation lengths")->delimiter(',');
  noiseless->add_option("--P", ps, "System counts")->delimiter(',');
  noiseless->add_option("--N", n, "Rows of G")->check(CLI::PositiveNumber);
  noiseless->add_option("--K", ks, "Profile size (default 3)")->delimiter(',');

  auto* noisy = app.add_subcommand("noisy", "Noisy recovery at fixed tuned lambdas");
  std::string lambdas_path = MSSO_DATA_DIR "/noisy_lambdas.json";
  std::optional<double> fixed_lambda;
  bool tune = false;
  Index tune_obs = 3;
  bool mse_only = false;
  Index mse_trial = 34;
  add_common(noisy, c, true);
  noisy->add_option("--snr", snrs, "SNR values in dB")->delimiter(',');
  noisy->add_option("--K", ks, "Profile sizes (default 1,3,5,7,9)")->delimiter(',');
  noisy->add_option("--M", m_noisy, "Observation length")->check(CLI::PositiveNumber);
  noisy->add_option("--P", p_noisy, "System count")->check(CLI::PositiveNumber);
  noisy->add_option("--N", n, "Rows of G")->check(CLI::PositiveNumber);
  noisy->add_option("--lambdas", lambdas_path, "Tuned lambda table");
  noisy->add_option("--lambda", fixed_lambda, "One lambda for every cell")->check(CLI::NonNegativeNumber);
  noisy->add_flag("--tune", tune, "Tune lambdas on separate observations and write the table to --lambdas");
  noisy->add_option("--tune-observations", tune_obs, "Tuning observations per cell")->check(CLI::PositiveNumber);
  noisy->add_flag("--mse-study", mse_only, "MSE before/after retuning across the lambda grid on one trial");
  noisy->add_option("--mse-trial", mse_trial, "Trial index (0-based) for --mse-study");

  auto* mri = app.add_subcommand("mri", "Pulse design on the synthetic MRI scene");
  MriConfig scene_cfg;
  PulseDesignOptions design = mri_desk_options();
  add_common(mri, c, true);
  mri->add_option("--k-max", design.k_max, "Largest K")->check(CLI::PositiveNumber);
  mri->add_option("--fox-diameter", scene_cfg.fox_diameter_cm, "FOX diameter, cm");
  mri->add_option("--spacing", scene_cfg.spacing_cm, "Spatial sample spacing, cm");
  mri->add_option("--grid", scene_cfg.grid_size, "k-space grid points per axis");
  mri->add_option("--coils", scene_cfg.coils, "Number of systems P");
  mri->add_option("--gain", scene_cfg.gain, "Lumped gain");
  mri->add_flag("!--no-fourier", design.include_fourier, "Skip the Fourier baseline");

  auto* verify = app.add_subcommand("verify", "Run the invariant suite on the bundled fixtures");
  std::vector<std::string> fixtures = {MSSO_DATA_DIR "/fixtures/real_small.json",
                                       MSSO_DATA_DIR "/fixtures/complex_small.json"};
  verify->add_option("--fixture", fixtures, "Problem files");

  CLI11_PARSE(app, argc, argv);

  try {
    cone = adapter_from_environment();
    if (app.got_subcommand(solve)) return cmd_solve(c, problem_path, k, lambda, cone.get());

    if (app.got_subcommand(verify)) {
      std::vector<MssoProblem> problems;
      for (const auto& f : fixtures) problems.push_back(read_problem(f));
      bool ok = true;
      for (const auto& check : run_invariant_suite(problems, cone.get())) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name
                  << (check.detail.empty() ? "" : " (" + check.detail + ")") << "\n";
        ok = ok && check.passed;
      }
      return ok ? 0 : kExitFailure;
    }

    nlohmann::json config;
    config["seed"] = c.seed;
    config["jobs"] = c.jobs;
    config["delta"] = c.delta;
    config["epsilon"] = c.epsilon;
    config["max_outer"] = c.max_outer;

    if (app.got_subcommand(noiseless)) {
      ExperimentOptions opts;
      opts.algorithms = pick_algorithms(c, {Algorithm::mp, Algorithm::lsmp, Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs}, cone.get());
      opts.trials = c.trials > 0 ? c.trials : 50;
      opts.seed = c.seed;
      opts.jobs = c.jobs;
      opts.relax = relax_of(c);
      opts.cone = cone.get();
      if (!c.lambda_grid.empty()) opts.lambda_grid = parse_grid(c.lambda_grid);
      if (ks.empty()) ks = {3};
      const auto cells = cross_cells(ms, ps, n, ks);
      const ExperimentResult res = run_recovery_experiment(cells, opts);
      config["M"] = ms;
      config["P"] = ps;
      config["N"] = n;
      config["K"] = ks;
      config["trials"] = opts.trials;
      config["lambda_grid"] = opts.lambda_grid;
      config["algorithms"] = names(opts.algorithms);
      write_outputs(c, "noiseless", res, config, {c.seed});
      return 0;
    }

    if (app.got_subcommand(noisy)) {
      if (ks.empty()) ks = {1, 3, 5, 7, 9};
      std::vector<RecoveryCell> cells;
      for (double snr : snrs)
        for (Index kk : ks) cells.push_back({m_noisy, n, p_noisy, kk, snr, std::nullopt});
      const RelaxParams relax = relax_of(c);
      if (tune) {
        const std::vector<double> grid = c.lambda_grid.empty() ? linspace(0.0, 2.0, 41) : parse_grid(c.lambda_grid);
        std::vector<Algorithm> algs = c.algs.empty() ? std::vector<Algorithm>{Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs}
                                                     : pick_algorithms(c, {}, cone.get());
        NoisyLambdaTable table{n, m_noisy, p_noisy, tune_noisy_lambdas(cells, algs, grid, tune_obs, c.seed, c.jobs, relax)};
        write_text_atomic(lambdas_path, noisy_lambdas_to_json(table));
        std::cout << "wrote " << lambdas_path << " (" << table.entries.size() << " cells)\n";
        return 0;
      }
      const std::vector<Algorithm> default_algs = {Algorithm::mp, Algorithm::lsmp, Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs};
      if (mse_only) {
        std::vector<Algorithm> algs = c.algs.empty() ? std::vector<Algorithm>{Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs}
                                                     : pick_algorithms(c, {}, cone.get());
        if (c.algs.empty() && cone) algs.push_back(Algorithm::socp);
        const std::vector<double> grid = c.lambda_grid.empty() ? linspace(0.0, 2.0, 41) : parse_grid(c.lambda_grid);
        const RecoveryCell cell{m_noisy, n, p_noisy, ks.front(), snrs.front(), std::nullopt};
        Stopwatch clock;
        ExperimentResult res;
        res.rows = mse_study(cell, mse_trial, c.seed, algs, grid, relax, cone.get(), c.jobs);
        res.solves = static_cast<Index>(algs.size() * grid.size());
        res.seconds = clock.seconds();
        config["cell"] = {{"M", m_noisy}, {"N", n}, {"P", p_noisy}, {"K", ks.front()}, {"snr_db", snrs.front()}};
        config["trial"] = mse_trial;
        config["lambda_grid"] = grid;
        config["algorithms"] = names(algs);
        write_outputs(c, "noisy_mse", res, config, {c.seed});
        return 0;
      }
      std::optional<NoisyLambdaTable> table;
      if (!fixed_lambda) {
        table = noisy_lambdas_from_json(read_text(lambdas_path));
        if (table->N != n || table->M != m_noisy || table->P != p_noisy) {
          throw Error(lambdas_path + ": table was tuned for different N, M, P; pass --lambda or --tune");
        }
      }
      nlohmann::json used = nlohmann::json::array();
      for (auto& cell : cells) {
        cell.lambda = fixed_lambda ? *fixed_lambda : table->lookup(*cell.snr_db, cell.K);
        used.push_back({{"snr_db", *cell.snr_db}, {"K", cell.K}, {"lambda", *cell.lambda}});
      }
      ExperimentOptions opts;
      opts.algorithms = pick_algorithms(c, default_algs, cone.get());
      opts.trials = c.trials > 0 ? c.trials : 100;
      opts.seed = c.seed;
      opts.jobs = c.jobs;
      opts.relax = relax;
      opts.cone = cone.get();
      const ExperimentResult res = run_recovery_experiment(cells, opts);
      config["M"] = m_noisy;
      config["N"] = n;
      config["P"] = p_noisy;
      config["trials"] = opts.trials;
      config["lambdas"] = used;
      config["algorithms"] = names(opts.algorithms);
      write_outputs(c, "noisy", res, config, {c.seed});
      return 0;
    }

    if (app.got_subcommand(mri)) {
      const MriScene scene = build_mri_scene(scene_cfg);
      if (!c.algs.empty()) design.algorithms = pick_algorithms(c, {}, cone.get());
      if (c.include_omp && c.algs.empty()) design.algorithms.insert(design.algorithms.begin() + 1, Algorithm::omp);
      if (!c.lambda_grid.empty()) design.lambda_grid = parse_grid(c.lambda_grid);
      design.relax = relax_of(c);
      design.jobs = c.jobs;
      design.cone = cone.get();
      const ExperimentResult res = run_pulse_design(scene, design);
      config["scene"] = {{"M", scene.M()},
                         {"N", scene.N()},
                         {"P", scene_cfg.coils},
                         {"fox_diameter_cm", scene_cfg.fox_diameter_cm},
                         {"spacing_cm", scene_cfg.spacing_cm},
                         {"grid", scene_cfg.grid_size},
                         {"gain", scene_cfg.gain}};
      config["k_max"] = design.k_max;
      config["lambda_grid"] = design.lambda_grid;
      config["algorithms"] = names(design.algorithms);
      config["irls_lsqr_tol"] = design.irls.lsqr.tol;
      nlohmann::json caps;
      for (const auto& [a, cap] : design.max_outer) caps[algorithm_name(a)] = cap;
      config["max_outer_by_algorithm"] = caps;
      write_outputs(c, "mri", res, config, {});
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::string(e.what()) == "adapter missing" ? kExitAdapterMissing : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
