#include "msso/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>

#include <omp.h>

namespace msso {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs body(i) for i in [0, n) on `jobs` threads; the first exception is rethrown.
template <class Body>
void parallel_tasks(Index n, int jobs, Body body) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (Index i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(msso_task_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct TrialMetrics {
  double fraction = 0.0;
  std::optional<double> lambda;
  double mse = 0.0;
  double mse_retuned = 0.0;
  Index solves = 0;
  Index violations = 0;
};

SolverConfig base_config(const ExperimentOptions& opts, Index k) {
  SolverConfig cfg;
  cfg.k = k;
  cfg.relax = opts.relax;
  cfg.cone = opts.cone;
  return cfg;
}

SparsityProfile estimated_profile(Algorithm a, const SolveResult& res, Index k) {
  return is_greedy(a) ? res.report.selected : profile_of(res.g, k);
}

bool trace_ok(Algorithm a, const SolveReport& report) {
  return is_greedy(a) || trace_non_increasing(report, 1e-10);
}

ResultRow make_row(const char* experiment, Algorithm a, const RecoveryCell& cell) {
  ResultRow row;
  row.experiment = experiment;
  row.algorithm = algorithm_name(a);
  row.M = cell.M;
  row.N = cell.N;
  row.P = cell.P;
  row.K = cell.K;
  row.snr_db = cell.snr_db;
  return row;
}

TrialSpec spec_of(const RecoveryCell& cell, std::uint64_t seed) {
  TrialSpec spec;
  spec.N = cell.N;
  spec.M = cell.M;
  spec.P = cell.P;
  spec.K = cell.K;
  spec.snr_db = cell.snr_db;
  spec.seed = seed;
  return spec;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) { return mix(x + kGolden); }

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t v = splitmix64(key_ + counter_ * kGolden);
  ++counter_;
  return v;
}

double CounterRng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) throw Error("below(0)");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t cell,
                          std::uint64_t trial) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ cell);
  return splitmix64(h ^ trial);
}

void TrialSpec::validate() const {
  if (N < 1 || M < 1 || P < 1 || K < 1) throw Error("trial sizes must be >= 1");
  if (K > N) throw Error("K must not exceed N");
}

PlantedTrial gen_noiseless_trial(const TrialSpec& spec) {
  spec.validate();
  CounterRng rng(spec.seed);
  std::vector<DenseMatrix> systems;
  systems.reserve(static_cast<std::size_t>(spec.P));
  for (Index p = 0; p < spec.P; ++p) {
    DenseMatrix f(spec.M, spec.N);
    for (Index n = 0; n < spec.N; ++n) {
      for (Index m = 0; m < spec.M; ++m) f(m, n) = rng.normal();
      f.col(n) /= f.col(n).norm();
    }
    systems.push_back(std::move(f));
  }

  std::vector<Index> pool(static_cast<std::size_t>(spec.N));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < spec.K; ++i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.N - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i + j)]);
  }
  std::vector<Index> rows(pool.begin(), pool.begin() + spec.K);

  SolutionG g = SolutionG::Zero(spec.N, spec.P);
  for (const Index n : rows) {
    for (Index p = 0; p < spec.P; ++p) g(n, p) = rng.normal();
  }
  DenseVector d = DenseVector::Zero(spec.M);
  for (Index p = 0; p < spec.P; ++p) d += systems[static_cast<std::size_t>(p)] * g.col(p);
  return {MssoProblem(std::move(d), std::move(systems)), SparsityProfile(rows), std::move(g)};
}

double noise_variance(const DenseVector& d_true, double snr_db) {
  if (d_true.size() == 0) throw Error("empty observation");
  return d_true.squaredNorm() / static_cast<double>(d_true.size()) *
         std::pow(10.0, -snr_db / 10.0);
}

DenseVector add_noise(const DenseVector& d_true, double snr_db, std::uint64_t seed) {
  if (d_true.size() == 0 || d_true.squaredNorm() == 0.0) throw Error("add_noise: zero observation");
  const double var = noise_variance(d_true, snr_db);
  DenseVector out = d_true;
  if (var == 0.0) return out;
  CounterRng rng(seed);
  if (is_real(d_true)) {
    const double sigma = std::sqrt(var);
    for (Index m = 0; m < out.size(); ++m) out(m) += sigma * rng.normal();
  } else {
    const double sigma = std::sqrt(var / 2.0);
    for (Index m = 0; m < out.size(); ++m) {
      const double re = rng.normal();
      const double im = rng.normal();
      out(m) += Complex(sigma * re, sigma * im);
    }
  }
  return out;
}

double mse(const SolutionG& est, const SolutionG& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) throw Error("mse: shape mismatch");
  return (est - truth).squaredNorm() / static_cast<double>(truth.size());
}

std::vector<double> linspace(double lo, double hi, Index count) {
  if (count < 1) throw Error("linspace needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

OracleOutcome lambda_oracle_sweep(const MssoProblem& p, Algorithm a,
                                  const std::vector<double>& grid,
                                  const SparsityProfile& truth, const SolverConfig& base) {
  const auto k = static_cast<Index>(truth.size());
  SolverConfig cfg = base;
  cfg.k = k;
  OracleOutcome out;
  if (is_greedy(a)) {
    const SolveResult res = solve_with(a, p, cfg);
    out.best_fraction = recovery_fraction(truth, res.report.selected);
    out.solves = 1;
    return out;
  }
  if (grid.empty()) throw Error("lambda grid is empty");
  bool first = true;
  for (const double lambda : grid) {
    cfg.relax.lambda = lambda;
    const SolveResult res = solve_with(a, p, cfg);
    ++out.solves;
    if (!trace_ok(a, res.report)) ++out.trace_violations;
    const double fraction = recovery_fraction(truth, profile_of(res.g, k));
    if (first || fraction > out.best_fraction) {
      out.best_fraction = fraction;
      out.best_lambda = lambda;
      first = false;
    }
    if (out.best_fraction >= 1.0) break;
  }
  return out;
}

std::uint64_t cell_trial_seed(std::uint64_t master, std::uint64_t stream, const RecoveryCell& cell,
                              Index trial) {
  std::uint64_t key = splitmix64(static_cast<std::uint64_t>(cell.M));
  key = splitmix64(key ^ static_cast<std::uint64_t>(cell.N));
  key = splitmix64(key ^ static_cast<std::uint64_t>(cell.P));
  key = splitmix64(key ^ static_cast<std::uint64_t>(cell.K));
  key = splitmix64(key ^ (cell.snr_db ? std::bit_cast<std::uint64_t>(*cell.snr_db) : 0x5A5AULL));
  return derive_seed(master, stream, key, static_cast<std::uint64_t>(trial));
}

PlantedTrial noisy_trial(const RecoveryCell& cell, std::uint64_t seed) {
  if (!cell.snr_db) throw Error("noisy cell needs snr_db");
  PlantedTrial t = gen_noiseless_trial(spec_of(cell, seed));
  DenseVector noisy = add_noise(t.problem.observation(), *cell.snr_db, derive_seed(seed, 7, 0, 0));
  t.problem = MssoProblem(std::move(noisy), t.problem.systems());
  return t;
}

ExperimentResult run_recovery_experiment(const std::vector<RecoveryCell>& cells,
                                         const ExperimentOptions& opts) {
  Stopwatch clock;
  if (opts.trials < 1) throw Error("trials must be >= 1");
  if (opts.algorithms.empty()) throw Error("no algorithms selected");
  for (const auto& cell : cells) {
    spec_of(cell, 0).validate();
    if (cell.snr_db && !cell.lambda) throw Error("noisy cell needs a fixed lambda");
  }
  const Index n_alg = static_cast<Index>(opts.algorithms.size());
  const Index n_tasks = static_cast<Index>(cells.size()) * opts.trials;
  std::vector<TrialMetrics> slots(static_cast<std::size_t>(n_tasks * n_alg));

  parallel_tasks(n_tasks, opts.jobs, [&](Index task) {
    const RecoveryCell& cell = cells[static_cast<std::size_t>(task / opts.trials)];
    const Index trial = task % opts.trials;
    const bool noisy = cell.snr_db.has_value();
    const std::uint64_t seed =
        cell_trial_seed(opts.seed, noisy ? kStreamNoisy : kStreamNoiseless, cell, trial);
    const PlantedTrial t = noisy ? noisy_trial(cell, seed) : gen_noiseless_trial(spec_of(cell, seed));
    for (Index ai = 0; ai < n_alg; ++ai) {
      const Algorithm a = opts.algorithms[static_cast<std::size_t>(ai)];
      TrialMetrics& m = slots[static_cast<std::size_t>(task * n_alg + ai)];
      SolverConfig cfg = base_config(opts, cell.K);
      if (!noisy) {
        const OracleOutcome o = lambda_oracle_sweep(t.problem, a, opts.lambda_grid, t.truth, cfg);
        m.fraction = o.best_fraction;
        m.lambda = o.best_lambda;
        m.solves = o.solves;
        m.violations = o.trace_violations;
        continue;
      }
      cfg.relax.lambda = *cell.lambda;
      const SolveResult res = solve_with(a, t.problem, cfg);
      m.solves = 1;
      m.violations = trace_ok(a, res.report) ? 0 : 1;
      m.fraction = recovery_fraction(t.truth, estimated_profile(a, res, cell.K));
      if (!is_greedy(a)) m.lambda = *cell.lambda;
      m.mse = mse(res.g, t.g);
      m.mse_retuned = mse(retune(t.problem, profile_of(res.g, cell.K)), t.g);
    }
  });

  ExperimentResult out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const RecoveryCell& cell = cells[c];
    const bool noisy = cell.snr_db.has_value();
    const char* experiment = noisy ? "noisy" : "noiseless";
    for (Index ai = 0; ai < n_alg; ++ai) {
      const Algorithm a = opts.algorithms[static_cast<std::size_t>(ai)];
      double sum_fraction = 0.0;
      double sum_mse = 0.0;
      double sum_retuned = 0.0;
      for (Index trial = 0; trial < opts.trials; ++trial) {
        const Index task = static_cast<Index>(c) * opts.trials + trial;
        const TrialMetrics& m = slots[static_cast<std::size_t>(task * n_alg + ai)];
        out.solves += m.solves;
        out.trace_violations += m.violations;
        sum_fraction += m.fraction;
        sum_mse += m.mse;
        sum_retuned += m.mse_retuned;
        ResultRow row = make_row(experiment, a, cell);
        row.lambda = m.lambda;
        row.trial = trial;
        row.metric_name = "recovery_fraction";
        row.metric_value = m.fraction;
        out.rows.push_back(row);
        if (noisy) {
          row.metric_name = "mse";
          row.metric_value = m.mse;
          out.rows.push_back(row);
          row.metric_name = "mse_retuned";
          row.metric_value = m.mse_retuned;
          out.rows.push_back(row);
        }
      }
      const auto count = static_cast<double>(opts.trials);
      ResultRow mean = make_row(experiment, a, cell);
      if (noisy && !is_greedy(a)) mean.lambda = cell.lambda;
      mean.metric_name = "recovery_fraction";
      mean.metric_value = sum_fraction / count;
      out.rows.push_back(mean);
      if (noisy) {
        mean.metric_name = "mse";
        mean.metric_value = sum_mse / count;
        out.rows.push_back(mean);
        mean.metric_name = "mse_retuned";
        mean.metric_value = sum_retuned / count;
        out.rows.push_back(mean);
      }
    }
  }
  out.seconds = clock.seconds();
  return out;
}

std::optional<double> find_mean(const std::vector<ResultRow>& rows, const std::string& algorithm,
                                const std::string& metric, Index M, Index P, Index K,
                                std::optional<double> snr_db) {
  for (const auto& row : rows) {
    if (!row.trial && row.algorithm == algorithm && row.metric_name == metric && row.M == M &&
        row.P == P && row.K == K && row.snr_db == snr_db) {
      return row.metric_value;
    }
  }
  return std::nullopt;
}

std::vector<LambdaTuning> tune_noisy_lambdas(const std::vector<RecoveryCell>& cells,
                                             const std::vector<Algorithm>& algorithms,
                                             const std::vector<double>& grid, Index observations,
                                             std::uint64_t seed, int jobs,
                                             const RelaxParams& relax) {
  if (grid.empty() || observations < 1 || algorithms.empty()) throw Error("empty tuning setup");
  const auto n_grid = static_cast<Index>(grid.size());
  const Index per_cell = observations * n_grid;
  std::vector<double> scores(cells.size() * static_cast<std::size_t>(per_cell), 0.0);

  parallel_tasks(static_cast<Index>(cells.size()) * per_cell, jobs, [&](Index task) {
    const RecoveryCell& cell = cells[static_cast<std::size_t>(task / per_cell)];
    const Index obs = (task % per_cell) / n_grid;
    const double lambda = grid[static_cast<std::size_t>(task % n_grid)];
    const PlantedTrial t = noisy_trial(cell, cell_trial_seed(seed, kStreamTuning, cell, obs));
    SolverConfig cfg;
    cfg.k = cell.K;
    cfg.relax = relax;
    cfg.relax.lambda = lambda;
    double sum = 0.0;
    for (const Algorithm a : algorithms) {
      const SolveResult res = solve_with(a, t.problem, cfg);
      sum += recovery_fraction(t.truth, estimated_profile(a, res, cell.K));
    }
    scores[static_cast<std::size_t>(task)] = sum;
  });

  std::vector<LambdaTuning> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> total(static_cast<std::size_t>(n_grid), 0.0);
    for (Index obs = 0; obs < observations; ++obs) {
      for (Index i = 0; i < n_grid; ++i) {
        total[static_cast<std::size_t>(i)] +=
            scores[c * static_cast<std::size_t>(per_cell) + static_cast<std::size_t>(obs * n_grid + i)];
      }
    }
    const double best = *std::max_element(total.begin(), total.end());
    // Middle of the best-scoring grid points.
    std::vector<Index> ties;
    for (Index i = 0; i < n_grid; ++i) {
      if (total[static_cast<std::size_t>(i)] == best) ties.push_back(i);
    }
    const Index pick = ties[ties.size() / 2];
    out.push_back({*cells[c].snr_db, cells[c].K, grid[static_cast<std::size_t>(pick)],
                   best / static_cast<double>(observations * static_cast<Index>(algorithms.size()))});
  }
  return out;
}

std::vector<ResultRow> mse_study(const RecoveryCell& cell, Index trial, std::uint64_t seed,
                                 const std::vector<Algorithm>& algorithms,
                                 const std::vector<double>& grid, const RelaxParams& relax,
                                 const ConeSolverAdapter* cone, int jobs) {
  const PlantedTrial t = noisy_trial(cell, cell_trial_seed(seed, kStreamNoisy, cell, trial));
  const auto n_grid = static_cast<Index>(grid.size());
  const Index n_tasks = static_cast<Index>(algorithms.size()) * n_grid;
  std::vector<std::pair<double, double>> slots(static_cast<std::size_t>(n_tasks));
  parallel_tasks(n_tasks, jobs, [&](Index task) {
    SolverConfig cfg;
    cfg.k = cell.K;
    cfg.relax = relax;
    cfg.relax.lambda = grid[static_cast<std::size_t>(task % n_grid)];
    cfg.cone = cone;
    const SolveResult res =
        solve_with(algorithms[static_cast<std::size_t>(task / n_grid)], t.problem, cfg);
    slots[static_cast<std::size_t>(task)] = {
        mse(res.g, t.g), mse(retune(t.problem, profile_of(res.g, cell.K)), t.g)};
  });
  std::vector<ResultRow> rows;
  for (Index task = 0; task < n_tasks; ++task) {
    ResultRow row = make_row("noisy_mse", algorithms[static_cast<std::size_t>(task / n_grid)], cell);
    row.lambda = grid[static_cast<std::size_t>(task % n_grid)];
    row.trial = trial;
    row.metric_name = "mse";
    row.metric_value = slots[static_cast<std::size_t>(task)].first;
    rows.push_back(row);
    row.metric_name = "mse_retuned";
    row.metric_value = slots[static_cast<std::size_t>(task)].second;
    rows.push_back(row);
  }
  return rows;
}

void MriConfig::validate() const {
  if (!(fox_diameter_cm > 0.0) || !(spacing_cm > 0.0) || grid_size < 1 || !(k_spacing > 0.0) ||
      coils < 1 || !(lobe_width > 0.0) || !(rect_width_cm > 0.0) || !(rect_height_cm > 0.0) ||
      !std::isfinite(gain) || !std::isfinite(phase_slope) || !std::isfinite(phase_ramp)) {
    throw Error("invalid MRI scene configuration");
  }
}

MssoProblem MriScene::problem() const {
  std::vector<DenseMatrix> systems;
  systems.reserve(profiles.size());
  for (const auto& s : profiles) systems.push_back(s.asDiagonal() * fourier);
  return MssoProblem(desired, std::move(systems));
}

MriScene build_mri_scene(const MriConfig& config) {
  config.validate();
  MriScene scene;
  scene.gain = config.gain;
  const double radius = config.fox_diameter_cm / 2.0;
  const auto half = static_cast<Index>(std::floor(radius / config.spacing_cm));
  for (Index iy = -half; iy <= half; ++iy) {
    for (Index ix = -half; ix <= half; ++ix) {
      const Point2 pt{static_cast<double>(ix) * config.spacing_cm,
                      static_cast<double>(iy) * config.spacing_cm};
      if (pt.x * pt.x + pt.y * pt.y <= radius * radius) scene.r.push_back(pt);
    }
  }
  if (scene.r.empty()) throw Error("FOX contains no samples");

  const Index g = config.grid_size;
  const double dk = 2.0 * std::numbers::pi * config.k_spacing;
  for (Index iy = 0; iy < g; ++iy) {
    for (Index ix = 0; ix < g; ++ix) {
      scene.k.push_back({static_cast<double>(ix - g / 2) * dk, static_cast<double>(iy - g / 2) * dk});
    }
  }
  scene.dc_index = (g / 2) * g + g / 2;

  const Index m_count = scene.M();
  const Index n_count = scene.N();
  scene.fourier.resize(m_count, n_count);
  for (Index n = 0; n < n_count; ++n) {
    const Point2& k = scene.k[static_cast<std::size_t>(n)];
    for (Index m = 0; m < m_count; ++m) {
      const Point2& r = scene.r[static_cast<std::size_t>(m)];
      const double phase = r.x * k.x + r.y * k.y;
      scene.fourier(m, n) = Complex(-config.gain * std::sin(phase), config.gain * std::cos(phase));
    }
  }

  const double width = config.lobe_width * radius;
  for (Index p = 0; p < config.coils; ++p) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(p) /
                         static_cast<double>(config.coils);
    const double ux = std::cos(angle);
    const double uy = std::sin(angle);
    DenseVector s(m_count);
    for (Index m = 0; m < m_count; ++m) {
      const Point2& r = scene.r[static_cast<std::size_t>(m)];
      const double dx = r.x - radius * ux;
      const double dy = r.y - radius * uy;
      const double mag = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
      s(m) = std::polar(mag, angle + config.phase_slope * (r.x * ux + r.y * uy));
    }
    scene.profiles.push_back(std::move(s));
  }

  scene.desired = DenseVector::Zero(m_count);
  const double hw = config.rect_width_cm / 2.0;
  const double hh = config.rect_height_cm / 2.0;
  for (Index m = 0; m < m_count; ++m) {
    const Point2& r = scene.r[static_cast<std::size_t>(m)];
    if (std::abs(r.x) <= hw && std::abs(r.y) <= hh) {
      scene.desired(m) = std::polar(1.0, config.phase_ramp * r.x / hw);
    }
  }
  return scene;
}

std::vector<Index> fourier_order(const MriScene& scene) {
  const RealVector mag = (scene.fourier.adjoint() * scene.desired).cwiseAbs();
  std::vector<Index> order(static_cast<std::size_t>(mag.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return mag(a) > mag(b); });
  return order;
}

SparsityProfile fourier_baseline(const MriScene& scene, Index k) {
  if (k < 0 || k > scene.N()) throw Error("fourier_baseline: K out of range");
  std::vector<Index> order = fourier_order(scene);
  order.resize(static_cast<std::size_t>(k));
  return SparsityProfile(order);
}

PulseDesignOptions mri_desk_options() {
  PulseDesignOptions opts;
  opts.algorithms = {Algorithm::mp, Algorithm::lsmp, Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs};
  opts.irls.lsqr.tol = 1e-6;
  opts.max_outer = {{Algorithm::rbrs, 100}, {Algorithm::cbcs, 20}};
  return opts;
}

ExperimentResult run_pulse_design(const MriScene& scene, const PulseDesignOptions& opts) {
  Stopwatch clock;
  const MssoProblem problem = scene.problem();
  const ColumnView view = column_view(problem);
  const Index k_max = opts.k_max;
  if (k_max < 1 || k_max > problem.N()) throw Error("k_max out of range");
  if (opts.lambda_grid.empty()) throw Error("lambda grid is empty");

  auto prefix_errors = [&](const std::vector<Index>& order) {
    std::vector<double> errs(static_cast<std::size_t>(k_max));
    for (Index k = 1; k <= k_max; ++k) {
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
      const SparsityProfile prof(std::vector<Index>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take)));
      errs[static_cast<std::size_t>(k - 1)] = residual(problem, retune(problem, view, prof)).norm();
    }
    return errs;
  };

  struct Task {
    Algorithm alg;
    std::optional<double> lambda;
  };
  std::vector<Task> tasks;
  for (const Algorithm a : opts.algorithms) {
    if (is_greedy(a)) {
      tasks.push_back({a, std::nullopt});
    } else {
      for (const double l : opts.lambda_grid) tasks.push_back({a, l});
    }
  }
  std::vector<std::vector<double>> errors(tasks.size());
  std::vector<char> violations(tasks.size(), 0);

  parallel_tasks(static_cast<Index>(tasks.size()), opts.jobs, [&](Index i) {
    const Task& task = tasks[static_cast<std::size_t>(i)];
    SolverConfig cfg;
    cfg.k = k_max;
    cfg.relax = opts.relax;
    cfg.irls = opts.irls;
    cfg.cone = opts.cone;
    if (task.lambda) cfg.relax.lambda = *task.lambda;
    if (auto cap = opts.max_outer.find(task.alg); cap != opts.max_outer.end()) {
      cfg.relax.max_outer = cap->second;
    }
    const SolveResult res = solve_with(task.alg, problem, cfg);
    violations[static_cast<std::size_t>(i)] = trace_ok(task.alg, res.report) ? 0 : 1;
    if (is_greedy(task.alg)) {
      errors[static_cast<std::size_t>(i)] = prefix_errors(res.report.selection_order);
      return;
    }
    std::vector<double> errs(static_cast<std::size_t>(k_max));
    for (Index k = 1; k <= k_max; ++k) {
      errs[static_cast<std::size_t>(k - 1)] =
          residual(problem, retune(problem, view, profile_of(res.g, k))).norm();
    }
    errors[static_cast<std::size_t>(i)] = std::move(errs);
  });

  ExperimentResult out;
  out.solves = static_cast<Index>(tasks.size());
  for (const char v : violations) out.trace_violations += v;
  auto emit = [&](const std::string& name, Index k, double err, std::optional<double> lambda) {
    ResultRow row;
    row.experiment = "mri";
    row.algorithm = name;
    row.M = problem.M();
    row.N = problem.N();
    row.P = problem.P();
    row.K = k;
    row.lambda = lambda;
    row.metric_name = "l2_error";
    row.metric_value = err;
    out.rows.push_back(row);
  };

  std::size_t t = 0;
  for (const Algorithm a : opts.algorithms) {
    if (is_greedy(a)) {
      for (Index k = 1; k <= k_max; ++k) emit(algorithm_name(a), k, errors[t][static_cast<std::size_t>(k - 1)], std::nullopt);
      ++t;
      continue;
    }
    const std::size_t first = t;
    t += opts.lambda_grid.size();
    for (Index k = 1; k <= k_max; ++k) {
      std::size_t best = first;
      for (std::size_t j = first; j < t; ++j) {
        if (errors[j][static_cast<std::size_t>(k - 1)] < errors[best][static_cast<std::size_t>(k - 1)]) best = j;
      }
      emit(algorithm_name(a), k, errors[best][static_cast<std::size_t>(k - 1)], tasks[best].lambda);
    }
  }
  if (opts.include_fourier) {
    const std::vector<double> errs = prefix_errors(fourier_order(scene));
    for (Index k = 1; k <= k_max; ++k) emit("fourier", k, errs[static_cast<std::size_t>(k - 1)], std::nullopt);
  }
  out.seconds = clock.seconds();
  return out;
}

}  // namespace msso
