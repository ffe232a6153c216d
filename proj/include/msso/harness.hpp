#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msso/solvers.hpp"

namespace msso {

// SplitMix64 used as a counter-based generator: draw i is mix(key + (i + 1) * golden).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  std::uint64_t next_u64();
  /// Uniform on (0, 1).
  double uniform();
  /// Standard normal (Box-Muller; the second value of each pair is kept).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Seed for (master, stream, cell, trial), each folded in through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t cell,
                          std::uint64_t trial);

struct TrialSpec {
  Index N = 30;
  Index M = 25;
  Index P = 1;
  Index K = 3;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  std::vector<Algorithm> algorithms;
  std::vector<double> lambda_grid;

  /// Throws Error on K > N or nonpositive sizes.
  void validate() const;
};

struct PlantedTrial {
  MssoProblem problem;
  SparsityProfile truth;
  SolutionG g;
};

/// Real Gaussian systems with unit-norm columns, a uniformly drawn K-row profile
/// and standard normal entries on it; d = sum_p F_p g_p. Ignores snr_db.
PlantedTrial gen_noiseless_trial(const TrialSpec& spec);

/// sigma^2 = |d|^2 / M * 10^(-snr_db / 10).
double noise_variance(const DenseVector& d_true, double snr_db);
/// Adds i.i.d. Gaussian noise of variance sigma^2 (real noise for real d,
/// circular complex noise otherwise). Throws for d = 0.
DenseVector add_noise(const DenseVector& d_true, double snr_db, std::uint64_t seed);

/// |est - truth|_F^2 / (N P).
double mse(const SolutionG& est, const SolutionG& truth);

std::vector<double> linspace(double lo, double hi, Index count);

struct OracleOutcome {
  double best_fraction = 0.0;
  // Lambda that first reached best_fraction; unset for greedy methods.
  std::optional<double> best_lambda;
  Index solves = 0;
  Index trace_violations = 0;
};

/// Highest recovery fraction over the grid, scoring profile_of(g, |truth|).
/// Greedy methods ignore the grid and run once to |truth| selections. The
/// sweep stops early once a fraction of 1 is reached.
OracleOutcome lambda_oracle_sweep(const MssoProblem& p, Algorithm a,
                                  const std::vector<double>& grid,
                                  const SparsityProfile& truth, const SolverConfig& base);

struct ResultRow {
  std::string experiment;
  std::string algorithm;
  Index M = 0;
  Index N = 0;
  Index P = 0;
  Index K = 0;
  std::optional<double> snr_db;
  std::optional<double> lambda;
  // Unset for per-cell means.
  std::optional<Index> trial;
  std::string metric_name;
  double metric_value = 0.0;
};

struct RecoveryCell {
  Index M = 0;
  Index N = 30;
  Index P = 1;
  Index K = 3;
  // Set for the noisy experiment, together with the fixed lambda.
  std::optional<double> snr_db;
  std::optional<double> lambda;
};

struct ExperimentOptions {
  std::vector<Algorithm> algorithms;
  Index trials = 50;
  std::uint64_t seed = 1;
  int jobs = 1;
  // Noiseless lambda-oracle grid.
  std::vector<double> lambda_grid = linspace(0.0, 2.0, 70);
  // Lambda is taken from the grid or the cell.
  RelaxParams relax{};
  const ConeSolverAdapter* cone = nullptr;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  Index solves = 0;
  Index trace_violations = 0;
  double seconds = 0.0;
};

/// Per cell, per algorithm: per-trial rows then a mean row. Noiseless cells
/// report recovery_fraction (lambda = oracle choice). Noisy cells report
/// recovery_fraction, mse and mse_retuned at the cell's fixed lambda.
/// Rows are ordered by (cell, algorithm, trial) for any job count.
ExperimentResult run_recovery_experiment(const std::vector<RecoveryCell>& cells,
                                         const ExperimentOptions& opts);

/// Mean of the metric over the "mean" rows matching algorithm and cell sizes.
std::optional<double> find_mean(const std::vector<ResultRow>& rows, const std::string& algorithm,
                                const std::string& metric, Index M, Index P, Index K,
                                std::optional<double> snr_db = std::nullopt);

inline constexpr std::uint64_t kStreamNoiseless = 1;
inline constexpr std::uint64_t kStreamNoisy = 2;
inline constexpr std::uint64_t kStreamTuning = 3;

/// Trial seed for a cell, independent of the other cells in the run.
std::uint64_t cell_trial_seed(std::uint64_t master, std::uint64_t stream, const RecoveryCell& cell,
                              Index trial);

/// The noisy problem of a cell's trial: planted trial plus noise at cell.snr_db.
PlantedTrial noisy_trial(const RecoveryCell& cell, std::uint64_t seed);

struct LambdaTuning {
  double snr_db = 0.0;
  Index K = 0;
  double lambda = 0.0;
  double score = 0.0;
};

/// For each cell, the grid value maximizing the mean recovery fraction of the
/// given algorithms over `observations` tuning trials (lowest lambda on ties).
std::vector<LambdaTuning> tune_noisy_lambdas(const std::vector<RecoveryCell>& cells,
                                             const std::vector<Algorithm>& algorithms,
                                             const std::vector<double>& grid, Index observations,
                                             std::uint64_t seed, int jobs,
                                             const RelaxParams& relax = {});

/// MSE against truth before and after retuning, per algorithm and lambda, on one
/// noisy trial (experiment "noisy_mse").
std::vector<ResultRow> mse_study(const RecoveryCell& cell, Index trial, std::uint64_t seed,
                                 const std::vector<Algorithm>& algorithms,
                                 const std::vector<double>& grid, const RelaxParams& relax,
                                 const ConeSolverAdapter* cone, int jobs);

// MRI pulse design on a synthetic scene.

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct MriConfig {
  double fox_diameter_cm = 17.0;
  double spacing_cm = 0.8;
  Index grid_size = 15;
  // Cycles per cm between neighbouring k-space points.
  double k_spacing = 1.0 / 20.0;
  Index coils = 8;
  double gain = 1.0;
  // Lobe width as a fraction of the FOX radius.
  double lobe_width = 0.6;
  // Linear phase slope of each coil profile, rad/cm.
  double phase_slope = 0.1;
  double rect_width_cm = 8.0;
  double rect_height_cm = 4.0;
  // Phase of the desired image runs from -ramp to +ramp across the rectangle.
  double phase_ramp = 0.7853981633974483;

  /// Throws Error for nonpositive sizes.
  void validate() const;
};

struct MriScene {
  std::vector<Point2> r;
  // Angular k-space coordinates, rad/cm (2 pi times cycles/cm).
  std::vector<Point2> k;
  std::vector<DenseVector> profiles;
  double gain = 1.0;
  DenseMatrix fourier;
  DenseVector desired;
  Index dc_index = 0;

  Index M() const { return static_cast<Index>(r.size()); }
  Index N() const { return static_cast<Index>(k.size()); }
  /// F_p = diag(S_p) A.
  MssoProblem problem() const;
};

MriScene build_mri_scene(const MriConfig& config = {});

/// K largest |A^H d| entries (lowest index on ties), in decreasing magnitude.
SparsityProfile fourier_baseline(const MriScene& scene, Index k);
std::vector<Index> fourier_order(const MriScene& scene);

struct PulseDesignOptions {
  std::vector<Algorithm> algorithms;
  Index k_max = 20;
  std::vector<double> lambda_grid = linspace(0.0, 0.25, 14);
  RelaxParams relax{};
  IrlsOptions irls{};
  // Per-algorithm caps on outer iterations, overriding relax.max_outer.
  std::map<Algorithm, Index> max_outer;
  const ConeSolverAdapter* cone = nullptr;
  int jobs = 1;
  bool include_fourier = true;
};

/// Desk-scale settings for the default scene: MP, LSMP, IRLS (LSQR tol 1e-6),
/// RBRS (100 sweeps) and CBCS (20 sweeps), K up to 20, 14 lambdas in [0, 1/4].
PulseDesignOptions mri_desk_options();

/// Rows (experiment "mri", metric "l2_error") per algorithm and K = 1..k_max:
/// |d - F_tot g_K| after retuning. Greedy methods run once to k_max and retune
/// prefixes; convex methods keep the best lambda per K; the Fourier baseline
/// is listed as algorithm "fourier".
ExperimentResult run_pulse_design(const MriScene& scene, const PulseDesignOptions& opts);

}  // namespace msso
