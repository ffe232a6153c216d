#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include "msso/harness.hpp"
#include "msso/io.hpp"

using namespace msso;

namespace {

TrialSpec small_spec(std::uint64_t seed) {
  TrialSpec s;
  s.N = 12;
  s.M = 8;
  s.P = 2;
  s.K = 3;
  s.seed = seed;
  return s;
}

MriConfig small_scene_config() {
  MriConfig c;
  c.fox_diameter_cm = 8.0;
  c.spacing_cm = 0.8;
  c.grid_size = 5;
  c.coils = 3;
  return c;
}

}  // namespace

TEST_CASE("counter rng is a pure function of its key") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  // draw i is splitmix64(key + i * golden)
  CounterRng d(5);
  CHECK(d.next_u64() == splitmix64(5));
  CHECK(d.next_u64() == splitmix64(5 + 0x9E3779B97F4A7C15ULL));
}

TEST_CASE("counter rng moments") {
  CounterRng rng(7);
  const int n = 200000;
  double s1 = 0, s2 = 0, u_min = 1, u_max = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    const double u = rng.uniform();
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(u_min > 0.0);
  CHECK(u_max < 1.0);

  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[rng.below(5)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("derived seeds differ per coordinate") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 3; ++s)
    for (std::uint64_t c = 0; c < 3; ++c)
      for (std::uint64_t t = 0; t < 3; ++t) seen.insert(derive_seed(9, s, c, t));
  CHECK(seen.size() == 27);
  CHECK(derive_seed(9, 1, 2, 3) == derive_seed(9, 1, 2, 3));
}

TEST_CASE("noiseless trial generation") {
  const PlantedTrial a = gen_noiseless_trial(small_spec(11));
  const PlantedTrial b = gen_noiseless_trial(small_spec(11));
  const PlantedTrial c = gen_noiseless_trial(small_spec(12));
  CHECK(a.problem.observation() == b.problem.observation());
  for (Index p = 0; p < 2; ++p) CHECK(a.problem.system(p) == b.problem.system(p));
  CHECK(a.truth == b.truth);
  CHECK(a.g == b.g);
  CHECK(a.problem.observation() != c.problem.observation());

  CHECK(a.problem.is_real());
  CHECK(a.truth.size() == 3);
  for (const auto& f : a.problem.systems()) {
    for (Index n = 0; n < f.cols(); ++n) CHECK(std::abs(f.col(n).norm() - 1.0) < 1e-12);
  }
  CHECK(residual(a.problem, a.g).norm() < 1e-12);
  for (Index n = 0; n < a.g.rows(); ++n) {
    CHECK((a.g.row(n).norm() > 0) == a.truth.contains(n));
  }
}

TEST_CASE("trial profiles are uniform over rows") {
  TrialSpec s = small_spec(0);
  s.N = 6;
  s.K = 2;
  std::vector<int> hits(6, 0);
  const int n = 6000;
  for (int i = 0; i < n; ++i) {
    s.seed = derive_seed(1, 0, 0, static_cast<std::uint64_t>(i));
    const PlantedTrial t = gen_noiseless_trial(s);
    for (Index r : t.truth.indices()) ++hits[static_cast<std::size_t>(r)];
  }
  // each row is in the profile with probability K/N = 1/3
  for (int h : hits) CHECK(std::abs(h - 2000) < 150);
}

TEST_CASE("trial spec validation") {
  TrialSpec s = small_spec(1);
  s.K = 13;
  CHECK_THROWS_AS(gen_noiseless_trial(s), Error);
  s.K = 0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("noise model") {
  DenseVector d = DenseVector::Ones(16);
  CHECK(noise_variance(d, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(noise_variance(d, 10.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(add_noise(d, std::numeric_limits<double>::infinity(), 3) == d);
  CHECK_THROWS_AS(add_noise(DenseVector::Zero(4), 0.0, 1), Error);
  CHECK(add_noise(d, 5.0, 4) == add_noise(d, 5.0, 4));
  CHECK(is_real(add_noise(d, 5.0, 4)));

  const Index m = 10000;
  CounterRng rng(99);
  DenseVector big(m);
  for (Index i = 0; i < m; ++i) big(i) = rng.normal();
  for (double snr : {-10.0, 0.0, 30.0}) {
    const double var = noise_variance(big, snr);
    CHECK(var == doctest::Approx(big.squaredNorm() / m * std::pow(10.0, -snr / 10.0)));
    const DenseVector noise = add_noise(big, snr, 123) - big;
    const double emp = noise.squaredNorm() / m;
    CHECK(std::abs(emp / var - 1.0) < 0.05);
  }

  DenseVector z(m);
  for (Index i = 0; i < m; ++i) z(i) = Complex(rng.normal(), rng.normal());
  const DenseVector cn = add_noise(z, 0.0, 5) - z;
  CHECK(std::abs(cn.squaredNorm() / m / noise_variance(z, 0.0) - 1.0) < 0.05);
  CHECK(std::abs(cn.real().squaredNorm() / cn.imag().squaredNorm() - 1.0) < 0.1);
}

TEST_CASE("mse metric") {
  const PlantedTrial t = gen_noiseless_trial(small_spec(3));
  CHECK(mse(t.g, t.g) == 0.0);
  CHECK(mse(SolutionG::Zero(12, 2), t.g) == doctest::Approx(t.g.squaredNorm() / 24.0));
  CHECK_THROWS_AS(mse(SolutionG::Zero(12, 3), t.g), Error);

  // an accurate estimate retuned onto rows disjoint from the truth gets worse
  const SolutionG est = 0.9 * t.g;
  std::vector<Index> wrong;
  for (Index n = 0; n < 12 && wrong.size() < 3; ++n) {
    if (!t.truth.contains(n)) wrong.push_back(n);
  }
  const SolutionG retuned = retune(t.problem, SparsityProfile(wrong));
  CHECK(mse(retuned, t.g) > mse(est, t.g));
}

TEST_CASE("linspace") {
  const auto g = linspace(0.0, 2.0, 70);
  CHECK(g.size() == 70);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 2.0);
  CHECK(g[1] == doctest::Approx(2.0 / 69));
  CHECK(linspace(0.25, 1.0, 1) == std::vector<double>{0.25});
  CHECK_THROWS_AS(linspace(0, 1, 0), Error);
}

TEST_CASE("lambda oracle on an easy instance") {
  TrialSpec s;
  s.N = 8;
  s.M = 30;
  s.P = 2;
  s.K = 1;
  s.seed = 77;
  const PlantedTrial t = gen_noiseless_trial(s);
  // exhaustive check: only the true row explains d exactly
  for (Index n = 0; n < s.N; ++n) {
    const double r = residual(t.problem, retune(t.problem, SparsityProfile({n}))).norm();
    CHECK((r < 1e-9) == t.truth.contains(n));
  }
  const auto grid = linspace(0.0, 2.0, 70);
  for (Algorithm a : {Algorithm::irls, Algorithm::rbrs, Algorithm::cbcs, Algorithm::mp, Algorithm::lsmp}) {
    const OracleOutcome o = lambda_oracle_sweep(t.problem, a, grid, t.truth, {});
    CHECK(o.best_fraction == 1.0);
    CHECK(o.trace_violations == 0);
    CHECK(o.best_lambda.has_value() == !is_greedy(a));
  }
}

TEST_CASE("lambda oracle degenerate grids") {
  const PlantedTrial t = gen_noiseless_trial(small_spec(5));
  const OracleOutcome zero = lambda_oracle_sweep(t.problem, Algorithm::rbrs, {0.0}, t.truth, {});
  const SolutionG ls = unstack_columns(lstsq_min_norm(t.problem.row_stacked(), t.problem.observation()), 12, 2);
  CHECK(zero.best_fraction == recovery_fraction(t.truth, profile_of(ls, 3)));
  CHECK(zero.solves == 1);
  CHECK(*zero.best_lambda == 0.0);

  const OracleOutcome one = lambda_oracle_sweep(t.problem, Algorithm::cbcs, {0.3}, t.truth, {});
  const OracleOutcome two = lambda_oracle_sweep(t.problem, Algorithm::cbcs, {0.3, 0.3}, t.truth, {});
  CHECK(one.best_fraction == two.best_fraction);
  CHECK(one.best_lambda == two.best_lambda);
  CHECK_THROWS_AS(lambda_oracle_sweep(t.problem, Algorithm::rbrs, {}, t.truth, {}), Error);
}

TEST_CASE("recovery experiment is reproducible and independent of jobs") {
  ExperimentOptions opts;
  opts.algorithms = {Algorithm::mp, Algorithm::lsmp, Algorithm::rbrs};
  opts.trials = 3;
  opts.seed = 7;
  opts.lambda_grid = linspace(0.0, 2.0, 8);
  const std::vector<RecoveryCell> cells = {{10, 12, 1, 2, std::nullopt, std::nullopt},
                                           {8, 12, 2, 2, std::nullopt, std::nullopt}};
  opts.jobs = 1;
  const ExperimentResult a = run_recovery_experiment(cells, opts);
  const ExperimentResult b = run_recovery_experiment(cells, opts);
  opts.jobs = 4;
  const ExperimentResult c = run_recovery_experiment(cells, opts);
  CHECK(results_to_csv(a.rows) == results_to_csv(b.rows));
  CHECK(results_to_csv(a.rows) == results_to_csv(c.rows));
  CHECK(a.rows.size() == 2 * 3 * (3 + 1));
  CHECK(a.trace_violations == 0);

  // a cell's trials do not depend on its neighbours
  const ExperimentResult single = run_recovery_experiment({cells[1]}, opts);
  for (const char* alg : {"mp", "lsmp", "rbrs"}) {
    CHECK(find_mean(single.rows, alg, "recovery_fraction", 8, 2, 2) ==
          find_mean(a.rows, alg, "recovery_fraction", 8, 2, 2));
  }

  // mean row is the average of the trial rows
  double sum = 0;
  for (const auto& r : a.rows) {
    if (r.algorithm == "lsmp" && r.M == 10 && r.trial) sum += r.metric_value;
  }
  CHECK(*find_mean(a.rows, "lsmp", "recovery_fraction", 10, 1, 2) == doctest::Approx(sum / 3));
}

TEST_CASE("noisy recovery cells") {
  ExperimentOptions opts;
  opts.algorithms = {Algorithm::lsmp, Algorithm::irls};
  opts.trials = 2;
  RecoveryCell cell{12, 15, 2, 2, 20.0, 0.1};
  const ExperimentResult r = run_recovery_experiment({cell}, opts);
  CHECK(r.rows.size() == 2 * (2 + 1) * 3);
  CHECK(find_mean(r.rows, "irls", "mse", 12, 2, 2, 20.0).has_value());
  CHECK(find_mean(r.rows, "irls", "mse_retuned", 12, 2, 2, 20.0).has_value());
  for (const auto& row : r.rows) {
    CHECK(row.experiment == "noisy");
    CHECK(row.lambda.has_value() == (row.algorithm == "irls"));
  }
  cell.lambda.reset();
  CHECK_THROWS_AS(run_recovery_experiment({cell}, opts), Error);
}

TEST_CASE("lambda tuning picks grid points deterministically") {
  const std::vector<RecoveryCell> cells = {{12, 15, 2, 1, 30.0, std::nullopt},
                                           {12, 15, 2, 3, 0.0, std::nullopt}};
  const auto grid = linspace(0.0, 1.0, 5);
  const auto a = tune_noisy_lambdas(cells, {Algorithm::rbrs}, grid, 2, 3, 1);
  const auto b = tune_noisy_lambdas(cells, {Algorithm::rbrs}, grid, 2, 3, 3);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].lambda == b[i].lambda);
    CHECK(a[i].score == b[i].score);
    CHECK(std::find(grid.begin(), grid.end(), a[i].lambda) != grid.end());
    CHECK(a[i].score >= 0.0);
    CHECK(a[i].score <= 1.0);
  }
}

TEST_CASE("mse study rows") {
  const RecoveryCell cell{12, 15, 2, 2, 0.0, std::nullopt};
  const auto rows = mse_study(cell, 4, 1, {Algorithm::rbrs, Algorithm::irls}, {0.1, 0.5}, {}, nullptr, 2);
  CHECK(rows.size() == 8);
  CHECK(rows[0].experiment == "noisy_mse");
  CHECK(*rows[0].trial == 4);
}

TEST_CASE("default MRI scene geometry") {
  const MriScene s = build_mri_scene();
  CHECK(std::abs(static_cast<double>(s.M()) - 356.0) <= 35.6);
  CHECK(s.N() == 225);
  CHECK(s.profiles.size() == 8);
  for (const auto& r : s.r) CHECK(r.x * r.x + r.y * r.y <= 8.5 * 8.5);
  CHECK(s.k[static_cast<std::size_t>(s.dc_index)].x == 0.0);
  CHECK(s.k[static_cast<std::size_t>(s.dc_index)].y == 0.0);
  CHECK(s.k[1].x - s.k[0].x == doctest::Approx(2.0 * std::numbers::pi / 20.0));

  for (Index m : {Index{0}, s.M() / 2, s.M() - 1}) {
    for (Index n : {Index{0}, Index{100}, s.N() - 1}) {
      const auto& r = s.r[static_cast<std::size_t>(m)];
      const auto& k = s.k[static_cast<std::size_t>(n)];
      const Complex want = Complex(0.0, s.gain) * std::exp(Complex(0.0, r.x * k.x + r.y * k.y));
      CHECK(std::abs(s.fourier(m, n) - want) < 1e-15);
    }
  }
  // the scene centre sits at r = 0; with k = 0 the entry is j
  Index centre = -1;
  for (Index m = 0; m < s.M(); ++m) {
    if (s.r[static_cast<std::size_t>(m)].x == 0.0 && s.r[static_cast<std::size_t>(m)].y == 0.0) centre = m;
  }
  REQUIRE(centre >= 0);
  CHECK(s.fourier(centre, s.dc_index) == Complex(0.0, 1.0));

  const MriScene again = build_mri_scene();
  CHECK(again.fourier == s.fourier);
  CHECK(again.desired == s.desired);

  const MssoProblem p = s.problem();
  CHECK(p.P() == 8);
  CHECK(p.system(3) == s.profiles[3].asDiagonal() * s.fourier);
  CHECK(s.desired.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK((s.desired.array() != Complex(0.0)).count() > 0);

  MriConfig bad;
  bad.spacing_cm = 0;
  CHECK_THROWS_AS(build_mri_scene(bad), Error);
}

TEST_CASE("fourier baseline") {
  MriConfig c = small_scene_config();
  c.rect_width_cm = 100;
  c.rect_height_cm = 100;
  c.phase_ramp = 0;
  const MriScene flat = build_mri_scene(c);
  CHECK(fourier_baseline(flat, 1).indices() == std::vector<Index>{flat.dc_index});
  CHECK(fourier_order(flat).front() == flat.dc_index);
  CHECK(fourier_baseline(flat, flat.N()).size() == static_cast<std::size_t>(flat.N()));
  CHECK_THROWS_AS(fourier_baseline(flat, flat.N() + 1), Error);
}

TEST_CASE("pulse design on a small scene") {
  const MriScene s = build_mri_scene(small_scene_config());
  PulseDesignOptions opts;
  opts.algorithms = {Algorithm::mp, Algorithm::lsmp, Algorithm::rbrs};
  opts.k_max = s.N();
  opts.lambda_grid = linspace(0.0, 0.25, 3);
  opts.jobs = 2;
  const ExperimentResult r = run_pulse_design(s, opts);
  CHECK(r.rows.size() == static_cast<std::size_t>(4 * s.N()));
  CHECK(r.trace_violations == 0);

  const MssoProblem p = s.problem();
  const double ls = residual(p, unstack_columns(lstsq_min_norm(p.row_stacked(), p.observation()), p.N(), p.P())).norm();
  std::map<std::string, double> prev;
  for (const auto& row : r.rows) {
    CHECK(row.metric_name == "l2_error");
    if (prev.count(row.algorithm)) {
      CAPTURE(row.K);
      CAPTURE(row.algorithm);
      CHECK(row.metric_value - prev[row.algorithm] <= 1e-10 * p.observation().norm());
    }
    prev[row.algorithm] = row.metric_value;
    if (row.K == s.N() && row.algorithm != "mp") CHECK(row.metric_value == doctest::Approx(ls).epsilon(1e-8));
  }

  opts.jobs = 1;
  CHECK(results_to_csv(run_pulse_design(s, opts).rows) == results_to_csv(r.rows));
  opts.k_max = 0;
  CHECK_THROWS_AS(run_pulse_design(s, opts), Error);
}
