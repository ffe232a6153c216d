#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "msso/io.hpp"

namespace fs = std::filesystem;
using namespace msso;

namespace {

const std::string kCli = MSSO_CLI;
const std::string kReal = MSSO_DATA "/fixtures/real_small.json";

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("msso_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

int run(const std::string& args, const std::string& env = "env -u MSSO_CONE_SOLVER") {
  const int status = std::system((env + " " + kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_capture(const std::string& args, const std::string& err_file) {
  const int status =
      std::system(("env -u MSSO_CONE_SOLVER " + kCli + " " + args + " >/dev/null 2>" + err_file).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("solve with a greedy method writes all artifacts") {
  Scratch s("greedy");
  const std::string before = read_text(kReal);
  REQUIRE(run("solve " + kReal + " --alg mp --k 3 --out " + s / "out") == 0);
  CHECK(count_lines(read_text(s / "out/profile.txt")) <= 3);
  const SolutionG g = solution_from_csv(read_text(s / "out/solution.csv"));
  CHECK(g.rows() == 15);
  CHECK(g.cols() == 2);
  CHECK(read_text(s / "out/report.json").find("\"objective_trace\"") != std::string::npos);
  CHECK(read_text(kReal) == before);
}

TEST_CASE("solve irls at lambda 0 reaches the least-squares residual") {
  Scratch s("irls");
  REQUIRE(run("solve " + kReal + " --alg irls --lambda 0 --out " + s / "out") == 0);
  const MssoProblem p = read_problem(kReal);
  const SolutionG g = solution_from_csv(read_text(s / "out/solution.csv"));
  const DenseVector ls = lstsq_min_norm(p.row_stacked(), p.observation());
  const double pinv_residual = (p.observation() - p.row_stacked() * ls).norm();
  CHECK(residual(p, g).norm() <= pinv_residual + 1e-8);
}

TEST_CASE("socp needs a configured adapter") {
  Scratch s("socp");
  CHECK(run("solve " + kReal + " --alg socp --lambda 0.1 --out " + s / "out") == 3);
  CHECK_FALSE(fs::exists(s / "out"));
  CHECK(run("solve " + kReal + " --alg socp --lambda 0.1 --out " + s / "out", "MSSO_CONE_SOLVER=native") == 0);
  CHECK(fs::exists(s / "out/solution.csv"));
}

TEST_CASE("bad input is reported with a nonzero exit") {
  Scratch s("bad");
  std::ofstream(s / "broken.json") << "{\"format\": \"msso-problem\", \"version\": 1,\n \"M\": 2, \"N\": 1, \"P\": 1,\n \"d\": [1, 2],\n \"systems\": [[[1], [1, 2]]]}";
  CHECK(run_capture("solve " + s / "broken.json" + " --alg rbrs --out " + s / "out", s / "err.txt") == 1);
  CHECK(read_text(s / "err.txt").find("'systems[0][1]'") != std::string::npos);
  std::ofstream(s / "garbage.json") << "{\n\n  \"M\": ,\n}";
  CHECK(run_capture("solve " + s / "garbage.json" + " --alg rbrs --out " + s / "out", s / "err.txt") == 1);
  CHECK(read_text(s / "err.txt").find("line 3") != std::string::npos);
  CHECK(run("solve " + kReal + " --alg lasso --out " + s / "out") != 0);
  CHECK(run("noiseless --M 0 --P 1 --trials 1 --out " + s / "out") != 0);
  CHECK(run("noiseless --M 10 --P 1 --K 31 --trials 1 --out " + s / "out") != 0);
  CHECK_FALSE(fs::exists(s / "out/solution.csv"));
}

TEST_CASE("experiment outputs are byte-identical across runs and job counts") {
  Scratch s("determinism");
  const std::string args = "noiseless --M 40 --P 1 --trials 5 --seed 7 --lambda-grid 0:2:15";
  REQUIRE(run(args + " --out " + s / "a") == 0);
  REQUIRE(run(args + " --jobs 3 --out " + s / "b") == 0);
  CHECK(read_text(s / "a/noiseless.csv") == read_text(s / "b/noiseless.csv"));
  CHECK(read_text(s / "a/noiseless_manifest.json").find("\"library_version\"") != std::string::npos);
  CHECK(results_from_csv(read_text(s / "a/noiseless.csv")).size() == 5 * (5 + 1));
}

TEST_CASE("config files supply flag values and flags override them") {
  Scratch s("config");
  std::ofstream(s / "run.toml") << "[noiseless]\nM = [12]\nP = [1]\ntrials = 2\nseed = 5\nalg = [\"mp\", \"lsmp\"]\n";
  REQUIRE(run("noiseless --config " + s / "run.toml" + " --out " + s / "a") == 0);
  REQUIRE(run("noiseless --config " + s / "run.toml" + " --trials 3 --out " + s / "b") == 0);
  const auto a = results_from_csv(read_text(s / "a/noiseless.csv"));
  const auto b = results_from_csv(read_text(s / "b/noiseless.csv"));
  CHECK(a.size() == 2 * (2 + 1));
  CHECK(b.size() == 2 * (3 + 1));
  CHECK(a.front().M == 12);
}

TEST_CASE("noisy run with a fixed lambda and json output") {
  Scratch s("noisy");
  REQUIRE(run("noisy --snr 10 --K 1,3 --trials 2 --lambda 0.2 --alg lsmp,rbrs --format json --out " + s / "out") == 0);
  const std::string text = read_text(s / "out/noisy.json");
  CHECK(text.find("\"mse_retuned\"") != std::string::npos);
  REQUIRE(run("noisy --mse-study --snr 0 --K 3 --alg rbrs --lambda-grid 0.1,0.5 --out " + s / "mse") == 0);
  CHECK(results_from_csv(read_text(s / "mse/noisy_mse.csv")).size() == 4);
}

TEST_CASE("mri emits one row per algorithm and K") {
  Scratch s("mri");
  REQUIRE(run("mri --k-max 5 --alg mp,lsmp,rbrs --lambda-grid 0.1 --max-outer 3 --out " + s / "out") == 0);
  const auto rows = results_from_csv(read_text(s / "out/mri.csv"));
  CHECK(rows.size() == 4 * 5);
  for (const auto& r : rows) {
    CHECK(r.K >= 1);
    CHECK(r.K <= 5);
    CHECK(r.N == 225);
  }
}

TEST_CASE("verify passes on the bundled fixtures") {
  CHECK(run("verify") == 0);
  CHECK(run("verify", "MSSO_CONE_SOLVER=native") == 0);
}
