#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <string>

#include "patchhopf/charroots.hpp"
#include "patchhopf/equilibrium.hpp"
#include "patchhopf/network.hpp"

namespace ph = patchhopf;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;  // stdout and stderr combined
};

// The build injects the CLI location; the environment variable wins so a
// different binary can be exercised without recompiling.
const std::string& cli_path() {
  static const std::string path = [] {
    if (const char* env = std::getenv("PATCHHOPF_CLI_PATH")) return std::string(env);
#ifdef PATCHHOPF_CLI_DEFAULT
    return std::string(PATCHHOPF_CLI_DEFAULT);
#else
    return std::string("tools/patchhopf");
#endif
  }();
  return path;
}

RunResult run_cli(const std::string& args) {
  RunResult res;
  const std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("patchhopf_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

std::string sink_pair_file() {
  static const std::string path = write_file(
      "net2.json", R"({"n": 2, "m": [1.0, -2.0], "edges": [[1, 2, 1.0]]})");
  return path;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string first_line(const std::string& s) {
  return s.substr(0, s.find('\n'));
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("help exits zero, bad invocations exit 2") {
  const RunResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("Usage") != std::string::npos);

  CHECK(run_cli("").exit_code == 2);
  CHECK(starts_with(run_cli("").out, "error: usage:"));
  CHECK(run_cli("bogus-subcommand").exit_code == 2);
  CHECK(run_cli("spectral --net paper9 --format xml").exit_code == 2);
  CHECK(run_cli("equilibrium --net paper9").exit_code == 2);  // missing --d
}

TEST_CASE("spectral curve: header, row count, pinned endpoints") {
  const RunResult res = run_cli(
      "spectral --net paper9 --lambda-min 0.1 --lambda-max 1 --lambda-steps 5");
  REQUIRE(res.exit_code == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "lambda,s,s_prime");
  double first = 0, last = 0, s = 0, sp = 0;
  REQUIRE(std::sscanf(lines[1].c_str(), "%lf,%lf,%lf", &first, &s, &sp) == 3);
  REQUIRE(std::sscanf(lines[5].c_str(), "%lf,%lf,%lf", &last, &s, &sp) == 3);
  CHECK(first == 0.1);
  CHECK(last == 1.0);
}

TEST_CASE("lambda-star: closed-form values on the sink pair") {
  const RunResult res = run_cli("lambda-star --net " + sink_pair_file());
  REQUIRE(res.exit_code == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "lambda_star,d_star,s_prime,eta1,eta2");
  double ls = 0, ds = 0, sp = 0, e1 = 0, e2 = 0;
  REQUIRE(std::sscanf(lines[1].c_str(), "%lf,%lf,%lf,%lf,%lf", &ls, &ds, &sp,
                      &e1, &e2) == 5);
  CHECK(std::abs(ls - 0.5) <= 1e-10);
  CHECK(std::abs(ds - 2.0) <= 1e-10);
  CHECK(std::abs(sp - 0.4) <= 1e-10);
  CHECK(std::abs(e1 - 2.0 / 3.0) <= 1e-10);
  CHECK(std::abs(e2 - 1.0 / 3.0) <= 1e-10);

  const RunResult bad = run_cli("lambda-star --net paper9");
  CHECK(bad.exit_code == 1);
  CHECK(starts_with(bad.out, "error: delta-nonnegative"));
}

TEST_CASE("equilibrium output is byte-identical to the library writer") {
  const RunResult res = run_cli("equilibrium --net paper9 --d 0.5");
  REQUIRE(res.exit_code == 0);

  const ph::PatchNetwork net = ph::paper_network_9();
  std::ostringstream want;
  ph::write_branch_csv({ph::equilibrium(net, 0.5)}, want);
  CHECK(res.out == want.str());

  const RunResult js = run_cli("equilibrium --net paper9 --d 0.5 --format json");
  REQUIRE(js.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(js.out);
  CHECK(doc.at("d").get<double>() == 0.5);
  CHECK(doc.at("u").size() == 9);
  CHECK(doc.at("residual").get<double>() < 1e-9);
  CHECK(doc.at("method").get<std::string>() == "newton");
}

TEST_CASE("extinction regime and unreadable networks exit 1 with their codes") {
  const RunResult ext = run_cli("equilibrium --net " + sink_pair_file() + " --d 3");
  CHECK(ext.exit_code == 1);
  CHECK(starts_with(ext.out, "error: extinction-regime"));

  const RunResult missing = run_cli("equilibrium --net /nonexistent.json --d 1");
  CHECK(missing.exit_code == 1);
  CHECK(starts_with(missing.out, "error: io"));

  const std::string dup = write_file(
      "dup.json",
      R"({"n": 2, "m": [1.0, -2.0], "edges": [[1, 2, 1.0], [1, 2, 0.5]]})");
  const RunResult bad = run_cli("validate --net " + dup);
  CHECK(bad.exit_code == 1);
  CHECK(starts_with(bad.out, "error: duplicate-edge"));
}

TEST_CASE("hopf --first approaches the large-d delay plateau") {
  const RunResult res = run_cli("hopf --net paper9 --d 1000 --first");
  REQUIRE(res.exit_code == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "d,branch,theta,nu,r,l,transversal");

  // d,branch(empty),theta,nu,r,l,transversal
  double d = 0, theta = 0, nu = 0, r = 0;
  int l = -1;
  char tag[32] = {0};
  REQUIRE(std::sscanf(lines[1].c_str(), "%lf,,%lf,%lf,%lf,%d,%31s", &d, &theta,
                      &nu, &r, &l, tag) == 6);
  CHECK(d == 1000.0);
  CHECK(l == 0);
  const double plateau = 9.0 * std::numbers::pi / 256.0;
  CHECK(std::abs(r - plateau) <= 0.02 * plateau);
  CHECK(std::string(tag) == "positive");
}

TEST_CASE("hopf scan output is byte-identical to the library writer") {
  const RunResult res = run_cli("hopf --net paper9 --d 0.5");
  REQUIRE(res.exit_code == 0);

  std::ostringstream want;
  ph::write_hopf_csv(ph::hopf_scan(ph::paper_network_9(), 0.5), want);
  CHECK(res.out == want.str());
}

TEST_CASE("hopf-sweep json keeps the curve structure") {
  const RunResult res =
      run_cli("hopf-sweep --net " + sink_pair_file() +
              " --d-min 0.3 --d-max 0.9 --d-steps 3 --format json");
  REQUIRE(res.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(res.out);
  REQUIRE(doc.is_array());
  REQUIRE(!doc.empty());
  for (const nlohmann::json& curve : doc) {
    CHECK(curve.contains("id"));
    CHECK(curve.contains("branch"));
    CHECK(curve.contains("end_reason"));
    REQUIRE(curve.at("samples").is_array());
    for (const nlohmann::json& s : curve.at("samples")) {
      CHECK(s.contains("d"));
      CHECK(s.contains("theta"));
      CHECK(s.contains("nu"));
      CHECK(s.contains("r"));
    }
  }
}

TEST_CASE("simulate: trajectory header vs headerless strided pattern") {
  const std::string net = sink_pair_file();
  const RunResult traj = run_cli("simulate --net " + net +
                                 " --d 0.5 --r 0.1 --t-end 0.5 "
                                 "--steps-per-delay 20");
  REQUIRE(traj.exit_code == 0);
  CHECK(first_line(traj.out) == "t,u1,u2");
  const size_t traj_rows = lines_of(traj.out).size() - 1;

  const RunResult pat = run_cli("simulate --net " + net +
                                " --d 0.5 --r 0.1 --t-end 0.5 "
                                "--steps-per-delay 20 --pattern --stride 3");
  REQUIRE(pat.exit_code == 0);
  const std::vector<std::string> rows = lines_of(pat.out);
  CHECK(rows.size() == (traj_rows + 2) / 3);
  double u1 = 0, u2 = 0;
  REQUIRE(std::sscanf(rows[0].c_str(), "%lf,%lf", &u1, &u2) == 2);
  CHECK(u1 > 0.0);
}

TEST_CASE("verdict emits exactly one classification line") {
  const RunResult conv =
      run_cli("verdict --net paper9 --d 0.5 --r 0.06 --horizon 60");
  REQUIRE(conv.exit_code == 0);
  CHECK(conv.out == "verdict\nconverges\n");

  const RunResult osc =
      run_cli("verdict --net paper9 --d 0.5 --r 0.12 --horizon 60");
  REQUIRE(osc.exit_code == 0);
  CHECK(osc.out == "verdict\noscillates\n");
}

TEST_CASE("period reports peak statistics of an oscillating run") {
  const RunResult res = run_cli(
      "period --net paper9 --d 0.5 --r 0.09 --t-end 120 --patch 4 "
      "--steps-per-delay 60");
  REQUIRE(res.exit_code == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "period,amplitude,cv,n_peaks");
  double period = 0, amp = 0, cv = 0;
  int n_peaks = 0;
  REQUIRE(std::sscanf(lines[1].c_str(), "%lf,%lf,%lf,%d", &period, &amp, &cv,
                      &n_peaks) == 4);
  CHECK(period > 0.2);
  CHECK(period < 0.5);
  CHECK(amp > 0.1);
  CHECK(cv < 0.2);
  CHECK(n_peaks >= 3);
}

TEST_CASE("reproduce-fig recipes: defaults, overrides, refusals") {
  const RunResult fig = run_cli("reproduce-fig 2L --steps-per-delay 20 --t-end 2");
  REQUIRE(fig.exit_code == 0);
  CHECK(first_line(fig.out) == "t,u1,u2,u3,u4,u5,u6,u7,u8,u9");
  CHECK(lines_of(fig.out).size() > 10);

  const RunResult need_r = run_cli("reproduce-fig 4");
  CHECK(need_r.exit_code == 1);
  CHECK(starts_with(need_r.out, "error: validation"));
  CHECK(need_r.out.find("--r") != std::string::npos);

  const RunResult unknown = run_cli("reproduce-fig 7");
  CHECK(unknown.exit_code == 1);
  CHECK(starts_with(unknown.out, "error: validation"));
}

TEST_CASE("grid builtin requires an m-file and then works end to end") {
  const std::string m4 = write_file("m4.txt", "1.0 2.0\n-1.0 0.5\n");
  const RunResult ok = run_cli(
      "spectral --net grid:2x2:1.0 --m-file " + m4 +
      " --lambda-min 0.5 --lambda-max 1.5 --lambda-steps 3");
  REQUIRE(ok.exit_code == 0);
  CHECK(lines_of(ok.out).size() == 4);

  const RunResult no_m = run_cli("spectral --net grid:2x2:1.0");
  CHECK(no_m.exit_code == 1);
  CHECK(starts_with(no_m.out, "error: validation"));

  const RunResult bad_spec = run_cli("spectral --net grid:2x2");
  CHECK(bad_spec.exit_code == 1);
  CHECK(starts_with(bad_spec.out, "error: validation"));
}

TEST_CASE("validate passes builtins and --out mirrors stdout bytes") {
  const RunResult res = run_cli("validate --net paper9");
  CHECK(res.exit_code == 0);
  CHECK(res.out == "rule,detail\n");

  const RunResult js = run_cli("validate --net paper9 --format json");
  CHECK(js.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(js.out);
  CHECK(doc.at("ok").get<bool>());
  CHECK(doc.at("violations").empty());

  const std::string out_path = (scratch_dir() / "spectral.csv").string();
  const std::string args =
      "spectral --net paper9 --lambda-min 0.1 --lambda-max 1 --lambda-steps 4";
  const RunResult direct = run_cli(args);
  const RunResult redirected = run_cli(args + " --out " + out_path);
  REQUIRE(redirected.exit_code == 0);
  CHECK(redirected.out.empty());
  std::ifstream in(out_path);
  std::stringstream file_content;
  file_content << in.rdbuf();
  CHECK(file_content.str() == direct.out);
}
