#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "qshoot/config.hpp"
#include "qshoot/errors.hpp"
#include "qshoot/io.hpp"
#include "qshoot/verify.hpp"

using namespace qshoot;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "qshoot_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(QSHOOT_BIN) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.set("family", "exp");
  c.set("q", "1.25");
  c.set("gamma-min", "0.1");
  c.set("gamma_max", "12");
  c.set("beta-weight", "0.5");
  c.set("tol", "3e-11");
  c.set("seed", "7");
  const std::string text = c.canonical();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.canonical() == text);
  CHECK(back.beta == 0.5);
  CHECK(back.tol == 3e-11);
  CHECK(RunConfig{}.canonical() == RunConfig::parse(RunConfig{}.canonical()).canonical());
  CHECK(RunConfig::parse("# comment\n\n n = 3 \n").n == 3);
}

TEST_CASE("config rejects bad input and names the key") {
  RunConfig c;
  try {
    c.set("q", "abc");
    FAIL("no throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'q'") != std::string::npos);
  }
  try {
    c.set("colour", "red");
    FAIL("no throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
  CHECK_THROWS_AS(c.set("n", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("format", "xml"), ConfigError);
  CHECK_THROWS_AS(c.set("route", "x"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("n 3\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig{}.gamma_grid(), ConfigError);
  RunConfig bad;
  bad.set("q", "-1");
  CHECK_THROWS_AS(bad.nonlinearity(), ConfigError);
}

TEST_CASE("atomic write") {
  const fs::path p = scratch() / "sub" / "a.txt";
  io::atomic_write(p.string(), "one\n");
  io::atomic_write(p.string(), "two\n");
  CHECK(slurp(p) == "two\n");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
  CHECK_THROWS(io::atomic_write("/proc/qshoot_forbidden/x.txt", "x"));
}

TEST_CASE("curve serialisation") {
  BifurcationCurve c;
  c.nl_description = "family=exp";
  SweepRow r;
  r.gamma = 2.0;
  r.ok = true;
  r.outcome.T = 0.5;
  r.outcome.R = 1.5;
  r.outcome.lambda_of_gamma = 2.25;
  r.outcome.yprime_T = 0.25;
  r.Tprime_v1 = 1.0;
  c.rows.push_back(r);
  SweepRow bad;
  bad.gamma = 3.0;
  bad.error = "boom";
  c.rows.push_back(bad);
  const std::string csv = io::curve_csv(c, true);
  CHECK(csv == "gamma,T,R,lambda,yprime_T,Tprime_v1,Tprime_fd\n2,0.5,1.5,2.25,0.25,1,nan\n3,nan,nan,nan,nan,nan,nan\n");
  const auto j = io::curve_json(c, false);
  CHECK(j["meta"]["nonlinearity"] == "family=exp");
  CHECK(j["rows"][1]["error"] == "boom");
  CHECK(io::num(0.1) == "0.1");

  const std::string svg = io::svg_polyline({1, 2, 3}, {3, 1, 2}, "gamma", "lambda", "t");
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find(">lambda<") != std::string::npos);
}

TEST_CASE("verify reports are deterministic") {
  RunConfig c;
  const VerifyReport a = run_suite("identities", c), b = run_suite("identities", c);
  CHECK(a.table() == b.table());
  CHECK(a.json().dump() == b.json().dump());
  CHECK(a.all_pass());
  CHECK_THROWS_AS(run_suite("nonsense", c), ConfigError);
}

TEST_CASE("command line exit codes and outputs") {
  const fs::path d = scratch();
  CHECK(run("shoot --family linear --n 2 --gamma 1 --format json --out " + (d / "s.json").string()) == 0);
  const std::string s = slurp(d / "s.json");
  CHECK(s.find("\"R\": 2.40482555769") != std::string::npos);
  CHECK(s.find("\"meta\"") != std::string::npos);

  CHECK(run("shoot --q abc --gamma 2") == 1);
  CHECK(run("shoot --no-such-flag 2") == 1);
  CHECK(run("linearize --family linear") == 1);
  CHECK(run("shoot --family exp --gamma 2 --route sideways") == 1);

  // flags override the file, the file overrides defaults
  std::ofstream(d / "cfg.txt") << "family=exp\ngamma=5\n";
  CHECK(run("shoot --config " + (d / "cfg.txt").string() + " --gamma 2 --out " + (d / "c.csv").string()) == 0);
  CHECK(slurp(d / "c.csv").rfind("gamma,T,R,lambda,yprime_T\n2,0.765527", 0) == 0);

  const std::string sweep =
      "sweep --gamma-min 1 --gamma-max 12 --gamma-steps 5 --threads 2 --out " + (d / "w.csv").string();
  CHECK(run(sweep) == 0);
  const std::string first = slurp(d / "w.csv");
  CHECK(run(sweep) == 0);
  CHECK(slurp(d / "w.csv") == first);
  CHECK(fs::exists(d / "w.csv.svg"));

  CHECK(run("verify identities --out " + (d / "v1.txt").string()) == 0);
  CHECK(run("verify identities --out " + (d / "v2.txt").string()) == 0);
  CHECK(slurp(d / "v1.txt") == slurp(d / "v2.txt"));
  CHECK(run("verify regimes --n 2") == 0);
  CHECK(run("verify bogus") == 1);

  // an unreachable zero is a solver failure, not a config error
  CHECK(run("shoot --q 2 --p 0 --b 0 --gamma 30 --route r") == 2);
}
