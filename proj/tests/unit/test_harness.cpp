#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "shearfront/harness.hpp"

using namespace shearfront;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

Json small_doc() {
  return Json::parse(R"({
    "name": "unit",
    "flow": {"type": "cosine"},
    "reaction": {"type": "ignition", "theta": 0.25},
    "grid": {"dim": 1, "points": 16, "n_x": 241},
    "A_schedule": [1, 2, 4],
    "routes": {"sweep": {"gauge_A": 2, "barrier_A": 4}, "viscosity": {"schedule": [1, 2, 4]}}
  })");
}

std::string error_path(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("shearfront-unit-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config errors name the offending field") {
  auto d = small_doc();
  d["reaction"]["thetta"] = 0.3;
  CHECK(error_path(d) == "reaction.thetta");

  d = small_doc();
  d["reaction"]["theta"] = 1.5;
  CHECK(error_path(d) == "reaction.theta");

  d = small_doc();
  d.erase("flow");
  CHECK(error_path(d) == "flow");

  d = small_doc();
  d["A_schedule"] = Json::array({1, 4, 2});
  CHECK(error_path(d) == "A_schedule[2]");

  d = small_doc();
  d["routes"]["sweep"]["gauge_A"] = 3;
  CHECK(error_path(d) == "routes.sweep");

  d = small_doc();
  d["routes"]["cutoff"] = true;
  CHECK(error_path(d) == "routes.cutoff");

  d = small_doc();
  d["grid"]["n_x"] = 10.5;
  CHECK(error_path(d) == "grid.n_x");

  CHECK(error_path(small_doc()) == "<none>");
}

TEST_CASE("TOML and JSON configs are equivalent") {
  const std::string toml = R"(
name = "unit"
A_schedule = [1, 2, 4]
[flow]
type = "cosine"
[reaction]
type = "ignition"
theta = 0.25
[grid]
dim = 1
points = 16
n_x = 241
[routes.sweep]
gauge_A = 2
barrier_A = 4
[routes.viscosity]
schedule = [1, 2, 4]
)";
  const auto a = parse_config(config_document(toml, true));
  const auto b = parse_config(small_doc());
  CHECK(a.canonical.dump() == b.canonical.dump());

  try {
    config_document("x = [1, 2\n", true, "c.toml");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(e.path().rfind("c.toml:", 0) == 0);
  }
  try {
    config_document("{\n  \"a\": ,\n}", false, "c.json");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "c.json:2:8");
  }
}

TEST_CASE("asymptote fit uses the top half") {
  std::vector<double> A{1, 2, 4, 8, 16, 32}, c;
  for (double a : A) c.push_back(a < 5 ? 1.0 : 0.07 * a + 0.1);
  const auto fit = fit_asymptote(A, c);
  CHECK(fit.used == 3);
  CHECK(fit.gamma == Approx(0.07).epsilon(1e-12));
  CHECK(fit.intercept == Approx(0.1).epsilon(1e-10));
  CHECK(fit.residual < 1e-12);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("runs are deterministic, cached and re-verifiable") {
  const auto cfg = parse_config(small_doc());
  const auto dir = scratch_dir("run");
  RunOptions o;
  o.out_dir = (dir / "a").string();
  o.no_cache = true;
  const auto r1 = run_experiment(cfg, o);
  CHECK(r1.exit_code == 0);
  CHECK(r1.failures.empty());
  CHECK(r1.solver_calls > 0);
  o.out_dir = (dir / "b").string();
  const auto r2 = run_experiment(cfg, o);
  CHECK(r1.report.dump() == r2.report.dump());

  o.no_cache = false;
  o.out_dir = (dir / "c").string();
  const auto c1 = run_experiment(cfg, o);
  const auto c2 = run_experiment(cfg, o);
  CHECK(c2.solver_calls == 0);
  CHECK(c2.cache_hits > 0);
  CHECK(c1.report.dump() == c2.report.dump());
  CHECK(c1.report.dump() == r1.report.dump());

  for (const char* f : {"report.json", "speeds.csv", "gammastar.csv", "timings.json"}) CHECK(fs::exists(dir / "c" / f));
  std::ifstream csv(dir / "c" / "speeds.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("# shearfront", 0) == 0);

  const auto& entries = r1.report["sections"]["sweep"]["entries"];
  CHECK_FALSE(entries[0].contains("profile_change"));
  CHECK(entries[1]["profile_change"].get<double>() > 0.0);
  const auto& changes = r1.report["sections"]["viscosity"]["profile_changes"];
  REQUIRE(changes.size() == 2);
  CHECK(changes[1] == entries[2]["profile_change"]);

  std::vector<std::string> msgs;
  CHECK(check_report(r1.report, msgs) == 0);
  CHECK(msgs.empty());

  // a report whose data no longer supports its stored verdicts is rejected
  Json bad = r1.report;
  auto& e = bad["sections"]["sweep"]["entries"][1];
  e["certificate"]["bound"] = e["gamma_A"].get<double>() * 0.5;
  msgs.clear();
  CHECK(check_report(bad, msgs) == 1);
  CHECK_FALSE(msgs.empty());

  RunOptions speeds = o;
  speeds.mode = RunMode::speeds;
  speeds.out_dir = (dir / "d").string();
  const auto s = run_experiment(cfg, speeds);
  CHECK(s.report["sections"].contains("sweep"));
  CHECK_FALSE(s.report["sections"].contains("viscosity"));
}

TEST_CASE("a failing check gives exit code 1") {
  auto d = small_doc();
  d["tolerances"] = {{"certificate_rel", 1e-9}};
  const auto cfg = parse_config(d);
  RunOptions o;
  o.out_dir = scratch_dir("fail").string();
  o.no_cache = true;
  const auto r = run_experiment(cfg, o);
  CHECK(r.exit_code == 1);
  CHECK_FALSE(r.failures.empty());
  CHECK(r.report["summary"]["status"] == "fail");
}
