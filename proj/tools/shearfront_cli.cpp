#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "shearfront/harness.hpp"

using namespace shearfront;

namespace {

int report_run(const RunResult& r, const std::string& out_dir) {
  const Json& summary = r.report.at("summary");
  std::cout << "checks: " << summary.at("passed").get<std::size_t>() << "/" << summary.at("checks").get<std::size_t>()
            << " passed, solver calls " << r.solver_calls << ", cache hits " << r.cache_hits << "\n";
  for (const Json& c : r.report.at("checks")) {
    if (c.at("status") != "pass") {
      std::cout << "FAIL " << c.at("name").get<std::string>();
      if (c.contains("detail")) std::cout << " (" << c.at("detail").get<std::string>() << ")";
      std::cout << "\n";
    }
  }
  // Per-amplitude failure log of the sections that hit a solver error.
  for (auto it = r.report.at("sections").begin(); it != r.report.at("sections").end(); ++it) {
    if (it.value().contains("failure")) std::cerr << it.key() << ": " << it.value().at("failure").get<std::string>() << "\n";
  }
  if (!out_dir.empty()) std::cout << "wrote " << out_dir << "/report.json\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Front speeds in shear flows at large amplitude"};
  app.require_subcommand(1);

  std::string config_path, report_path, out_dir;
  bool no_cache = false;
  int threads = 1, refine = 0;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (.json or .toml)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_flag("--no-cache", no_cache, "ignore and do not write the result cache");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--grid-refine", refine, "halve all spacings K times")->check(CLI::Range(0, 4));
  };
  CLI::App* run = app.add_subcommand("run", "full pipeline");
  CLI::App* speeds = app.add_subcommand("speeds", "speed sweep only");
  CLI::App* gammastar = app.add_subcommand("gammastar", "limit routes only");
  add_run_flags(run);
  add_run_flags(speeds);
  add_run_flags(gammastar);
  CLI::App* check = app.add_subcommand("check", "re-verify the checks of a report offline");
  check->add_option("report", report_path, "report.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) {
      std::ifstream in(report_path);
      Json report;
      try {
        report = Json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        std::cerr << report_path << ": " << e.what() << "\n";
        return 2;
      }
      std::vector<std::string> messages;
      const int code = check_report(report, messages);
      for (const auto& m : messages) std::cout << m << "\n";
      std::cout << (code == 0 ? "all checks pass" : "check failed") << "\n";
      return code;
    }
    const ExperimentConfig cfg = load_config(config_path);
    RunOptions opts;
    opts.mode = run->parsed() ? RunMode::run : speeds->parsed() ? RunMode::speeds : RunMode::gammastar;
    opts.out_dir = out_dir;
    opts.no_cache = no_cache;
    opts.threads = threads;
    opts.grid_refine = refine;
    const RunResult r = run_experiment(cfg, opts);
    return report_run(r, out_dir.empty() ? cfg.output_dir : out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
