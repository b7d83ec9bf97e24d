#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shearfront/error.hpp"
#include "shearfront/serialize.hpp"

namespace shearfront {

/// Config rejected; `path` names the offending field ("reaction.theta") or
/// the line:column of a syntax error.
class ConfigError : public InputError {
 public:
  ConfigError(std::string path, const std::string& message)
      : InputError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct FlowSpec {
  std::string type = "cosine";  ///< zero | cosine | two_mode | custom
  int k = 1;
  double amplitude = 1.0;
  double offset = 0.0;
  Field samples;  ///< custom only, one value per torus node
};

struct ReactionSpec {
  std::string type = "ignition";  ///< ignition | kpp | cutoff
  double theta = 0.25;
  double fprime0 = 1.0;
  std::string form = "logistic";
  double theta_prime = 0.0;  ///< cutoff only
};

struct GridSpec {
  int dim = 1;
  int points = 64;
  int n_x = 961;
};

struct Tolerances {
  double newton = 1e-10;
  double tol_bc = 1e-6;
  double identity_reaction = 1e-3;
  double identity_energy = 5e-3;
  double monotone = 1e-10;
  double gauge = 1e-10;
  double bound_slack = 1e-8;
  double zero_flow_invariance = 1e-6;
  double certificate_rel = 0.05;
  double certificate_slack = 1e-8;
  double fit_rel = 0.02;
  double limit_identity = 5e-3;
  double lipschitz_slack = 1e-4;
  double route_rel = 0.03;
  double asymptotic_large = 0.9;
  double asymptotic_slope_rel = 0.05;
};

struct ExperimentConfig {
  std::string name;
  FlowSpec flow;
  ReactionSpec reaction;
  GridSpec grid;
  std::vector<double> A_schedule;

  bool sweep = false;
  bool certificate = true;
  double barrier_A = 0.0;  ///< 0 disables the barrier check
  double gauge_A = 0.0;    ///< 0 disables the shifted restart
  bool viscosity = false;
  std::vector<double> viscosity_schedule;
  bool cutoff = false;
  std::vector<double> theta_primes;
  std::vector<double> cutoff_schedule;
  CutoffModel cutoff_model = CutoffModel::log_expansion;
  bool kpp_formula = false;
  bool asymptotic = false;
  std::vector<double> M_list;
  bool lipschitz = false;
  double lipschitz_shift = 0.05;

  Tolerances tol;
  std::string output_dir = "out";
  bool cache = true;
  bool dump_profiles = false;

  /// Canonical form (defaults filled in), the input of every cache key.
  Json canonical;
};

/// Parses and validates a config document. Throws ConfigError.
ExperimentConfig parse_config(const Json& doc);
/// Parses config text, TOML when `toml_format`, JSON otherwise. Syntax
/// errors become ConfigError with path origin:line:column.
Json config_document(const std::string& text, bool toml_format, const std::string& origin = "<config>");
/// Reads `path` (TOML for a .toml extension, JSON otherwise).
ExperimentConfig load_config(const std::filesystem::path& path);

FlowProfile make_flow(const FlowSpec& spec, const TorusGrid& torus);
Reaction make_reaction(const ReactionSpec& spec);

enum class RunMode { run, speeds, gammastar };

struct RunOptions {
  RunMode mode = RunMode::run;
  std::string out_dir;    ///< overrides the config when non-empty
  bool no_cache = false;
  int threads = 1;
  int grid_refine = 0;
  std::string cache_dir;  ///< defaults to <out>/cache
  bool write_files = true;
};

struct RunResult {
  Json report;
  Json timings;
  int exit_code = 0;
  int solver_calls = 0;
  int cache_hits = 0;
  std::vector<std::string> failures;  ///< names of failing checks
};

/// Executes the enabled routes, writes report.json, speeds.csv,
/// gammastar.csv and timings.json. Exit code 0 iff every check passes.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Least squares c = gamma A + b over the top half of the (A, c) pairs.
struct AsymptoteFit {
  double gamma = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root mean square of the fit residuals
  double gamma_stderr = 0.0;
  std::size_t used = 0;
};
AsymptoteFit fit_asymptote(const std::vector<double>& A, const std::vector<double>& c);
AsymptoteFit fit_asymptote(const SpeedCurve& curve);

/// One pass/fail entry of a report.
Json make_check(const std::string& name, bool pass, double value, double limit, double margin,
                const std::string& detail = {});

/// Sandwich bounds, strict positivity and tail convergence of a sweep
/// section (as stored in a report) given max alpha and c*(0, f).
Json verify_bounds(const Json& sweep, double alpha_max, bool zero_flow, double c0, const Tolerances& tol);

/// kpp_limit_speed over f'(0) = M fprime0 for each M, with the large-M,
/// small-M and monotonicity checks.
Json asymptotic_regime_checks(const FlowProfile& flow, double fprime0, const std::vector<double>& M_list,
                              const Tolerances& tol);

/// Recomputes every check from the data sections of a report.
Json build_checks(const Json& report);
/// Re-verifies a report offline: 0 when all checks pass and agree with the
/// stored statuses, 1 otherwise. Differences are appended to `messages`.
int check_report(const Json& report, std::vector<std::string>& messages);

/// Hex SHA-256 of a string.
std::string sha256_hex(const std::string& data);

}  // namespace shearfront
