#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robinlab/errors.hpp"
#include "robinlab/geometry.hpp"

namespace robinlab {

enum class ExperimentKind { solve, compare, convergence, rigidity_sweep };

std::string to_string(ExperimentKind kind);

/// Bad command line or config file. Maps to exit code 2.
class UsageError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::solve;
  /// Set for every kind except rigidity-sweep.
  std::optional<DomainSpec> domain;
  /// Members of a rigidity sweep.
  std::vector<DomainSpec> family;
  /// The domain or family text as given, kept for reports.
  std::string source;
  double beta = 1.0;
  double h = 0.1;
  int levels = 3;
  std::size_t t_grid = 200;
  std::size_t s_grid = 1000;
  double tol_scale = 1.0;
  /// Reserved; no stage is randomised yet.
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

/// disk:R | ellipse:a,b | rect:w,h | polygon:@file | perturbed_disk:R,eps,k
DomainSpec parse_domain(const std::string& text);

/// Domain grammar where any argument may be a sweep "lo:hi:n" or a list "a|b|c" and may
/// carry a "name=" prefix, e.g. "perturbed_disk:1,0:0.2:5,k=3". At most one argument sweeps.
std::vector<DomainSpec> parse_family(const std::string& text);

/// Parses "key = value" lines ('#' starts a comment). Keys use the long flag names.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// args excludes the program name: "<subcommand> [flags]". Flags override values from
/// --config. Throws UsageError naming the offending key or token.
ExperimentConfig parse_config(const std::vector<std::string>& args);

/// Canonical "key=value" lines of the configuration; the manifest hash covers this text.
std::string canonical_text(const ExperimentConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

struct RunOutcome {
  /// 0 when every enabled check passes, 1 otherwise.
  int status = 0;
  std::vector<std::string> failed_checks;
  /// Files written, relative to the output directory.
  std::vector<std::string> artifacts;
};

/// Runs the pipeline and writes its artifacts, a summary.json and a manifest.json.
/// Solver failures propagate as exceptions.
RunOutcome run(const ExperimentConfig& config, std::ostream& log);

/// Command-line entry point. Exit codes: 0 pass, 1 check failure, 2 usage, 3 runtime.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robinlab
