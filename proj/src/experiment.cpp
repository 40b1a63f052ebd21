#include "robinlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "robinlab/comparison.hpp"
#include "robinlab/fem.hpp"
#include "robinlab/mesh_io.hpp"
#include "robinlab/rearrange.hpp"
#include "text.hpp"

namespace robinlab {
namespace {

namespace fs = std::filesystem;

constexpr double kMinOrder = 1.8;
constexpr std::size_t kMinGrid = 16;
constexpr int kMaxLevels = 6;

const std::vector<std::string> kKeys = {"domain", "family", "beta",   "h",      "levels",
                                        "t-grid", "s-grid", "tol-scale", "seed", "out"};

const std::map<std::string, std::string> kKeyHelp = {
    {"domain", "disk:R | ellipse:a,b | rect:w,h | polygon:@file | perturbed_disk:R,eps,k"},
    {"family", "domain text where one argument is lo:hi:n or a|b|c (rigidity-sweep)"},
    {"beta", "Robin parameter, > 0 (default 1)"},
    {"h", "target maximum edge length (default 0.1)"},
    {"levels", "uniform refinements for convergence, 0..6 (default 3)"},
    {"t-grid", "level grid points, >= 16 (default 200)"},
    {"s-grid", "measure grid points, >= 16 (default 1000)"},
    {"tol-scale", "multiplier on every check tolerance (default 1)"},
    {"seed", "recorded in the manifest (default 0)"},
    {"out", "output directory (required)"},
};

const std::map<std::string, std::string> kSubcommandHelp = {
    {"solve", "solve one domain and write the field and its profiles"},
    {"compare", "solve and run every comparison check against the radial reference"},
    {"convergence", "error against the closed form on the disk under uniform refinement"},
    {"rigidity-sweep", "deficit table and equality checks over a domain family"},
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(std::string_view(s).substr(start, pos - start)));
    if (pos == std::string::npos) return parts;
    start = pos + 1;
  }
}

double to_real(const std::string& key, const std::string& token) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw UsageError(key + ": malformed number '" + token + "'");
  }
  return value;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& token) {
  Int value = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end) {
    throw UsageError(key + ": malformed integer '" + token + "'");
  }
  return value;
}

int to_mode(const std::string& key, double value) {
  if (value != std::floor(value) || std::abs(value) > 1e6) {
    throw UsageError(key + ": angular mode must be an integer, got " + detail::shortest(value));
  }
  return static_cast<int>(value);
}

std::vector<Point> read_polygon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("domain: cannot read polygon file '" + path + "'");
  std::vector<Point> corners;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string x, y, extra;
    if (!(fields >> x >> y) || (fields >> extra)) {
      throw UsageError("domain: polygon file line must hold two coordinates: '" + line + "'");
    }
    corners.push_back({to_real("domain", x), to_real("domain", y)});
  }
  return corners;
}

DomainSpec make_domain(const std::string& kind, const std::vector<double>& args, const std::string& text) {
  const auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      throw UsageError("domain: '" + text + "' needs " + std::to_string(n) + " parameter(s)");
    }
  };
  try {
    if (kind == "disk") {
      expect(1);
      return DomainSpec::disk(args[0]);
    }
    if (kind == "ellipse") {
      expect(2);
      return DomainSpec::ellipse(args[0], args[1]);
    }
    if (kind == "rect") {
      expect(2);
      return DomainSpec::rectangle(args[0], args[1]);
    }
    if (kind == "perturbed_disk") {
      expect(3);
      return DomainSpec::perturbed_disk(args[0], args[1], to_mode("domain", args[2]));
    }
  } catch (const UsageError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw UsageError("domain: '" + text + "': " + e.what());
  }
  throw UsageError("domain: unknown kind '" + kind + "' in '" + text + "'");
}

std::pair<std::string, std::string> split_kind(const std::string& text, const std::string& key) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw UsageError(key + ": expected kind:parameters, got '" + text + "'");
  }
  return {trim(std::string_view(text).substr(0, colon)), text.substr(colon + 1)};
}

// Strips a "name=" prefix.
std::string argument_value(const std::string& arg) {
  const auto eq = arg.find('=');
  return eq == std::string::npos ? arg : trim(std::string_view(arg).substr(eq + 1));
}

std::vector<double> expand_argument(const std::string& arg) {
  const std::string value = argument_value(arg);
  if (value.find('|') != std::string::npos) {
    std::vector<double> out;
    for (const std::string& part : split(value, '|')) out.push_back(to_real("family", part));
    return out;
  }
  if (value.find(':') != std::string::npos) {
    const auto parts = split(value, ':');
    if (parts.size() != 3) throw UsageError("family: sweep must be lo:hi:n, got '" + value + "'");
    const double lo = to_real("family", parts[0]);
    const double hi = to_real("family", parts[1]);
    const auto n = to_integer<std::size_t>("family", parts[2]);
    if (n < 2) throw UsageError("family: sweep '" + value + "' needs at least two members");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
  }
  return {to_real("family", value)};
}

std::string canonical_domain(const DomainSpec& spec) {
  if (spec.kind() != DomainKind::polygon) return spec.describe();
  std::string out = "polygon:";
  for (const Point& p : spec.corners()) {
    out += detail::shortest(p.x) + ' ' + detail::shortest(p.y) + ';';
  }
  return out;
}

ExperimentKind parse_kind(const std::string& name) {
  if (name == "solve") return ExperimentKind::solve;
  if (name == "compare") return ExperimentKind::compare;
  if (name == "convergence") return ExperimentKind::convergence;
  if (name == "rigidity-sweep") return ExperimentKind::rigidity_sweep;
  throw UsageError("unknown subcommand '" + name + "'");
}

struct HelpRequested {
  std::string text;
};

void validate(const ExperimentConfig& c) {
  if (c.beta <= 0.0) throw UsageError("beta: must be positive, got " + detail::shortest(c.beta));
  if (c.h <= 0.0) throw UsageError("h: must be positive, got " + detail::shortest(c.h));
  if (c.tol_scale <= 0.0) throw UsageError("tol-scale: must be positive, got " + detail::shortest(c.tol_scale));
  if (c.levels < 0 || c.levels > kMaxLevels) {
    throw UsageError("levels: must lie in [0, " + std::to_string(kMaxLevels) + "], got " + std::to_string(c.levels));
  }
  if (c.t_grid < kMinGrid) throw UsageError("t-grid: needs at least 16 points, got " + std::to_string(c.t_grid));
  if (c.s_grid < kMinGrid) throw UsageError("s-grid: needs at least 16 points, got " + std::to_string(c.s_grid));
  if (c.kind == ExperimentKind::convergence && c.domain->kind() != DomainKind::disk) {
    throw UsageError("domain: convergence needs a disk, the only domain with a closed-form solution");
  }
}

// --- pipelines -----------------------------------------------------------------------

struct Writer {
  fs::path dir;
  std::vector<std::string> files;

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    files.push_back(name);
    return out;
  }
};

void write_report(Writer& w, const ComparisonReport& report) {
  auto json = w.open("report.json");
  report.write_json(json);
  auto csv = w.open("report.csv");
  report.write_csv(csv);
}

void write_field_artifacts(Writer& w, const ScalarField& u, const ExperimentConfig& c, double solver_tol) {
  {
    auto out = w.open("mesh.txt");
    write_mesh(out, u.mesh());
  }
  {
    auto out = w.open("field.txt");
    write_field(out, u);
  }
  write_field_manifest(w.dir / "field.manifest", {"mesh.txt", c.beta, solver_tol});
  w.files.push_back("field.manifest");
  const RearrangementProfile ustar = decreasing_rearrangement(u);
  {
    auto out = w.open("mu.csv");
    write_distribution_csv(out, ustar.distribution(), c.t_grid);
  }
  {
    auto out = w.open("ustar.csv");
    write_rearrangement_csv(out, ustar, c.s_grid);
  }
}

ComparisonReport run_field(const ExperimentConfig& c, Writer& w, std::ostream& log, bool compare) {
  auto mesh = std::make_shared<const TriangleMesh>(build_mesh(*c.domain, c.h));
  log << "mesh: " << mesh->num_vertices() << " vertices, " << mesh->num_triangles() << " triangles, h = "
      << mesh->h << '\n';
  const SolveOptions solve_options;
  const ScalarField u = solve_torsion(mesh, c.beta, solve_options);
  write_field_artifacts(w, u, c, solve_options.relative_tolerance);

  ComparisonReport report;
  if (compare) {
    CompareOptions options;
    options.grids = {c.s_grid, c.t_grid};
    options.tolerance.scale = c.tol_scale;
    report = compare_field(u, c.beta, options);
  } else {
    const double area = mesh_area(*mesh);
    report.meta = {mesh->domain ? mesh->domain->describe() : "mesh", c.beta, mesh->h, area};
    report.checks.push_back(identity_check("flux", "beta int_boundary u = |Omega|", c.beta * boundary_integral(u),
                                           area, 1e-9 * area));
  }
  report.meta.domain = canonical_domain(*c.domain);
  return report;
}

ComparisonReport run_convergence(const ExperimentConfig& c, Writer& w, std::ostream& log) {
  const DomainSpec& spec = *c.domain;
  const RadialReference exact(spec.area(), c.beta);
  TriangleMesh mesh = build_mesh(spec, c.h);
  ComparisonReport report;
  report.meta = {canonical_domain(spec), c.beta, mesh.h, mesh_area(mesh)};

  auto csv = w.open("orders.csv");
  csv << std::setprecision(17) << "level,h,vertices,max_error,order\n";
  double prev_error = 0.0, prev_h = 0.0;
  for (int level = 0; level <= c.levels; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);
    auto shared = std::make_shared<const TriangleMesh>(mesh);
    const ScalarField u = solve_torsion(shared, c.beta);
    double error = 0.0;
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
      error = std::max(error, std::abs(u[i] - exact.extended_value(norm(mesh.vertices[i]))));
    }
    csv << level << ',' << mesh.h << ',' << mesh.num_vertices() << ',' << error << ',';
    if (level > 0) {
      const double order = std::log(prev_error / error) / std::log(prev_h / mesh.h);
      csv << order;
      report.checks.push_back(upper_bound_check("order:" + std::to_string(level - 1) + "-" + std::to_string(level),
                                                "max-error order under refinement", kMinOrder, order, 0.0));
    }
    csv << '\n';
    log << "level " << level << ": h = " << mesh.h << ", max error = " << error << '\n';
    prev_error = error;
    prev_h = mesh.h;
  }
  return report;
}

ComparisonReport run_rigidity(const ExperimentConfig& c, Writer& w, std::ostream& log) {
  RigidityOptions options;
  options.s_points = c.s_grid;
  options.tolerance.scale = c.tol_scale;
  const std::vector<RigidityRow> rows = rigidity_probe(c.family, c.beta, c.h, options);
  {
    auto csv = w.open("deficit.csv");
    write_rigidity_csv(csv, rows);
  }
  for (const RigidityRow& r : rows) {
    log << r.domain << ": asymmetry = " << r.asymmetry << ", deficit = " << r.deficit << '\n';
  }
  ComparisonReport report;
  report.meta = {c.source, c.beta, rows.front().h, rows.front().area};
  report.checks = rigidity_checks(rows);
  return report;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::solve:
      return "solve";
    case ExperimentKind::compare:
      return "compare";
    case ExperimentKind::convergence:
      return "convergence";
    case ExperimentKind::rigidity_sweep:
      return "rigidity-sweep";
  }
  return "unknown";
}

DomainSpec parse_domain(const std::string& raw) {
  const std::string text = trim(raw);
  const auto [kind, rest] = split_kind(text, "domain");
  if (kind == "polygon") {
    if (rest.empty() || rest[0] != '@') throw UsageError("domain: polygon expects @file, got '" + text + "'");
    try {
      return DomainSpec::polygon(read_polygon_file(rest.substr(1)));
    } catch (const UsageError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw UsageError("domain: '" + text + "': " + e.what());
    }
  }
  std::vector<double> args;
  for (const std::string& a : split(rest, ',')) args.push_back(to_real("domain", a));
  return make_domain(kind, args, text);
}

std::vector<DomainSpec> parse_family(const std::string& raw) {
  const std::string text = trim(raw);
  const auto [kind, rest] = split_kind(text, "family");
  if (kind == "polygon") throw UsageError("family: polygon families are not supported");
  std::vector<std::vector<double>> args;
  std::size_t sweeping = 0;
  for (const std::string& a : split(rest, ',')) {
    args.push_back(expand_argument(a));
    if (args.back().size() > 1) ++sweeping;
  }
  if (sweeping > 1) throw UsageError("family: at most one parameter may sweep in '" + text + "'");
  std::size_t members = 1;
  for (const auto& a : args) members = std::max(members, a.size());
  std::vector<DomainSpec> family;
  for (std::size_t m = 0; m < members; ++m) {
    std::vector<double> pick;
    for (const auto& a : args) pick.push_back(a.size() == 1 ? a[0] : a[m]);
    family.push_back(make_domain(kind, pick, text));
  }
  return family;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot read '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(number) + ": expected key = value, got '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw UsageError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    entries.emplace_back(key, trim(std::string_view(line).substr(eq + 1)));
  }
  return entries;
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Robin torsion finite-element laboratory", "robinlab"};
  app.require_subcommand(1, 1);
  app.set_help_flag("--help", "Print this help and exit");
  std::map<std::string, std::string> flags;
  std::string config_path;
  for (const char* name : {"solve", "compare", "convergence", "rigidity-sweep"}) {
    CLI::App* sub = app.add_subcommand(name, kSubcommandHelp.at(name));
    sub->set_help_flag("--help", "Print this help and exit");
    for (const std::string& key : kKeys) {
      sub->add_option_function<std::string>(
          "--" + key, [&flags, key](const std::string& v) { flags[key] = v; }, kKeyHelp.at(key));
    }
    sub->add_option("--config", config_path, "key = value file; flags take precedence");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  ExperimentConfig config;
  config.kind = parse_kind(app.get_subcommands().front()->get_name());
  std::map<std::string, std::string> values;
  if (!config_path.empty()) {
    for (auto& [k, v] : read_config_file(config_path)) values[k] = v;
  }
  for (auto& [k, v] : flags) values[k] = v;

  const auto has = [&](const char* key) { return values.count(key) > 0; };
  if (has("beta")) config.beta = to_real("beta", values["beta"]);
  if (has("h")) config.h = to_real("h", values["h"]);
  if (has("tol-scale")) config.tol_scale = to_real("tol-scale", values["tol-scale"]);
  if (has("levels")) config.levels = to_integer<int>("levels", values["levels"]);
  if (has("t-grid")) config.t_grid = to_integer<std::size_t>("t-grid", values["t-grid"]);
  if (has("s-grid")) config.s_grid = to_integer<std::size_t>("s-grid", values["s-grid"]);
  if (has("seed")) config.seed = to_integer<std::uint64_t>("seed", values["seed"]);
  if (!has("out") || values["out"].empty()) throw UsageError("missing required key 'out'");
  config.out = values["out"];

  if (config.kind == ExperimentKind::rigidity_sweep) {
    if (!has("family")) throw UsageError("missing required key 'family'");
    if (has("domain")) throw UsageError("domain: not used by rigidity-sweep, pass --family");
    config.source = trim(values["family"]);
    config.family = parse_family(config.source);
  } else {
    if (!has("domain")) throw UsageError("missing required key 'domain'");
    if (has("family")) throw UsageError("family: only used by rigidity-sweep");
    config.source = trim(values["domain"]);
    config.domain = parse_domain(config.source);
  }
  validate(config);
  return config;
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "kind=" << to_string(c.kind) << '\n';
  if (c.domain) out << "domain=" << canonical_domain(*c.domain) << '\n';
  for (const DomainSpec& d : c.family) out << "member=" << canonical_domain(d) << '\n';
  out << "beta=" << detail::shortest(c.beta) << '\n'
      << "h=" << detail::shortest(c.h) << '\n'
      << "levels=" << c.levels << '\n'
      << "t-grid=" << c.t_grid << '\n'
      << "s-grid=" << c.s_grid << '\n'
      << "tol-scale=" << detail::shortest(c.tol_scale) << '\n'
      << "seed=" << c.seed << '\n';
  return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

RunOutcome run(const ExperimentConfig& config, std::ostream& log) {
  fs::create_directories(config.out);
  Writer w{config.out, {}};
  log << std::setprecision(6);

  ComparisonReport report;
  switch (config.kind) {
    case ExperimentKind::solve:
      report = run_field(config, w, log, false);
      break;
    case ExperimentKind::compare:
      report = run_field(config, w, log, true);
      break;
    case ExperimentKind::convergence:
      report = run_convergence(config, w, log);
      break;
    case ExperimentKind::rigidity_sweep:
      report = run_rigidity(config, w, log);
      break;
  }
  write_report(w, report);

  RunOutcome outcome;
  for (const CheckRecord& c : report.checks) {
    log << (c.pass ? "pass " : "FAIL ") << c.name << ": residual " << c.residual << ", tol " << c.tol << '\n';
    if (!c.pass) outcome.failed_checks.push_back(c.name);
  }
  outcome.status = outcome.failed_checks.empty() ? 0 : 1;

  {
    nlohmann::ordered_json summary;
    summary["status"] = outcome.status == 0 ? "pass" : "check_failure";
    summary["failed"] = outcome.failed_checks;
    auto out = w.open("summary.json");
    out << summary.dump(2) << '\n';
  }

  const std::string canonical = canonical_text(config);
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical);
  std::vector<std::string> listed = w.files;
  std::sort(listed.begin(), listed.end());
  nlohmann::ordered_json manifest;
  manifest["kind"] = to_string(config.kind);
  manifest["source"] = config.source;
  manifest["config"] = canonical;
  manifest["config_hash"] = "fnv1a64:" + hash.str();
  manifest["artifacts"] = listed;
  {
    std::ofstream out(w.dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (w.dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  outcome.artifacts = std::move(listed);
  outcome.artifacts.push_back("manifest.json");
  return outcome;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto fail = [&err](const char* status, const std::string& message, int code) {
    err << "error: " << message << '\n';
    err << nlohmann::json{{"status", status}, {"message", message}}.dump() << '\n';
    return code;
  };
  ExperimentConfig config;
  try {
    config = parse_config(args);
  } catch (const HelpRequested& help) {
    out << help.text;
    return 0;
  } catch (const InvalidInput& e) {
    return fail("usage_error", e.what(), 2);
  }
  try {
    const RunOutcome outcome = run(config, out);
    if (outcome.status != 0) {
      err << nlohmann::json{{"status", "check_failure"}, {"failed", outcome.failed_checks}}.dump() << '\n';
    }
    return outcome.status;
  } catch (const InvalidInput& e) {
    return fail("usage_error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what(), 3);
  }
}

}  // namespace robinlab
