#include "repcrash/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "repcrash/error.hpp"
#include "repcrash/run_config.hpp"
#include "repcrash/workload_dsl.hpp"

namespace repcrash {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::optional<std::string> mode, trace, dsl, checker, out, config, schedule;
  std::optional<std::string> budget, eps, min_pts, block_size, cache_line_size,
      timeout, jobs, static_key;
  std::vector<std::string> root_causes;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--mode", f.mode, "POSIX or MMIO");
  cmd->add_option("--trace", f.trace, "trace file");
  cmd->add_option("--dsl", f.dsl, "workload DSL file");
  cmd->add_option("--checker", f.checker, "checker command line");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--budget", f.budget, "schedule budget per behavior");
  cmd->add_option("--eps", f.eps, "DBSCAN radius in seq units");
  cmd->add_option("--min-pts", f.min_pts, "DBSCAN core threshold");
  cmd->add_option("--block-size", f.block_size, "POSIX block size");
  cmd->add_option("--cache-line-size", f.cache_line_size, "MMIO cache line size");
  cmd->add_option("--timeout", f.timeout, "checker timeout in seconds");
  cmd->add_option("--jobs", f.jobs, "concurrent representatives");
  cmd->add_option("--static-key", f.static_key, "full or innermost");
  cmd->add_option("--root-cause", f.root_causes, "FILE:LINE for correlated counts");
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (f.config) load_config_file(cfg, *f.config);
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) apply_config_value(cfg, key, *v);
  };
  set("mode", f.mode);
  set("checker", f.checker);
  set("out", f.out);
  set("budget", f.budget);
  set("dbscan_eps", f.eps);
  set("dbscan_min_pts", f.min_pts);
  set("block_size", f.block_size);
  set("cache_line_size", f.cache_line_size);
  set("timeout", f.timeout);
  set("jobs", f.jobs);
  set("static_key", f.static_key);
  if (!f.root_causes.empty()) {
    cfg.root_causes.clear();
    for (const auto& rc : f.root_causes) cfg.root_causes.push_back(parse_source_loc(rc));
  }
  cfg.analysis.model.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

Trace load_input(const Flags& f, const RunConfig& cfg) {
  if (f.trace.has_value() == f.dsl.has_value()) {
    throw ConfigError("exactly one of --trace and --dsl is required");
  }
  if (f.dsl) {
    return synth_workload(read_file(*f.dsl), cfg.mode.value_or(Mode::kPosix),
                          fs::path(*f.dsl).filename().string());
  }
  Trace trace = parse_trace(read_file(*f.trace));
  if (cfg.mode && *cfg.mode != trace.meta.mode) {
    throw ModeMismatch("trace mode is " + std::string(to_string(trace.meta.mode)) +
                       " but " + std::string(to_string(*cfg.mode)) + " was requested");
  }
  return trace;
}

std::string file_safe(const std::string& id) {
  std::string out;
  for (char c : id) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                          c == '-' || c == '_'
                      ? c
                      : '_');
  }
  return out;
}

void write_analysis(const Analysis& a, const fs::path& dir) {
  write_file(dir / "groups.json", groups_json(a.groups, a.behaviors));
  write_file(dir / "graph.dot", export_dot(a.graph));
  for (std::size_t i = 0; i < a.behaviors.size(); ++i) {
    write_file(dir / "behaviors" /
                   (std::to_string(i) + "-" + file_safe(a.behaviors[i].id) + ".dot"),
               export_dot(a.behaviors[i].subgraph));
  }
  nlohmann::ordered_json s;
  s["app"] = a.trace.meta.app_name;
  s["mode"] = to_string(a.trace.meta.mode);
  s["ops"] = a.trace.ops.size();
  s["nodes"] = a.graph.size();
  s["edges"] = a.graph.edges().size();
  s["behaviors"] = a.behaviors.size();
  s["groups"] = a.groups.size();
  write_file(dir / "summary.json", s.dump(2) + "\n");
}

void write_outcome(const TestOutcome& o, const fs::path& dir) {
  write_file(dir / "bugs.json", bugs_json(o.bugs));
  write_file(dir / "stats.json", stats_json(o.stats));
  for (std::size_t i = 0; i < o.bugs.size(); ++i) {
    write_file(dir / "schedules" / ("bug-" + std::to_string(i + 1) + ".json"),
               schedule_json(o.bugs[i].schedule));
  }
}

void print_outcome(const TestOutcome& o, std::ostream& out) {
  out << "bugs " << o.bugs.size() << ", schedules " << o.stats.schedules_tested
      << ", states checked " << o.stats.states_checked << ", oracle errors "
      << o.stats.oracle_errors << (o.stats.partial_coverage ? ", partial coverage" : "")
      << "\n";
}

int cmd_analyze(const Flags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const Analysis a = analyze(load_input(f, cfg), cfg.analysis);
  write_analysis(a, cfg.out_dir);
  out << "ops " << a.trace.ops.size() << ", nodes " << a.graph.size() << ", edges "
      << a.graph.edges().size() << ", behaviors " << a.behaviors.size()
      << ", groups " << a.groups.size() << "\n";
  return kExitOk;
}

int cmd_test(const Flags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  if (cfg.checker.empty()) throw ConfigError("test requires --checker");
  const Analysis a = analyze(load_input(f, cfg), cfg.analysis);
  write_analysis(a, cfg.out_dir);
  const TestOutcome o = test_groups(a.groups, a.behaviors, a.graph, a.trace,
                                    cfg.analysis.model, test_options(cfg));
  write_outcome(o, cfg.out_dir);
  print_outcome(o, out);
  return o.bugs.empty() ? kExitOk : kExitBugs;
}

int cmd_exhaustive(const Flags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const Trace trace = load_input(f, cfg);
  const PersistenceGraph graph = build_graph(
      trace, model_edges(trace, cfg.analysis.model), cfg.analysis.static_key);
  const StateSet states = exhaustive_states(graph, trace, cfg.analysis.model, cfg.budget);
  write_file(cfg.out_dir / "states.json", states_json(states));
  out << "schedules " << states.schedules << ", distinct states "
      << states.states.size() << "\n";
  if (cfg.checker.empty()) return kExitOk;
  const TestOutcome o = test_exhaustive(graph, trace, cfg.analysis.model, test_options(cfg));
  write_outcome(o, cfg.out_dir);
  print_outcome(o, out);
  return o.bugs.empty() ? kExitOk : kExitBugs;
}

int cmd_replay(const Flags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  if (!f.schedule) throw ConfigError("replay requires --schedule");
  const Trace trace = load_input(f, cfg);
  const CrashSchedule s = parse_schedule_json(read_file(*f.schedule));
  const Replayer replayer(trace, cfg.analysis.model);
  const CrashState state = replayer.replay(s.order());
  const fs::path dir = cfg.out_dir / "state";
  out << "digest " << state.digest() << "\n" << state.describe();
  if (cfg.checker.empty()) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    state.materialize(dir);
    return kExitOk;
  }
  CheckerSpec checker{cfg.checker, cfg.timeout};
  const CheckResult r = run_oracle(state, checker, dir);
  out << "verdict " << to_string(r.verdict) << "\n" << r.oracle_output;
  if (r.verdict == Verdict::kOracleError) return kExitRuntime;
  return r.verdict == Verdict::kInconsistent ? kExitBugs : kExitOk;
}

int cmd_synth(const Flags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  if (!f.dsl) throw ConfigError("synth requires --dsl");
  const Trace trace = synth_workload(read_file(*f.dsl), cfg.mode.value_or(Mode::kPosix),
                                     fs::path(*f.dsl).filename().string());
  if (f.out) {
    write_file(*f.out, serialize_trace(trace));
  } else {
    out << serialize_trace(trace);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Representative crash-consistency testing"};
  app.require_subcommand(1);
  Flags flags;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "build graph, behaviors, groups");
  CLI::App* test_cmd = app.add_subcommand("test", "check representative crash states");
  CLI::App* exhaustive_cmd =
      app.add_subcommand("exhaustive", "enumerate every crash state of the trace");
  CLI::App* replay_cmd = app.add_subcommand("replay", "replay one stored schedule");
  CLI::App* synth_cmd = app.add_subcommand("synth", "compile a workload DSL to a trace");
  for (CLI::App* cmd : {analyze_cmd, test_cmd, exhaustive_cmd, replay_cmd, synth_cmd}) {
    add_common(cmd, flags);
  }
  replay_cmd->add_option("--schedule", flags.schedule, "schedule JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(flags, out);
    if (*test_cmd) return cmd_test(flags, out);
    if (*exhaustive_cmd) return cmd_exhaustive(flags, out);
    if (*replay_cmd) return cmd_replay(flags, out);
    if (*synth_cmd) return cmd_synth(flags, out);
  } catch (const ReplayError& e) {
    err << "error [" << e.stage() << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const Error& e) {
    err << "error [" << e.stage() << "]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace repcrash
