// SPDX-License-Identifier: Apache-2.0
#include "specagent/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specagent/analysis.hpp"
#include "specagent/http_backend.hpp"
#include "specagent/orchestrator.hpp"
#include "specagent/scripted_backend.hpp"
#include "specagent/simulator.hpp"
#include "specagent/tools.hpp"
#include "specagent/trace.hpp"

namespace specagent {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

/// Tries X, X.json, configs/X, configs/X.json.
fs::path resolve_config(const std::string& name) {
  for (const fs::path& p : {fs::path(name), fs::path(name + ".json"), fs::path("configs") / name,
                            fs::path("configs") / (name + ".json")}) {
    if (fs::is_regular_file(p)) return p;
  }
  throw UsageError("config '" + name + "' not found");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ----------------------------------------------------------------------------
// Config file
// ----------------------------------------------------------------------------

/// One JSON document with optional sections: run, tools, backends,
/// http_tools, tasks, profile, simulate.
struct ConfigFile {
  json doc = json::object();

  const json* section(const char* name) const {
    auto it = doc.find(name);
    return it == doc.end() ? nullptr : &*it;
  }
};

ConfigFile load_config(const std::optional<std::string>& name) {
  ConfigFile cfg;
  if (!name) return cfg;
  const auto path = resolve_config(*name);
  try {
    cfg.doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  if (!cfg.doc.is_object()) throw UsageError("config " + path.string() + " must be a JSON object");
  static const std::set<std::string> known = {"run", "tools", "backends", "http_tools", "tasks", "profile", "simulate"};
  for (const auto& [k, _] : cfg.doc.items()) {
    if (!known.contains(k)) throw UsageError("unknown config section '" + k + "'");
  }
  return cfg;
}

ToolsConfig tools_config(const ConfigFile& cfg) {
  ToolsConfig tc;
  if (const json* s = cfg.section("tools")) {
    for (const auto& [k, v] : s->items()) {
      if (k == "max_results") tc.max_results = v.get<std::size_t>();
      else if (k == "content_cap") tc.content_cap = v.get<std::size_t>();
      else if (k == "cache_capacity") tc.cache_capacity = v.get<std::size_t>();
      else if (k == "cache_enabled") tc.cache_enabled = v.get<bool>();
      else throw UsageError("unknown tools field '" + k + "'");
    }
  }
  return tc;
}

HttpBackendConfig http_backend_config(const json& j) {
  HttpBackendConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "base_url") c.base_url = v.get<std::string>();
    else if (k == "path") c.path = v.get<std::string>();
    else if (k == "model") c.model = v.get<std::string>();
    else if (k == "api_key_env") c.api_key_env = v.get<std::string>();
    else if (k == "timeout_ms") c.timeout_ms = v.get<int>();
    else if (k == "max_retries") c.max_retries = v.get<int>();
    else if (k == "backoff_initial_ms") c.backoff_initial_ms = v.get<int>();
    else if (k == "system_prompt") c.system_prompt = v.get<std::string>();
    else if (k == "action_only_directive") c.action_only_directive = v.get<std::string>();
    else if (k == "suppress_reasoning_channel") c.suppress_reasoning_channel = v.get<bool>();
    else throw UsageError("unknown backend field '" + k + "'");
  }
  if (c.base_url.empty()) throw UsageError("backend base_url is required");
  return c;
}

HttpToolConfig http_tool_config(const json& j) {
  HttpToolConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "search_base_url") c.search_base_url = v.get<std::string>();
    else if (k == "search_path") c.search_path = v.get<std::string>();
    else if (k == "search_key_env") c.search_key_env = v.get<std::string>();
    else if (k == "search_key_header") c.search_key_header = v.get<std::string>();
    else if (k == "search_count") c.search_count = v.get<std::size_t>();
    else if (k == "reader_base_url") c.reader_base_url = v.get<std::string>();
    else if (k == "reader_key_env") c.reader_key_env = v.get<std::string>();
    else if (k == "other_tool_base_url") c.other_tool_base_url = v.get<std::string>();
    else if (k == "timeout_ms") c.timeout_ms = v.get<int>();
    else if (k == "max_retries") c.max_retries = v.get<int>();
    else if (k == "backoff_initial_ms") c.backoff_initial_ms = v.get<int>();
    else throw UsageError("unknown http_tools field '" + k + "'");
  }
  return c;
}

sim::LatencyDist latency_dist(const json& j, const std::string& name) {
  if (j.is_number()) return sim::LatencyDist::constant(j.get<double>());
  if (!j.is_object()) throw UsageError("simulate." + name + " must be a number or an object");
  const auto family = j.value("family", std::string("constant"));
  const double mean = j.at("mean").get<double>();
  if (family == "constant") return sim::LatencyDist::constant(mean);
  if (family == "exponential") return sim::LatencyDist::exponential(mean);
  throw UsageError("simulate." + name + ": unknown family '" + family + "'");
}

sim::SimParams sim_params(const ConfigFile& cfg) {
  const json* s = cfg.section("simulate");
  if (!s) throw UsageError("config has no simulate section");
  sim::SimParams p;
  for (const auto& [k, v] : s->items()) {
    if (k == "r_base") p.r_base = latency_dist(v, k);
    else if (k == "r_slm") p.r_slm = latency_dist(v, k);
    else if (k == "g_llm") p.g_llm = latency_dist(v, k);
    else if (k == "v") p.v = latency_dist(v, k);
    else if (k == "e_tool") p.e_tool = latency_dist(v, k);
    else if (k == "accept_prob") p.accept_prob = v.get<double>();
    else if (k == "steps") p.steps = v.get<std::size_t>();
    else if (k == "seed") p.seed = v.get<std::uint64_t>();
    else if (k == "prefetch") p.prefetch = v.get<bool>();
    else if (k == "sampling") {
      const auto text = v.get<std::string>();
      if (text == "quota") p.sampling = sim::AcceptanceSampling::Quota;
      else if (text == "bernoulli") p.sampling = sim::AcceptanceSampling::Bernoulli;
      else throw UsageError("simulate.sampling must be quota or bernoulli");
    } else {
      throw UsageError("unknown simulate field '" + k + "'");
    }
  }
  return p;
}

// ----------------------------------------------------------------------------
// Options shared across commands
// ----------------------------------------------------------------------------

struct Options {
  std::optional<std::string> config;
  std::vector<std::string> scenarios;
  std::optional<std::string> fixtures;
  std::optional<std::string> trace_out;
  std::vector<std::string> trace_in;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::size_t> tau_think;
  std::optional<std::string> policy;
  bool prefetch = false;
  bool no_prefetch = false;
  std::size_t parallel = 1;
  std::optional<double> target_rate;
  std::optional<std::string> question;
  std::optional<std::string> input;
  std::string report = "all";
  std::size_t sweep = 0;
  bool baseline = false;
};

RunConfig run_config(const ConfigFile& cfg, const Options& o) {
  RunConfig rc;
  try {
    if (const json* s = cfg.section("run")) rc = run_config_from_json(s->dump(), rc);
    if (o.seed) rc.seed = *o.seed;
    if (o.tau) rc.tau = *o.tau;
    if (o.tau_think) rc.tau_think = *o.tau_think;
    if (o.policy) rc.verifier_policy = parse_verifier_policy(*o.policy);
    if (o.prefetch) rc.prefetch = true;
    if (o.no_prefetch) rc.prefetch = false;
    validate(rc);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return rc;
}

struct ScenarioInput {
  ScenarioScript script;
  fs::path fixtures;
};

/// A scenario is a JSON file or a directory holding scenario.json and,
/// unless --fixtures is given, tools.json.
ScenarioInput load_scenario_input(const std::string& name, const std::optional<std::string>& fixtures) {
  fs::path scenario;
  fs::path tools;
  if (fs::is_directory(name)) {
    scenario = fs::path(name) / "scenario.json";
    tools = fs::path(name) / "tools.json";
  } else if (fs::is_regular_file(name)) {
    scenario = name;
  } else if (fs::is_regular_file(name + ".json")) {
    scenario = name + ".json";
  } else {
    throw UsageError("scenario '" + name + "' not found");
  }
  if (fixtures) tools = *fixtures;
  if (tools.empty() || !fs::is_regular_file(tools)) {
    throw UsageError("no tool fixtures for scenario '" + name + "' (use --fixtures)");
  }
  return {load_scenario_file(scenario), tools};
}

std::string summary_header() { return "task_id,mode,status,steps,accepted,fallbacks,intervention_rate,wall_ms,final_answer\n"; }

std::string summary_row(const RunReport& r, const char* mode) {
  return csv_field(r.trajectory.task_id) + "," + mode + "," + std::string(to_string(r.status)) + "," +
         std::to_string(r.step_count) + "," + std::to_string(r.accept_count) + "," + std::to_string(r.fallback_count) +
         "," + fmt("%.3f", r.intervention_rate) + "," + std::to_string(r.wall_ms.count()) + "," +
         csv_field(r.trajectory.final_answer.value_or("")) + "\n";
}

std::vector<RunReport> execute_runs(const ConfigFile& cfg, const Options& o, bool baseline, std::ostream& err) {
  const RunConfig rc = run_config(cfg, o);
  const ToolsConfig tc = tools_config(cfg);
  if (o.parallel == 0) throw UsageError("--parallel must be >= 1");

  if (!o.scenarios.empty()) {
    std::vector<ScenarioInput> inputs;
    for (const auto& s : o.scenarios) inputs.push_back(load_scenario_input(s, o.fixtures));
    return run_tasks_parallel(inputs.size(), o.parallel, [&](std::size_t i) {
      const auto& in = inputs[i];
      auto model = std::make_shared<ScriptedBackend>(in.script);
      auto tools = std::make_shared<ToolExecutor>(
          std::make_shared<FixtureToolBackend>(FixtureToolBackend::load(in.fixtures)), tc);
      ManualClock clock;
      Orchestrator orch(Backends{model, model, model}, tools, clock, rc);
      const std::string question = o.question.value_or(in.script.question);
      const std::string task_id = in.script.task_id.empty() ? "task" + std::to_string(i) : in.script.task_id;
      return baseline ? orch.run_baseline(question, task_id) : orch.run_task(question, task_id);
    });
  }

  // Live endpoints.
  const json* b = cfg.section("backends");
  const json* t = cfg.section("http_tools");
  if (!b || !t) throw UsageError("without --scenario the config needs backends and http_tools sections");
  auto make = [&](const char* role) -> std::shared_ptr<ModelBackend> {
    if (!b->contains(role)) throw UsageError(std::string("backends.") + role + " is required");
    return std::make_shared<HttpChatBackend>(http_backend_config(b->at(role)));
  };
  Backends backends{make("slm"), make("llm"), b->contains("critic") ? make("critic") : nullptr};
  if (!backends.critic) backends.critic = backends.llm;
  const auto tool_cfg = http_tool_config(*t);

  std::vector<std::pair<std::string, std::string>> tasks;
  if (o.question) {
    tasks.emplace_back("task0", *o.question);
  } else if (const json* ts = cfg.section("tasks")) {
    for (std::size_t i = 0; i < ts->size(); ++i) {
      const auto& e = (*ts)[i];
      tasks.emplace_back(e.value("task_id", "task" + std::to_string(i)), e.at("question").get<std::string>());
    }
  }
  if (tasks.empty()) throw UsageError("no tasks: pass --question or add a tasks section");
  err << "running " << tasks.size() << " task(s) against live endpoints\n";
  return run_tasks_parallel(tasks.size(), o.parallel, [&](std::size_t i) {
    auto tools = std::make_shared<ToolExecutor>(std::make_shared<HttpToolBackend>(tool_cfg, backends.llm), tc);
    SteadyClock clock;
    Orchestrator orch(backends, tools, clock, rc);
    return baseline ? orch.run_baseline(tasks[i].second, tasks[i].first)
                    : orch.run_task(tasks[i].second, tasks[i].first);
  });
}

// ----------------------------------------------------------------------------
// Commands
// ----------------------------------------------------------------------------

int cmd_run(const Options& o, bool baseline, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(o.config);
  const auto reports = execute_runs(cfg, o, baseline, err);
  std::string traces;
  out << summary_header();
  for (const auto& r : reports) {
    traces += serialize_trace(r.trajectory);
    out << summary_row(r, baseline ? "baseline" : "speculative");
    if (r.error) err << r.trajectory.task_id << ": " << *r.error << "\n";
  }
  if (o.trace_out) {
    write_file(*o.trace_out, traces);
    err << "wrote " << reports.size() << " trajectory(ies) to " << *o.trace_out << "\n";
  }
  return kExitOk;
}

std::vector<Trajectory> load_traces(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("--trace-in is required");
  std::vector<Trajectory> all;
  for (const auto& p : paths) {
    try {
      auto ts = parse_traces(read_file(p));
      all.insert(all.end(), std::make_move_iterator(ts.begin()), std::make_move_iterator(ts.end()));
    } catch (const TraceParseError& e) {
      throw std::runtime_error(p + ": record " + std::to_string(e.record()) + ": " + e.what());
    }
  }
  return all;
}

std::size_t first_differing_line(const std::string& a, const std::string& b) {
  std::istringstream sa(a), sb(b);
  std::string la, lb;
  std::size_t i = 0;
  while (true) {
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    if (!ga && !gb) return i;
    if (ga != gb || la != lb) return i;
    ++i;
  }
}

/// Without --scenario: checks that the recorded traces re-serialize to the same
/// bytes. With --scenario: re-runs them and compares against the recording.
int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.trace_in.size() != 1) throw UsageError("replay takes exactly one --trace-in");
  const std::string recorded = read_file(o.trace_in.front());
  const auto trajectories = load_traces(o.trace_in);
  std::string reserialized;
  for (const auto& t : trajectories) reserialized += serialize_trace(t);

  out << "task_id,steps,fallbacks,final_answer\n";
  for (const auto& t : trajectories) {
    std::size_t fallbacks = 0;
    for (const auto& s : t.steps) fallbacks += s.provenance == Provenance::Fallback;
    out << csv_field(t.task_id) << "," << t.steps.size() << "," << fallbacks << ","
        << csv_field(t.final_answer.value_or("")) << "\n";
  }

  std::string reference = reserialized;
  if (!o.scenarios.empty()) {
    const auto cfg = load_config(o.config);
    const auto rc = run_config(cfg, o);
    const auto digest = config_digest(rc);
    for (const auto& t : trajectories) {
      if (t.config_digest != digest) {
        err << "config digest mismatch for " << t.task_id << ": recorded " << t.config_digest << ", current "
            << digest << "\n";
        out << "replay,mismatch\n";
        return kExitRuntime;
      }
    }
    reference.clear();
    for (const auto& r : execute_runs(cfg, o, o.baseline, err)) reference += serialize_trace(r.trajectory);
  }
  if (reference == recorded) {
    out << "replay,identical\n";
    return kExitOk;
  }
  out << "replay,diverged,record," << first_differing_line(recorded, reference) << "\n";
  return kExitRuntime;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream&) {
  const auto trajectories = load_traces(o.trace_in);
  const std::set<std::string> reports = {"all", "entropy", "reasoning", "latency", "aggregates"};
  if (!reports.contains(o.report)) throw UsageError("unknown --report '" + o.report + "'");
  const bool all = o.report == "all";
  if (all || o.report == "entropy") {
    out << "# entropy\n";
    try {
      out << analysis::to_csv(analysis::entropy_report(trajectories));
    } catch (const analysis::InsufficientData& e) {
      out << "insufficient data: " << e.what() << "\n";
    }
  }
  if (all || o.report == "reasoning") {
    out << "# reasoning\n" << analysis::to_csv(analysis::reasoning_length_report(trajectories));
  }
  if (all || o.report == "aggregates") {
    out << "# aggregates\ntask_id,n,mean,p25\n";
    for (const auto& t : trajectories) {
      const auto scores = analysis::critic_scores(t);
      if (scores.empty()) continue;
      const auto a = analysis::trajectory_aggregates(scores);
      out << csv_field(t.task_id) << "," << a.n << "," << fmt("%.6f", a.mean) << "," << fmt("%.6f", a.p25) << "\n";
    }
  }
  if (all || o.report == "latency") {
    for (const auto& t : trajectories) {
      out << "# latency " << t.task_id << "\n" << analysis::to_csv(analysis::latency_breakdown(t));
    }
  }
  return kExitOk;
}

/// Dev records: CSV with a score,label header, or one JSON object per line.
std::vector<analysis::DevRecord> load_dev_records(const std::string& path) {
  std::vector<analysis::DevRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '{') {
      const auto j = json::parse(line);
      out.push_back({j.at("score").get<double>(), j.value("label", std::string())});
      continue;
    }
    if (header) {
      header = false;
      if (line.rfind("score", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    std::size_t used = 0;
    const std::string num = line.substr(0, comma);
    const double score = std::stod(num, &used);
    if (used != num.size()) throw std::runtime_error("bad score '" + num + "' in " + path);
    out.push_back({score, comma == std::string::npos ? std::string() : line.substr(comma + 1)});
  }
  return out;
}

int cmd_profile(const Options& o, std::ostream& out, std::ostream&) {
  const auto cfg = load_config(o.config);
  double target = 0.2;
  if (const json* p = cfg.section("profile")) target = p->value("target_rate", target);
  if (o.target_rate) target = *o.target_rate;

  std::vector<analysis::DevRecord> records;
  if (o.input) {
    records = load_dev_records(*o.input);
  } else if (!o.trace_in.empty()) {
    for (const auto& t : load_traces(o.trace_in)) {
      for (double s : analysis::critic_scores(t)) records.push_back({s, {}});
    }
  } else {
    throw UsageError("profile-threshold needs --input or --trace-in");
  }
  analysis::ThresholdProfile prof;
  try {
    prof = analysis::profile_threshold(records, target);
  } catch (const analysis::InsufficientData&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  out << "tau,below,n,target_rate,achieved_rate\n"
      << fmt("%.6f", prof.tau) << "," << prof.below << "," << prof.n << "," << fmt("%.6f", target) << ","
      << fmt("%.6f", prof.achieved_rate) << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream&) {
  const auto cfg = load_config(o.config);
  auto p = sim_params(cfg);
  if (o.seed) p.seed = *o.seed;
  if (o.prefetch) p.prefetch = true;
  if (o.no_prefetch) p.prefetch = false;
  try {
    sim::validate(p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.sweep > 0) {
    if (o.sweep < 2) throw UsageError("--sweep needs at least 2 points");
    out << "accept_prob,mean_step_ms,speedup\n";
    for (std::size_t i = 0; i < o.sweep; ++i) {
      p.accept_prob = static_cast<double>(i) / static_cast<double>(o.sweep - 1);
      const auto r = sim::simulate(p);
      out << fmt("%.3f", p.accept_prob) << "," << fmt("%.3f", r.mean_step_ms) << "," << fmt("%.3f", r.speedup)
          << "\n";
    }
    return kExitOk;
  }
  const auto report = sim::simulate(p);
  out << sim::to_csv(report);
  try {
    out << "expected_mean_step_ms," << fmt("%.3f", sim::expected_step_latency(p)) << "\n";
  } catch (const sim::NonConstantDistribution&) {
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speculative draft/verify runtime for tool-using agents", "specagent"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) { c->add_option("--config", o.config, "Config file (X, X.json, configs/X[.json])"); };
  auto run_flags = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenarios, "Scenario file or directory (repeatable)");
    c->add_option("--fixtures", o.fixtures, "Tool fixture file");
    c->add_option("--seed", o.seed, "Seed override");
    c->add_option("--tau", o.tau, "Acceptance threshold override");
    c->add_option("--tau-think", o.tau_think, "Reasoning-length threshold override");
    c->add_option("--policy", o.policy, "semantic|exact|edit_distance:N|always_accept|always_reject");
    c->add_flag("--prefetch", o.prefetch, "Overlap tool execution with verification");
    c->add_flag("--no-prefetch", o.no_prefetch, "Disable prefetch");
    c->add_option("--parallel", o.parallel, "Concurrent tasks (default 1)");
    c->add_option("--question", o.question, "Question override");
  };

  auto* run = app.add_subcommand("run", "Run tasks with draft/verify");
  auto* baseline = app.add_subcommand("baseline", "Run tasks with the large model reasoning every step");
  for (auto* c : {run, baseline}) {
    common(c);
    run_flags(c);
    c->add_option("--trace-out", o.trace_out, "Trace output file");
  }
  auto* replay = app.add_subcommand("replay", "Check a recorded trace, optionally by re-running it");
  common(replay);
  run_flags(replay);
  replay->add_option("--trace-in", o.trace_in, "Recorded trace");
  replay->add_flag("--baseline", o.baseline, "The recording is a baseline run");

  auto* analyze = app.add_subcommand("analyze", "Offline metrics over traces");
  analyze->add_option("--trace-in", o.trace_in, "Trace file (repeatable)");
  analyze->add_option("--report", o.report, "all|entropy|reasoning|latency|aggregates");

  auto* profile = app.add_subcommand("profile-threshold", "Pick tau for a target intervention rate");
  common(profile);
  profile->add_option("--input", o.input, "Dev records (CSV score,label or JSON lines)");
  profile->add_option("--trace-in", o.trace_in, "Use critic scores from traces");
  profile->add_option("--target-rate", o.target_rate, "Target intervention rate in [0, 1)");

  auto* simulate = app.add_subcommand("simulate", "Discrete-event latency simulation");
  common(simulate);
  simulate->add_option("--seed", o.seed, "Seed override");
  simulate->add_flag("--prefetch", o.prefetch, "Overlap tool execution with verification");
  simulate->add_flag("--no-prefetch", o.no_prefetch, "Disable prefetch");
  simulate->add_option("--sweep", o.sweep, "Sweep accept_prob over N evenly spaced points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(o, false, out, err);
    if (baseline->parsed()) return cmd_run(o, true, out, err);
    if (replay->parsed()) return cmd_replay(o, out, err);
    if (analyze->parsed()) return cmd_analyze(o, out, err);
    if (profile->parsed()) return cmd_profile(o, out, err);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    err << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (...) {
    err << "error: unknown failure\n";
    return kExitRuntime;
  }
}

}  // namespace specagent
