#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sciagent/agents.hpp"
#include "sciagent/config.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/experiments.hpp"
#include "sciagent/util.hpp"

namespace fs = std::filesystem;
using namespace sciagent;

namespace {

constexpr int kOk = 0;
constexpr int kAgentFailure = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string config;
  std::string workspace = "runs";
  std::string script;
  std::optional<int> n_max;
  std::optional<int> f_max;
  std::string run_id;
  bool logical_clock = false;
  std::vector<std::string> inputs;
};

AppConfig resolve_config(const Globals& g) {
  AppConfig c = g.config.empty() ? default_config() : load_config(g.config);
  if (!g.script.empty()) c.backend.script = fs::absolute(g.script);
  if (g.n_max) c.limits.n_max = *g.n_max;
  if (g.f_max) c.limits.f_max = *g.f_max;
  try {
    c.limits.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

TranscriptClock clock_named(const std::string& name) { return name == "logical" ? logical_clock() : wall_clock(); }

struct Runtime {
  AppConfig config;
  std::unique_ptr<ChatBackend> backend;
  ToolRegistry tools;
  AgentServices services;
};

Runtime make_runtime(AppConfig config, const Json& run_info) {
  Runtime rt;
  rt.config = std::move(config);
  rt.backend = make_backend(rt.config.backend);
  rt.tools = make_standard_tools(make_toolbox(rt.config.tools));
  rt.services.tools = &rt.tools;
  rt.services.papers = make_paper_source(rt.config.tools);
  rt.services.extractor_command = rt.config.tools.pdf_extractor;
  rt.services.max_papers = run_info.value("max_papers", 3);
  rt.services.arxiv_context = run_info.value("arxiv_context", std::string());
  return rt;
}

int report(const RunState& state, const fs::path& output) {
  std::cout << "run_id: " << state.run_id << "\n"
            << "workspace: " << state.workspace << "\n"
            << "status: " << to_string(state.status) << "\n";
  if (state.status == RunStatus::succeeded) {
    std::cout << "output: " << output.string() << "\n";
    return kOk;
  }
  std::cerr << "run failed: " << state.data.value("error", Json::object()).dump() << "\n";
  return kAgentFailure;
}

int run_agent(const Globals& g, const std::string& workflow, const std::string& query, Json run_info = Json::object()) {
  auto known = workflow_names();
  if (std::find(known.begin(), known.end(), workflow) == known.end()) {
    throw PreconditionError("unknown workflow '" + workflow + "'");
  }
  if (query.empty()) throw PreconditionError("query must not be empty");
  auto rt = make_runtime(resolve_config(g), run_info);
  auto run_id = g.run_id.empty() ? new_run_id() : g.run_id;
  std::vector<fs::path> inputs(g.inputs.begin(), g.inputs.end());
  auto ws = prepare_workspace(g.workspace, run_id, inputs);
  run_info["workflow"] = workflow;
  run_info["query"] = query;
  run_info["clock"] = g.logical_clock ? "logical" : "wall";
  write_file_atomic(ws / "run.json", run_info.dump(2) + "\n");

  auto handles = open_run(ws, run_id, clock_named(run_info["clock"]));
  Session session(*rt.backend, *handles.transcript, rt.config.limits, rt.config.prompts);
  session.set_checkpoints(handles.checkpoints.get());
  auto result = run_workflow(workflow, session, rt.services, initial_state(run_id, ws, query));
  return report(result.state, result.output);
}

int run_resume(const Globals& g, const std::string& run_id, std::optional<long> sequence,
               const std::optional<std::string>& steer) {
  auto ws = fs::path(g.workspace) / run_id;
  if (!fs::is_regular_file(ws / "run.json")) throw PreconditionError("no run '" + run_id + "' under " + g.workspace);
  auto run_info = Json::parse(read_file(ws / "run.json"));
  auto rt = make_runtime(resolve_config(g), run_info);
  auto handles = open_run(fs::canonical(ws), run_id, clock_named(run_info.value("clock", "wall")));
  if (!sequence) sequence = handles.checkpoints->latest();
  if (!sequence) throw UnknownCheckpoint("run '" + run_id + "' has no checkpoints");
  auto checkpoint = handles.checkpoints->load(*sequence);
  Session session(*rt.backend, *handles.transcript, rt.config.limits, rt.config.prompts);
  session.set_checkpoints(handles.checkpoints.get());
  auto graph = build_workflow(checkpoint.graph, rt.services);
  auto state = resume(graph, checkpoint, session, steer);
  return report(state, workflow_output(checkpoint.graph, state.workspace));
}

int run_transcript_show(const Globals& g, const std::string& run_id, const std::string& kind) {
  auto file = fs::path(g.workspace) / run_id / "transcript.ndjson";
  if (!fs::is_regular_file(file)) throw PreconditionError("no transcript at " + file.string());
  std::optional<EventKind> filter;
  if (!kind.empty()) {
    try {
      filter = event_kind_from_string(kind);
    } catch (const Error&) {
      throw PreconditionError("unknown event kind '" + kind + "'");
    }
  }
  for (const auto& e : read_transcript(file)) {
    if (!filter || e.kind == *filter) std::cout << serialize_event(e) << "\n";
  }
  return kOk;
}

int run_workbench(const Globals& g, const std::string& kind, const std::string& out, bool no_svg) {
  auto config = resolve_config(g);
  if (no_svg) config.workbench.svg = false;
  fs::path out_dir = out.empty() ? fs::path(g.workspace) / "workbench" / kind : fs::path(out);
  WorkbenchReport rep;
  if (kind == "camel") {
    rep = run_camel_experiment(config.workbench, out_dir);
  } else if (kind == "design-race") {
    auto backend = make_backend(config.backend);
    fs::create_directories(out_dir / "agent");
    auto transcript = Transcript::open(out_dir / "agent" / "transcript.ndjson", "design-race",
                                       clock_named(g.logical_clock ? "logical" : "wall"));
    Session session(*backend, transcript, config.limits, config.prompts);
    rep = run_design_race(config.workbench, session, out_dir);
    if (!rep.agent_error.empty()) std::cerr << "agent campaign stopped early: " << rep.agent_error << "\n";
  } else {
    throw PreconditionError("unknown workbench experiment '" + kind + "' (camel | design-race)");
  }
  std::cout << rep.comparison.table();
  for (const auto& f : rep.files) std::cout << "wrote " << f.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sciagent: LLM agents for scientific workflows, plus an optimization workbench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file (sections backend, limits, tools, workbench, prompts)");
  app.add_option("--workspace", g.workspace, "Root directory for run workspaces")->capture_default_str();
  app.add_option("--script", g.script, "Scripted backend file (offline mode); overrides backend.script");
  app.add_option("--n-max", g.n_max, "Review / debate / tool iteration limit");
  app.add_option("--f-max", g.f_max, "Formalization attempts");
  app.add_option("--run-id", g.run_id, "Run id (default: random)");
  app.add_flag("--logical-clock", g.logical_clock, "Stamp transcript events with logical time");
  app.add_option("--input", g.inputs, "Input file copied read-only into the workspace")->check(CLI::ExistingFile);

  std::string query;
  std::function<int()> action;

  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"plan", "Plan a task"},
           {"execute", "Carry out a task with tools"},
           {"research", "Research a question on the web"},
           {"hypothesize", "Debate a question and summarize"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("query", query, "Task or question")->required();
    sub->callback([&, name = name] { action = [&, name] { return run_agent(g, name, query); }; });
  }

  std::string context;
  int max_papers = 3;
  auto* arxiv = app.add_subcommand("arxiv", "Search, read and summarize arXiv papers");
  arxiv->add_option("--query", query, "Search query")->required();
  arxiv->add_option("--context", context, "What the summaries should focus on");
  arxiv->add_option("--max-papers", max_papers, "Papers to read")->check(CLI::PositiveNumber)->capture_default_str();
  arxiv->callback([&] {
    action = [&] {
      return run_agent(g, "arxiv", query, Json{{"arxiv_context", context}, {"max_papers", max_papers}});
    };
  });

  std::string workflow;
  auto* wf = app.add_subcommand("workflow", "Run a composed workflow");
  wf->add_option("name", workflow, "plan-then-execute | hypothesize-then-execute | research-plan-execute | <agent>")
      ->required();
  wf->add_option("query", query, "Task or question")->required();
  wf->callback([&] { action = [&] { return run_agent(g, workflow, query); }; });

  std::string run_id;
  std::optional<long> sequence;
  std::optional<std::string> steer;
  auto* res = app.add_subcommand("resume", "Resume a run from a checkpoint");
  res->add_option("run_id", run_id, "Run id")->required();
  res->add_option("--sequence", sequence, "Checkpoint sequence (default: latest)");
  res->add_option("--steer", steer, "Steering message added to later prompts");
  res->callback([&] { action = [&] { return run_resume(g, run_id, sequence, steer); }; });

  std::string experiment;
  std::string out;
  bool no_svg = false;
  auto* wb = app.add_subcommand("workbench", "Optimization experiments");
  wb->add_option("experiment", experiment, "camel | design-race")->required();
  wb->add_option("--out", out, "Output directory (default: <workspace>/workbench/<experiment>)");
  wb->add_flag("--no-svg", no_svg, "Skip the SVG chart");
  wb->callback([&] { action = [&] { return run_workbench(g, experiment, out, no_svg); }; });

  std::string kind;
  auto* tr = app.add_subcommand("transcript", "Inspect run transcripts");
  tr->require_subcommand(1);
  auto* show = tr->add_subcommand("show", "Print a run's events as NDJSON");
  show->add_option("run_id", run_id, "Run id")->required();
  show->add_option("--kind", kind, "Only events of this kind");
  show->callback([&] { action = [&] { return run_transcript_show(g, run_id, kind); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnknownCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return kAgentFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAgentFailure;
  }
}
