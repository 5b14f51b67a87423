#include "internal.hpp"
#include "sciagent/errors.hpp"

namespace sciagent {

namespace {

// Next stage works on the original query plus what the previous stage found.
void add_handoff(AgentGraph& graph, const NodeId& id, const std::string& heading, const NodeId& next) {
  graph.add_node(id, [heading](RunState& state, Session&) {
    auto query = state.data.value("query", std::string());
    auto found = state.data.value("stage_output", std::string());
    state.data["task"] = query + "\n\n" + heading + ":\n" + found;
  });
  graph.add_edge(id, next);
}

}  // namespace

std::vector<std::string> workflow_names() {
  return {"plan", "execute", "research", "hypothesize", "arxiv",
          "plan-then-execute", "hypothesize-then-execute", "research-plan-execute"};
}

AgentGraph build_workflow(const std::string& name, const AgentServices& services) {
  AgentGraph g(name);
  using namespace detail;
  if (name == "plan") {
    g.set_entry(add_planning_nodes(g, services, kEndNode));
  } else if (name == "execute") {
    g.set_entry(add_execution_nodes(g, services, kEndNode));
  } else if (name == "research") {
    g.set_entry(add_research_nodes(g, services, kEndNode));
  } else if (name == "hypothesize") {
    g.set_entry(add_hypothesizer_nodes(g, services, kEndNode));
  } else if (name == "arxiv") {
    g.set_entry(add_arxiv_nodes(g, services, kEndNode));
  } else if (name == "plan-then-execute") {
    auto exec = add_execution_nodes(g, services, kEndNode);
    g.set_entry(add_planning_nodes(g, services, exec));
  } else if (name == "hypothesize-then-execute") {
    auto exec = add_execution_nodes(g, services, kEndNode);
    add_handoff(g, "handoff.hypothesis", "Hypothesis to act on", exec);
    g.set_entry(add_hypothesizer_nodes(g, services, "handoff.hypothesis"));
  } else if (name == "research-plan-execute") {
    auto exec = add_execution_nodes(g, services, kEndNode);
    auto plan = add_planning_nodes(g, services, exec);
    add_handoff(g, "handoff.research", "Research findings", plan);
    g.set_entry(add_research_nodes(g, services, "handoff.research"));
  } else {
    throw PreconditionError("unknown workflow '" + name + "'");
  }
  g.validate();
  return g;
}

std::filesystem::path workflow_output(const std::string& workflow, const std::filesystem::path& workspace) {
  if (workflow == "plan") return workspace / "plan.json";
  if (workflow == "research") return workspace / "research.md";
  if (workflow == "hypothesize") return workspace / "hypothesis.md";
  if (workflow == "arxiv") return workspace / "literature.md";
  return workspace / "summary.md";
}

AgentResult run_workflow(const std::string& workflow, Session& session, const AgentServices& services,
                         const RunState& initial, const RunOptions& options) {
  auto graph = build_workflow(workflow, services);
  AgentResult r;
  r.state = run_graph(graph, initial, session, options);
  r.output = workflow_output(workflow, initial.workspace);
  return r;
}

}  // namespace sciagent
