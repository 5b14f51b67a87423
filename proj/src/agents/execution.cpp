#include <sstream>

#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

std::string summarize_execution(Session& session, std::span<const ChatMessage> conversation,
                                const std::string& stdout_text, const std::string& stderr_text,
                                bool limit_exceeded) {
  if (conversation.empty()) throw PreconditionError("nothing to summarize");
  std::string body = "Conversation:\n\n" + render_conversation(conversation);
  body += "\nOutput of the last command:\nSTDOUT:\n" + stdout_text + "\nSTDERR:\n" + stderr_text + "\n";
  if (limit_exceeded) {
    body += "\nNote: the tool-iteration limit was reached before the work finished; say which goals were not achieved.\n";
  }
  std::vector<ChatMessage> msgs{ChatMessage::system(session.prompts().execution_summarizer), ChatMessage::user(body)};
  return session.call(msgs, {}, "exec.summarize").message.content;
}

namespace {

const std::vector<std::string> kExecTools{"run_cmd", "write_code"};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
  return out.empty() ? "(none)" : out;
}

std::string step_task(const PlanStep& step, const std::string& query, const std::string& rolling) {
  std::ostringstream os;
  os << "Overall request: " << query << "\n\n";
  if (!rolling.empty()) os << "Summary of the work so far:\n" << rolling << "\n\n";
  os << "Current step (" << step.id << "): " << step.name << "\n" << step.description << "\n"
     << "Requires code: " << (step.requires_code ? "yes" : "no") << "\n"
     << "Expected outputs: " << join(step.expected_outputs) << "\n"
     << "Success criteria: " << join(step.success_criteria) << "\n";
  return os.str();
}

Json& exec_data(RunState& state) { return state.data["exec"]; }

}  // namespace

ExecutionOutcome execution_outcome(const RunState& state) {
  ExecutionOutcome out;
  out.state = state;
  const auto& ex = state.data.contains("exec") ? state.data["exec"] : Json::object();
  if (ex.contains("summaries") && !ex["summaries"].empty()) out.summary = ex["summaries"].back().get<std::string>();
  out.limit_exceeded = ex.value("limit_exceeded", false);
  if (state.data.contains("artifact_origin")) {
    for (const auto& [path, _] : state.data["artifact_origin"].items()) out.artifacts.push_back(path);
  }
  if (state.data.contains("inputs")) out.preexisting = state.data["inputs"].get<std::vector<std::string>>();
  out.commands = state.data.value("commands_run", 0);
  return out;
}

namespace detail {

NodeId add_execution_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit) {
  const ToolRegistry* registry = services.tools;

  graph.add_node("exec.begin", [](RunState& state, Session&) {
    begin_stage(state, "exec");
    Json tasks = Json::array();
    if (state.data.contains("plan")) {
      auto steps = validate_plan(state.data["plan"]);
      for (const auto& s : steps) tasks.push_back(s);
    } else {
      tasks.push_back(stage_input(state));
    }
    exec_data(state) = {{"tasks", tasks}, {"index", 0}, {"summaries", Json::array()}, {"limit_exceeded", false}};
  });

  graph.add_node("exec.step", [](RunState& state, Session& session) {
    auto& ex = exec_data(state);
    auto index = ex["index"].get<std::size_t>();
    const auto& task = ex["tasks"][index];
    std::string text;
    if (task.is_string()) {
      text = task.get<std::string>();
    } else {
      PlanStep step = validate_plan(Json::array({task})).front();
      std::string rolling = ex["summaries"].empty() ? "" : ex["summaries"].back().get<std::string>();
      text = step_task(step, state.data.value("query", std::string()), rolling);
    }
    if (!state.conversation.empty()) state.data["archive"]["exec.step" + std::to_string(index)] = state.conversation;
    state.conversation = detail::opening(session.prompts().executor, text, state);
    ex["steering_seen"] = steering_messages(state).size();
    state.counters["exec.tool_rounds"] = 0;
    state.data.erase("last_command");
  });

  graph.add_node("exec.act", [registry](RunState& state, Session& session) {
    // steering that arrived mid-step joins the running conversation
    auto steering = steering_messages(state);
    auto seen = exec_data(state).value("steering_seen", std::size_t{0});
    for (auto i = seen; i < steering.size(); ++i) state.conversation.push_back(steering[i]);
    exec_data(state)["steering_seen"] = steering.size();
    auto specs = registry_or_empty(registry).specs(kExecTools);
    auto c = session.call(state.conversation, specs, "exec.act");
    state.conversation.push_back(c.message);
  });

  graph.add_node("exec.tools", [registry](RunState& state, Session& session) {
    const auto& calls = state.conversation.back().tool_calls;
    if (state.count("exec.tool_rounds") >= session.limits().n_max) {
      exec_data(state)["limit_exceeded"] = true;
      session.record_error("exec.tools",
                           LimitExceeded("tool-iteration limit of " + std::to_string(session.limits().n_max) +
                                         " reached"));
      std::vector<ChatMessage> replies;
      for (const auto& call : calls) replies.push_back(ChatMessage::tool(call.id, "Not run: tool-iteration limit reached."));
      for (auto& r : replies) state.conversation.push_back(std::move(r));
      return;
    }
    state.bump("exec.tool_rounds", session.limits().n_max);
    ToolContext ctx{session, state, workspace_of(state)};
    auto pending = calls;  // conversation grows below
    for (const auto& call : pending) state.conversation.push_back(invoke_tool(registry_or_empty(registry), call, ctx));
  });

  graph.add_node("exec.summarize", [](RunState& state, Session& session) {
    auto& ex = exec_data(state);
    const auto& last = state.data.contains("last_command") ? state.data["last_command"] : Json::object();
    auto summary = summarize_execution(session, state.conversation, last.value("stdout", std::string()),
                                       last.value("stderr", std::string()), ex.value("limit_exceeded", false));
    ex["summaries"].push_back(summary);
    ex["index"] = ex["index"].get<int>() + 1;
    std::string doc;
    const auto& summaries = ex["summaries"];
    if (ex["tasks"].size() == 1) {
      doc = summary;
    } else {
      for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& t = ex["tasks"][i];
        doc += "## Step " + (t.is_object() ? t["id"].get<std::string>() : std::to_string(i + 1)) + "\n\n" +
               summaries[i].get<std::string>() + "\n\n";
      }
    }
    if (!doc.empty() && doc.back() != '\n') doc += "\n";
    write_file_atomic(workspace_of(state) / "summary.md", doc);
    state.data["stage_output"] = summary;
  });

  graph.add_edge("exec.begin", "exec.step");
  graph.add_edge("exec.step", "exec.act");
  graph.add_conditional_edge("exec.act", {"exec.tools", "exec.summarize"}, [](const RunState& s) {
    return s.conversation.back().tool_calls.empty() ? NodeId("exec.summarize") : NodeId("exec.tools");
  });
  graph.add_conditional_edge("exec.tools", {"exec.act", "exec.summarize"}, [](const RunState& s) {
    return s.data["exec"].value("limit_exceeded", false) ? NodeId("exec.summarize") : NodeId("exec.act");
  });
  graph.add_conditional_edge("exec.summarize", {"exec.step", exit}, [exit](const RunState& s) {
    const auto& ex = s.data["exec"];
    if (ex.value("limit_exceeded", false)) return exit;
    return ex["index"].get<std::size_t>() < ex["tasks"].size() ? NodeId("exec.step") : exit;
  });
  return "exec.begin";
}

}  // namespace detail

}  // namespace sciagent
