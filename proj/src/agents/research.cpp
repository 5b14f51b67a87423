#include <map>
#include <set>

#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/http.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

std::vector<SearchResult> collect_sources(std::span<const ChatMessage> conversation) {
  // tool replies by call id
  std::map<std::string, const ChatMessage*> replies;
  for (const auto& m : conversation) {
    if (m.role == Role::tool && m.tool_call_id) replies[*m.tool_call_id] = &m;
  }
  std::vector<SearchResult> out;
  std::set<std::string> seen;
  auto add = [&](SearchResult r) {
    if (!is_well_formed_url(r.url) || !seen.insert(r.url).second) return;
    out.push_back(std::move(r));
  };
  for (const auto& m : conversation) {
    if (m.role != Role::assistant) continue;
    for (const auto& call : m.tool_calls) {
      auto it = replies.find(call.id);
      if (it == replies.end()) continue;
      const auto& reply = it->second->content;
      if (reply.starts_with("Error (")) continue;
      if (call.tool_name == "web_search") {
        auto doc = Json::parse(reply, nullptr, false);
        if (!doc.is_array()) continue;
        for (const auto& item : doc) {
          if (item.is_object()) add(item.get<SearchResult>());
        }
      } else if (call.tool_name == "process_content") {
        if (call.arguments.is_object() && call.arguments.contains("url") && call.arguments["url"].is_string()) {
          add(SearchResult{"", call.arguments["url"].get<std::string>(), ""});
        }
      }
    }
  }
  return out;
}

namespace {

const std::vector<std::string> kResearchTools{"web_search", "process_content"};

Json& research_data(RunState& state) { return state.data["research"]; }

std::string tool_notes(const std::vector<ChatMessage>& exchanged) {
  std::map<std::string, std::string> names;
  std::string notes;
  for (const auto& m : exchanged) {
    for (const auto& c : m.tool_calls) names[c.id] = c.tool_name;
    if (m.role == Role::tool && m.tool_call_id) {
      notes += "[" + names[*m.tool_call_id] + "] " + m.content + "\n\n";
    }
  }
  return notes;
}

void generate(RunState& state, Session& session, const ToolRegistry* registry) {
  auto msgs = detail::opening(session.prompts().researcher, detail::stage_input(state), state);
  msgs.insert(msgs.end(), state.conversation.begin(), state.conversation.end());
  auto tools = detail::available_tools(registry, kResearchTools);
  auto turn = agent_turn(session, state, detail::registry_or_empty(registry), msgs, tools, "research.generate",
                         std::max(1, session.limits().n_max));
  auto& rd = research_data(state);
  for (const auto& m : turn.exchanged) rd["trace"].push_back(m);
  rd["notes"].push_back(tool_notes(turn.exchanged));
  state.conversation.push_back(ChatMessage::assistant(turn.final.content));
}

std::string critique(RunState& state, Session& session) {
  auto msgs = detail::opening(session.prompts().researcher_critic, detail::stage_input(state), state);
  std::string notes;
  for (const auto& n : research_data(state)["notes"]) notes += n.get<std::string>();
  if (!notes.empty()) msgs.push_back(ChatMessage::user("Summaries of the tool results so far:\n\n" + notes));
  msgs.insert(msgs.end(), state.conversation.begin(), state.conversation.end());
  auto feedback = session.call(msgs, {}, "research.critique").message.content;
  state.conversation.push_back(ChatMessage::user(feedback));
  return feedback;
}

}  // namespace

namespace detail {

NodeId add_research_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit) {
  const ToolRegistry* registry = services.tools;
  graph.add_node("research.generate", [registry](RunState& state, Session& session) {
    begin_stage(state, "research");
    research_data(state) = {{"trace", Json::array()}, {"notes", Json::array()}};
    generate(state, session, registry);
  });
  graph.add_node("research.summarize", [](RunState& state, Session& session) {
    auto body = "Question:\n" + stage_input(state) + "\n\nResearch conversation:\n\n" +
                render_conversation(state.conversation);
    std::vector<ChatMessage> msgs{ChatMessage::system(session.prompts().researcher_summarizer)};
    for (auto& m : steering_messages(state)) msgs.push_back(std::move(m));
    msgs.push_back(ChatMessage::user(body));
    auto summary = session.call(msgs, {}, "research.summarize").message.content;
    auto trace = research_data(state)["trace"].get<std::vector<ChatMessage>>();
    auto sources = collect_sources(trace);
    std::string doc = summary + "\n\n## Sources\n\n";
    if (sources.empty()) doc += "(none)\n";
    for (const auto& s : sources) doc += "- " + (s.title.empty() ? s.url : s.title + " <" + s.url + ">") + "\n";
    write_file_atomic(workspace_of(state) / "research.md", doc);
    research_data(state)["summary"] = summary;
    research_data(state)["sources"] = sources;
    state.data["stage_output"] = summary;
  });
  auto review = add_review_loop(graph,
                                ReviewLoop{"research", critique,
                                           [registry](RunState& state, Session& session) {
                                             generate(state, session, registry);
                                           }},
                                "research.summarize");
  graph.add_edge("research.generate", review);
  graph.add_edge("research.summarize", exit);
  return "research.generate";
}

}  // namespace detail

}  // namespace sciagent
