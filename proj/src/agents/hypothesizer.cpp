#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

std::vector<DebateRound> assemble_debate_record(std::span<const ChatMessage> debate) {
  if (debate.empty() || debate.size() % 3 != 0) {
    throw MalformedDebate("debate has " + std::to_string(debate.size()) + " messages, expected a positive multiple of 3");
  }
  std::vector<DebateRound> rounds;
  for (std::size_t i = 0; i < debate.size(); i += 3) {
    rounds.push_back({debate[i].content, debate[i + 1].content, debate[i + 2].content});
  }
  return rounds;
}

Json debate_to_json(const std::vector<DebateRound>& rounds) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    arr.push_back({{"round", i},
                   {"hypothesis", rounds[i].hypothesis},
                   {"critique", rounds[i].critique},
                   {"competitor", rounds[i].counter}});
  }
  return arr;
}

namespace {

const std::vector<std::string> kDebateTools{"web_search"};

Json& hyp_data(RunState& state) { return state.data["hyp"]; }

std::vector<ChatMessage> debate_messages(RunState& state) {
  std::vector<ChatMessage> out;
  for (const auto& m : hyp_data(state)["debate"]) out.push_back(ChatMessage::assistant(m.get<std::string>()));
  return out;
}

std::string render_round(const std::vector<ChatMessage>& debate, std::size_t round) {
  return "Hypothesis (Agent 1):\n" + debate[3 * round].content + "\n\nCritique (Agent 2):\n" +
         debate[3 * round + 1].content + "\n\nCompetitor (Agent 3):\n" + debate[3 * round + 2].content;
}

// One sub-agent turn; failures become the message so the round proceeds.
std::string speak(RunState& state, Session& session, const ToolRegistry* registry, std::vector<ChatMessage> msgs,
                  const std::string& role) {
  try {
    auto turn = agent_turn(session, state, detail::registry_or_empty(registry), std::move(msgs),
                           detail::available_tools(registry, kDebateTools), "hyp." + role,
                           std::max(1, session.limits().n_max));
    return turn.final.content;
  } catch (const ScriptExhausted&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    session.record_error("hyp." + role, e);
    return "[" + role + " failed: " + e.what() + "]";
  }
}

}  // namespace

namespace detail {

NodeId add_hypothesizer_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit) {
  const ToolRegistry* registry = services.tools;

  graph.add_node("hyp.begin", [](RunState& state, Session& session) {
    begin_stage(state, "hyp");
    hyp_data(state) = {{"debate", Json::array()}, {"round", 0}, {"n_max", session.limits().n_max}};
  });

  graph.add_node("hyp.generator", [registry](RunState& state, Session& session) {
    auto msgs = opening(session.prompts().hypothesis_generator, stage_input(state), state);
    auto debate = debate_messages(state);
    auto round = hyp_data(state)["round"].get<std::size_t>();
    if (round > 0) {
      msgs.push_back(ChatMessage::user("Previous round of the debate:\n\n" + render_round(debate, round - 1)));
    }
    hyp_data(state)["debate"].push_back(speak(state, session, registry, msgs, "generator"));
  });

  graph.add_node("hyp.critic", [registry](RunState& state, Session& session) {
    auto msgs = opening(session.prompts().hypothesis_critic, stage_input(state), state);
    auto debate = debate_messages(state);
    msgs.push_back(ChatMessage::user("Hypothesis (Agent 1):\n" + debate.back().content));
    hyp_data(state)["debate"].push_back(speak(state, session, registry, msgs, "critic"));
  });

  graph.add_node("hyp.competitor", [registry](RunState& state, Session& session) {
    auto msgs = opening(session.prompts().hypothesis_competitor, stage_input(state), state);
    auto debate = debate_messages(state);
    msgs.push_back(ChatMessage::user("Hypothesis (Agent 1):\n" + debate[debate.size() - 2].content));
    msgs.push_back(ChatMessage::user("Critique (Agent 2):\n" + debate.back().content));
    hyp_data(state)["debate"].push_back(speak(state, session, registry, msgs, "competitor"));
    hyp_data(state)["round"] = hyp_data(state)["round"].get<int>() + 1;
  });

  graph.add_node("hyp.summarize", [](RunState& state, Session& session) {
    auto debate = debate_messages(state);
    auto rounds = assemble_debate_record(debate);
    std::string body = "Question:\n" + stage_input(state) + "\n\nComplete debate:\n";
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      body += "\n### Round " + std::to_string(r) + "\n\n" + render_round(debate, r) + "\n";
    }
    std::vector<ChatMessage> msgs{ChatMessage::system(session.prompts().hypothesis_summarizer)};
    for (auto& m : steering_messages(state)) msgs.push_back(std::move(m));
    msgs.push_back(ChatMessage::user(body));
    auto summary = session.call(msgs, {}, "hyp.summarize").message.content;
    auto ws = workspace_of(state);
    write_file_atomic(ws / "debate.json", Json{{"question", stage_input(state)}, {"rounds", debate_to_json(rounds)}}.dump(2) + "\n");
    write_file_atomic(ws / "hypothesis.md", summary + (summary.ends_with("\n") ? "" : "\n"));
    hyp_data(state)["summary"] = summary;
    state.data["stage_output"] = summary;
  });

  graph.add_edge("hyp.begin", "hyp.generator");
  graph.add_edge("hyp.generator", "hyp.critic");
  graph.add_edge("hyp.critic", "hyp.competitor");
  graph.add_conditional_edge("hyp.competitor", {"hyp.generator", "hyp.summarize"}, [](const RunState& s) {
    const auto& h = s.data["hyp"];
    return h["round"].get<int>() <= h.value("n_max", 0) ? NodeId("hyp.generator") : NodeId("hyp.summarize");
  });
  graph.add_edge("hyp.summarize", exit);
  return "hyp.begin";
}

}  // namespace detail

}  // namespace sciagent
