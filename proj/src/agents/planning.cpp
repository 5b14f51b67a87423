#include <set>

#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

void to_json(Json& j, const PlanStep& step) {
  j = Json{{"id", step.id},
           {"name", step.name},
           {"description", step.description},
           {"requires_code", step.requires_code},
           {"expected_outputs", step.expected_outputs},
           {"success_criteria", step.success_criteria}};
}

Json plan_to_json(const Plan& plan) {
  Json arr = Json::array();
  for (const auto& s : plan.steps) arr.push_back(s);
  return arr;
}

namespace {

std::vector<std::string> string_list(const Json& obj, const char* key, std::size_t index) {
  const auto& v = obj[key];
  if (!v.is_array()) {
    throw MalformedResponse("step " + std::to_string(index) + ": '" + key + "' must be a list");
  }
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw MalformedResponse("step " + std::to_string(index) + ": '" + key + "' must hold strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string text_field(const Json& obj, const char* key, std::size_t index) {
  if (!obj[key].is_string()) {
    throw MalformedResponse("step " + std::to_string(index) + ": '" + key + "' must be a string");
  }
  return obj[key].get<std::string>();
}

// Offset one past the bracket matching the '[' at `start`, honouring JSON
// strings; npos when unbalanced.
std::size_t match_bracket(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string::npos;
}

std::optional<Json> try_parse(const std::string& text) {
  auto j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace

std::vector<PlanStep> validate_plan(const Json& document) {
  if (!document.is_array()) throw MalformedResponse("plan must be a JSON array of steps");
  if (document.empty()) throw MalformedResponse("plan has no steps");
  static const char* fields[] = {"id", "name", "description", "requires_code", "expected_outputs", "success_criteria"};
  std::vector<PlanStep> steps;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < document.size(); ++i) {
    const auto& obj = document[i];
    if (!obj.is_object()) throw MalformedResponse("step " + std::to_string(i) + " is not an object");
    for (const char* f : fields) {
      if (!obj.contains(f)) throw MalformedResponse("step " + std::to_string(i) + " lacks '" + f + "'");
    }
    PlanStep s;
    s.id = text_field(obj, "id", i);
    s.name = text_field(obj, "name", i);
    s.description = text_field(obj, "description", i);
    if (!obj["requires_code"].is_boolean()) {
      throw MalformedResponse("step " + std::to_string(i) + ": 'requires_code' must be a boolean");
    }
    s.requires_code = obj["requires_code"].get<bool>();
    s.expected_outputs = string_list(obj, "expected_outputs", i);
    s.success_criteria = string_list(obj, "success_criteria", i);
    if (!ids.insert(s.id).second) throw MalformedResponse("duplicate step id '" + s.id + "'");
    steps.push_back(std::move(s));
  }
  return steps;
}

std::optional<Json> extract_json_array(const std::string& text) {
  // fenced blocks first
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string::npos) {
    auto body_start = text.find('\n', pos);
    if (body_start == std::string::npos) break;
    auto end = text.find("```", body_start);
    if (end == std::string::npos) break;
    auto j = try_parse(trim(std::string_view(text).substr(body_start + 1, end - body_start - 1)));
    if (j && j->is_array()) return j;
    pos = end + 3;
  }
  if (auto j = try_parse(trim(text)); j && j->is_array()) return j;
  for (std::size_t i = text.find('['); i != std::string::npos; i = text.find('[', i + 1)) {
    auto end = match_bracket(text, i);
    if (end == std::string::npos) continue;
    if (auto j = try_parse(text.substr(i, end - i)); j && j->is_array()) return j;
  }
  return std::nullopt;
}

std::vector<PlanStep> parse_plan(const std::string& text) {
  auto doc = extract_json_array(text);
  if (!doc) throw MalformedResponse("no JSON array found in the response");
  return validate_plan(*doc);
}

namespace {

std::vector<ChatMessage> with_conversation(std::vector<ChatMessage> head, const std::vector<ChatMessage>& conversation) {
  head.insert(head.end(), conversation.begin(), conversation.end());
  return head;
}

ChatMessage generate_step(Session& session, const std::string& query, const RunState& state) {
  auto c = session.call(detail::opening(session.prompts().planner, query, state), {}, "plan.generate");
  return ChatMessage::assistant(c.message.content);
}

std::string review_step(Session& session, const std::string& query, std::vector<ChatMessage>& conversation,
                        const RunState& state) {
  auto msgs = with_conversation(detail::opening(session.prompts().reflection, query, state), conversation);
  auto feedback = session.call(msgs, {}, "plan.review").message.content;
  conversation.push_back(ChatMessage::user(feedback));
  return feedback;
}

void revise_step(Session& session, const std::string& query, std::vector<ChatMessage>& conversation,
                 const RunState& state) {
  auto msgs = with_conversation(detail::opening(session.prompts().planner, query, state), conversation);
  conversation.push_back(ChatMessage::assistant(session.call(msgs, {}, "plan.revise").message.content));
}

std::vector<PlanStep> formalize_steps(Session& session, std::vector<ChatMessage>& conversation, const RunState& state) {
  const int f_max = session.limits().f_max;
  std::string last_problem;
  for (int attempt = 1; attempt <= f_max; ++attempt) {
    std::vector<ChatMessage> msgs{ChatMessage::system(session.prompts().formalize)};
    for (auto& m : steering_messages(state)) msgs.push_back(std::move(m));
    msgs.insert(msgs.end(), conversation.begin(), conversation.end());
    auto response = session.call(msgs, {}, "plan.formalize").message.content;
    try {
      return parse_plan(response);
    } catch (const MalformedResponse& e) {
      last_problem = e.what();
      conversation.push_back(ChatMessage::assistant(response));
      conversation.push_back(ChatMessage::user(kInvalidJsonRetry));
    }
  }
  throw FormalizationFailed("no valid plan after " + std::to_string(f_max) + " attempts (" + last_problem + ")");
}

}  // namespace

ChatMessage generate_plan(Session& session, const std::string& query) {
  if (trim(query).empty()) throw PreconditionError("query must be nonempty");
  return generate_step(session, query, RunState{});
}

int reflect_loop(Session& session, const std::string& query, std::vector<ChatMessage>& conversation) {
  if (conversation.empty()) throw PreconditionError("reflect_loop needs an initial plan");
  RunState none;
  int rounds = 0;
  for (int i = 0; i < session.limits().n_max; ++i) {
    ++rounds;
    auto feedback = review_step(session, query, conversation, none);
    if (detect_marker(feedback, kApprovedMarker)) break;
    revise_step(session, query, conversation, none);
  }
  return rounds;
}

Plan formalize_plan(Session& session, std::vector<ChatMessage>& conversation) {
  if (conversation.empty()) throw PreconditionError("formalize_plan needs a plan discussion");
  Plan plan;
  plan.steps = formalize_steps(session, conversation, RunState{});
  return plan;
}

Plan plan_from_state(const RunState& state) {
  if (!state.data.contains("plan")) throw PreconditionError("run has no plan");
  Plan p;
  p.steps = validate_plan(state.data["plan"]);
  p.run_id = state.run_id;
  p.iterations = state.count("plan.rounds");
  return p;
}

namespace detail {

NodeId add_planning_nodes(AgentGraph& graph, const AgentServices&, const NodeId& exit) {
  graph.add_node("plan.generate", [](RunState& state, Session& session) {
    begin_stage(state, "plan");
    state.conversation.push_back(generate_step(session, stage_input(state), state));
  });
  graph.add_node("plan.formalize", [](RunState& state, Session& session) {
    auto steps = formalize_steps(session, state.conversation, state);
    Json arr = Json::array();
    for (const auto& s : steps) arr.push_back(s);
    state.data["plan"] = arr;
    write_file_atomic(workspace_of(state) / "plan.json", arr.dump(2) + "\n");
  });
  auto review = add_review_loop(
      graph,
      ReviewLoop{"plan",
                 [](RunState& state, Session& session) {
                   return review_step(session, stage_input(state), state.conversation, state);
                 },
                 [](RunState& state, Session& session) {
                   revise_step(session, stage_input(state), state.conversation, state);
                 }},
      "plan.formalize");
  graph.add_edge("plan.generate", review);
  graph.add_edge("plan.formalize", exit);
  return "plan.generate";
}

}  // namespace detail

}  // namespace sciagent
