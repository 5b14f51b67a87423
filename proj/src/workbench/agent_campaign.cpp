#include <sstream>

#include "sciagent/errors.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

namespace {

constexpr const char* kSimulatorTool = "run_simulation";

constexpr const char* kContinuation =
    "Pick another design that you expect to beat the best yield seen so far and run the simulator on it.";

std::string default_goal(const CampaignConfig& config) {
  std::ostringstream os;
  os << "Find a capsule design whose simulated log10 neutron yield exceeds " << config.yield_threshold_log10
     << ". A design fixes five geometry parameters, each within its range:\n";
  for (const auto& p : design_parameters()) {
    os << "- " << p.name << ": " << p.lo << " to " << p.hi << " " << p.unit << "\n";
  }
  os << "Evaluate designs with the " << kSimulatorTool << " tool, one design per call.";
  return os.str();
}

Json record_json(const EvalRecord& r) {
  return {{"design", r.design}, {"objective", r.objective}, {"step_index", r.step_index},
          {"source", to_string(r.source)}};
}

EvalSource source_from(const std::string& s) {
  if (s == "agent") return EvalSource::agent;
  if (s == "bo") return EvalSource::bo;
  if (s == "random_init") return EvalSource::random_init;
  throw PreconditionError("unknown evaluation source '" + s + "'");
}

}  // namespace

Tool simulator_tool() {
  Tool t;
  t.spec.name = kSimulatorTool;
  t.spec.description = "Run the implosion simulator on one capsule design. Returns the log10 neutron yield.";
  Json props = Json::object();
  Json required = Json::array();
  for (const auto& p : design_parameters()) {
    props[p.name] = {{"type", "number"},
                     {"description", p.name + " in " + p.unit + ", between " + std::to_string(p.lo) + " and " +
                                         std::to_string(p.hi)}};
    required.push_back(p.name);
  }
  t.spec.parameters = {{"type", "object"}, {"properties", props}, {"required", required}};
  t.invoke = [](const Json& args, ToolContext& ctx) {
    Vec design;
    for (const auto& p : design_parameters()) {
      if (!args.is_object() || !args.contains(p.name) || !args[p.name].is_number()) {
        throw OutOfBounds("missing or non-numeric parameter '" + p.name + "'");
      }
      design.push_back(args[p.name].get<double>());
    }
    double y = synthetic_yield(design);
    auto& log = ctx.state.data["campaign"];
    if (!log.is_array()) log = Json::array();
    EvalRecord r{design, y, static_cast<int>(log.size()) + 1, EvalSource::agent};
    log.push_back(record_json(r));
    ToolResult result;
    result.tool_name = kSimulatorTool;
    result.metadata = record_json(r);
    std::ostringstream os;
    os << "log10 yield: " << y;
    result.reply = os.str();
    return result;
  };
  return t;
}

std::vector<EvalRecord> campaign_history(const RunState& state) {
  std::vector<EvalRecord> out;
  if (!state.data.contains("campaign")) return out;
  for (const auto& j : state.data["campaign"]) {
    out.push_back({j["design"].get<Vec>(), j["objective"].get<double>(), j["step_index"].get<int>(),
                   source_from(j["source"].get<std::string>())});
  }
  return out;
}

std::vector<EvalRecord> agent_campaign(Session& session, const ToolRegistry& registry, RunState& state,
                                       const CampaignConfig& config, const AgentCampaignOptions& options) {
  config.validate();
  if (options.iterations < 1) throw PreconditionError("agent_campaign needs at least one iteration");
  auto tools = registry.contains(kSimulatorTool) ? registry : registry.with(simulator_tool());
  if (!state.data.contains("campaign")) state.data["campaign"] = Json::array();
  auto goal = options.goal.empty() ? default_goal(config) : options.goal;

  auto budget_left = [&] { return static_cast<int>(state.data["campaign"].size()) < config.eval_budget; };
  try {
    std::string task = goal;
    if (options.hypothesize_first) {
      std::vector<ChatMessage> msgs{ChatMessage::system(session.prompts().hypothesis_generator),
                                    ChatMessage::user(goal)};
      for (auto& m : steering_messages(state)) msgs.push_back(std::move(m));
      auto rationale = session.call(msgs, {}, "campaign.hypothesis").message.content;
      state.data["campaign_rationale"] = rationale;
      task += "\n\nDesign rationale to start from:\n" + rationale;
    }
    std::vector<ChatMessage> conversation{ChatMessage::system(session.prompts().executor), ChatMessage::user(task)};
    for (auto& m : steering_messages(state)) conversation.push_back(std::move(m));
    for (int i = 0; i < options.iterations && budget_left(); ++i) {
      if (i > 0) conversation.push_back(ChatMessage::user(kContinuation));
      state.conversation = conversation;
      auto turn = agent_turn(session, state, tools, conversation, {kSimulatorTool}, "campaign.iteration",
                             std::max(1, session.limits().n_max));
      for (auto& m : turn.exchanged) conversation.push_back(std::move(m));
      conversation.push_back(turn.final);
    }
    state.conversation = conversation;
  } catch (const Error& e) {
    session.record_error("agent_campaign", e);
    state.data["campaign_error"] = {{"kind", e.kind()}, {"message", e.what()}};
  }
  return campaign_history(state);
}

}  // namespace sciagent
