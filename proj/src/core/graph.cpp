#include "sciagent/graph.hpp"

#include <deque>

#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

Session::Session(ChatBackend& backend, Transcript& transcript, LoopLimits limits, PromptCatalog prompts)
    : backend_(backend), transcript_(transcript), limits_(limits), prompts_(std::move(prompts)) {
  limits_.validate();
}

Completion Session::call(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools,
                         std::string_view purpose) {
  Json request = Json::array();
  for (const auto& m : messages) request.push_back(m);
  Json tool_names = Json::array();
  for (const auto& t : tools) tool_names.push_back(t.name);
  try {
    Completion c = backend_.complete(messages, tools);
    transcript_.append(EventKind::llm_call, {{"purpose", std::string(purpose)},
                                             {"request_messages", messages.size()},
                                             {"request_digest", fnv1a64_hex(request.dump())},
                                             {"tools", tool_names},
                                             {"response", c.message},
                                             {"usage", to_json(c.usage)}});
    return c;
  } catch (const std::exception& e) {
    record_error("llm_call:" + std::string(purpose), e);
    throw;
  }
}

void Session::record_error(const std::string& where, const std::exception& error) {
  const auto* typed = dynamic_cast<const Error*>(&error);
  transcript_.append(EventKind::error, {{"where", where},
                                        {"type", typed ? typed->kind() : std::string("exception")},
                                        {"message", error.what()}});
}

AgentGraph::AgentGraph(std::string name) : name_(std::move(name)) {}

AgentGraph& AgentGraph::add_node(const NodeId& id, NodeHandler handler) {
  if (id.empty() || id == kEndNode) throw InvalidGraph("invalid node id '" + id + "'");
  if (!nodes_.emplace(id, std::move(handler)).second) throw InvalidGraph("duplicate node '" + id + "'");
  return *this;
}

AgentGraph& AgentGraph::add_edge(const NodeId& from, const NodeId& to) {
  return add_conditional_edge(from, {to}, [to](const RunState&) { return to; });
}

AgentGraph& AgentGraph::add_conditional_edge(const NodeId& from, std::vector<NodeId> targets, EdgeRule rule) {
  if (targets.empty()) throw InvalidGraph("edge from '" + from + "' has no targets");
  if (!edges_.emplace(from, Edge{std::move(targets), std::move(rule)}).second) {
    throw InvalidGraph("node '" + from + "' already has an outgoing edge");
  }
  return *this;
}

AgentGraph& AgentGraph::set_entry(const NodeId& id) {
  entry_ = id;
  return *this;
}

std::vector<NodeId> AgentGraph::node_ids() const {
  std::vector<NodeId> ids;
  for (const auto& [id, _] : nodes_) ids.push_back(id);
  return ids;
}

void AgentGraph::validate() const {
  if (!nodes_.contains(entry_)) throw InvalidGraph("entry '" + entry_ + "' is not a node");
  for (const auto& [from, edge] : edges_) {
    if (!nodes_.contains(from)) throw InvalidGraph("edge from unknown node '" + from + "'");
    for (const auto& t : edge.targets) {
      if (t != kEndNode && !nodes_.contains(t)) {
        throw InvalidGraph("edge '" + from + "' -> '" + t + "' targets an unknown node");
      }
    }
  }
  for (const auto& [id, _] : nodes_) {
    if (!edges_.contains(id)) throw InvalidGraph("node '" + id + "' has no outgoing edge");
  }
  std::set<NodeId> seen{entry_};
  std::deque<NodeId> queue{entry_};
  while (!queue.empty()) {
    auto id = queue.front();
    queue.pop_front();
    for (const auto& t : edges_.at(id).targets) {
      if (t != kEndNode && seen.insert(t).second) queue.push_back(t);
    }
  }
  for (const auto& [id, _] : nodes_) {
    if (!seen.contains(id)) throw InvalidGraph("node '" + id + "' is unreachable from the entry");
  }
}

const NodeHandler& AgentGraph::handler(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw NodeFailure("unknown node '" + id + "'");
  return it->second;
}

NodeId AgentGraph::successor(const NodeId& from, const RunState& state) const {
  const auto& edge = edges_.at(from);
  NodeId next = edge.rule(state);
  if (std::find(edge.targets.begin(), edge.targets.end(), next) == edge.targets.end()) {
    throw NodeFailure("edge rule of '" + from + "' chose undeclared target '" + next + "'");
  }
  return next;
}

namespace {

void mark_failed(RunState& state, const NodeId& node, const std::exception& e) {
  const auto* typed = dynamic_cast<const Error*>(&e);
  state.data["error"] = {{"node", node},
                         {"type", typed ? typed->kind() : std::string("NodeFailure")},
                         {"message", e.what()}};
  if (state.status == RunStatus::running) state.finish(RunStatus::failed);
}

RunState execute_from(const AgentGraph& graph, RunState state, NodeId node, Session& session,
                      const RunOptions& options) {
  auto& transcript = session.transcript();
  while (node != kEndNode) {
    transcript.append(EventKind::node_enter, {{"node", node}});
    NodeId next;
    try {
      graph.handler(node)(state, session);
      next = graph.successor(node, state);
    } catch (const std::exception& e) {
      session.record_error("node:" + node, e);
      transcript.append(EventKind::node_exit, {{"node", node}, {"status", "failed"}});
      mark_failed(state, node, e);
      return state;
    }
    transcript.append(EventKind::node_exit, {{"node", node}, {"status", "ok"}});
    if (next == kEndNode) state.finish(RunStatus::succeeded);
    if (auto* store = session.checkpoints()) {
      auto ckpt = store->save(state, next, graph.name(), session.backend().save_state());
      transcript.append(EventKind::checkpoint, {{"checkpoint", ckpt.sequence}, {"node", next}});
      if (options.stop_after_checkpoint && *options.stop_after_checkpoint == ckpt.sequence) return state;
    }
    node = next;
  }
  if (state.status == RunStatus::running) state.finish(RunStatus::succeeded);
  return state;
}

}  // namespace

RunState run_graph(const AgentGraph& graph, RunState initial, Session& session, const RunOptions& options) {
  graph.validate();
  if (initial.status != RunStatus::running) throw PreconditionError("initial state must be running");
  return execute_from(graph, std::move(initial), graph.entry(), session, options);
}

RunState resume(const AgentGraph& graph, const Checkpoint& checkpoint, Session& session,
                const std::optional<std::string>& steering, const RunOptions& options) {
  graph.validate();
  if (checkpoint.graph != graph.name()) {
    throw PreconditionError("checkpoint belongs to graph '" + checkpoint.graph + "', not '" + graph.name() + "'");
  }
  if (checkpoint.node != kEndNode && !graph.has_node(checkpoint.node)) {
    throw CorruptSnapshot("checkpoint names unknown node '" + checkpoint.node + "'");
  }
  RunState state = deserialize_state(checkpoint.state_snapshot);
  session.backend().restore_state(checkpoint.backend_state);
  if (steering) {
    auto& steer_log = state.data["steering"];
    if (!steer_log.is_array()) steer_log = Json::array();
    steer_log.push_back({{"checkpoint", checkpoint.sequence}, {"message", *steering}});
    session.transcript().append(EventKind::steering, {{"checkpoint", checkpoint.sequence},
                                                      {"node", checkpoint.node},
                                                      {"message", *steering}});
    // A steered run that had already finished continues from its last node.
    if (state.status != RunStatus::running) state.status = RunStatus::running;
  }
  if (state.status != RunStatus::running) return state;
  return execute_from(graph, std::move(state), checkpoint.node, session, options);
}

void throw_if_failed(const RunState& state) {
  if (state.status != RunStatus::failed) return;
  const auto& err = state.data.contains("error") ? state.data["error"] : Json::object();
  auto type = err.value("type", std::string("NodeFailure"));
  auto message = err.value("message", std::string("run failed"));
  if (type == "LimitExceeded") throw LimitExceeded(message);
  if (type == "FormalizationFailed") throw FormalizationFailed(message);
  if (type == "ScriptExhausted") throw ScriptExhausted(message);
  if (type == "TransportError") throw TransportError(message);
  if (type == "ConfigError") throw ConfigError(message);
  throw NodeFailure(message);
}

std::vector<ChatMessage> steering_messages(const RunState& state) {
  std::vector<ChatMessage> out;
  if (!state.data.contains("steering")) return out;
  for (const auto& s : state.data["steering"]) out.push_back(ChatMessage::user(s.at("message").get<std::string>()));
  return out;
}

bool detect_marker(std::string_view text, std::string_view marker) {
  if (marker.empty()) throw PreconditionError("marker must be nonempty");
  return text.find(marker) != std::string_view::npos;
}

NodeId add_review_loop(AgentGraph& graph, const ReviewLoop& loop, const NodeId& exit) {
  const NodeId review_id = loop.prefix + ".review";
  const NodeId revise_id = loop.prefix + ".revise";
  const std::string counter = loop.prefix + ".rounds";
  const std::string prefix = loop.prefix;

  graph.add_node(review_id, [review = loop.review, counter, prefix](RunState& state, Session& session) {
    if (session.limits().n_max == 0) {
      state.data["approvals"][prefix] = false;
      state.data["loop_spent"][prefix] = true;
      return;
    }
    state.bump(counter, session.limits().n_max);
    auto feedback = review(state, session);
    state.data["approvals"][prefix] = detect_marker(feedback, kApprovedMarker);
  });
  graph.add_node(revise_id, [revise = loop.revise, counter, prefix](RunState& state, Session& session) {
    revise(state, session);
    state.data["loop_spent"][prefix] = state.count(counter) >= session.limits().n_max;
  });
  graph.add_conditional_edge(review_id, {exit, revise_id}, [prefix, exit, revise_id](const RunState& s) {
    const auto& spent = s.data.contains("loop_spent") ? s.data["loop_spent"] : Json::object();
    bool skipped = spent.contains(prefix) && spent[prefix].get<bool>();
    return review_approved(s, prefix) || skipped ? exit : revise_id;
  });
  // n_max is not visible to edge rules, so the revise node records whether
  // the round budget is spent.
  graph.add_conditional_edge(revise_id, {exit, review_id}, [prefix, exit, review_id](const RunState& s) {
    const auto& spent = s.data["loop_spent"];
    return spent.contains(prefix) && spent[prefix].get<bool>() ? exit : review_id;
  });
  return review_id;
}

bool review_approved(const RunState& state, const std::string& prefix) {
  const auto& approvals = state.data.contains("approvals") ? state.data["approvals"] : Json::object();
  return approvals.contains(prefix) && approvals[prefix].get<bool>();
}

}  // namespace sciagent
