#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sciagent/chat.hpp"
#include "sciagent/prompts.hpp"
#include "sciagent/transcript.hpp"

namespace sciagent {

using NodeId = std::string;

/// Successor returned by an edge rule to finish the run.
inline const NodeId kEndNode = "__end__";

enum class RunStatus { running, succeeded, failed };

std::string to_string(RunStatus status);

struct LoopLimits {
  int n_max = 5;  // review / debate / tool iterations
  int f_max = 3;  // formalization attempts

  void validate() const;
};

void to_json(Json& j, const LoopLimits& limits);
void from_json(const Json& j, LoopLimits& limits);

struct RunState {
  std::string run_id;
  std::vector<ChatMessage> conversation;
  std::map<std::string, int> counters;
  std::string workspace;
  RunStatus status = RunStatus::running;
  // Agent-specific values that must survive a checkpoint (plans, summaries,
  // step indices, ...).
  Json data = Json::object();

  /// Increments `counters[name]`; throws LimitExceeded instead of passing
  /// `limit`.
  int bump(const std::string& name, int limit);
  int count(const std::string& name) const;

  /// Moves status out of `running`. Any other transition throws.
  void finish(RunStatus final_status);

  bool operator==(const RunState&) const = default;
};

Json to_json(const RunState& state);
RunState run_state_from_json(const Json& j);

/// Stable-field-order encoding; equal states produce identical bytes.
std::string serialize_state(const RunState& state);
RunState deserialize_state(const std::string& text);

struct Checkpoint {
  std::string run_id;
  long sequence = 0;
  NodeId node;  // node to execute next on resume
  std::string graph;
  std::string state_snapshot;
  Json backend_state;
};

/// Stores checkpoints as `{dir}/{sequence}.ckpt`.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path dir);

  Checkpoint save(const RunState& state, const NodeId& node, const std::string& graph,
                  const Json& backend_state);
  Checkpoint load(long sequence) const;
  std::vector<long> sequences() const;
  std::optional<long> latest() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Per-run services handed to every node: backend access with transcript
/// logging, loop limits, prompts, and (optionally) checkpoint storage.
class Session {
 public:
  Session(ChatBackend& backend, Transcript& transcript, LoopLimits limits = {},
          PromptCatalog prompts = default_prompts());

  /// Calls the backend and records one llm_call event (or an error event
  /// before rethrowing).
  Completion call(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools = {},
                  std::string_view purpose = {});

  ChatBackend& backend() { return backend_; }
  Transcript& transcript() { return transcript_; }
  const LoopLimits& limits() const { return limits_; }
  const PromptCatalog& prompts() const { return prompts_; }

  void set_checkpoints(CheckpointStore* store) { checkpoints_ = store; }
  CheckpointStore* checkpoints() const { return checkpoints_; }

  void record_error(const std::string& where, const std::exception& error);

 private:
  ChatBackend& backend_;
  Transcript& transcript_;
  LoopLimits limits_;
  PromptCatalog prompts_;
  CheckpointStore* checkpoints_ = nullptr;
};

using NodeHandler = std::function<void(RunState&, Session&)>;
using EdgeRule = std::function<NodeId(const RunState&)>;

class AgentGraph {
 public:
  explicit AgentGraph(std::string name);

  AgentGraph& add_node(const NodeId& id, NodeHandler handler);
  AgentGraph& add_edge(const NodeId& from, const NodeId& to);
  /// `rule` must return one of `targets`.
  AgentGraph& add_conditional_edge(const NodeId& from, std::vector<NodeId> targets, EdgeRule rule);
  AgentGraph& set_entry(const NodeId& id);

  /// Entry exists, every edge target exists (or is kEndNode), every node has
  /// an outgoing edge and is reachable from the entry.
  void validate() const;

  const std::string& name() const { return name_; }
  const NodeId& entry() const { return entry_; }
  bool has_node(const NodeId& id) const { return nodes_.contains(id); }
  std::vector<NodeId> node_ids() const;

  const NodeHandler& handler(const NodeId& id) const;
  NodeId successor(const NodeId& from, const RunState& state) const;

 private:
  struct Edge {
    std::vector<NodeId> targets;
    EdgeRule rule;
  };
  std::string name_;
  NodeId entry_;
  std::map<NodeId, NodeHandler> nodes_;
  std::map<NodeId, Edge> edges_;
};

struct RunOptions {
  /// Return right after the checkpoint with this sequence is written, as if
  /// the process had been interrupted there.
  std::optional<long> stop_after_checkpoint;
};

/// Runs from the entry node until a transition to kEndNode or a failure.
/// Handler exceptions do not propagate: the state comes back `failed` with
/// `data["error"]` describing the exception, and an error event is logged.
RunState run_graph(const AgentGraph& graph, RunState initial, Session& session,
                   const RunOptions& options = {});

/// Restores the snapshot and backend position from `checkpoint` and continues
/// at its recorded node. A steering message, if given, is stored in
/// `data["steering"]` and logged as a steering event; agents add it to every
/// later prompt via steering_messages().
RunState resume(const AgentGraph& graph, const Checkpoint& checkpoint, Session& session,
                const std::optional<std::string>& steering = std::nullopt,
                const RunOptions& options = {});

/// Rethrows the failure recorded by run_graph (as NodeFailure, LimitExceeded
/// or FormalizationFailed, matching the original kind) when `state` failed.
void throw_if_failed(const RunState& state);

/// Steering messages received so far, as user messages, oldest first.
std::vector<ChatMessage> steering_messages(const RunState& state);

/// True iff `marker` occurs in `text` (case-sensitive substring).
bool detect_marker(std::string_view text, std::string_view marker);

/// Reviewer-style loop shared by every agent with an approval gate.
///
/// Adds `{prefix}.review` and `{prefix}.revise`. Each review bumps the
/// `{prefix}.rounds` counter, runs `review`, and leaves for `exit` when the
/// returned feedback contains the approval marker. Otherwise `revise` runs,
/// then the loop continues until n_max rounds have happened. So approval in
/// round a appends a reviews and a-1 revisions; no approval appends n_max of
/// each.
struct ReviewLoop {
  std::string prefix;
  std::function<std::string(RunState&, Session&)> review;  // returns feedback text
  NodeHandler revise;
};

NodeId add_review_loop(AgentGraph& graph, const ReviewLoop& loop, const NodeId& exit);
bool review_approved(const RunState& state, const std::string& prefix);

}  // namespace sciagent
