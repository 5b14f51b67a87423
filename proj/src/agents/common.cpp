#include <random>

#include <sys/stat.h>

#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

namespace detail {

std::string stage_input(const RunState& state) {
  if (state.data.contains("task") && state.data["task"].is_string()) return state.data["task"].get<std::string>();
  return state.data.value("query", std::string());
}

void begin_stage(RunState& state, const std::string& stage) {
  if (!state.conversation.empty()) {
    state.data["archive"][stage] = state.conversation;
    state.conversation.clear();
  }
}

std::vector<ChatMessage> opening(const std::string& system_prompt, const std::string& input, const RunState& state) {
  std::vector<ChatMessage> out{ChatMessage::system(system_prompt), ChatMessage::user(input)};
  for (auto& m : steering_messages(state)) out.push_back(std::move(m));
  return out;
}

fs::path workspace_of(const RunState& state) {
  if (state.workspace.empty()) throw PreconditionError("run state has no workspace");
  return fs::path(state.workspace);
}

std::vector<std::string> available_tools(const ToolRegistry* registry, const std::vector<std::string>& wanted) {
  std::vector<std::string> out;
  if (!registry) return out;
  for (const auto& w : wanted) {
    if (registry->contains(w)) out.push_back(w);
  }
  return out;
}

const ToolRegistry& registry_or_empty(const ToolRegistry* registry) {
  static const ToolRegistry empty;
  return registry ? *registry : empty;
}

}  // namespace detail

AgentTurn agent_turn(Session& session, RunState& state, const ToolRegistry& registry,
                     std::vector<ChatMessage> messages, const std::vector<std::string>& tool_names,
                     std::string_view purpose, int max_tool_rounds) {
  auto specs = registry.specs(tool_names);
  ToolContext ctx{session, state, detail::workspace_of(state)};
  AgentTurn turn;
  while (true) {
    auto completion = session.call(messages, specs, purpose);
    auto& msg = completion.message;
    if (msg.tool_calls.empty()) {
      turn.final = msg;
      return turn;
    }
    if (turn.tool_rounds >= max_tool_rounds) {
      turn.limit_reached = true;
      turn.final = ChatMessage::assistant(msg.content);
      return turn;
    }
    ++turn.tool_rounds;
    messages.push_back(msg);
    turn.exchanged.push_back(msg);
    for (const auto& call : msg.tool_calls) {
      auto reply = invoke_tool(registry, call, ctx);
      messages.push_back(reply);
      turn.exchanged.push_back(std::move(reply));
    }
  }
}

std::string new_run_id() {
  std::random_device rd;
  std::mt19937_64 gen((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  static const char* hex = "0123456789abcdef";
  std::string id = "run-";
  auto v = gen();
  for (int i = 0; i < 12; ++i) {
    id.push_back(hex[v & 0xf]);
    v >>= 4;
  }
  return id;
}

fs::path prepare_workspace(const fs::path& root, const std::string& run_id, const std::vector<fs::path>& inputs) {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
    throw PreconditionError("invalid run id '" + run_id + "'");
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoFailure("cannot create " + root.string() + ": " + ec.message());
  auto ws = fs::weakly_canonical(root) / run_id;
  if (fs::exists(ws) && !fs::is_empty(ws)) throw IoFailure("workspace " + ws.string() + " already exists");
  fs::create_directories(ws, ec);
  if (ec) throw IoFailure("cannot create " + ws.string() + ": " + ec.message());
  for (const auto& input : inputs) {
    if (!fs::is_regular_file(input)) throw IoFailure("input file " + input.string() + " not found");
    auto dest = ws / input.filename();
    fs::copy_file(input, dest, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoFailure("cannot copy " + input.string() + ": " + ec.message());
    fs::permissions(dest, fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read,
                    fs::perm_options::replace);
  }
  write_file_atomic(ws / "transcript.ndjson", "");
  return ws;
}

RunState initial_state(const std::string& run_id, const fs::path& workspace, const std::string& query) {
  if (trim(query).empty()) throw PreconditionError("query must be nonempty");
  RunState s;
  s.run_id = run_id;
  s.workspace = workspace.string();
  s.data["query"] = query;
  Json inputs = Json::array();
  std::error_code ec;
  if (fs::is_directory(workspace, ec)) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(workspace)) {
      auto name = e.path().filename().string();
      if (name == "transcript.ndjson" || name == "checkpoints" || name.starts_with(".")) continue;
      names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    for (auto& n : names) inputs.push_back(n);
  }
  s.data["inputs"] = inputs;
  return s;
}

RunHandles open_run(const fs::path& workspace, const std::string& run_id, TranscriptClock clock) {
  RunHandles h;
  h.transcript = std::make_unique<Transcript>(Transcript::open(workspace / "transcript.ndjson", run_id, std::move(clock)));
  h.checkpoints = std::make_unique<CheckpointStore>(workspace / "checkpoints");
  return h;
}

}  // namespace sciagent
