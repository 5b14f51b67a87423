#include <algorithm>

#include "sciagent/errors.hpp"
#include "sciagent/graph.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::succeeded: return "succeeded";
    case RunStatus::failed: return "failed";
  }
  return "running";
}

namespace {

RunStatus status_from_string(const std::string& s) {
  if (s == "running") return RunStatus::running;
  if (s == "succeeded") return RunStatus::succeeded;
  if (s == "failed") return RunStatus::failed;
  throw CorruptSnapshot("unknown run status '" + s + "'");
}

}  // namespace

void LoopLimits::validate() const {
  if (n_max < 0) throw ConfigError("n_max must be >= 0");
  if (f_max < 1) throw ConfigError("f_max must be >= 1");
}

void to_json(Json& j, const LoopLimits& limits) { j = Json{{"n_max", limits.n_max}, {"f_max", limits.f_max}}; }

void from_json(const Json& j, LoopLimits& limits) {
  LoopLimits defaults;
  limits.n_max = j.value("n_max", defaults.n_max);
  limits.f_max = j.value("f_max", defaults.f_max);
}

int RunState::bump(const std::string& name, int limit) {
  int& c = counters[name];
  if (c >= limit) {
    throw LimitExceeded("counter '" + name + "' reached its limit of " + std::to_string(limit));
  }
  return ++c;
}

int RunState::count(const std::string& name) const {
  auto it = counters.find(name);
  return it == counters.end() ? 0 : it->second;
}

void RunState::finish(RunStatus final_status) {
  if (status != RunStatus::running || final_status == RunStatus::running) {
    throw PreconditionError("invalid run status transition " + to_string(status) + " -> " +
                            to_string(final_status));
  }
  status = final_status;
}

Json to_json(const RunState& state) {
  return {{"run_id", state.run_id},
          {"conversation", state.conversation},
          {"counters", state.counters},
          {"workspace", state.workspace},
          {"status", to_string(state.status)},
          {"data", state.data}};
}

RunState run_state_from_json(const Json& j) {
  RunState s;
  s.run_id = j.at("run_id").get<std::string>();
  s.conversation = j.at("conversation").get<std::vector<ChatMessage>>();
  s.counters = j.at("counters").get<std::map<std::string, int>>();
  s.workspace = j.at("workspace").get<std::string>();
  s.status = status_from_string(j.at("status").get<std::string>());
  s.data = j.at("data");
  return s;
}

std::string serialize_state(const RunState& state) { return to_json(state).dump(); }

RunState deserialize_state(const std::string& text) {
  try {
    return run_state_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw CorruptSnapshot(std::string("state snapshot does not decode: ") + e.what());
  }
}

CheckpointStore::CheckpointStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<long> CheckpointStore::sequences() const {
  std::vector<long> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir_, ec)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".ckpt") continue;
    auto stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) continue;
    out.push_back(std::stol(stem));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<long> CheckpointStore::latest() const {
  auto seqs = sequences();
  if (seqs.empty()) return std::nullopt;
  return seqs.back();
}

Checkpoint CheckpointStore::save(const RunState& state, const NodeId& node, const std::string& graph,
                                 const Json& backend_state) {
  Checkpoint c;
  c.run_id = state.run_id;
  c.sequence = latest().value_or(0) + 1;
  c.node = node;
  c.graph = graph;
  c.state_snapshot = serialize_state(state);
  c.backend_state = backend_state;
  Json doc{{"run_id", c.run_id},
           {"sequence", c.sequence},
           {"node", c.node},
           {"graph", c.graph},
           {"backend_state", c.backend_state},
           {"state", c.state_snapshot},
           {"state_digest", fnv1a64_hex(c.state_snapshot)}};
  write_file_atomic(dir_ / (std::to_string(c.sequence) + ".ckpt"), doc.dump());
  return c;
}

Checkpoint CheckpointStore::load(long sequence) const {
  auto path = dir_ / (std::to_string(sequence) + ".ckpt");
  if (!std::filesystem::exists(path)) {
    throw UnknownCheckpoint("no checkpoint " + std::to_string(sequence) + " in " + dir_.string());
  }
  Checkpoint c;
  try {
    auto doc = Json::parse(read_file(path));
    c.run_id = doc.at("run_id").get<std::string>();
    c.sequence = doc.at("sequence").get<long>();
    c.node = doc.at("node").get<std::string>();
    c.graph = doc.at("graph").get<std::string>();
    c.backend_state = doc.at("backend_state");
    c.state_snapshot = doc.at("state").get<std::string>();
    if (doc.at("state_digest").get<std::string>() != fnv1a64_hex(c.state_snapshot)) {
      throw CorruptSnapshot("checkpoint " + path.string() + " fails its digest check");
    }
  } catch (const Json::exception& e) {
    throw CorruptSnapshot("checkpoint " + path.string() + " is unreadable: " + e.what());
  }
  if (c.sequence != sequence) throw CorruptSnapshot("checkpoint " + path.string() + " has wrong sequence");
  deserialize_state(c.state_snapshot);  // validates
  return c;
}

}  // namespace sciagent
