#include <fstream>
#include <sstream>

#include "sciagent/chat.hpp"
#include "sciagent/errors.hpp"

namespace sciagent {

ScriptedBackend::ScriptedBackend(std::vector<ChatMessage> script) {
  script_.reserve(script.size());
  for (auto& m : script) script_.push_back(Completion{std::move(m), {}});
}

ScriptedBackend::ScriptedBackend(std::vector<Completion> script) : script_(std::move(script)) {}

// Accepts either a bare array of assistant messages or {"responses": [...]}.
// Entries may be plain strings (content only) or message objects; an entry
// may carry "usage": {"prompt_tokens", "completion_tokens"}.
ScriptedBackend ScriptedBackend::from_json(const Json& document) {
  const Json& list = document.is_object() ? document.at("responses") : document;
  if (!list.is_array()) throw ConfigError("script must be an array of responses");
  std::vector<Completion> script;
  for (const auto& entry : list) {
    Completion c;
    if (entry.is_string()) {
      c.message = ChatMessage::assistant(entry.get<std::string>());
    } else {
      Json m = entry;
      if (!m.contains("role")) m["role"] = "assistant";
      c.message = m.get<ChatMessage>();
      if (entry.contains("usage")) {
        const auto& u = entry["usage"];
        if (u.contains("prompt_tokens")) c.usage.prompt_tokens = u["prompt_tokens"].get<long>();
        if (u.contains("completion_tokens")) c.usage.completion_tokens = u["completion_tokens"].get<long>();
      }
    }
    if (c.message.role != Role::assistant) throw ConfigError("scripted responses must be assistant messages");
    script.push_back(std::move(c));
  }
  return ScriptedBackend(std::move(script));
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return from_json(Json::parse(buffer.str()));
  } catch (const Json::exception& e) {
    throw ConfigError("invalid script file " + path + ": " + e.what());
  }
}

Completion ScriptedBackend::complete(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools) {
  if (messages.empty()) throw PreconditionError("complete() needs at least one message");
  if (script_.empty()) throw PreconditionError("scripted backend has an empty script");
  CapturedRequest request;
  request.messages.assign(messages.begin(), messages.end());
  for (const auto& t : tools) request.tool_names.push_back(t.name);
  capture_.push_back(std::move(request));
  if (cursor_ >= script_.size()) {
    throw ScriptExhausted("script exhausted after " + std::to_string(script_.size()) + " response(s)");
  }
  return script_[cursor_++];
}

Json ScriptedBackend::save_state() const { return Json{{"cursor", cursor_}}; }

void ScriptedBackend::restore_state(const Json& state) {
  if (state.is_null()) return;
  auto cursor = state.at("cursor").get<std::size_t>();
  if (cursor > script_.size()) throw CorruptSnapshot("scripted backend cursor beyond script end");
  cursor_ = cursor;
}

ChatMessage scripted_complete(ScriptedBackend& backend, std::span<const ChatMessage> messages,
                              std::span<const ToolSpec> tools) {
  return backend.complete(messages, tools).message;
}

}  // namespace sciagent
