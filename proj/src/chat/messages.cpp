#include "sciagent/chat.hpp"

#include <set>

#include "sciagent/errors.hpp"

namespace sciagent {

std::string to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role role_from_string(const std::string& name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  if (name == "tool") return Role::tool;
  throw MalformedResponse("unknown message role '" + name + "'");
}

ChatMessage ChatMessage::system(std::string text) {
  return {Role::system, std::move(text), {}, std::nullopt};
}

ChatMessage ChatMessage::user(std::string text) {
  return {Role::user, std::move(text), {}, std::nullopt};
}

ChatMessage ChatMessage::assistant(std::string text, std::vector<ToolCallRequest> calls) {
  return {Role::assistant, std::move(text), std::move(calls), std::nullopt};
}

ChatMessage ChatMessage::tool(std::string call_id, std::string text) {
  return {Role::tool, std::move(text), {}, std::move(call_id)};
}

void to_json(Json& j, const ToolCallRequest& call) {
  j = Json{{"id", call.id}, {"tool_name", call.tool_name}, {"arguments", call.arguments}};
}

void from_json(const Json& j, ToolCallRequest& call) {
  call.id = j.at("id").get<std::string>();
  call.tool_name = j.at("tool_name").get<std::string>();
  call.arguments = j.value("arguments", Json::object());
}

void to_json(Json& j, const ChatMessage& message) {
  j = Json{{"role", to_string(message.role)}, {"content", message.content}};
  if (!message.tool_calls.empty()) j["tool_calls"] = message.tool_calls;
  if (message.tool_call_id) j["tool_call_id"] = *message.tool_call_id;
}

void from_json(const Json& j, ChatMessage& message) {
  message.role = role_from_string(j.at("role").get<std::string>());
  message.content = j.value("content", std::string{});
  message.tool_calls.clear();
  if (j.contains("tool_calls")) message.tool_calls = j.at("tool_calls").get<std::vector<ToolCallRequest>>();
  message.tool_call_id.reset();
  if (j.contains("tool_call_id") && !j.at("tool_call_id").is_null()) {
    message.tool_call_id = j.at("tool_call_id").get<std::string>();
  }
}

void validate_conversation(std::span<const ChatMessage> messages) {
  std::set<std::string> issued;
  for (const auto& m : messages) {
    if (m.role != Role::assistant && !m.tool_calls.empty()) {
      throw PreconditionError("only assistant messages may carry tool calls");
    }
    if (m.role == Role::assistant) {
      std::set<std::string> ids;
      for (const auto& call : m.tool_calls) {
        if (call.tool_name.empty()) throw PreconditionError("tool call without a tool name");
        if (!ids.insert(call.id).second) throw PreconditionError("duplicate tool call id " + call.id);
        issued.insert(call.id);
      }
    }
    if (m.role == Role::tool) {
      if (!m.tool_call_id) throw PreconditionError("tool message without tool_call_id");
      if (!issued.contains(*m.tool_call_id)) {
        throw PreconditionError("tool message answers unknown call " + *m.tool_call_id);
      }
    } else if (m.tool_call_id) {
      throw PreconditionError("tool_call_id on a non-tool message");
    }
  }
}

Json to_json(const TokenUsage& usage) {
  Json j;
  j["prompt_tokens"] = usage.prompt_tokens ? Json(*usage.prompt_tokens) : Json(nullptr);
  j["completion_tokens"] = usage.completion_tokens ? Json(*usage.completion_tokens) : Json(nullptr);
  return j;
}

void BackendConfig::validate() const {
  if (!(request_timeout > 0)) throw ConfigError("backend request_timeout must be > 0");
  if (max_transport_retries < 0) throw ConfigError("backend max_transport_retries must be >= 0");
  if (endpoint_url.empty()) throw ConfigError("backend endpoint_url is empty");
}

void to_json(Json& j, const BackendConfig& config) {
  j = Json{{"endpoint_url", config.endpoint_url},
           {"model_id", config.model_id},
           {"credential_ref", config.credential_ref},
           {"request_timeout", config.request_timeout},
           {"max_transport_retries", config.max_transport_retries}};
}

void from_json(const Json& j, BackendConfig& config) {
  BackendConfig defaults;
  config.endpoint_url = j.value("endpoint_url", defaults.endpoint_url);
  config.model_id = j.value("model_id", defaults.model_id);
  config.credential_ref = j.value("credential_ref", defaults.credential_ref);
  config.request_timeout = j.value("request_timeout", defaults.request_timeout);
  config.max_transport_retries = j.value("max_transport_retries", defaults.max_transport_retries);
}

}  // namespace sciagent
