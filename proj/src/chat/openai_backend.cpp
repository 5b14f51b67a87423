#include <chrono>
#include <cstdlib>
#include <set>
#include <thread>

#include "sciagent/chat.hpp"
#include "sciagent/errors.hpp"

namespace sciagent {

namespace {

Json wire_message(const ChatMessage& m) {
  Json j{{"role", to_string(m.role)}, {"content", m.content}};
  if (!m.tool_calls.empty()) {
    Json calls = Json::array();
    for (const auto& call : m.tool_calls) {
      calls.push_back({{"id", call.id},
                       {"type", "function"},
                       {"function", {{"name", call.tool_name}, {"arguments", call.arguments.dump()}}}});
    }
    j["tool_calls"] = std::move(calls);
    if (m.content.empty()) j["content"] = nullptr;
  }
  if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
  return j;
}

std::optional<long> usage_field(const Json& usage, const char* name) {
  if (!usage.is_object() || !usage.contains(name) || !usage.at(name).is_number_integer()) {
    return std::nullopt;
  }
  return usage.at(name).get<long>();
}

bool retryable(const HttpReply& reply) {
  return reply.status == 0 || reply.status == 429 || reply.status >= 500;
}

}  // namespace

OpenAiBackend::OpenAiBackend(BackendConfig config, HttpPost post)
    : config_(std::move(config)), post_(std::move(post)) {
  config_.validate();
}

Json OpenAiBackend::build_request(std::span<const ChatMessage> messages,
                                  std::span<const ToolSpec> tools) const {
  Json body{{"model", config_.model_id}, {"messages", Json::array()}};
  for (const auto& m : messages) body["messages"].push_back(wire_message(m));
  if (!tools.empty()) {
    Json specs = Json::array();
    for (const auto& t : tools) {
      specs.push_back({{"type", "function"},
                       {"function",
                        {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
    body["tools"] = std::move(specs);
  }
  return body;
}

Completion OpenAiBackend::parse_response(const std::string& body) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw MalformedResponse("response has no choices");
  }
  const auto& choice = doc["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    throw MalformedResponse("choices[0] has no message object");
  }
  const auto& msg = choice["message"];

  Completion out;
  out.message.role = Role::assistant;
  if (msg.contains("content") && !msg["content"].is_null()) {
    if (!msg["content"].is_string()) throw MalformedResponse("message content is not a string");
    out.message.content = msg["content"].get<std::string>();
  }
  if (msg.contains("tool_calls") && !msg["tool_calls"].is_null()) {
    if (!msg["tool_calls"].is_array()) throw MalformedResponse("tool_calls is not an array");
    std::set<std::string> seen;
    for (const auto& tc : msg["tool_calls"]) {
      if (!tc.is_object() || !tc.contains("id") || !tc["id"].is_string() || !tc.contains("function") ||
          !tc["function"].is_object()) {
        throw MalformedResponse("tool call missing id or function");
      }
      const auto& fn = tc["function"];
      if (!fn.contains("name") || !fn["name"].is_string() || fn["name"].get<std::string>().empty()) {
        throw MalformedResponse("tool call without a function name");
      }
      ToolCallRequest call;
      call.id = tc["id"].get<std::string>();
      call.tool_name = fn["name"].get<std::string>();
      if (!seen.insert(call.id).second) throw MalformedResponse("duplicate tool call id " + call.id);
      if (fn.contains("arguments")) {
        const auto& args = fn["arguments"];
        if (args.is_string()) {
          auto text = args.get<std::string>();
          try {
            call.arguments = text.empty() ? Json::object() : Json::parse(text);
          } catch (const Json::parse_error&) {
            throw MalformedResponse("tool call arguments are not JSON: " + text);
          }
        } else if (args.is_object()) {
          call.arguments = args;
        } else {
          throw MalformedResponse("tool call arguments have unexpected type");
        }
      }
      out.message.tool_calls.push_back(std::move(call));
    }
  }
  if (doc.contains("usage")) {
    out.usage.prompt_tokens = usage_field(doc["usage"], "prompt_tokens");
    out.usage.completion_tokens = usage_field(doc["usage"], "completion_tokens");
  }
  return out;
}

Completion OpenAiBackend::complete(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools) {
  if (messages.empty()) throw PreconditionError("complete() needs at least one message");
  validate_conversation(messages);

  const char* key = std::getenv(config_.credential_ref.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("credential environment variable " + config_.credential_ref + " is not set");
  }

  std::string url = config_.endpoint_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";
  const std::string body = build_request(messages, tools).dump();
  const std::map<std::string, std::string> headers{{"Authorization", std::string("Bearer ") + key},
                                                   {"Content-Type", "application/json"}};

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_transport_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 6)));
    HttpReply reply = post_(url, headers, body, config_.request_timeout);
    if (reply.status >= 200 && reply.status < 300) return parse_response(reply.body);
    last_error = reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status) + ": " + reply.body;
    if (!retryable(reply)) break;
  }
  throw TransportError("chat completion failed after " + std::to_string(config_.max_transport_retries + 1) +
                       " attempt(s): " + last_error);
}

ChatMessage complete(const BackendConfig& config, std::span<const ChatMessage> messages,
                     std::span<const ToolSpec> tools) {
  OpenAiBackend backend(config);
  return backend.complete(messages, tools).message;
}

}  // namespace sciagent
