#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sciagent {

using Json = nlohmann::json;

enum class Role { system, user, assistant, tool };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct ToolCallRequest {
  std::string id;
  std::string tool_name;
  Json arguments = Json::object();

  bool operator==(const ToolCallRequest&) const = default;
};

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  std::vector<ToolCallRequest> tool_calls;  // assistant only
  std::optional<std::string> tool_call_id;  // tool only

  static ChatMessage system(std::string text);
  static ChatMessage user(std::string text);
  static ChatMessage assistant(std::string text, std::vector<ToolCallRequest> calls = {});
  static ChatMessage tool(std::string call_id, std::string text);

  bool operator==(const ChatMessage&) const = default;
};

void to_json(Json& j, const ToolCallRequest& call);
void from_json(const Json& j, ToolCallRequest& call);
void to_json(Json& j, const ChatMessage& message);
void from_json(const Json& j, ChatMessage& message);

/// Checks the per-message invariants and, across the list, that every tool
/// message answers a tool call issued by an earlier assistant message.
/// Throws PreconditionError on violation.
void validate_conversation(std::span<const ChatMessage> messages);

struct ToolSpec {
  std::string name;
  std::string description;
  Json parameters = Json::object();  // JSON schema of the argument object
};

struct TokenUsage {
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
};

Json to_json(const TokenUsage& usage);

struct Completion {
  ChatMessage message;
  TokenUsage usage;
};

/// A chat-completion model endpoint. Implementations must not mutate the
/// request and must be safe to share across concurrent runs unless they say
/// otherwise.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  virtual Completion complete(std::span<const ChatMessage> messages,
                              std::span<const ToolSpec> tools) = 0;

  /// Resumable position, stored alongside checkpoints. Stateless backends
  /// return null.
  virtual Json save_state() const { return nullptr; }
  virtual void restore_state(const Json& /*state*/) {}
};

struct BackendConfig {
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string model_id = "o3-mini";
  std::string credential_ref = "OPENAI_API_KEY";
  double request_timeout = 120.0;  // seconds
  int max_transport_retries = 2;

  void validate() const;
};

void to_json(Json& j, const BackendConfig& config);
void from_json(const Json& j, BackendConfig& config);

struct HttpReply {
  int status = 0;  // 0 when no response arrived
  std::string body;
  std::string error;
};

/// Blocking POST used by the OpenAI-compatible backend; swappable in tests.
using HttpPost = std::function<HttpReply(const std::string& url,
                                         const std::map<std::string, std::string>& headers,
                                         const std::string& body, double timeout_seconds)>;

HttpPost default_http_post();

/// Client for `POST {endpoint_url}/chat/completions`.
class OpenAiBackend final : public ChatBackend {
 public:
  explicit OpenAiBackend(BackendConfig config, HttpPost post = default_http_post());

  Completion complete(std::span<const ChatMessage> messages,
                      std::span<const ToolSpec> tools) override;

  const BackendConfig& config() const { return config_; }

  Json build_request(std::span<const ChatMessage> messages,
                     std::span<const ToolSpec> tools) const;
  static Completion parse_response(const std::string& body);

 private:
  BackendConfig config_;
  HttpPost post_;
};

/// One-shot convenience over OpenAiBackend.
ChatMessage complete(const BackendConfig& config, std::span<const ChatMessage> messages,
                     std::span<const ToolSpec> tools = {});

struct CapturedRequest {
  std::vector<ChatMessage> messages;
  std::vector<std::string> tool_names;
};

/// Replays canned assistant messages in FIFO order and records every request.
/// Single consumer per instance.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ChatMessage> script);
  explicit ScriptedBackend(std::vector<Completion> script);

  static ScriptedBackend from_json(const Json& document);
  static ScriptedBackend from_file(const std::string& path);

  Completion complete(std::span<const ChatMessage> messages,
                      std::span<const ToolSpec> tools) override;

  Json save_state() const override;
  void restore_state(const Json& state) override;

  const std::vector<CapturedRequest>& capture_log() const { return capture_; }
  std::size_t position() const { return cursor_; }
  std::size_t remaining() const { return script_.size() - cursor_; }

 private:
  std::vector<Completion> script_;
  std::size_t cursor_ = 0;
  std::vector<CapturedRequest> capture_;
};

/// Stand-in for `scripted_complete(script, messages, tools)`.
ChatMessage scripted_complete(ScriptedBackend& backend, std::span<const ChatMessage> messages,
                              std::span<const ToolSpec> tools = {});

}  // namespace sciagent
