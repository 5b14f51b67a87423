#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sciagent/chat.hpp"
#include "sciagent/graph.hpp"

namespace sciagent {

// ---------------------------------------------------------------------------
// Records

struct CommandRequest {
  std::string command;
  std::filesystem::path working_dir;
};

/// Outcome of the safety gate for one exact command string. Only
/// `from_reply` can produce an allowed verdict, and only for a reply that
/// contains "[YES]" and no "[NO]".
class SafetyVerdict {
 public:
  static SafetyVerdict from_reply(std::string command, std::string raw_reply);
  static SafetyVerdict blocked(std::string command, std::string reason);

  bool allowed() const { return allowed_; }
  const std::string& command() const { return command_; }
  const std::string& raw_reply() const { return raw_reply_; }
  std::string verdict_name() const { return allowed_ ? "allowed" : "blocked"; }

 private:
  SafetyVerdict(std::string command, std::string raw_reply, bool allowed)
      : command_(std::move(command)), raw_reply_(std::move(raw_reply)), allowed_(allowed) {}
  std::string command_;
  std::string raw_reply_;
  bool allowed_ = false;
};

Json to_json(const SafetyVerdict& verdict);

struct ToolResult {
  std::string tool_name;
  std::string stdout_text;
  std::string stderr_text;
  std::optional<int> exit_code;  // commands only
  std::vector<std::string> artifacts;  // workspace-relative paths written
  bool timed_out = false;
  Json metadata = Json::object();
  std::string reply;  // what the model sees as the tool message
};

Json to_json(const ToolResult& result);

struct SearchResult {
  std::string title;
  std::string url;
  std::string snippet;

  bool operator==(const SearchResult&) const = default;
};

void to_json(Json& j, const SearchResult& r);
void from_json(const Json& j, SearchResult& r);

// ---------------------------------------------------------------------------
// Command execution

/// Mechanical rules applied on top of the model's safety answer, plus the
/// child-process environment.
struct CommandPolicy {
  std::vector<std::string> env_allow{"PATH", "LANG", "LC_ALL", "LC_CTYPE", "TERM", "TZ", "PYTHONPATH"};
  double timeout_seconds = 300.0;
  std::size_t max_output_bytes = 1 << 20;

  /// Reason the command is refused regardless of the model's answer:
  /// package-manager mutation, privilege escalation, or deleting / writing /
  /// changing directory outside `workspace`. Heuristic, not a sandbox.
  std::optional<std::string> denial_reason(const std::string& command,
                                           const std::filesystem::path& workspace) const;

  std::vector<std::string> child_environment(const std::filesystem::path& workspace) const;
};

/// Asks the backend whether `command` is safe. Fail-closed: a denied command
/// never reaches the backend, and any backend failure yields `blocked`.
/// Logs one safety_verdict event.
SafetyVerdict safety_check(Session& session, const std::string& command,
                           const std::filesystem::path& workspace, const CommandPolicy& policy = {});

/// Runs `request.command` with /bin/sh in `request.working_dir`. Requires an
/// allowed verdict for exactly this command (GateViolation otherwise). A
/// timeout kills the process group and returns the partial output with
/// `timed_out` set. Exit status 127 from the shell (command not found)
/// raises SpawnFailure.
ToolResult run_cmd(const CommandRequest& request, const SafetyVerdict& verdict,
                   const std::filesystem::path& workspace, const CommandPolicy& policy = {});

// ---------------------------------------------------------------------------
// Files

/// Resolves `relative` inside `workspace`, refusing absolute paths, `..`
/// escapes and symlinked parents that leave the workspace (PathEscape).
std::filesystem::path resolve_in_workspace(const std::filesystem::path& workspace,
                                           const std::string& relative);

/// Atomically writes `content` to `relative`. Overwrites carry a unified
/// diff in `metadata["diff"]`; new files have an empty diff. Read-only files
/// (user inputs) are refused with IoFailure.
ToolResult write_code(const std::filesystem::path& workspace, const std::string& relative,
                      const std::string& content);

/// Line-based unified diff (Myers), `context` lines around each hunk. Empty
/// when the inputs are equal.
std::string unified_diff(const std::string& before, const std::string& after, const std::string& from_label,
                         const std::string& to_label, int context = 3);

// ---------------------------------------------------------------------------
// Web

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::vector<SearchResult> search(const std::string& query, int k) = 0;
};

/// Reads `{dir}/*.json`, each {"query": ..., "results": [{title,url,snippet}]}.
/// Exact query match wins; a fixture whose query is "*" matches anything.
/// A missing directory is a provider outage.
class FixtureSearchProvider final : public SearchProvider {
 public:
  explicit FixtureSearchProvider(std::filesystem::path dir);
  std::vector<SearchResult> search(const std::string& query, int k) override;

 private:
  std::filesystem::path dir_;
};

/// GET `{url}?q=...&count=k` with the key from `key_env` as a bearer token.
/// Understands {"results": [...]} and {"web": {"results": [...]}} replies.
class HttpSearchProvider final : public SearchProvider {
 public:
  HttpSearchProvider(std::string url, std::string key_env, double timeout_seconds = 30.0);
  std::vector<SearchResult> search(const std::string& query, int k) override;

 private:
  std::string url_;
  std::string key_env_;
  double timeout_;
};

/// Returns at most k results with well-formed URLs.
std::vector<SearchResult> web_search(SearchProvider& provider, const std::string& query, int k);

class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual std::string fetch(const std::string& url) = 0;
};

/// Serves `{dir}/index.json` ({url: file}) with files relative to `dir`.
class FixturePageFetcher final : public PageFetcher {
 public:
  explicit FixturePageFetcher(std::filesystem::path dir);
  std::string fetch(const std::string& url) override;

 private:
  std::filesystem::path dir_;
};

class HttpPageFetcher final : public PageFetcher {
 public:
  explicit HttpPageFetcher(double timeout_seconds = 30.0) : timeout_(timeout_seconds) {}
  std::string fetch(const std::string& url) override;

 private:
  double timeout_;
};

/// Visible text of an HTML document: scripts, styles and comments dropped,
/// tags removed, entities decoded, whitespace collapsed.
std::string html_to_text(const std::string& html);

struct ContentSummary {
  std::string summary;
  bool truncated = false;
  std::size_t page_bytes = 0;
  std::size_t summarized_bytes = 0;
};

/// Fetches `url`, caps the page at `byte_cap` bytes, strips markup and asks
/// the backend to summarize the text in `context`.
ContentSummary process_content(Session& session, PageFetcher& fetcher, const std::string& url,
                               const std::string& context, std::size_t byte_cap);

// ---------------------------------------------------------------------------
// Registry

struct ToolContext {
  Session& session;
  RunState& state;
  std::filesystem::path workspace;
};

struct Tool {
  ToolSpec spec;
  std::function<ToolResult(const Json& arguments, ToolContext& context)> invoke;
};

/// Immutable after construction; shareable between runs.
class ToolRegistry {
 public:
  ToolRegistry() = default;
  explicit ToolRegistry(std::vector<Tool> tools);

  ToolRegistry with(Tool tool) const;
  const Tool* find(const std::string& name) const;
  std::vector<ToolSpec> specs(const std::vector<std::string>& names) const;
  std::vector<ToolSpec> all_specs() const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

 private:
  std::map<std::string, Tool> tools_;
};

struct ToolboxConfig {
  CommandPolicy policy;
  /// Extension -> command template with a {file} placeholder, used when
  /// write_code is asked to execute what it wrote.
  std::map<std::string, std::string> interpreters{
      {".py", "python3 {file}"}, {".jl", "julia {file}"}, {".sh", "sh {file}"}};
  std::size_t content_byte_cap = 256 * 1024;
  int default_search_k = 5;
  std::shared_ptr<SearchProvider> search;
  std::shared_ptr<PageFetcher> fetcher;
};

/// run_cmd, write_code, and (when providers are configured) web_search and
/// process_content.
ToolRegistry make_standard_tools(const ToolboxConfig& config);

/// Runs one tool call: logs tool_call, invokes the tool, logs tool_result,
/// and returns the tool message for the conversation. Tool failures are
/// logged as error events and reported to the model instead of thrown.
ChatMessage invoke_tool(const ToolRegistry& registry, const ToolCallRequest& call, ToolContext& context);

}  // namespace sciagent
