#include "sciagent/errors.hpp"
#include "sciagent/tools.hpp"

namespace sciagent {

ToolRegistry::ToolRegistry(std::vector<Tool> tools) {
  for (auto& t : tools) {
    auto name = t.spec.name;
    if (name.empty()) throw PreconditionError("tool without a name");
    if (!tools_.emplace(name, std::move(t)).second) throw PreconditionError("duplicate tool '" + name + "'");
  }
}

ToolRegistry ToolRegistry::with(Tool tool) const {
  ToolRegistry copy = *this;
  auto name = tool.spec.name;
  copy.tools_[name] = std::move(tool);
  return copy;
}

const Tool* ToolRegistry::find(const std::string& name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

std::vector<ToolSpec> ToolRegistry::specs(const std::vector<std::string>& names) const {
  std::vector<ToolSpec> out;
  for (const auto& n : names) {
    if (const auto* t = find(n)) out.push_back(t->spec);
  }
  return out;
}

std::vector<ToolSpec> ToolRegistry::all_specs() const {
  std::vector<ToolSpec> out;
  for (const auto& [_, t] : tools_) out.push_back(t.spec);
  return out;
}

namespace {

std::string required_string(const Json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args[key].is_string()) {
    throw PreconditionError(std::string("argument '") + key + "' must be a string");
  }
  return args[key].get<std::string>();
}

void note_artifacts(RunState& state, const ToolResult& result) {
  for (const auto& a : result.artifacts) state.data["artifact_origin"][a] = "tool";
}

// Gate then run; a blocked verdict becomes the refusal reply.
ToolResult gated_command(const std::string& command, ToolContext& ctx, const CommandPolicy& policy) {
  auto verdict = safety_check(ctx.session, command, ctx.workspace, policy);
  if (!verdict.allowed()) {
    ToolResult blocked;
    blocked.tool_name = "run_cmd";
    blocked.metadata["command"] = command;
    blocked.metadata["blocked"] = true;
    blocked.metadata["verdict"] = to_json(verdict);
    blocked.reply = std::string(kUnsafePrefix) + command;
    return blocked;
  }
  auto result = run_cmd(CommandRequest{command, ctx.workspace}, verdict, ctx.workspace, policy);
  ctx.state.data["last_command"] = {{"command", command},
                                    {"stdout", result.stdout_text},
                                    {"stderr", result.stderr_text},
                                    {"exit_code", result.exit_code ? Json(*result.exit_code) : Json(nullptr)}};
  return result;
}

std::string quote_for_shell(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

}  // namespace

ToolRegistry make_standard_tools(const ToolboxConfig& config) {
  std::vector<Tool> tools;
  const auto policy = config.policy;

  tools.push_back(Tool{
      ToolSpec{"run_cmd", "Run a shell command in the workspace. Every command passes a safety check first.",
               Json{{"type", "object"},
                    {"properties", {{"command", {{"type", "string"}, {"description", "Shell command to run"}}}}},
                    {"required", {"command"}}}},
      [policy](const Json& args, ToolContext& ctx) {
        auto command = required_string(args, "command");
        auto r = gated_command(command, ctx, policy);
        ctx.state.data["commands_run"] = ctx.state.data.value("commands_run", 0) + (r.metadata.contains("blocked") ? 0 : 1);
        return r;
      }});

  const auto interpreters = config.interpreters;
  tools.push_back(Tool{
      ToolSpec{"write_code",
               "Write a file inside the workspace (relative path). Set execute to true to run it afterwards.",
               Json{{"type", "object"},
                    {"properties",
                     {{"path", {{"type", "string"}}},
                      {"content", {{"type", "string"}}},
                      {"execute", {{"type", "boolean"}, {"description", "Run the file with its interpreter"}}}}},
                    {"required", {"path", "content"}}}},
      [policy, interpreters](const Json& args, ToolContext& ctx) {
        auto path = required_string(args, "path");
        auto content = required_string(args, "content");
        auto written = write_code(ctx.workspace, path, content);
        note_artifacts(ctx.state, written);
        bool execute = args.contains("execute") && args["execute"].is_boolean() && args["execute"].get<bool>();
        if (!execute) return written;
        auto rel = written.metadata["path"].get<std::string>();
        auto ext = std::filesystem::path(rel).extension().string();
        auto it = interpreters.find(ext);
        if (it == interpreters.end()) {
          written.reply += "\nNo interpreter is configured for '" + ext + "' files; not executed.";
          return written;
        }
        auto command = fill_template(it->second, {{"file", quote_for_shell(rel)}});
        auto ran = gated_command(command, ctx, policy);
        if (!ran.metadata.contains("blocked")) {
          ctx.state.data["commands_run"] = ctx.state.data.value("commands_run", 0) + 1;
        }
        written.stdout_text = ran.stdout_text;
        written.stderr_text = ran.stderr_text;
        written.exit_code = ran.exit_code;
        written.timed_out = ran.timed_out;
        written.metadata["execution"] = to_json(ran);
        written.reply += "\n" + ran.reply;
        return written;
      }});

  if (config.search) {
    auto search = config.search;
    int default_k = config.default_search_k;
    tools.push_back(Tool{
        ToolSpec{"web_search", "Search the web. Returns titles, URLs and snippets.",
                 Json{{"type", "object"},
                      {"properties", {{"query", {{"type", "string"}}}, {"k", {{"type", "integer"}, {"minimum", 1}}}}},
                      {"required", {"query"}}}},
        [search, default_k](const Json& args, ToolContext&) {
          auto query = required_string(args, "query");
          int k = args.contains("k") && args["k"].is_number_integer() ? args["k"].get<int>() : default_k;
          auto results = web_search(*search, query, k);
          ToolResult r;
          r.tool_name = "web_search";
          Json list = results;
          r.metadata["query"] = query;
          r.metadata["results"] = list;
          Json urls = Json::array();
          for (const auto& s : results) urls.push_back(s.url);
          r.metadata["urls"] = urls;
          r.reply = results.empty() ? "No results." : list.dump(2);
          return r;
        }});
  }

  if (config.fetcher) {
    auto fetcher = config.fetcher;
    auto cap = config.content_byte_cap;
    tools.push_back(Tool{
        ToolSpec{"process_content", "Fetch a web page and summarize its text in the given context.",
                 Json{{"type", "object"},
                      {"properties", {{"url", {{"type", "string"}}}, {"context", {{"type", "string"}}}}},
                      {"required", {"url", "context"}}}},
        [fetcher, cap](const Json& args, ToolContext& ctx) {
          auto url = required_string(args, "url");
          auto context = args.contains("context") && args["context"].is_string() ? args["context"].get<std::string>()
                                                                                 : std::string();
          auto summary = process_content(ctx.session, *fetcher, url, context, cap);
          ToolResult r;
          r.tool_name = "process_content";
          r.metadata["url"] = url;
          r.metadata["urls"] = Json::array({url});
          r.metadata["truncated"] = summary.truncated;
          r.metadata["page_bytes"] = summary.page_bytes;
          r.metadata["summarized_bytes"] = summary.summarized_bytes;
          r.reply = summary.summary;
          return r;
        }});
  }
  return ToolRegistry(std::move(tools));
}

ChatMessage invoke_tool(const ToolRegistry& registry, const ToolCallRequest& call, ToolContext& context) {
  auto& transcript = context.session.transcript();
  transcript.append(EventKind::tool_call, {{"call_id", call.id}, {"tool", call.tool_name}, {"arguments", call.arguments}});
  std::string reply;
  Json payload{{"call_id", call.id}, {"tool", call.tool_name}};
  try {
    const Tool* tool = registry.find(call.tool_name);
    if (!tool) throw PreconditionError("unknown tool '" + call.tool_name + "'");
    auto result = tool->invoke(call.arguments, context);
    payload["result"] = to_json(result);
    payload["status"] = "ok";
    reply = result.reply;
  } catch (const ScriptExhausted&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    context.session.record_error("tool:" + call.tool_name, e);
    payload["status"] = "error";
    payload["error"] = {{"type", e.kind()}, {"message", e.what()}};
    reply = "Error (" + e.kind() + "): " + e.what();
  }
  transcript.append(EventKind::tool_result, payload);
  return ChatMessage::tool(call.id, reply);
}

}  // namespace sciagent
