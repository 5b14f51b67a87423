#include <cstdlib>
#include <set>

#include "sciagent/config.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<fs::path> opt_path(const Json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return resolve(base, j[key].get<std::string>());
}

CampaignConfig campaign(const Json& j, CampaignConfig defaults, const std::string& where,
                        std::set<std::string> extra = {}) {
  std::set<std::string> allowed{"n_init", "eval_budget", "seed", "yield_threshold_log10"};
  allowed.insert(extra.begin(), extra.end());
  check_keys(j, allowed, where);
  Json core = Json::object();
  for (const auto& k : {"n_init", "eval_budget", "seed", "yield_threshold_log10"}) {
    if (j.contains(k)) core[k] = j[k];
  }
  from_json(core, defaults);
  return defaults;
}

void parse_backend(const Json& j, const fs::path& base, BackendSettings& out) {
  check_keys(j, {"endpoint_url", "model_id", "credential_ref", "request_timeout", "max_transport_retries", "script"},
             "backend");
  Json live = j;
  live.erase("script");
  out.live = live.get<BackendConfig>();
  out.live.validate();
  out.script = opt_path(j, "script", base);
}

void parse_tools(const Json& j, const fs::path& base, ToolSettings& t) {
  check_keys(j,
             {"command_timeout", "max_output_bytes", "env_allow", "interpreters", "content_byte_cap", "search_k",
              "search_fixtures", "search_url", "search_key_env", "page_fixtures", "live_fetch", "arxiv_fixtures",
              "live_arxiv", "arxiv_cache", "pdf_extractor"},
             "tools");
  t.policy.timeout_seconds = j.value("command_timeout", t.policy.timeout_seconds);
  t.policy.max_output_bytes = j.value("max_output_bytes", t.policy.max_output_bytes);
  if (j.contains("env_allow")) t.policy.env_allow = j["env_allow"].get<std::vector<std::string>>();
  if (j.contains("interpreters")) t.interpreters = j["interpreters"].get<std::map<std::string, std::string>>();
  t.content_byte_cap = j.value("content_byte_cap", t.content_byte_cap);
  t.search_k = j.value("search_k", t.search_k);
  t.search_fixtures = opt_path(j, "search_fixtures", base);
  t.search_url = j.value("search_url", t.search_url);
  t.search_key_env = j.value("search_key_env", t.search_key_env);
  t.page_fixtures = opt_path(j, "page_fixtures", base);
  t.live_fetch = j.value("live_fetch", t.live_fetch);
  t.arxiv_fixtures = opt_path(j, "arxiv_fixtures", base);
  t.live_arxiv = j.value("live_arxiv", t.live_arxiv);
  if (j.contains("arxiv_cache")) t.arxiv_cache = resolve(base, j["arxiv_cache"].get<std::string>());
  t.pdf_extractor = j.value("pdf_extractor", t.pdf_extractor);
  if (!(t.policy.timeout_seconds > 0)) throw ConfigError("tools.command_timeout must be positive");
  if (t.search_k < 1) throw ConfigError("tools.search_k must be >= 1");
  if (t.content_byte_cap == 0) throw ConfigError("tools.content_byte_cap must be positive");
}

void parse_workbench(const Json& j, WorkbenchSettings& w) {
  check_keys(j, {"camel", "agent", "bo", "gp", "svg"}, "workbench");
  if (j.contains("camel")) {
    w.camel = campaign(j["camel"], w.camel, "workbench.camel", {"replicates"});
    w.camel_replicates = j["camel"].value("replicates", w.camel_replicates);
    if (w.camel_replicates < 1) throw ConfigError("workbench.camel.replicates must be >= 1");
  }
  if (j.contains("agent")) {
    const auto& a = j["agent"];
    w.agent = campaign(a, w.agent, "workbench.agent", {"iterations", "hypothesize_first", "goal"});
    w.agent_options.iterations = a.value("iterations", w.agent_options.iterations);
    w.agent_options.hypothesize_first = a.value("hypothesize_first", w.agent_options.hypothesize_first);
    w.agent_options.goal = a.value("goal", w.agent_options.goal);
    if (w.agent_options.iterations < 1) throw ConfigError("workbench.agent.iterations must be >= 1");
  }
  if (j.contains("bo")) {
    if (!j["bo"].is_array()) throw ConfigError("workbench.bo must be an array");
    w.bo.clear();
    for (const auto& b : j["bo"]) {
      auto c = campaign(b, CampaignConfig{}, "workbench.bo entry", {"name"});
      auto name = b.value("name", "bo-" + std::to_string(w.bo.size() + 1));
      w.bo.push_back({name, c});
    }
  }
  if (j.contains("gp")) {
    check_keys(j["gp"], {"starts", "evals_per_start"}, "workbench.gp");
    w.gp.starts = j["gp"].value("starts", w.gp.starts);
    w.gp.evals_per_start = j["gp"].value("evals_per_start", w.gp.evals_per_start);
    if (w.gp.starts < 1 || w.gp.evals_per_start < 1) throw ConfigError("workbench.gp budget must be positive");
  }
  w.svg = j.value("svg", w.svg);
}

}  // namespace

AppConfig default_config() {
  AppConfig c;
  c.workbench.bo = {{"bo-init50", {50, 60, 1, 17.0}}, {"bo-init10", {10, 60, 1, 17.0}}};
  return c;
}

AppConfig config_from_json(const Json& document, const fs::path& base_dir) {
  AppConfig c = default_config();
  check_keys(document, {"backend", "limits", "tools", "workbench", "prompts"}, "config");
  try {
    if (document.contains("backend")) parse_backend(document["backend"], base_dir, c.backend);
    if (document.contains("limits")) {
      check_keys(document["limits"], {"n_max", "f_max"}, "limits");
      c.limits = document["limits"].get<LoopLimits>();
      c.limits.validate();
    }
    if (document.contains("tools")) parse_tools(document["tools"], base_dir, c.tools);
    if (document.contains("workbench")) parse_workbench(document["workbench"], c.workbench);
    if (document.contains("prompts")) {
      check_keys(document["prompts"],
                 {"planner", "reflection", "formalize", "executor", "safety", "execution_summarizer", "researcher",
                  "researcher_critic", "researcher_summarizer", "hypothesis_generator", "hypothesis_critic",
                  "hypothesis_competitor", "arxiv_with_images", "arxiv_skip_images", "content_summarizer",
                  "hypothesis_summarizer", "literature_aggregator"},
                 "prompts");
      c.prompts = prompts_from_json(document["prompts"]);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

AppConfig load_config(const fs::path& file) {
  if (!fs::is_regular_file(file)) throw ConfigError("config file not found: " + file.string());
  Json doc;
  try {
    doc = Json::parse(read_file(file));
  } catch (const Json::exception& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc, fs::absolute(file).parent_path());
}

std::unique_ptr<ChatBackend> make_backend(const BackendSettings& settings) {
  if (settings.script) {
    if (!fs::is_regular_file(*settings.script)) throw ConfigError("backend script not found: " + settings.script->string());
    try {
      return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(settings.script->string()));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("backend script " + settings.script->string() + ": " + e.what());
    }
  }
  const char* key = std::getenv(settings.live.credential_ref.c_str());
  if (!key || !*key) throw ConfigError("credential environment variable " + settings.live.credential_ref + " is not set");
  return std::make_unique<OpenAiBackend>(settings.live);
}

ToolboxConfig make_toolbox(const ToolSettings& s) {
  ToolboxConfig t;
  t.policy = s.policy;
  if (!s.interpreters.empty()) t.interpreters = s.interpreters;
  t.content_byte_cap = s.content_byte_cap;
  t.default_search_k = s.search_k;
  if (s.search_fixtures) t.search = std::make_shared<FixtureSearchProvider>(*s.search_fixtures);
  else if (!s.search_url.empty()) t.search = std::make_shared<HttpSearchProvider>(s.search_url, s.search_key_env);
  if (s.page_fixtures) t.fetcher = std::make_shared<FixturePageFetcher>(*s.page_fixtures);
  else if (s.live_fetch) t.fetcher = std::make_shared<HttpPageFetcher>();
  return t;
}

std::shared_ptr<PaperSource> make_paper_source(const ToolSettings& s) {
  if (s.arxiv_fixtures) return std::make_shared<FixturePaperSource>(*s.arxiv_fixtures);
  if (s.live_arxiv) return std::make_shared<ArxivApiSource>(s.arxiv_cache);
  return nullptr;
}

}  // namespace sciagent
