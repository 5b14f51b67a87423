#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sciagent/agents.hpp"
#include "sciagent/chat.hpp"
#include "sciagent/graph.hpp"
#include "sciagent/prompts.hpp"
#include "sciagent/tools.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

struct BackendSettings {
  BackendConfig live;
  std::optional<std::filesystem::path> script;  // scripted (offline) mode when set
};

struct ToolSettings {
  CommandPolicy policy;
  std::map<std::string, std::string> interpreters;  // empty keeps the built-in table
  std::size_t content_byte_cap = 256 * 1024;
  int search_k = 5;
  // Search: fixture directory, or a live endpoint with its key variable.
  std::optional<std::filesystem::path> search_fixtures;
  std::string search_url;
  std::string search_key_env = "SEARCH_API_KEY";
  // Pages: fixture directory, or live HTTP when `live_fetch`.
  std::optional<std::filesystem::path> page_fixtures;
  bool live_fetch = false;
  // Papers: fixture directory, or the arXiv API when `live_arxiv`.
  std::optional<std::filesystem::path> arxiv_fixtures;
  bool live_arxiv = false;
  std::filesystem::path arxiv_cache = ".arxiv-cache";
  std::string pdf_extractor;
};

struct BoCampaignSpec {
  std::string name;
  CampaignConfig campaign;
};

struct WorkbenchSettings {
  CampaignConfig camel;  // n_init 10, budget 60
  int camel_replicates = 1;  // seeds camel.seed, camel.seed + 1, ...
  CampaignConfig agent;      // budget caps the agent's simulator calls
  AgentCampaignOptions agent_options;
  std::vector<BoCampaignSpec> bo;  // design-race baselines
  GpFitOptions gp;
  bool svg = true;
};

struct AppConfig {
  BackendSettings backend;
  LoopLimits limits;
  ToolSettings tools;
  WorkbenchSettings workbench;
  PromptCatalog prompts = default_prompts();
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Unknown sections or keys and invalid values raise ConfigError.
AppConfig config_from_json(const Json& document, const std::filesystem::path& base_dir = ".");
AppConfig load_config(const std::filesystem::path& file);
AppConfig default_config();

/// Scripted backend when a script is configured; otherwise the live client,
/// which needs its credential variable set (ConfigError if not).
std::unique_ptr<ChatBackend> make_backend(const BackendSettings& settings);

ToolboxConfig make_toolbox(const ToolSettings& settings);
std::shared_ptr<PaperSource> make_paper_source(const ToolSettings& settings);

}  // namespace sciagent
