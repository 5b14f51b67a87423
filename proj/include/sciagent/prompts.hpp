#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace sciagent {

/// System prompts used by the agents. Defaults come from `default_prompts()`;
/// any field can be overridden from the `prompts` section of a config file.
struct PromptCatalog {
  std::string planner;
  std::string reflection;
  std::string formalize;
  std::string executor;
  std::string safety;
  std::string execution_summarizer;
  std::string researcher;
  std::string researcher_critic;
  std::string researcher_summarizer;
  std::string hypothesis_generator;
  std::string hypothesis_critic;
  std::string hypothesis_competitor;
  std::string arxiv_with_images;
  std::string arxiv_skip_images;

  // Not part of the published catalog; authored for stages it leaves implicit.
  std::string content_summarizer;
  std::string hypothesis_summarizer;
  std::string literature_aggregator;
};

const PromptCatalog& default_prompts();

/// Starts from the defaults and replaces every key present in `overrides`.
PromptCatalog prompts_from_json(const nlohmann::json& overrides);

/// Replaces each `{name}` placeholder with its value. Unknown placeholders
/// are left untouched.
std::string fill_template(std::string text, const nlohmann::json& values);

inline constexpr const char* kApprovedMarker = "[APPROVED]";
inline constexpr const char* kSafeMarker = "[YES]";
inline constexpr const char* kUnsafeMarker = "[NO]";
inline constexpr const char* kUnsafePrefix = "[UNSAFE] That command deemed unsafe and cannot be run: ";
inline constexpr const char* kInvalidJsonRetry = "Your response was not valid JSON, Try again.";

}  // namespace sciagent
