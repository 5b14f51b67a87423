#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "sciagent/chat.hpp"

namespace sciagent {

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Plain-text rendering of a conversation for summarizer prompts.
std::string render_conversation(std::span<const ChatMessage> messages);

std::string trim(std::string_view text);

}  // namespace sciagent
