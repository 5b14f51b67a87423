#pragma once

#include <map>
#include <string>

#include "sciagent/chat.hpp"

namespace sciagent {

struct ParsedUrl {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;  // includes query, starts with '/'

  std::string origin() const;
};

/// Accepts absolute http(s) URLs with a non-empty host. Anything else is
/// rejected, including URLs with whitespace or control characters.
std::optional<ParsedUrl> parse_url(const std::string& url);
bool is_well_formed_url(const std::string& url);

std::string url_encode(const std::string& text);

HttpReply http_post(const std::string& url, const std::map<std::string, std::string>& headers,
                    const std::string& body, double timeout_seconds);
HttpReply http_get(const std::string& url, const std::map<std::string, std::string>& headers,
                   double timeout_seconds);

}  // namespace sciagent
