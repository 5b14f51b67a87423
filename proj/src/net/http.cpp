#include "sciagent/http.hpp"

#include <cctype>
#include <regex>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace sciagent {

std::string ParsedUrl::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

std::optional<ParsedUrl> parse_url(const std::string& url) {
  for (unsigned char c : url) {
    if (c <= 0x20 || c == 0x7f) return std::nullopt;
  }
  static const std::regex pattern(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/.*)?$)",
                                  std::regex::ECMAScript);
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) return std::nullopt;
  ParsedUrl parsed;
  parsed.scheme = m[1].str();
  parsed.host = m[2].str();
  if (parsed.host.empty() || parsed.host.front() == '.' || parsed.host.back() == '.' ||
      parsed.host.find("..") != std::string::npos) {
    return std::nullopt;
  }
  if (m[4].matched) {
    int port = std::stoi(m[4].str());
    if (port <= 0 || port > 65535) return std::nullopt;
    parsed.port = port;
  } else {
    parsed.port = parsed.scheme == "https" ? 443 : 80;
  }
  parsed.path = m[5].matched ? m[5].str() : "/";
  return parsed;
}

bool is_well_formed_url(const std::string& url) { return parse_url(url).has_value(); }

std::string url_encode(const std::string& text) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xf]);
    }
  }
  return out;
}

namespace {

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

void configure(httplib::Client& client, double timeout_seconds) {
  auto secs = static_cast<time_t>(timeout_seconds);
  auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_follow_location(true);
}

HttpReply to_reply(const httplib::Result& result) {
  HttpReply reply;
  if (!result) {
    reply.error = httplib::to_string(result.error());
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  return reply;
}

}  // namespace

HttpReply http_post(const std::string& url, const std::map<std::string, std::string>& headers,
                    const std::string& body, double timeout_seconds) {
  auto parsed = parse_url(url);
  if (!parsed) return HttpReply{0, "", "malformed url: " + url};
  httplib::Client client(parsed->origin());
  configure(client, timeout_seconds);
  auto content_type = headers.contains("Content-Type") ? headers.at("Content-Type") : "application/json";
  auto rest = headers;
  rest.erase("Content-Type");
  return to_reply(client.Post(parsed->path, to_headers(rest), body, content_type));
}

HttpReply http_get(const std::string& url, const std::map<std::string, std::string>& headers,
                   double timeout_seconds) {
  auto parsed = parse_url(url);
  if (!parsed) return HttpReply{0, "", "malformed url: " + url};
  httplib::Client client(parsed->origin());
  configure(client, timeout_seconds);
  return to_reply(client.Get(parsed->path, to_headers(headers)));
}

HttpPost default_http_post() { return &http_post; }

}  // namespace sciagent
