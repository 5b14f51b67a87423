#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <regex>

#include "sciagent/errors.hpp"
#include "sciagent/http.hpp"
#include "sciagent/tools.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

void to_json(Json& j, const SearchResult& r) { j = Json{{"title", r.title}, {"url", r.url}, {"snippet", r.snippet}}; }

void from_json(const Json& j, SearchResult& r) {
  r.title = j.value("title", std::string());
  r.url = j.value("url", j.value("link", std::string()));
  r.snippet = j.value("snippet", j.value("description", std::string()));
}

FixtureSearchProvider::FixtureSearchProvider(fs::path dir) : dir_(std::move(dir)) {}

std::vector<SearchResult> FixtureSearchProvider::search(const std::string& query, int k) {
  std::error_code ec;
  if (!fs::is_directory(dir_, ec)) throw ProviderUnavailable("search fixtures missing at " + dir_.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::optional<Json> wildcard;
  for (const auto& file : files) {
    Json doc;
    try {
      doc = Json::parse(read_file(file));
    } catch (const Json::exception& e) {
      throw ProviderUnavailable("bad search fixture " + file.string() + ": " + e.what());
    }
    auto q = doc.value("query", std::string());
    if (q == query) {
      wildcard = doc;
      break;
    }
    if (q == "*" && !wildcard) wildcard = doc;
  }
  if (!wildcard) return {};
  auto results = wildcard->value("results", Json::array()).get<std::vector<SearchResult>>();
  if (static_cast<int>(results.size()) > k) results.resize(static_cast<std::size_t>(k));
  return results;
}

HttpSearchProvider::HttpSearchProvider(std::string url, std::string key_env, double timeout_seconds)
    : url_(std::move(url)), key_env_(std::move(key_env)), timeout_(timeout_seconds) {}

std::vector<SearchResult> HttpSearchProvider::search(const std::string& query, int k) {
  std::map<std::string, std::string> headers{{"Accept", "application/json"}};
  if (!key_env_.empty()) {
    const char* key = std::getenv(key_env_.c_str());
    if (!key || !*key) throw ProviderUnavailable("search credential " + key_env_ + " is not set");
    headers["Authorization"] = std::string("Bearer ") + key;
    headers["X-Subscription-Token"] = key;
  }
  auto sep = url_.find('?') == std::string::npos ? "?" : "&";
  auto reply = http_get(url_ + sep + "q=" + url_encode(query) + "&count=" + std::to_string(k), headers, timeout_);
  if (reply.status != 200) {
    throw ProviderUnavailable("search provider returned status " + std::to_string(reply.status) +
                              (reply.error.empty() ? "" : ": " + reply.error));
  }
  try {
    auto doc = Json::parse(reply.body);
    Json list = doc.contains("results") ? doc["results"]
                : (doc.contains("web") && doc["web"].contains("results")) ? doc["web"]["results"]
                                                                          : Json::array();
    return list.get<std::vector<SearchResult>>();
  } catch (const Json::exception& e) {
    throw ProviderUnavailable(std::string("search reply is not JSON: ") + e.what());
  }
}

std::vector<SearchResult> web_search(SearchProvider& provider, const std::string& query, int k) {
  if (k < 1) throw PreconditionError("web_search needs k >= 1");
  if (trim(query).empty()) throw PreconditionError("web_search needs a query");
  std::vector<SearchResult> out;
  for (auto& r : provider.search(query, k)) {
    if (!is_well_formed_url(r.url)) continue;
    out.push_back(std::move(r));
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

FixturePageFetcher::FixturePageFetcher(fs::path dir) : dir_(std::move(dir)) {}

std::string FixturePageFetcher::fetch(const std::string& url) {
  Json index;
  try {
    index = Json::parse(read_file(dir_ / "index.json"));
  } catch (const std::exception& e) {
    throw FetchFailure("page fixtures unavailable: " + std::string(e.what()));
  }
  if (!index.contains(url)) throw FetchFailure("no fixture page for " + url);
  try {
    return read_file(dir_ / index[url].get<std::string>());
  } catch (const std::exception& e) {
    throw FetchFailure(e.what());
  }
}

std::string HttpPageFetcher::fetch(const std::string& url) {
  auto reply = http_get(url, {{"User-Agent", "sciagent/0.1"}}, timeout_);
  if (reply.status < 200 || reply.status >= 300) {
    throw FetchFailure("GET " + url + " returned " + std::to_string(reply.status) +
                       (reply.error.empty() ? "" : ": " + reply.error));
  }
  return reply.body;
}

namespace {

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string decode_entities(const std::string& s) {
  static const std::map<std::string, std::string> named{
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
      {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"}, {"copy", "©"}};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    auto name = s.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      try {
        unsigned long cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) ? std::stoul(name.substr(2), nullptr, 16)
                                                                                  : std::stoul(name.substr(1));
        append_utf8(out, cp);
        i = semi;
        continue;
      } catch (...) {
      }
    } else if (auto it = named.find(name); it != named.end()) {
      out += it->second;
      i = semi;
      continue;
    }
    out.push_back('&');
  }
  return out;
}

bool iequals_at(const std::string& s, std::size_t pos, std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != word[i]) return false;
  }
  return true;
}

}  // namespace

std::string html_to_text(const std::string& html) {
  static const std::set<std::string> block{"p", "div", "br", "li", "tr", "h1", "h2", "h3", "h4", "h5", "h6",
                                           "section", "article", "header", "footer", "ul", "ol", "table", "title"};
  std::string raw;
  std::size_t i = 0;
  while (i < html.size()) {
    if (html.compare(i, 4, "<!--") == 0) {
      auto end = html.find("-->", i + 4);
      i = end == std::string::npos ? html.size() : end + 3;
      continue;
    }
    if (html[i] == '<') {
      auto close = html.find('>', i);
      if (close == std::string::npos) break;
      std::size_t p = i + 1;
      bool closing = p < html.size() && html[p] == '/';
      if (closing) ++p;
      std::size_t q = p;
      while (q < close && std::isalnum(static_cast<unsigned char>(html[q]))) ++q;
      std::string tag = html.substr(p, q - p);
      std::transform(tag.begin(), tag.end(), tag.begin(), ::tolower);
      if (!closing && (tag == "script" || tag == "style" || tag == "noscript" || tag == "template")) {
        std::string end_tag = "</" + tag;
        std::size_t k = close + 1;
        while (k < html.size() && !iequals_at(html, k, end_tag)) ++k;
        auto end = html.find('>', k);
        i = end == std::string::npos ? html.size() : end + 1;
        continue;
      }
      raw.push_back(block.contains(tag) ? '\n' : ' ');
      i = close + 1;
      continue;
    }
    raw.push_back(html[i++]);
  }
  auto decoded = decode_entities(raw);
  // collapse whitespace; keep paragraph breaks as single newlines
  std::string out;
  bool pending_space = false, pending_newline = false;
  for (char c : decoded) {
    if (c == '\n') {
      pending_newline = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
    } else {
      if (!out.empty()) {
        if (pending_newline) out.push_back('\n');
        else if (pending_space) out.push_back(' ');
      }
      pending_space = pending_newline = false;
      out.push_back(c);
    }
  }
  return out;
}

ContentSummary process_content(Session& session, PageFetcher& fetcher, const std::string& url,
                               const std::string& context, std::size_t byte_cap) {
  if (!is_well_formed_url(url)) throw PreconditionError("malformed url '" + url + "'");
  if (byte_cap == 0) throw PreconditionError("byte cap must be positive");
  ContentSummary out;
  std::string page = fetcher.fetch(url);
  out.page_bytes = page.size();
  if (page.size() > byte_cap) {
    page.resize(byte_cap);
    out.truncated = true;
  }
  out.summarized_bytes = page.size();
  auto text = html_to_text(page);
  auto prompt = fill_template(session.prompts().content_summarizer, {{"url", url}, {"context", context}, {"text", text}});
  std::vector<ChatMessage> request{ChatMessage::user(prompt)};
  out.summary = session.call(request, {}, "process_content").message.content;
  return out;
}

}  // namespace sciagent
