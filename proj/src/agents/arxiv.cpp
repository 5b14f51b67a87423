#include <chrono>
#include <regex>
#include <sstream>
#include <thread>

#include "internal.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/http.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

void to_json(Json& j, const PaperRecord& r) {
  j = Json{{"arxiv_id", r.arxiv_id},   {"title", r.title},       {"authors", r.authors},
           {"link", r.link},           {"pdf", r.pdf_url},       {"raw_text", r.raw_text},
           {"image_descriptions", r.image_descriptions}};
}

void from_json(const Json& j, PaperRecord& r) {
  r.arxiv_id = j.value("arxiv_id", std::string());
  r.title = j.value("title", std::string());
  r.authors = j.value("authors", std::vector<std::string>{});
  r.link = j.value("link", std::string());
  r.pdf_url = j.value("pdf", std::string());
  r.raw_text = j.value("raw_text", std::string());
  r.image_descriptions = j.value("image_descriptions", std::vector<std::string>{});
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> query_words(const std::string& query) {
  std::vector<std::string> words;
  std::string w;
  for (char c : lower(query) + " ") {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      w.push_back(c);
    } else {
      if (w.size() >= 3) words.push_back(w);
      w.clear();
    }
  }
  return words;
}

}  // namespace

FixturePaperSource::FixturePaperSource(fs::path dir) : dir_(std::move(dir)) {}

std::vector<PaperRecord> FixturePaperSource::search(const std::string& query, int max_papers) {
  if (max_papers < 1) throw PreconditionError("max_papers must be >= 1");
  Json meta;
  try {
    meta = Json::parse(read_file(dir_ / "metadata.json"));
  } catch (const std::exception& e) {
    throw ApiUnavailable("paper fixtures unavailable: " + std::string(e.what()));
  }
  auto words = query_words(query);
  std::vector<PaperRecord> out;
  for (const auto& entry : meta) {
    auto haystack = lower(entry.value("title", std::string()) + " " + entry.value("abstract", std::string()));
    bool match = trim(query) == "*";
    for (const auto& w : words) match = match || haystack.find(w) != std::string::npos;
    if (!match) continue;
    out.push_back(entry.get<PaperRecord>());
    if (static_cast<int>(out.size()) == max_papers) break;
  }
  if (out.empty()) throw EmptyResultSet("no papers match '" + query + "'");
  return out;
}

std::string FixturePaperSource::fetch_pdf(const PaperRecord& record) {
  if (record.pdf_url.empty()) throw FetchFailure("paper " + record.arxiv_id + " has no PDF");
  try {
    return read_file(dir_ / record.pdf_url);
  } catch (const std::exception& e) {
    throw FetchFailure(e.what());
  }
}

std::vector<PaperRecord> parse_arxiv_atom(const std::string& xml) {
  static const std::regex entry_re(R"(<entry>([\s\S]*?)</entry>)");
  static const std::regex id_re(R"(<id>\s*([^<]+?)\s*</id>)");
  static const std::regex title_re(R"(<title[^>]*>([\s\S]*?)</title>)");
  static const std::regex author_re(R"(<author>\s*<name>([\s\S]*?)</name>)");
  static const std::regex link_re(R"(<link\s([^>]*)/?>)");
  static const std::regex href_re(R"re(href="([^"]+)")re");
  std::vector<PaperRecord> out;
  for (std::sregex_iterator it(xml.begin(), xml.end(), entry_re), end; it != end; ++it) {
    std::string body = (*it)[1];
    PaperRecord r;
    std::smatch m;
    if (std::regex_search(body, m, id_re)) {
      r.link = m[1];
      auto slash = r.link.rfind("/abs/");
      r.arxiv_id = slash == std::string::npos ? r.link : r.link.substr(slash + 5);
    }
    if (std::regex_search(body, m, title_re)) r.title = html_to_text(m[1]);
    for (std::sregex_iterator a(body.begin(), body.end(), author_re); a != end; ++a) {
      r.authors.push_back(html_to_text((*a)[1]));
    }
    for (std::sregex_iterator l(body.begin(), body.end(), link_re); l != end; ++l) {
      std::string attrs = (*l)[1];
      std::smatch h;
      if (!std::regex_search(attrs, h, href_re)) continue;
      if (attrs.find("title=\"pdf\"") != std::string::npos) r.pdf_url = h[1];
      else if (attrs.find("rel=\"alternate\"") != std::string::npos) r.link = h[1];
    }
    if (r.pdf_url.empty() && !r.arxiv_id.empty()) r.pdf_url = "https://arxiv.org/pdf/" + r.arxiv_id;
    if (!r.title.empty()) out.push_back(std::move(r));
  }
  return out;
}

ArxivApiSource::ArxivApiSource(fs::path cache_dir, double min_interval_seconds, std::string endpoint)
    : cache_dir_(std::move(cache_dir)), min_interval_(min_interval_seconds), endpoint_(std::move(endpoint)) {}

std::string ArxivApiSource::polite_get(const std::string& url) {
  auto cached = cache_dir_ / (fnv1a64_hex(url) + ".cache");
  if (fs::exists(cached)) return read_file(cached);
  using clock = std::chrono::steady_clock;
  auto now = std::chrono::duration<double>(clock::now().time_since_epoch()).count();
  if (now - last_request_ < min_interval_) {
    std::this_thread::sleep_for(std::chrono::duration<double>(min_interval_ - (now - last_request_)));
  }
  auto reply = http_get(url, {{"User-Agent", "sciagent/0.1"}}, 60.0);
  last_request_ = std::chrono::duration<double>(clock::now().time_since_epoch()).count();
  if (reply.status != 200) {
    throw ApiUnavailable("GET " + url + " returned " + std::to_string(reply.status) +
                         (reply.error.empty() ? "" : ": " + reply.error));
  }
  write_file_atomic(cached, reply.body);
  return reply.body;
}

std::vector<PaperRecord> ArxivApiSource::search(const std::string& query, int max_papers) {
  if (max_papers < 1) throw PreconditionError("max_papers must be >= 1");
  auto url = endpoint_ + "?search_query=all:" + url_encode(query) + "&start=0&max_results=" + std::to_string(max_papers);
  auto records = parse_arxiv_atom(polite_get(url));
  if (records.empty()) throw EmptyResultSet("no papers match '" + query + "'");
  if (static_cast<int>(records.size()) > max_papers) records.resize(static_cast<std::size_t>(max_papers));
  return records;
}

std::string ArxivApiSource::fetch_pdf(const PaperRecord& record) {
  try {
    return polite_get(record.pdf_url);
  } catch (const ApiUnavailable& e) {
    throw FetchFailure(e.what());
  }
}

std::string summarize_paper(Session& session, const std::string& context, const PaperRecord& record) {
  if (trim(record.raw_text).empty()) throw PreconditionError("paper has no text");
  std::string prompt;
  if (record.image_descriptions.empty()) {
    prompt = fill_template(session.prompts().arxiv_skip_images, {{"context", context}, {"paper", record.raw_text}});
  } else {
    std::string paper = record.raw_text + "\n\nDescriptions of images and plots:\n";
    for (std::size_t i = 0; i < record.image_descriptions.size(); ++i) {
      paper += "[Image " + std::to_string(i + 1) + "] " + record.image_descriptions[i] + "\n";
    }
    prompt = fill_template(session.prompts().arxiv_with_images, {{"context", context}, {"paper", paper}});
  }
  std::vector<ChatMessage> msgs{ChatMessage::user(prompt)};
  return session.call(msgs, {}, "arxiv.summarize").message.content;
}

std::string aggregate(Session& session, const std::string& context, const std::vector<PaperSummary>& summaries) {
  if (summaries.empty()) throw PreconditionError("nothing to aggregate");
  std::string entries;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    std::string authors;
    for (const auto& a : s.authors) authors += (authors.empty() ? "" : ", ") + a;
    entries += "[" + std::to_string(i + 1) + "] " + s.title + (authors.empty() ? "" : " by " + authors) +
               "\nLink: " + s.link + "\n\nSummary:\n" + trim(s.summary) + "\n\n";
  }
  if (summaries.size() == 1) return entries;
  std::vector<ChatMessage> msgs{ChatMessage::system(fill_template(session.prompts().literature_aggregator, {{"context", context}})),
                                ChatMessage::user(entries)};
  auto overview = session.call(msgs, {}, "arxiv.aggregate").message.content;
  return "## Overview\n\n" + trim(overview) + "\n\n## Papers\n\n" + entries;
}

namespace {

Json& arxiv_data(RunState& state) { return state.data["arxiv"]; }

std::string context_of(const RunState& state, const AgentServices& services) {
  if (state.data.contains("context") && state.data["context"].is_string()) return state.data["context"];
  if (!services.arxiv_context.empty()) return services.arxiv_context;
  return detail::stage_input(state);
}

}  // namespace

namespace detail {

NodeId add_arxiv_nodes(AgentGraph& graph, const AgentServices& services, const NodeId& exit) {
  auto papers = services.papers;
  int max_papers = services.max_papers;
  auto extractor = services.extractor_command;

  graph.add_node("arxiv.search", [papers, max_papers](RunState& state, Session& session) {
    begin_stage(state, "arxiv");
    if (!papers) throw ConfigError("no paper source configured");
    arxiv_data(state) = {{"papers", Json::array()}, {"index", 0}, {"summaries", Json::array()},
                         {"skipped", Json::array()}, {"empty", false}};
    try {
      Json list = papers->search(stage_input(state), max_papers);
      arxiv_data(state)["papers"] = list;
    } catch (const EmptyResultSet& e) {
      session.record_error("arxiv.search", e);
      arxiv_data(state)["empty"] = true;
      write_file_atomic(workspace_of(state) / "literature.md", "No papers matched the query: " + stage_input(state) + "\n");
      state.data["stage_output"] = "";
    }
  });

  graph.add_node("arxiv.paper", [papers, extractor, services](RunState& state, Session& session) {
    auto& ad = arxiv_data(state);
    auto index = ad["index"].get<std::size_t>();
    auto record = ad["papers"][index].get<PaperRecord>();
    ad["index"] = index + 1;
    try {
      record = extract_text(record, papers->fetch_pdf(record), extractor);
    } catch (const Error& e) {
      if (dynamic_cast<const ExtractionFailure*>(&e) == nullptr && dynamic_cast<const FetchFailure*>(&e) == nullptr &&
          dynamic_cast<const ApiUnavailable*>(&e) == nullptr) {
        throw;
      }
      session.record_error("arxiv.extract:" + record.arxiv_id, e);
      ad["skipped"].push_back({{"arxiv_id", record.arxiv_id}, {"title", record.title}, {"reason", e.what()}});
      return;
    }
    auto summary = summarize_paper(session, context_of(state, services), record);
    ad["summaries"].push_back(
        {{"title", record.title}, {"authors", record.authors}, {"link", record.link}, {"summary", summary}});
  });

  graph.add_node("arxiv.aggregate", [services](RunState& state, Session& session) {
    auto& ad = arxiv_data(state);
    if (ad["summaries"].empty()) throw ExtractionFailure("no paper could be extracted");
    std::vector<PaperSummary> list;
    for (const auto& s : ad["summaries"]) {
      list.push_back({s["title"], s["authors"].get<std::vector<std::string>>(), s["link"], s["summary"]});
    }
    auto doc = aggregate(session, context_of(state, services), list);
    write_file_atomic(workspace_of(state) / "literature.md", doc);
    ad["aggregate"] = doc;
    state.data["stage_output"] = doc;
  });

  graph.add_conditional_edge("arxiv.search", {"arxiv.paper", exit}, [exit](const RunState& s) {
    return s.data["arxiv"]["empty"].get<bool>() ? exit : NodeId("arxiv.paper");
  });
  graph.add_conditional_edge("arxiv.paper", {"arxiv.paper", "arxiv.aggregate"}, [](const RunState& s) {
    const auto& ad = s.data["arxiv"];
    return ad["index"].get<std::size_t>() < ad["papers"].size() ? NodeId("arxiv.paper") : NodeId("arxiv.aggregate");
  });
  graph.add_edge("arxiv.aggregate", exit);
  return "arxiv.search";
}

}  // namespace detail

}  // namespace sciagent
