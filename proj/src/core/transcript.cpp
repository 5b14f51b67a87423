#include "sciagent/transcript.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sciagent/errors.hpp"

namespace sciagent {

namespace {

constexpr std::pair<EventKind, const char*> kKindNames[] = {
    {EventKind::llm_call, "llm_call"},     {EventKind::tool_call, "tool_call"},
    {EventKind::tool_result, "tool_result"}, {EventKind::safety_verdict, "safety_verdict"},
    {EventKind::checkpoint, "checkpoint"}, {EventKind::node_enter, "node_enter"},
    {EventKind::node_exit, "node_exit"},   {EventKind::error, "error"},
    {EventKind::steering, "steering"},
};

}  // namespace

std::string to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "error";
}

EventKind event_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw CorruptSnapshot("unknown transcript event kind '" + name + "'");
}

nlohmann::json to_json(const TranscriptEvent& event) {
  return {{"run_id", event.run_id},
          {"sequence", event.sequence},
          {"timestamp", event.timestamp},
          {"kind", to_string(event.kind)},
          {"payload", event.payload}};
}

TranscriptEvent event_from_json(const nlohmann::json& j) {
  TranscriptEvent e;
  e.run_id = j.at("run_id").get<std::string>();
  e.sequence = j.at("sequence").get<long>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.payload = j.at("payload");
  return e;
}

std::string serialize_event(const TranscriptEvent& event) { return to_json(event).dump(); }

TranscriptClock wall_clock() {
  return [](long) {
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::system_clock::to_time_t(now);
    auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() % 1000000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(6) << std::setfill('0') << micros << 'Z';
    return os.str();
  };
}

TranscriptClock logical_clock() {
  return [](long sequence) { return "logical:" + std::to_string(sequence); };
}

Transcript::Transcript(std::string run_id, TranscriptClock clock)
    : run_id_(std::move(run_id)), clock_(std::move(clock)) {}

Transcript::Transcript(Transcript&& other) noexcept
    : run_id_(std::move(other.run_id_)),
      clock_(std::move(other.clock_)),
      file_(std::move(other.file_)),
      events_(std::move(other.events_)) {}

Transcript Transcript::open(const std::filesystem::path& file, std::string run_id, TranscriptClock clock) {
  Transcript t(std::move(run_id), std::move(clock));
  if (std::filesystem::exists(file)) {
    t.events_ = read_transcript(file);
  } else {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream create(file, std::ios::app);
    if (!create) throw IoFailure("cannot create transcript " + file.string());
  }
  t.file_ = file;
  return t;
}

TranscriptEvent Transcript::append(EventKind kind, nlohmann::json payload) {
  std::lock_guard lock(mutex_);
  TranscriptEvent event;
  event.run_id = run_id_;
  event.sequence = events_.empty() ? 1 : events_.back().sequence + 1;
  event.timestamp = clock_(event.sequence);
  event.kind = kind;
  event.payload = std::move(payload);
  if (file_) {
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    out << serialize_event(event) << '\n';
    out.flush();
    if (!out) throw IoFailure("cannot append to transcript " + file_->string());
  }
  events_.push_back(event);
  return event;
}

std::vector<TranscriptEvent> Transcript::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

long Transcript::last_sequence() const {
  std::lock_guard lock(mutex_);
  return events_.empty() ? 0 : events_.back().sequence;
}

std::vector<TranscriptEvent> read_transcript(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoFailure("cannot read transcript " + file.string());
  std::vector<TranscriptEvent> events;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptSnapshot(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (events.back().sequence != static_cast<long>(events.size())) {
      throw CorruptSnapshot(file.string() + ": sequence gap at line " + std::to_string(lineno));
    }
  }
  return events;
}

}  // namespace sciagent
