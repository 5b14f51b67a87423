#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sciagent {

enum class EventKind {
  llm_call,
  tool_call,
  tool_result,
  safety_verdict,
  checkpoint,
  node_enter,
  node_exit,
  error,
  steering,
};

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& name);

struct TranscriptEvent {
  std::string run_id;
  long sequence = 0;
  std::string timestamp;
  EventKind kind = EventKind::error;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const TranscriptEvent&) const = default;
};

nlohmann::json to_json(const TranscriptEvent& event);
TranscriptEvent event_from_json(const nlohmann::json& j);

/// Canonical NDJSON line (sorted keys, no trailing newline).
std::string serialize_event(const TranscriptEvent& event);

/// Produces the timestamp for the event with the given sequence number.
using TranscriptClock = std::function<std::string(long sequence)>;

/// UTC wall-clock time, ISO-8601 with microseconds.
TranscriptClock wall_clock();
/// "logical:<sequence>"; makes transcripts byte-reproducible.
TranscriptClock logical_clock();

/// Append-only event log for one run. Sequences start at 1 and are gapless.
/// When backed by a file, every event is flushed to disk before `append`
/// returns. Appends are serialized.
class Transcript {
 public:
  explicit Transcript(std::string run_id, TranscriptClock clock = wall_clock());

  /// Opens (or creates) `{file}` and continues after its last event.
  static Transcript open(const std::filesystem::path& file, std::string run_id,
                         TranscriptClock clock = wall_clock());

  Transcript(Transcript&& other) noexcept;
  Transcript& operator=(Transcript&&) = delete;
  Transcript(const Transcript&) = delete;

  TranscriptEvent append(EventKind kind, nlohmann::json payload);

  std::vector<TranscriptEvent> events() const;
  long last_sequence() const;
  const std::string& run_id() const { return run_id_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  std::string run_id_;
  TranscriptClock clock_;
  std::optional<std::filesystem::path> file_;
  std::vector<TranscriptEvent> events_;
  mutable std::mutex mutex_;
};

/// Reads and validates an NDJSON transcript. Throws CorruptSnapshot when a
/// line does not parse or sequences are not gapless.
std::vector<TranscriptEvent> read_transcript(const std::filesystem::path& file);

}  // namespace sciagent
