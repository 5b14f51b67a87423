#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "sciagent/agents.hpp"
#include "sciagent/chat.hpp"
#include "sciagent/graph.hpp"
#include "sciagent/transcript.hpp"
#include "sciagent/util.hpp"

namespace testing {

namespace fs = std::filesystem;
using sciagent::ChatMessage;
using sciagent::Json;

inline fs::path fixtures() { return fs::path(SCIAGENT_FIXTURES); }

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "sciagent-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = fs::canonical(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    // inputs are copied read-only; make everything removable first
    for (auto it = fs::recursive_directory_iterator(path_, ec); !ec && it != fs::recursive_directory_iterator();
         ++it) {
      fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ec);
    }
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline ChatMessage say(std::string text) { return ChatMessage::assistant(std::move(text)); }

inline ChatMessage call_tool(std::string id, std::string tool, Json args) {
  return ChatMessage::assistant("", {{std::move(id), std::move(tool), std::move(args)}});
}

// Scripted backend plus an in-memory (or file) transcript and a session.
struct Harness {
  sciagent::ScriptedBackend backend;
  std::unique_ptr<sciagent::Transcript> transcript;
  std::unique_ptr<sciagent::Session> session;

  explicit Harness(std::vector<ChatMessage> script, sciagent::LoopLimits limits = {},
                   std::unique_ptr<sciagent::Transcript> t = nullptr)
      : backend(std::move(script)),
        transcript(t ? std::move(t) : std::make_unique<sciagent::Transcript>("test", sciagent::logical_clock())),
        session(std::make_unique<sciagent::Session>(backend, *transcript, limits)) {}

  const std::vector<sciagent::CapturedRequest>& captured() const { return backend.capture_log(); }

  std::vector<sciagent::TranscriptEvent> events(sciagent::EventKind kind) const {
    std::vector<sciagent::TranscriptEvent> out;
    for (auto& e : transcript->events()) {
      if (e.kind == kind) out.push_back(e);
    }
    return out;
  }
};

inline std::string joined(const std::vector<ChatMessage>& msgs) {
  std::string out;
  for (const auto& m : msgs) out += m.content + "\n";
  return out;
}

}  // namespace testing
