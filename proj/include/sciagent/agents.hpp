#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sciagent/chat.hpp"
#include "sciagent/graph.hpp"
#include "sciagent/tools.hpp"

namespace sciagent {

// ---------------------------------------------------------------------------
// Shared helpers

struct AgentTurn {
  ChatMessage final;                   // last assistant message (no tool calls)
  std::vector<ChatMessage> exchanged;  // assistant tool-call messages and tool replies, in order
  int tool_rounds = 0;
  bool limit_reached = false;
};

/// One model turn with tool use: calls the backend, runs requested tools and
/// feeds results back until the model answers without tool calls or
/// `max_tool_rounds` is spent (then `limit_reached`, and the final message is
/// the last one received).
AgentTurn agent_turn(Session& session, RunState& state, const ToolRegistry& registry,
                     std::vector<ChatMessage> messages, const std::vector<std::string>& tool_names,
                     std::string_view purpose, int max_tool_rounds);

/// Creates `{root}/{run_id}` with a transcript file and copies `inputs` in
/// read-only. Refuses an existing non-empty directory.
std::filesystem::path prepare_workspace(const std::filesystem::path& root, const std::string& run_id,
                                        const std::vector<std::filesystem::path>& inputs = {});

/// Fresh run id: "run-" + 12 hex digits.
std::string new_run_id();

// ---------------------------------------------------------------------------
// Planning

struct PlanStep {
  std::string id;
  std::string name;
  std::string description;
  bool requires_code = false;
  std::vector<std::string> expected_outputs;
  std::vector<std::string> success_criteria;

  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  std::string run_id;
  int iterations = 0;  // review rounds spent before formalization

  bool operator==(const Plan&) const = default;
};

void to_json(Json& j, const PlanStep& step);
Json plan_to_json(const Plan& plan);  // the bare step array

/// Validates a decoded document against the step schema. Throws
/// MalformedResponse naming the first violation.
std::vector<PlanStep> validate_plan(const Json& document);

/// First JSON array in `text` (inside a code fence if there is one), or
/// nullopt. A top-level object is not accepted.
std::optional<Json> extract_json_array(const std::string& text);

/// extract_json_array + validate_plan.
std::vector<PlanStep> parse_plan(const std::string& text);

ChatMessage generate_plan(Session& session, const std::string& query);

/// Reviewer rounds over `conversation` (initial plan first). Appends each
/// feedback as a user message and each revision as an assistant message.
/// Returns the number of review rounds.
int reflect_loop(Session& session, const std::string& query, std::vector<ChatMessage>& conversation);

/// At most f_max requests for the JSON plan. Invalid answers are appended to
/// `conversation` with the retry line. FormalizationFailed when exhausted.
Plan formalize_plan(Session& session, std::vector<ChatMessage>& conversation);

// ---------------------------------------------------------------------------
// Execution

struct ExecutionOutcome {
  RunState state;
  std::string summary;
  bool limit_exceeded = false;
  std::vector<std::string> artifacts;  // written by tools
  std::vector<std::string> preexisting;  // inputs already present
  int commands = 0;
};

std::string summarize_execution(Session& session, std::span<const ChatMessage> conversation,
                                const std::string& stdout_text, const std::string& stderr_text,
                                bool limit_exceeded);

// ---------------------------------------------------------------------------
// Research

std::vector<SearchResult> collect_sources(std::span<const ChatMessage> conversation);

// ---------------------------------------------------------------------------
// Hypothesizer

struct DebateRound {
  std::string hypothesis;
  std::string critique;
  std::string counter;
};

std::vector<DebateRound> assemble_debate_record(std::span<const ChatMessage> debate);
Json debate_to_json(const std::vector<DebateRound>& rounds);

// ---------------------------------------------------------------------------
// ArXiv

struct PaperRecord {
  std::string arxiv_id;
  std::string title;
  std::vector<std::string> authors;
  std::string link;
  std::string pdf_url;
  std::string raw_text;
  std::vector<std::string> image_descriptions;
};

void to_json(Json& j, const PaperRecord& r);
void from_json(const Json& j, PaperRecord& r);

class PaperSource {
 public:
  virtual ~PaperSource() = default;
  virtual std::vector<PaperRecord> search(const std::string& query, int max_papers) = 0;
  virtual std::string fetch_pdf(const PaperRecord& record) = 0;
};

/// `{dir}/metadata.json`: [{arxiv_id, title, authors, link, pdf, abstract?}].
/// A paper matches when any query word (3+ letters) occurs in its title or
/// abstract; "*" matches all.
class FixturePaperSource final : public PaperSource {
 public:
  explicit FixturePaperSource(std::filesystem::path dir);
  std::vector<PaperRecord> search(const std::string& query, int max_papers) override;
  std::string fetch_pdf(const PaperRecord& record) override;

 private:
  std::filesystem::path dir_;
};

/// export.arxiv.org Atom API, at most one request per `min_interval` seconds,
/// responses and PDFs cached under `cache_dir`.
class ArxivApiSource final : public PaperSource {
 public:
  ArxivApiSource(std::filesystem::path cache_dir, double min_interval_seconds = 3.0,
                 std::string endpoint = "https://export.arxiv.org/api/query");
  std::vector<PaperRecord> search(const std::string& query, int max_papers) override;
  std::string fetch_pdf(const PaperRecord& record) override;

 private:
  std::string polite_get(const std::string& url);
  std::filesystem::path cache_dir_;
  double min_interval_;
  std::string endpoint_;
  double last_request_ = -1e9;
};

/// Parses an arXiv Atom feed.
std::vector<PaperRecord> parse_arxiv_atom(const std::string& xml);

/// Text of the PDF. With `extractor_command` (template with {pdf}), runs that
/// command and takes its stdout; otherwise decodes content streams directly.
/// ExtractionFailure on unreadable or textless input.
std::string extract_pdf_text(const std::string& pdf_bytes, const std::string& extractor_command = {});

PaperRecord extract_text(PaperRecord record, const std::string& pdf_bytes, const std::string& extractor_command = {});

std::string summarize_paper(Session& session, const std::string& context, const PaperRecord& record);

struct PaperSummary {
  std::string title;
  std::vector<std::string> authors;
  std::string link;
  std::string summary;
};

/// "[i] Title by Authors / Link / Summary" entries; with two or more papers
/// an overview from the backend is placed first.
std::string aggregate(Session& session, const std::string& context, const std::vector<PaperSummary>& summaries);

// ---------------------------------------------------------------------------
// Agent graphs and runners

struct AgentServices {
  const ToolRegistry* tools = nullptr;
  std::shared_ptr<PaperSource> papers;
  std::string extractor_command;
  int max_papers = 3;
  std::string arxiv_context;
};

/// Workflow names: plan, execute, research, hypothesize, arxiv,
/// plan-then-execute, hypothesize-then-execute, research-plan-execute.
AgentGraph build_workflow(const std::string& name, const AgentServices& services);
std::vector<std::string> workflow_names();

/// Initial state for `workflow`: query in data, workspace path set.
RunState initial_state(const std::string& run_id, const std::filesystem::path& workspace, const std::string& query);

struct RunHandles {
  std::unique_ptr<Transcript> transcript;
  std::unique_ptr<CheckpointStore> checkpoints;
};

/// Opens `{workspace}/transcript.ndjson` and `{workspace}/checkpoints`.
RunHandles open_run(const std::filesystem::path& workspace, const std::string& run_id,
                    TranscriptClock clock = wall_clock());

// Convenience runners over the graphs (with transcript and checkpoints in
// the workspace).
struct AgentResult {
  RunState state;
  std::filesystem::path output;  // main artifact
};

/// Main artifact of `workflow` inside `workspace`.
std::filesystem::path workflow_output(const std::string& workflow, const std::filesystem::path& workspace);

AgentResult run_workflow(const std::string& workflow, Session& session, const AgentServices& services,
                         const RunState& initial, const RunOptions& options = {});

Plan plan_from_state(const RunState& state);
ExecutionOutcome execution_outcome(const RunState& state);

}  // namespace sciagent
