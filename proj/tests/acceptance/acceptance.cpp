// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sciagent/agents.hpp"
#include "sciagent/config.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/experiments.hpp"
#include "sciagent/prompts.hpp"
#include "sciagent/workbench.hpp"
#include "support.hpp"

using namespace sciagent;
using testing::call_tool;
using testing::say;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 8) failures.push_back(what);
    if (!ok && failures.size() == 8) failures.push_back("...");
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failed_criteria = 0;

void report(int id, const std::string& title, const std::function<std::string(Check&)>& body) {
  Check c;
  std::string detail;
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("unexpected exception: ") + e.what());
  }
  bool pass = c.failures.empty();
  if (!pass) ++failed_criteria;
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << title;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  for (const auto& f : c.failures) std::cout << "    - " << f << "\n";
  std::cout.flush();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << v;
  return o.str();
}

const char* kTwoStepPlan = R"([
  {"id": "1", "name": "Write notes", "description": "Write notes.txt", "requires_code": true,
   "expected_outputs": ["notes.txt"], "success_criteria": ["file exists"]},
  {"id": "2", "name": "Report", "description": "Summarize", "requires_code": false,
   "expected_outputs": [], "success_criteria": ["summary written"]}
])";

struct Run {
  TempDir tmp;
  testing::Harness hx;
  ToolRegistry tools;
  AgentServices services;
  fs::path ws;

  Run(std::vector<ChatMessage> script, LoopLimits limits = {}, ToolboxConfig toolbox = {})
      : hx(std::move(script), limits), tools(make_standard_tools(toolbox)) {
    services.tools = &tools;
    ws = prepare_workspace(tmp.path(), "acc");
  }

  RunState go(const std::string& workflow, const std::string& query) {
    return run_workflow(workflow, *hx.session, services, initial_state("acc", ws, query)).state;
  }
};

// ---------------------------------------------------------------------------

std::string criterion_loops(Check& c) {
  auto t0 = Clock::now();
  const auto& p = default_prompts();
  for (int n_max : {1, 2, 3, 5}) {
    // always reject
    std::vector<ChatMessage> script{say("draft")};
    for (int r = 0; r < n_max; ++r) {
      script.push_back(say("needs more detail"));
      script.push_back(say("revised draft " + std::to_string(r)));
    }
    script.push_back(say(kTwoStepPlan));
    Run run(script, LoopLimits{n_max, 3});
    auto s = run.go("plan", "plan a study");
    const auto& cap = run.hx.captured();
    std::string tag = "n_max=" + std::to_string(n_max) + " reject: ";
    c.expect(s.status == RunStatus::succeeded, tag + "run failed");
    c.expect(cap.size() == static_cast<std::size_t>(2 * n_max + 2), tag + "backend calls " + std::to_string(cap.size()));
    int reviews = 0;
    for (const auto& r : cap) reviews += r.messages[0].content == p.reflection;
    c.expect(reviews == n_max, tag + "reviews " + std::to_string(reviews));
    c.expect(s.conversation.size() == static_cast<std::size_t>(1 + 2 * n_max),
             tag + "conversation " + std::to_string(s.conversation.size()));
    c.expect(plan_from_state(s).iterations == n_max, tag + "iterations");

    // approval on round a
    for (int a = 1; a <= n_max; ++a) {
      std::vector<ChatMessage> sc{say("draft")};
      for (int r = 1; r < a; ++r) {
        sc.push_back(say("needs more detail"));
        sc.push_back(say("revised"));
      }
      sc.push_back(say("looks good [APPROVED]"));
      sc.push_back(say(kTwoStepPlan));
      Run ra(sc, LoopLimits{n_max, 3});
      auto sa = ra.go("plan", "plan a study");
      std::string t = "n_max=" + std::to_string(n_max) + " approve@" + std::to_string(a) + ": ";
      c.expect(sa.status == RunStatus::succeeded, t + "run failed");
      c.expect(ra.hx.captured().size() == static_cast<std::size_t>(2 * a + 1), t + "backend calls");
      c.expect(sa.conversation.size() == static_cast<std::size_t>(2 * a), t + "conversation size");
      c.expect(ra.hx.backend.remaining() == 0, t + "script not fully consumed");
    }
  }

  for (int f_max : {1, 2, 4}) {
    std::vector<ChatMessage> script{say("draft"), say("[APPROVED]")};
    for (int i = 0; i < f_max; ++i) script.push_back(say(i % 2 ? "{\"steps\": 1}" : "not json at all"));
    script.push_back(say(kTwoStepPlan));  // must never be requested
    Run run(script, LoopLimits{2, f_max});
    auto s = run.go("plan", "plan a study");
    const auto& cap = run.hx.captured();
    std::string tag = "f_max=" + std::to_string(f_max) + ": ";
    c.expect(s.status == RunStatus::failed, tag + "expected failure");
    c.expect(s.data.value("error", Json::object()).value("type", "") == "FormalizationFailed", tag + "error type");
    c.expect(cap.size() == static_cast<std::size_t>(2 + f_max), tag + "calls " + std::to_string(cap.size()));
    c.expect(run.hx.backend.remaining() == 1, tag + "extra formalization request");
    for (int i = 1; i < f_max; ++i) {
      c.expect(cap[2 + i].messages.back().content == kInvalidJsonRetry, tag + "retry line missing");
    }
  }
  double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s");
  return fmt(secs) + " s";
}

// ---------------------------------------------------------------------------

std::vector<std::string> reply_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> tokens{
      "[YES]", "[NO]",  "YES",    "yes",  "[yes]", "[ YES ]", "[YES",   "YES]",  "[Y ES]", "\xef\xbc\xbbYES\xef\xbc\xbd",
      "[NO ]", "NO",    "[N0]",   "ok",   "safe",  "[SAFE]",  "[APPROVED]", "[UNSAFE]", "\n", " ",
      "The command is", "harmless.", "dangerous!", "[[YES]]", "[YES][NO]", "Y", "E", "S", "[", "]"};
  std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1);
  std::uniform_int_distribution<int> len(0, 6);
  std::uniform_int_distribution<int> byte(1, 255);
  std::vector<std::string> out{"", "[YES]", "[NO]", "[YES] [NO]", "[yes]"};
  while (out.size() < n) {
    std::string s;
    int k = len(rng);
    for (int i = 0; i < k; ++i) {
      if (rng() % 5 == 0) {
        s.push_back(static_cast<char>(byte(rng)));
      } else {
        s += tokens[pick(rng)];
      }
    }
    out.push_back(s);
  }
  return out;
}

std::string criterion_safety(Check& c) {
  auto t0 = Clock::now();
  auto corpus = reply_corpus(1200, 2024);
  auto registry = make_standard_tools(ToolboxConfig{});
  TempDir tmp;
  int lacking = 0, blocked_lacking = 0, allowed = 0, bypasses = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& reply = corpus[i];
    const bool has_yes = reply.find("[YES]") != std::string::npos;
    const bool has_no = reply.find("[NO]") != std::string::npos;
    std::string marker = "m" + std::to_string(i);
    std::string command = "touch " + marker;

    testing::Harness hx({say(reply)});
    RunState state;
    state.workspace = tmp.path().string();
    ToolContext ctx{*hx.session, state, tmp.path()};
    auto msg = invoke_tool(registry, {"c" + std::to_string(i), "run_cmd", {{"command", command}}}, ctx);
    bool ran = fs::exists(tmp.path() / marker);
    bool should_allow = has_yes && !has_no;
    if (!has_yes) {
      ++lacking;
      if (!ran && msg.content == std::string(kUnsafePrefix) + command) ++blocked_lacking;
    }
    if (ran) {
      ++allowed;
      if (!should_allow) ++bypasses;
    } else {
      c.expect(!should_allow, "allowed reply did not run: " + reply);
      c.expect(msg.content.rfind("[UNSAFE]", 0) == 0, "blocked reply without [UNSAFE] marker");
    }
    auto verdicts = hx.events(EventKind::safety_verdict);
    c.expect(verdicts.size() == 1, "expected one verdict event");
  }
  c.expect(bypasses == 0, std::to_string(bypasses) + " gate bypasses");
  c.expect(blocked_lacking == lacking, "blocked " + std::to_string(blocked_lacking) + " of " + std::to_string(lacking) +
                                           " replies lacking [YES]");
  // backend failure is also a block
  {
    testing::Harness hx({});
    auto v = safety_check(*hx.session, "echo hi", tmp.path());
    c.expect(!v.allowed(), "exhausted backend allowed a command");
  }
  double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt(secs) + " s");
  return std::to_string(corpus.size()) + " replies, " + std::to_string(lacking) + " without [YES] all blocked, " +
         std::to_string(allowed) + " allowed, " + std::to_string(bypasses) + " bypasses, " + fmt(secs) + " s";
}

// ---------------------------------------------------------------------------

struct Entry {
  fs::file_type type;
  std::uintmax_t size = 0;
  std::string content;
  fs::perms perms;
  fs::file_time_type mtime;
  std::string link;

  bool operator==(const Entry& o) const {
    return type == o.type && size == o.size && content == o.content && perms == o.perms && mtime == o.mtime &&
           link == o.link;
  }
};

// Everything under `root` except the workspace directories themselves.
std::map<std::string, Entry> snapshot(const fs::path& root, const fs::path& runs) {
  std::map<std::string, Entry> out;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    const auto& p = it->path();
    if (p == runs) continue;  // gains new workspaces
    if (p.parent_path() == runs) {
      it.disable_recursion_pending();
      continue;
    }
    auto st = fs::symlink_status(p);
    Entry e{st.type(), 0, "", st.permissions(), {}, ""};
    if (st.type() == fs::file_type::symlink) {
      e.link = fs::read_symlink(p).string();
    } else {
      e.mtime = fs::last_write_time(p);
      if (st.type() == fs::file_type::regular) {
        e.size = fs::file_size(p);
        e.content = read_file(p);
      }
    }
    out[fs::relative(p, root).string()] = e;
  }
  return out;
}

std::string criterion_sandbox(Check& c) {
  auto t0 = Clock::now();
  TempDir tmp;
  const auto root = tmp.path();
  const auto runs = root / "runs";
  const auto decoy = root / "decoy";
  fs::create_directories(decoy / "deep");
  fs::create_directories(runs);
  write_file_atomic(decoy / "secret.txt", "do not touch\n");
  write_file_atomic(decoy / "deep" / "data.csv", "a,b\n1,2\n");
  write_file_atomic(root / "top.txt", "top\n");
  auto before = snapshot(root, runs);

  const std::vector<std::string> escape_paths{
      "../escape.txt",          "../../decoy/secret.txt", "../../top.txt",          "sub/../../escape.txt",
      "a/./../../escape.txt",   (decoy / "secret.txt").string(), (root / "abs.txt").string(), "link/pwn.txt",
      "link/../../top.txt",     "..",                     "../runs2/x",             "/tmp/../" + (root / "t.txt").string()};
  const std::vector<std::string> inside_paths{"notes.txt", "src/main.py", "out/deep/result.json", "a b.txt",
                                              "./local.txt"};
  const std::vector<std::string> hostile_commands{
      "rm -rf ../decoy",         "touch ../escape.txt",        "echo x > ../../decoy/secret.txt",
      "cp notes.txt " + decoy.string(), "cd .. && touch y",    "mv notes.txt ../stolen.txt",
      "ln -s " + decoy.string() + " l2", "echo x >> ~/file",   "tee $HOME/../x < /dev/null",
      "sudo rm -rf /",           "chmod 777 ../../decoy",      "dd if=/dev/zero of=../z bs=1 count=1",
      "find .. -delete",         "sed -i s/a/b/ ../../decoy/deep/data.csv", "mkdir ../newdir",
      "echo hi 2> ../err.txt",   "apt-get install foo",        "pip install requests"};
  const std::vector<std::string> benign_commands{"echo hi > out.txt", "mkdir -p d && touch d/f", "ls -la", "cat notes.txt",
                                                 "pwd"};
  CommandPolicy policy;
  std::mt19937_64 rng(77);
  int writes_refused = 0, commands_denied = 0, commands_run = 0;

  for (int i = 0; i < 50; ++i) {
    std::string run_id = "r" + std::to_string(i);
    auto ws = prepare_workspace(runs, run_id);
    if (i % 3 == 0) fs::create_directory_symlink(decoy, ws / "link");
    std::vector<ChatMessage> script;
    int actions = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> attempted_escapes;
    for (int a = 0; a < actions; ++a) {
      std::string id = "t" + std::to_string(a);
      switch (rng() % 4) {
        case 0:
        case 1: {
          auto path = escape_paths[rng() % escape_paths.size()];
          attempted_escapes.push_back(path);
          script.push_back(call_tool(id, "write_code", {{"path", path}, {"content", "pwned\n"}}));
          break;
        }
        case 2: {
          auto path = inside_paths[rng() % inside_paths.size()];
          script.push_back(call_tool(id, "write_code", {{"path", path}, {"content", "fine\n"}}));
          break;
        }
        default: {
          bool hostile = rng() % 3 != 0;
          auto cmd = hostile ? hostile_commands[rng() % hostile_commands.size()]
                             : benign_commands[rng() % benign_commands.size()];
          script.push_back(call_tool(id, "run_cmd", {{"command", cmd}}));
          if (policy.denial_reason(cmd, ws)) {
            ++commands_denied;
            c.expect(!benign_commands.empty() && hostile, "benign command denied: " + cmd);
          } else {
            // the model's verdict: hostile commands that slip past the deny-list are refused by the reviewer
            script.push_back(say(hostile ? "[NO] unsafe" : "[YES]"));
            if (!hostile) ++commands_run;
          }
        }
      }
    }
    script.push_back(say("finished"));
    script.push_back(say("summary"));

    ScriptedBackend backend(script);
    auto handles = open_run(ws, run_id, logical_clock());
    Session session(backend, *handles.transcript, LoopLimits{8, 2});
    ToolRegistry tools = make_standard_tools(ToolboxConfig{});
    AgentServices services;
    services.tools = &tools;
    auto result = run_workflow("execute", session, services, initial_state(run_id, ws, "randomized task"));
    c.expect(result.state.status == RunStatus::succeeded, run_id + " did not finish");
    c.expect(backend.remaining() == 0, run_id + " left script entries");
    for (const auto& e : handles.transcript->events()) {
      if (e.kind == EventKind::error && e.payload.dump().find("PathEscape") != std::string::npos) ++writes_refused;
    }
  }
  auto after = snapshot(root, runs);
  int changed = 0;
  for (const auto& [path, entry] : after) {
    auto it = before.find(path);
    if (it == before.end() || !(it->second == entry)) {
      ++changed;
      c.expect(false, "modified outside workspaces: " + path);
    }
  }
  for (const auto& [path, entry] : before) {
    if (!after.contains(path)) {
      ++changed;
      c.expect(false, "removed outside workspaces: " + path);
    }
  }
  return "50 runs, " + std::to_string(writes_refused) + " traversal writes refused, " + std::to_string(commands_denied) +
         " commands denied by policy, " + std::to_string(commands_run) + " benign commands run, " +
         std::to_string(changed) + " outside changes, " + fmt(seconds_since(t0)) + " s";
}

// ---------------------------------------------------------------------------

std::vector<ChatMessage> research_plan_execute_script() {
  return {
      call_tool("s1", "web_search", {{"query", "six hump camel minima"}}),
      call_tool("p1", "process_content", {{"url", "https://example.org/camel"}, {"context", "global minima"}}),
      say("The page lists two symmetric global minima."),
      say("Findings: two minima near (0.09, -0.71) and (-0.09, 0.71)."),
      say("Adequate. [APPROVED]"),
      say("Research summary: the camel has two global minima of about -1.03."),
      say("Plan: write notes, then report."),
      say("[APPROVED]"),
      say(kTwoStepPlan),
      call_tool("w1", "write_code", {{"path", "notes.txt"}, {"content", "minima near (0.09, -0.71)\n"}}),
      call_tool("r1", "run_cmd", {{"command", "cat notes.txt"}}),
      say("[YES]"),
      say("Notes written and checked."),
      say("Step 1 summary: notes.txt holds the minima."),
      say("Reported the findings."),
      say("Step 2 summary: report done."),
  };
}

struct RpeRun {
  fs::path ws;
  std::string transcript;
  std::vector<long> checkpoints;
  RunStatus status;
};

RpeRun run_rpe(const fs::path& root, std::optional<long> stop, const ToolRegistry& tools) {
  fs::remove_all(root / "runs");
  auto ws = prepare_workspace(root / "runs", "rpe");
  ScriptedBackend backend(research_plan_execute_script());
  auto handles = open_run(ws, "rpe", logical_clock());
  Session session(backend, *handles.transcript, LoopLimits{2, 2});
  session.set_checkpoints(handles.checkpoints.get());
  AgentServices services;
  services.tools = &tools;
  RunOptions opt;
  opt.stop_after_checkpoint = stop;
  auto r = run_workflow("research-plan-execute", session, services,
                        initial_state("rpe", ws, "Find the camel minima and write them down"), opt);
  return {ws, read_file(ws / "transcript.ndjson"), handles.checkpoints->sequences(), r.state.status};
}

std::string criterion_checkpoints(Check& c) {
  auto t0 = Clock::now();
  TempDir tmp;
  ToolboxConfig tb;
  tb.search = std::make_shared<FixtureSearchProvider>(testing::fixtures() / "search");
  tb.fetcher = std::make_shared<FixturePageFetcher>(testing::fixtures() / "pages");
  auto tools = make_standard_tools(tb);
  AgentServices services;
  services.tools = &tools;

  auto full = run_rpe(tmp.path(), std::nullopt, tools);
  c.expect(full.status == RunStatus::succeeded, "uninterrupted run failed");
  std::set<std::string> agents;
  for (const auto& line : read_transcript(full.ws / "transcript.ndjson")) {
    if (line.kind == EventKind::node_enter) agents.insert(line.payload.value("node", "").substr(0, 5));
  }
  c.expect(full.checkpoints.size() >= 10, "only " + std::to_string(full.checkpoints.size()) + " checkpoints");

  int identical = 0;
  for (long k : full.checkpoints) {
    auto part = run_rpe(tmp.path(), k, tools);
    c.expect(full.transcript.rfind(part.transcript, 0) == 0,
             "interrupted transcript is not a prefix at checkpoint " + std::to_string(k));
    {
      ScriptedBackend backend(research_plan_execute_script());
      auto handles = open_run(part.ws, "rpe", logical_clock());
      Session session(backend, *handles.transcript, LoopLimits{2, 2});
      session.set_checkpoints(handles.checkpoints.get());
      auto cp = handles.checkpoints->load(k);
      auto state = resume(build_workflow(cp.graph, services), cp, session);
      c.expect(state.status == RunStatus::succeeded, "resume from " + std::to_string(k) + " failed");
    }
    bool same = read_file(part.ws / "transcript.ndjson") == full.transcript;
    identical += same;
    c.expect(same, "transcript differs after resume from checkpoint " + std::to_string(k));
  }
  return std::to_string(identical) + "/" + std::to_string(full.checkpoints.size()) +
         " checkpoints resume byte-identical, " + fmt(seconds_since(t0)) + " s";
}

// ---------------------------------------------------------------------------

std::string criterion_hypothesizer(Check& c) {
  const auto& p = default_prompts();
  std::string detail;
  for (int n_max : {0, 1, 2, 3}) {
    std::vector<ChatMessage> script;
    for (int r = 0; r <= n_max; ++r) {
      script.push_back(say("HYP-" + std::to_string(r)));
      script.push_back(say("CRIT-" + std::to_string(r)));
      script.push_back(say("COUNTER-" + std::to_string(r)));
    }
    script.push_back(say("SYNTHESIS"));
    Run run(script, LoopLimits{n_max, 1});
    auto s = run.go("hypothesize", "Why does the yield saturate?");
    const auto& cap = run.hx.captured();
    std::string tag = "n_max=" + std::to_string(n_max) + ": ";
    const std::size_t expected = 3 * (n_max + 1) + 1;
    c.expect(s.status == RunStatus::succeeded, tag + "run failed");
    c.expect(cap.size() == expected, tag + "calls " + std::to_string(cap.size()) + " != " + std::to_string(expected));
    if (cap.size() != expected) continue;
    for (int r = 0; r <= n_max; ++r) {
      c.expect(cap[3 * r].messages[0].content == p.hypothesis_generator, tag + "generator order");
      c.expect(cap[3 * r + 1].messages[0].content == p.hypothesis_critic, tag + "critic order");
      c.expect(cap[3 * r + 2].messages[0].content == p.hypothesis_competitor, tag + "competitor order");
      c.expect(testing::joined(cap[3 * r + 1].messages).find("HYP-" + std::to_string(r)) != std::string::npos,
               tag + "critic does not see the hypothesis");
      if (r > 0) {
        c.expect(testing::joined(cap[3 * r].messages).find("CRIT-" + std::to_string(r - 1)) != std::string::npos,
                 tag + "round " + std::to_string(r) + " generator lacks the previous critique");
      }
    }
    c.expect(read_file(run.ws / "hypothesis.md").find("SYNTHESIS") != std::string::npos, tag + "synthesis missing");
    detail += (detail.empty() ? "" : ", ") + std::to_string(expected) + " calls at n_max=" + std::to_string(n_max);
  }
  return detail;
}

// ---------------------------------------------------------------------------

std::string criterion_arxiv(Check& c) {
  auto meta = Json::parse(read_file(testing::fixtures() / "arxiv" / "metadata.json"));
  auto run_on = [&](const fs::path& dir, std::vector<ChatMessage> script) {
    auto r = std::make_unique<Run>(std::move(script));
    r->services.papers = std::make_shared<FixturePaperSource>(dir);
    r->services.arxiv_context = "design optimization";
    r->services.max_papers = 3;
    auto s = r->go("arxiv", "implosion design surrogate");
    return std::make_pair(std::move(r), s);
  };

  auto [full, s] = run_on(testing::fixtures() / "arxiv",
                          {say("SUMMARY-A"), say("SUMMARY-B"), say("SUMMARY-C"), say("OVERVIEW")});
  c.expect(s.status == RunStatus::succeeded, "3-paper run failed");
  c.expect(s.data["arxiv"]["summaries"].size() == 3, "expected 3 summaries");
  auto doc = read_file(full->ws / "literature.md");
  c.expect(doc.find("OVERVIEW") != std::string::npos && doc.find("OVERVIEW") < doc.find("[1] "),
           "overview does not precede the entries");
  for (const auto& m : meta) {
    c.expect(doc.find(m["title"].get<std::string>()) != std::string::npos, "title missing: " + m["title"].get<std::string>());
    c.expect(doc.find(m["link"].get<std::string>()) != std::string::npos, "link missing: " + m["link"].get<std::string>());
  }
  for (const char* tag : {"[1] ", "[2] ", "[3] ", "SUMMARY-A", "SUMMARY-B", "SUMMARY-C"}) {
    c.expect(doc.find(tag) != std::string::npos, std::string("aggregate lacks ") + tag);
  }
  c.expect(full->hx.captured().size() == 4, "expected 3 summary calls and 1 overview call");

  TempDir copy;
  fs::copy(testing::fixtures() / "arxiv", copy.path() / "arxiv");
  write_file_atomic(copy.path() / "arxiv" / "2401.00002.pdf", "%PDF-1.4\n1 0 obj\n<< /Length 999 >>\nstream\n\x01\x02garbage");
  auto [broken, s2] = run_on(copy.path() / "arxiv", {say("SUMMARY-A"), say("SUMMARY-C"), say("OVERVIEW")});
  c.expect(s2.status == RunStatus::succeeded, "corrupt PDF aborted the run");
  c.expect(s2.data["arxiv"]["summaries"].size() == 2, "expected 2 summaries with one corrupt PDF");
  c.expect(s2.data["arxiv"]["skipped"].size() == 1, "expected one skipped paper");
  auto doc2 = read_file(broken->ws / "literature.md");
  c.expect(doc2.find("[2] ") != std::string::npos && doc2.find("[3] ") == std::string::npos,
           "aggregate should list exactly two papers");
  c.expect(doc2.find(meta[1]["title"].get<std::string>()) == std::string::npos, "corrupt paper was summarized");
  c.expect(broken->hx.events(EventKind::error).size() == 1, "corrupt PDF should log one error event");
  return "3 summaries + aggregate; corrupt copy gives 2 summaries, 1 skipped";
}

// ---------------------------------------------------------------------------

std::pair<double, Vec> camel_grid_minimum() {
  auto box = camel_box();
  double best = 1e300;
  Vec at;
  for (int i = 0; i <= 2000; ++i) {
    double x = box.lo[0] + (box.hi[0] - box.lo[0]) * i / 2000.0;
    for (int j = 0; j <= 2000; ++j) {
      double y = box.lo[1] + (box.hi[1] - box.lo[1]) * j / 2000.0;
      double f = six_hump_camel(x, y);
      if (f < best) best = f, at = {x, y};
    }
  }
  return {best, at};
}

std::string criterion_camel(Check& c) {
  auto [oracle, at] = camel_grid_minimum();
  c.expect(std::abs(oracle - kCamelMinimum) < 1e-4, "grid oracle " + fmt(oracle, 5) + " disagrees with -1.0316");
  auto t0 = Clock::now();
  int hits = 0;
  std::string bests;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CampaignConfig cfg{10, 60, seed, 17.0};
    auto recs = bo_campaign([](const Vec& x) { return six_hump_camel(x[0], x[1]); }, camel_box(), cfg);
    c.expect(recs.size() == 60, "seed " + std::to_string(seed) + " spent " + std::to_string(recs.size()));
    double best = 1e300;
    for (const auto& r : recs) best = std::min(best, r.objective);
    hits += std::abs(best - kCamelMinimum) <= 1e-2;
    bests += (bests.empty() ? "" : ", ") + fmt(best, 4);
  }
  double secs = seconds_since(t0);
  c.expect(hits >= 4, std::to_string(hits) + "/5 seeds within 1e-2");
  c.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  return std::to_string(hits) + "/5 seeds within 1e-2 of " + fmt(oracle, 4) + "; best " + bests + "; " + fmt(secs, 1) +
         " s";
}

// ---------------------------------------------------------------------------

std::string criterion_gp(Check& c) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_interp = 0.0;
  double min_var = 1e300;
  const std::vector<std::pair<Box, std::function<double(const Vec&)>>> problems{
      {camel_box(), [](const Vec& x) { return six_hump_camel(x[0], x[1]); }},
      {design_box(), [](const Vec& x) { return synthetic_yield(x); }}};
  for (const auto& [box, f] : problems) {
    for (int n : {8, 20, 40}) {
      std::vector<Vec> x;
      Vec y;
      for (const auto& u : latin_hypercube(n, box.dim(), static_cast<std::uint64_t>(n))) {
        x.push_back(box.from_unit(u));
        y.push_back(f(x.back()));
      }
      GpFitOptions opt;
      opt.starts = 8;
      opt.fixed_noise = 1e-12;
      auto exact = gp_fit(x, y, box, opt);
      for (std::size_t i = 0; i < x.size(); ++i) {
        worst_interp = std::max(worst_interp, std::abs(exact.predict(x[i]).mean - y[i]));
      }
      GpFitOptions free;
      free.starts = 8;
      auto fitted = gp_fit(x, y, box, free);
      for (const auto* m : {&exact, &fitted}) {
        for (int k = 0; k < 2000; ++k) {
          Vec q(box.dim());
          for (auto& v : q) v = u01(rng);
          if (k % 4 == 0) {  // close to a training point
            q = box.to_unit(x[static_cast<std::size_t>(k) % x.size()]);
            for (auto& v : q) v = std::clamp(v + 1e-7 * (u01(rng) - 0.5), 0.0, 1.0);
          }
          double var = m->predict(box.from_unit(q)).variance;
          min_var = std::min(min_var, var);
          c.expect(std::isfinite(var), "non-finite posterior variance");
        }
      }
    }
  }
  c.expect(worst_interp <= 1e-6, "interpolation error " + std::to_string(worst_interp));
  c.expect(min_var >= 0.0, "negative posterior variance " + std::to_string(min_var));

  std::uniform_real_distribution<double> wide(-50.0, 50.0);
  std::uniform_real_distribution<double> logsig(-12.0, 3.0);
  double min_ei = 1e300;
  for (int i = 0; i < 10000; ++i) {
    double mean = wide(rng);
    double sigma = i % 10 == 0 ? 0.0 : std::pow(10.0, logsig(rng));
    double best = wide(rng);
    double ei = expected_improvement(mean, sigma, best);
    c.expect(std::isfinite(ei), "non-finite EI");
    min_ei = std::min(min_ei, ei);
  }
  c.expect(min_ei >= 0.0, "negative EI " + std::to_string(min_ei));
  std::ostringstream d;
  d << "max interpolation error " << worst_interp << ", min variance " << min_var << ", min EI over 1e4 triples "
    << min_ei;
  return d.str();
}

// ---------------------------------------------------------------------------

std::string criterion_design_race(Check& c) {
  auto t0 = Clock::now();
  TempDir tmp;
  auto settings = default_config().workbench;
  auto backend = ScriptedBackend::from_file((testing::fixtures() / "scripts" / "design_race.json").string());
  Transcript transcript("design-race", logical_clock());
  Session session(backend, transcript);
  auto rep = run_design_race(settings, session, tmp.path());
  c.expect(rep.agent_error.empty(), "agent campaign error: " + rep.agent_error);
  const double threshold = settings.agent.yield_threshold_log10;
  c.expect(threshold == 17.0, "threshold is not 17");
  c.expect(rep.comparison.threshold == threshold, "comparison threshold");
  c.expect(rep.histories.size() == 1 + settings.bo.size(), "expected agent plus BO baselines");

  std::string detail;
  for (std::size_t i = 0; i < rep.histories.size() && i < rep.comparison.campaigns.size(); ++i) {
    const auto& h = rep.histories[i];
    const auto& sm = rep.comparison.campaigns[i];
    c.expect(!h.records.empty(), h.name + " has no evaluations");
    c.expect(std::is_sorted(sm.running_best.begin(), sm.running_best.end()), h.name + " running max decreases");
    std::optional<int> first;
    double best = -1e300;
    for (std::size_t k = 0; k < h.records.size(); ++k) {
      best = std::max(best, h.records[k].objective);
      c.expect(sm.running_best[k] == best, h.name + " running max wrong at " + std::to_string(k + 1));
      if (!first && h.records[k].objective >= threshold) first = static_cast<int>(k + 1);
    }
    c.expect(sm.evals_to_threshold == first, h.name + " evaluations-to-threshold wrong");
    auto csv = tmp.path() / (h.name + ".csv");
    c.expect(fs::exists(csv), "missing " + csv.string());
    if (fs::exists(csv)) {
      auto text = read_file(csv);
      auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
      c.expect(lines == h.records.size() + 1, h.name + ".csv row count");
    }
    detail += (detail.empty() ? "" : "; ") + h.name + " " +
              (first ? "reached 17 at eval " + std::to_string(*first) : std::string("did not reach 17"));
  }
  c.expect(!rep.histories.empty() && rep.comparison.campaigns[0].evals_to_threshold.has_value(),
           "scripted agent should reach the threshold");
  c.expect(fs::exists(tmp.path() / "comparison.svg"), "SVG not written");
  c.expect(fs::exists(tmp.path() / "comparison.txt"), "table not written");
  c.expect(rep.comparison.table().find("threshold: 17") != std::string::npos, "table header");
  double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s");
  return detail + "; " + fmt(secs, 1) + " s";
}

// ---------------------------------------------------------------------------

std::string criterion_plan_schema(Check& c) {
  std::mt19937_64 rng(99);
  auto word = [&](int len) {
    static const std::vector<std::string> chars{"a", "b", "c", "x", "y", "z", " ", "A", "Q", "\"", "\\", "/",
                                                "\n", "\t", "{", "}", "[", "]", ",", ":", "0", "7", "\xc3\xa9",
                                                "\xe2\x88\x91"};
    std::string s;
    for (int i = 0; i < len; ++i) s += chars[rng() % chars.size()];
    return s;
  };
  auto words = [&](int max) {
    Json a = Json::array();
    int n = static_cast<int>(rng() % (max + 1));
    for (int i = 0; i < n; ++i) a.push_back(word(1 + static_cast<int>(rng() % 12)));
    return a;
  };
  const std::vector<std::string> fields{"id", "name", "description", "requires_code", "expected_outputs",
                                        "success_criteria"};
  int conforming = 0, roundtrips = 0, violations = 0, rejected = 0;
  std::map<std::string, int> kinds;
  for (int doc_i = 0; doc_i < 100; ++doc_i) {
    Json doc = Json::array();
    int steps = 1 + static_cast<int>(rng() % 6);
    for (int s = 0; s < steps; ++s) {
      doc.push_back({{"id", std::to_string(s + 1) + (rng() % 2 ? "" : "." + std::to_string(rng() % 9))},
                     {"name", word(1 + static_cast<int>(rng() % 20))},
                     {"description", word(static_cast<int>(rng() % 60))},
                     {"requires_code", rng() % 2 == 0},
                     {"expected_outputs", words(3)},
                     {"success_criteria", words(3)}});
    }
    int kind = doc_i % 4;  // 0 conforming; 1 missing field; 2 duplicate id; 3 non-boolean requires_code
    auto& victim = doc[rng() % doc.size()];
    if (kind == 1) {
      victim.erase(fields[rng() % fields.size()]);
    } else if (kind == 2) {
      if (doc.size() == 1) doc.push_back(doc[0]);
      doc[doc.size() - 1]["id"] = doc[0]["id"];
    } else if (kind == 3) {
      const std::vector<Json> bad{"true", 1, 0, nullptr, Json::array(), Json::object(), "no"};
      victim["requires_code"] = bad[rng() % bad.size()];
    }
    if (kind == 0) {
      ++conforming;
      try {
        auto parsed = validate_plan(doc);
        Plan plan;
        plan.steps = parsed;
        bool same = plan_to_json(plan) == doc && parse_plan("```json\n" + doc.dump(2) + "\n```") == parsed &&
                    validate_plan(Json::parse(plan_to_json(plan).dump())) == parsed;
        roundtrips += same;
        c.expect(same, "document " + std::to_string(doc_i) + " did not round-trip");
      } catch (const std::exception& e) {
        c.expect(false, "conforming document " + std::to_string(doc_i) + " rejected: " + e.what());
      }
    } else {
      ++violations;
      ++kinds[kind == 1 ? "missing" : kind == 2 ? "duplicate" : "type"];
      try {
        validate_plan(doc);
        c.expect(false, "violation " + std::to_string(kind) + " accepted in document " + std::to_string(doc_i));
      } catch (const MalformedResponse&) {
        ++rejected;
      }
    }
  }
  return std::to_string(rejected) + "/" + std::to_string(violations) + " violations rejected (" +
         std::to_string(kinds["missing"]) + " missing field, " + std::to_string(kinds["duplicate"]) +
         " duplicate id, " + std::to_string(kinds["type"]) + " non-boolean), " + std::to_string(roundtrips) + "/" +
         std::to_string(conforming) + " conforming round-trip";
}

}  // namespace

int main() {
  report(1, "planner review loop and formalizer limits", criterion_loops);
  report(2, "safety gate fails closed", criterion_safety);
  report(3, "no writes outside workspaces", criterion_sandbox);
  report(4, "checkpoint resume is byte-identical", criterion_checkpoints);
  report(5, "hypothesizer debate shape", criterion_hypothesizer);
  report(6, "arxiv pipeline with a corrupt PDF", criterion_arxiv);
  report(7, "camel BO reaches the global minimum", criterion_camel);
  report(8, "GP and EI numerics", criterion_gp);
  report(9, "design-race comparison", criterion_design_race);
  report(10, "plan schema fuzzing", criterion_plan_schema);
  std::cout << (failed_criteria == 0 ? "all criteria passed" : std::to_string(failed_criteria) + " criteria failed")
            << "\n";
  return failed_criteria == 0 ? 0 : 1;
}
