#include <sys/stat.h>

#include <doctest.h>

#include "sciagent/errors.hpp"
#include "sciagent/prompts.hpp"
#include "sciagent/tools.hpp"
#include "support.hpp"

using namespace sciagent;
using testing::call_tool;
using testing::say;
using testing::TempDir;

namespace fs = std::filesystem;

TEST_SUITE("toolbox") {
  TEST_CASE("verdicts: only [YES] without [NO] allows") {
    CHECK(SafetyVerdict::from_reply("ls", "[YES] fine").allowed());
    CHECK_FALSE(SafetyVerdict::from_reply("ls", "[NO]").allowed());
    CHECK_FALSE(SafetyVerdict::from_reply("ls", "[YES] but also [NO]").allowed());
    CHECK_FALSE(SafetyVerdict::from_reply("ls", "yes").allowed());
    CHECK_FALSE(SafetyVerdict::from_reply("", "[YES]").allowed());
    CHECK_FALSE(SafetyVerdict::blocked("ls", "policy").allowed());
  }

  TEST_CASE("policy denies escalation, package managers and outside writes") {
    TempDir tmp;
    CommandPolicy p;
    auto ws = tmp.path();
    CHECK(p.denial_reason("sudo ls", ws));
    CHECK(p.denial_reason("pip install numpy", ws));
    CHECK(p.denial_reason("python3 -m pip install x", ws));
    CHECK(p.denial_reason("apt-get install foo", ws));
    CHECK(p.denial_reason("npm install -g x", ws));
    CHECK(p.denial_reason("rm -rf /", ws));
    CHECK(p.denial_reason("echo hi > /tmp/outside.txt", ws));
    CHECK(p.denial_reason("cd .. && ls", ws));
    CHECK(p.denial_reason("cp a.txt ~/b.txt", ws));
    CHECK(p.denial_reason("ls; rm ../../x", ws));
    CHECK_FALSE(p.denial_reason("ls -la", ws));
    CHECK_FALSE(p.denial_reason("python3 script.py > out.txt", ws));
    CHECK_FALSE(p.denial_reason("echo hi 2>/dev/null", ws));
    CHECK_FALSE(p.denial_reason("pip list", ws));
  }

  TEST_CASE("safety_check: denial skips the backend, reply decides otherwise, failures block") {
    TempDir tmp;
    testing::Harness hx({say("[YES]"), say("maybe")});
    auto denied = safety_check(*hx.session, "sudo rm x", tmp.path());
    CHECK_FALSE(denied.allowed());
    CHECK(hx.captured().empty());
    CHECK(safety_check(*hx.session, "ls", tmp.path()).allowed());
    CHECK_FALSE(safety_check(*hx.session, "ls", tmp.path()).allowed());
    CHECK_FALSE(safety_check(*hx.session, "ls", tmp.path()).allowed());  // script exhausted: fail closed
    CHECK(hx.events(EventKind::safety_verdict).size() == 4);
    CHECK(hx.captured()[0].messages.back().content.find("ls") != std::string::npos);
  }

  TEST_CASE("run_cmd requires a matching allowed verdict") {
    TempDir tmp;
    CommandRequest req{"echo hi", tmp.path()};
    CHECK_THROWS_AS(run_cmd(req, SafetyVerdict::blocked("echo hi", "x"), tmp.path()), GateViolation);
    CHECK_THROWS_AS(run_cmd(req, SafetyVerdict::from_reply("echo other", "[YES]"), tmp.path()), GateViolation);
    auto r = run_cmd(req, SafetyVerdict::from_reply("echo hi", "[YES]"), tmp.path());
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text == "hi\n");
    CHECK(r.reply.find("Exit code: 0") == 0);
    CHECK_THROWS_AS(run_cmd({"echo hi", "/"}, SafetyVerdict::from_reply("echo hi", "[YES]"), tmp.path()), PathEscape);
  }

  TEST_CASE("run_cmd reports exit codes, timeouts and missing programs") {
    TempDir tmp;
    auto ok = [](const std::string& c) { return SafetyVerdict::from_reply(c, "[YES]"); };
    auto r = run_cmd({"echo err >&2; exit 3", tmp.path()}, ok("echo err >&2; exit 3"), tmp.path());
    CHECK(r.exit_code == 3);
    CHECK(r.stderr_text == "err\n");
    CommandPolicy fast;
    fast.timeout_seconds = 0.3;
    auto slow = run_cmd({"echo start; sleep 5", tmp.path()}, ok("echo start; sleep 5"), tmp.path(), fast);
    CHECK(slow.timed_out);
    CHECK_FALSE(slow.exit_code.has_value());
    CHECK(slow.stdout_text == "start\n");
    CHECK_THROWS_AS(run_cmd({"no_such_program_xyz", tmp.path()}, ok("no_such_program_xyz"), tmp.path()), SpawnFailure);
  }

  TEST_CASE("child environment is filtered and homed in the workspace") {
    TempDir tmp;
    ::setenv("SCIAGENT_SECRET_TEST", "s3cret", 1);
    auto env = CommandPolicy{}.child_environment(tmp.path());
    bool has_home = false;
    for (const auto& e : env) {
      CHECK(e.find("SCIAGENT_SECRET_TEST") == std::string::npos);
      if (e == "HOME=" + tmp.path().string()) has_home = true;
    }
    CHECK(has_home);
  }

  TEST_CASE("workspace path resolution refuses escapes") {
    TempDir tmp;
    CHECK(resolve_in_workspace(tmp.path(), "a/b.txt") == tmp.path() / "a/b.txt");
    CHECK_THROWS_AS(resolve_in_workspace(tmp.path(), "../x"), PathEscape);
    CHECK_THROWS_AS(resolve_in_workspace(tmp.path(), "/etc/passwd"), PathEscape);
    CHECK_THROWS_AS(resolve_in_workspace(tmp.path(), ""), PathEscape);
    fs::create_symlink("/tmp", tmp.path() / "link");
    CHECK_THROWS_AS(resolve_in_workspace(tmp.path(), "link/x.txt"), PathEscape);
  }

  TEST_CASE("write_code creates, diffs overwrites and refuses read-only inputs") {
    TempDir tmp;
    auto first = write_code(tmp.path(), "src/a.py", "print(1)\n");
    CHECK(first.metadata["created"] == true);
    CHECK(first.metadata["diff"] == "");
    CHECK(first.artifacts == std::vector<std::string>{"src/a.py"});
    auto second = write_code(tmp.path(), "src/a.py", "print(2)\n");
    CHECK(second.metadata["created"] == false);
    auto diff = second.metadata["diff"].get<std::string>();
    CHECK(diff.find("-print(1)") != std::string::npos);
    CHECK(diff.find("+print(2)") != std::string::npos);
    CHECK(read_file(tmp.path() / "src/a.py") == "print(2)\n");
    write_file_atomic(tmp.path() / "input.csv", "x\n");
    ::chmod((tmp.path() / "input.csv").c_str(), 0444);
    CHECK_THROWS_AS(write_code(tmp.path(), "input.csv", "y\n"), IoFailure);
  }

  TEST_CASE("unified diff format") {
    auto d = unified_diff("a\nb\nc\n", "a\nB\nc\n", "x", "y");
    CHECK(d.find("--- x\n+++ y\n") == 0);
    CHECK(d.find("@@ -1,3 +1,3 @@") != std::string::npos);
    CHECK(unified_diff("same\n", "same\n", "x", "y").empty());
  }

  TEST_CASE("html_to_text strips scripts, styles, tags and entities") {
    auto t = html_to_text("<html><style>p{}</style><script>x=1</script><p>A &amp; B</p><!-- c --> <b>C</b></html>");
    CHECK(t == "A & B\nC");
  }

  TEST_CASE("fixture search and fetch") {
    FixtureSearchProvider search(testing::fixtures() / "search");
    auto r = web_search(search, "anything", 1);
    REQUIRE(r.size() == 1);
    CHECK(r[0].url == "https://example.org/camel");
    CHECK_THROWS_AS(web_search(search, "x", 0), PreconditionError);
    FixtureSearchProvider missing("/nonexistent/dir");
    CHECK_THROWS_AS(missing.search("x", 1), ProviderUnavailable);
    FixturePageFetcher pages(testing::fixtures() / "pages");
    CHECK(pages.fetch("https://example.org/ei").find("Expected improvement") != std::string::npos);
    CHECK_THROWS_AS(pages.fetch("https://example.org/none"), FetchFailure);
  }

  TEST_CASE("process_content caps bytes and asks for a summary") {
    FixturePageFetcher pages(testing::fixtures() / "pages");
    testing::Harness hx({say("condensed")});
    auto s = process_content(*hx.session, pages, "https://example.org/camel", "camel minima", 20);
    CHECK(s.summary == "condensed");
    CHECK(s.truncated);
    CHECK(s.summarized_bytes <= 20);
    auto prompt = testing::joined(hx.captured()[0].messages);
    CHECK(prompt.find("camel minima") != std::string::npos);
    CHECK(prompt.find("<script>") == std::string::npos);
    CHECK_THROWS_AS(process_content(*hx.session, pages, "not a url", "c", 10), PreconditionError);
  }

  TEST_CASE("registry: gated run_cmd, blocked reply and tool events") {
    TempDir tmp;
    auto registry = make_standard_tools(ToolboxConfig{});
    CHECK(registry.contains("run_cmd"));
    CHECK(registry.contains("write_code"));
    CHECK_FALSE(registry.contains("web_search"));
    testing::Harness hx({say("[YES]"), say("[NO] dangerous")});
    RunState state;
    state.workspace = tmp.path().string();
    ToolContext ctx{*hx.session, state, tmp.path()};
    auto ok = invoke_tool(registry, {"c1", "run_cmd", {{"command", "echo hello"}}}, ctx);
    CHECK(ok.role == Role::tool);
    CHECK(ok.tool_call_id == "c1");
    CHECK(ok.content.find("hello") != std::string::npos);
    CHECK(state.data["commands_run"] == 1);
    auto blocked = invoke_tool(registry, {"c2", "run_cmd", {{"command", "echo nope"}}}, ctx);
    CHECK(blocked.content == std::string(kUnsafePrefix) + "echo nope");
    auto unknown = invoke_tool(registry, {"c3", "frobnicate", Json::object()}, ctx);
    CHECK(unknown.content.rfind("Error (", 0) == 0);
    auto escape = invoke_tool(registry, {"c4", "write_code", {{"path", "../evil.txt"}, {"content", "x"}}}, ctx);
    CHECK(escape.content.find("PathEscape") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path().parent_path() / "evil.txt"));
    CHECK(hx.events(EventKind::tool_call).size() == 4);
    CHECK(hx.events(EventKind::tool_result).size() == 4);
  }

  TEST_CASE("write_code with execute runs the interpreter through the gate") {
    TempDir tmp;
    auto registry = make_standard_tools(ToolboxConfig{});
    testing::Harness hx({say("[YES]")});
    RunState state;
    state.workspace = tmp.path().string();
    ToolContext ctx{*hx.session, state, tmp.path()};
    auto r = invoke_tool(registry, {"w", "write_code", {{"path", "go.sh"}, {"content", "echo ran\n"}, {"execute", true}}},
                         ctx);
    CHECK(r.content.find("ran") != std::string::npos);
    CHECK(state.data["artifact_origin"]["go.sh"] == "tool");
  }
}
