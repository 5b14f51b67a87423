#include <fstream>

#include <doctest.h>

#include "sciagent/errors.hpp"
#include "sciagent/graph.hpp"
#include "sciagent/transcript.hpp"
#include "support.hpp"

using namespace sciagent;
using testing::say;
using testing::TempDir;

namespace {

AgentGraph counting_graph() {
  AgentGraph g("count");
  g.add_node("a", [](RunState& s, Session&) { s.data["trail"].push_back("a"); });
  g.add_node("b", [](RunState& s, Session&) {
    s.data["trail"].push_back("b");
    s.bump("b", 10);
  });
  g.add_edge("a", "b");
  g.add_conditional_edge("b", {"b", kEndNode}, [](const RunState& s) { return s.count("b") < 3 ? NodeId("b") : kEndNode; });
  g.set_entry("a");
  return g;
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("transcript sequences are gapless and the file round-trips") {
    TempDir tmp;
    auto file = tmp.path() / "t.ndjson";
    {
      auto t = Transcript::open(file, "r1", logical_clock());
      t.append(EventKind::node_enter, {{"node", "x"}});
      t.append(EventKind::node_exit, {{"node", "x"}});
    }
    auto t2 = Transcript::open(file, "r1", logical_clock());
    auto e = t2.append(EventKind::error, {{"message", "m"}});
    CHECK(e.sequence == 3);
    CHECK(e.timestamp == "logical:3");
    auto events = read_transcript(file);
    REQUIRE(events.size() == 3);
    CHECK(events[0].kind == EventKind::node_enter);
    CHECK(serialize_event(events[2]) == serialize_event(e));
  }

  TEST_CASE("corrupt transcript lines are rejected") {
    TempDir tmp;
    auto file = tmp.path() / "t.ndjson";
    std::ofstream(file) << "{not json}\n";
    CHECK_THROWS_AS(read_transcript(file), CorruptSnapshot);
  }

  TEST_CASE("wall clock stamps look like ISO-8601") {
    auto ts = wall_clock()(1);
    CHECK(ts.size() >= 20);
    CHECK(ts[4] == '-');
    CHECK(ts.find('T') != std::string::npos);
  }

  TEST_CASE("graph validation catches structural mistakes") {
    AgentGraph g("bad");
    g.add_node("a", [](RunState&, Session&) {});
    g.set_entry("a");
    CHECK_THROWS_AS(g.validate(), InvalidGraph);  // no outgoing edge
    g.add_edge("a", "missing");
    CHECK_THROWS_AS(g.validate(), InvalidGraph);
    AgentGraph h("orphan");
    h.add_node("a", [](RunState&, Session&) {}).add_node("z", [](RunState&, Session&) {});
    h.add_edge("a", kEndNode).add_edge("z", kEndNode).set_entry("a");
    CHECK_THROWS_AS(h.validate(), InvalidGraph);
    CHECK_THROWS_AS(h.add_node("a", [](RunState&, Session&) {}), InvalidGraph);
  }

  TEST_CASE("run_graph follows edges and logs node events") {
    testing::Harness hx({});
    RunState s;
    s.run_id = "r";
    auto out = run_graph(counting_graph(), s, *hx.session);
    CHECK(out.status == RunStatus::succeeded);
    CHECK(out.data["trail"] == Json::array({"a", "b", "b", "b"}));
    CHECK(hx.events(EventKind::node_enter).size() == 4);
    CHECK(hx.events(EventKind::node_exit).size() == 4);
  }

  TEST_CASE("handler failures come back as a failed state") {
    AgentGraph g("boom");
    g.add_node("a", [](RunState&, Session&) { throw FormalizationFailed("nope"); });
    g.add_edge("a", kEndNode).set_entry("a");
    testing::Harness hx({});
    auto out = run_graph(g, RunState{}, *hx.session);
    CHECK(out.status == RunStatus::failed);
    CHECK(out.data["error"]["type"] == "FormalizationFailed");
    CHECK_THROWS_AS(throw_if_failed(out), FormalizationFailed);
    CHECK(hx.events(EventKind::error).size() == 1);
  }

  TEST_CASE("state transitions are one-way") {
    RunState s;
    s.finish(RunStatus::succeeded);
    CHECK_THROWS(s.finish(RunStatus::failed));
    RunState c;
    c.bump("x", 1);
    CHECK_THROWS_AS(c.bump("x", 1), LimitExceeded);
  }

  TEST_CASE("state serialization is stable") {
    RunState s;
    s.run_id = "r";
    s.conversation = {ChatMessage::user("q")};
    s.counters["k"] = 2;
    s.data = {{"z", 1}, {"a", {1, 2}}};
    auto text = serialize_state(s);
    CHECK(deserialize_state(text) == s);
    CHECK(serialize_state(deserialize_state(text)) == text);
    CHECK_THROWS_AS(deserialize_state("{"), CorruptSnapshot);
  }

  TEST_CASE("checkpoints resume mid-run and honour steering") {
    TempDir tmp;
    CheckpointStore store(tmp.path() / "ckpt");
    testing::Harness hx({});
    hx.session->set_checkpoints(&store);
    RunState s;
    s.run_id = "r";
    RunOptions stop;
    stop.stop_after_checkpoint = 2;
    auto partial = run_graph(counting_graph(), s, *hx.session, stop);
    CHECK(partial.status == RunStatus::running);
    CHECK(store.latest() == 2);
    auto ck = store.load(2);
    CHECK(ck.node == "b");
    auto done = resume(counting_graph(), ck, *hx.session, std::string("go faster"));
    CHECK(done.status == RunStatus::succeeded);
    CHECK(done.data["trail"] == Json::array({"a", "b", "b", "b"}));
    REQUIRE(done.data["steering"].size() == 1);
    CHECK(steering_messages(done).front().content == "go faster");
    auto steer = hx.events(EventKind::steering);
    REQUIRE(steer.size() == 1);
    CHECK(steer[0].payload["message"] == "go faster");
    CHECK_THROWS_AS(store.load(99), UnknownCheckpoint);
  }

  TEST_CASE("review loop: n_max rounds on rejection, early exit on approval") {
    for (bool approve_second : {false, true}) {
      AgentGraph g("loop");
      g.add_node("start", [](RunState&, Session&) {});
      auto entry = add_review_loop(
          g,
          ReviewLoop{"r",
                     [](RunState& s, Session& session) {
                       auto c = session.call(std::vector<ChatMessage>{ChatMessage::user("review")});
                       s.data["reviews"] = s.data.value("reviews", 0) + 1;
                       return c.message.content;
                     },
                     [](RunState& s, Session&) { s.data["revisions"] = s.data.value("revisions", 0) + 1; }},
          kEndNode);
      g.add_edge("start", entry).set_entry("start");
      std::vector<ChatMessage> script{say("no"), say(approve_second ? "ok [APPROVED]" : "no"), say("no"), say("no")};
      testing::Harness hx(script, LoopLimits{4, 1});
      auto out = run_graph(g, RunState{}, *hx.session);
      CHECK(out.status == RunStatus::succeeded);
      CHECK(out.data["reviews"] == (approve_second ? 2 : 4));
      CHECK(out.data.value("revisions", 0) == (approve_second ? 1 : 4));
    }
  }

  TEST_CASE("limits validation") {
    CHECK_NOTHROW(LoopLimits{0, 1}.validate());
    CHECK_THROWS(LoopLimits{-1, 1}.validate());
    CHECK_THROWS(LoopLimits{1, 0}.validate());
  }

  TEST_CASE("marker detection is a case-sensitive substring test") {
    CHECK(detect_marker("looks good [APPROVED]", kApprovedMarker));
    CHECK_FALSE(detect_marker("looks good [approved]", kApprovedMarker));
    CHECK_THROWS(detect_marker("x", ""));
  }
}
