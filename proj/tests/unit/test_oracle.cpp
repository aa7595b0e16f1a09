#include <atomic>

#include "doctest.h"
#include "regen/error.hpp"
#include "regen/oracle.hpp"
#include "regen/pipeline.hpp"

using namespace regen;

namespace {

template <class Fn>
ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIo;
}

OracleHandle transcript() { return OracleHandle::scripted_file(data_dir() / "transcripts" / "abrupt_stop.transcript"); }

OracleRequest abrupt_stop_proposal() {
  return {TemplateId::kEventProposal,
          {{"causal_graph", "['The ego-vehicle stopped abruptly']"}, {"effect", "The ego-vehicle stopped abruptly"}}};
}

}  // namespace

TEST_CASE("event proposal prompt carries the causal graph") {
  auto p = render_prompt(TemplateId::kEventProposal,
                         {{"causal_graph", "['ego-vehicle stopped abruptly']"}, {"effect", "ego-vehicle stopped abruptly"}});
  CHECK(p.find("Please provide a list of all the plausible scenarios that caused") != std::string::npos);
  CHECK(p.find("['ego-vehicle stopped abruptly']") != std::string::npos);
  CHECK(p.find("You are an expert in driving scenarios.") != std::string::npos);
}

TEST_CASE("property proposal prompt pluralizes the node name") {
  auto p = render_prompt(TemplateId::kPropertyProposal, {{"causal_graph", "['x']"},
                                                         {"entities_name", "['ego-vehicle', 'ambulance1']"},
                                                         {"node_name", "starting location"}});
  CHECK(p.find("possible starting locations") != std::string::npos);
}

TEST_CASE("unbound template variable is named") {
  try {
    render_prompt(TemplateId::kEventProposalPrior, {{"causal_graph", "['x']"}, {"effect", "x"}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPrecondition);
    CHECK(std::string(e.what()).find("prior") != std::string::npos);
  }
}

TEST_CASE("scripted replay returns the recorded causes") {
  auto oracle = transcript();
  auto r = oracle.query(abrupt_stop_proposal());
  auto causes = parse_name_desc_list(r.text);
  std::vector<std::string> names;
  for (const auto& c : causes) names.push_back(c.name);
  for (const char* want : {"a jaywalker walked in front", "animal on the road",
                           "emergency vehicle approaching from behind", "debris in the road"}) {
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  }
  CHECK(oracle.query(abrupt_stop_proposal()).text == r.text);
}

TEST_CASE("transcript miss names template and hash") {
  auto oracle = transcript();
  OracleRequest req{TemplateId::kEventProposal, {{"causal_graph", "['nothing']"}, {"effect", "nothing"}}};
  try {
    oracle.query(req);
    FAIL("expected a miss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTranscriptMiss);
    CHECK(std::string(e.what()).find("event_proposal") != std::string::npos);
    CHECK(std::string(e.what()).find(req.hash()) != std::string::npos);
  }
  REQUIRE(oracle.misses().size() == 1);
  CHECK(oracle.misses()[0].vars == req.vars);
}

TEST_CASE("scripted backend never touches the transport") {
  std::atomic<int> calls{0};
  Transport spy = [&](const HttpRequest&) {
    ++calls;
    return HttpResult{};
  };
  auto oracle = OracleHandle::scripted_file(data_dir() / "transcripts" / "abrupt_stop.transcript", spy);
  oracle.query(abrupt_stop_proposal());
  CHECK_THROWS(oracle.query({TemplateId::kEventProposal, {{"causal_graph", "[]"}, {"effect", "?"}}}));
  CHECK(calls == 0);
}

TEST_CASE("remote backend speaks chat completions with zero temperature") {
  HttpRequest seen;
  Transport fake = [&](const HttpRequest& req) {
    seen = req;
    return HttpResult{200, R"({"choices":[{"message":{"content":"<Answer>\n- chosen: ['sedan']\n</Answer>"}}]})", ""};
  };
  auto oracle = OracleHandle::remote({"http://oracle.test/v1/chat", "some-model", "k", 3, std::chrono::milliseconds(0)}, fake);
  auto r = oracle.query(abrupt_stop_proposal());
  CHECK(r.text.find("sedan") != std::string::npos);
  auto body = Json::parse(seen.body);
  CHECK(body["model"] == "some-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["top_p"] == 0.0);
  CHECK(body["messages"][0]["content"] == abrupt_stop_proposal().prompt());
}

TEST_CASE("remote backend retries transport failures three times") {
  int calls = 0;
  Transport down = [&](const HttpRequest&) {
    ++calls;
    return HttpResult{503, "", ""};
  };
  auto oracle = OracleHandle::remote({"http://oracle.test", "m", "", 3, std::chrono::milliseconds(0)}, down);
  CHECK(kind_of([&] { oracle.query(abrupt_stop_proposal()); }) == ErrorKind::kOracleTransport);
  CHECK(calls == 3);
}

TEST_CASE("remote backend does not retry unparseable replies") {
  int calls = 0;
  Transport garbled = [&](const HttpRequest&) {
    ++calls;
    return HttpResult{200, "not json", ""};
  };
  auto oracle = OracleHandle::remote({"http://oracle.test", "m", "", 3, std::chrono::milliseconds(0)}, garbled);
  CHECK(kind_of([&] { oracle.query(abrupt_stop_proposal()); }) == ErrorKind::kOracleParse);
  CHECK(calls == 1);
}

TEST_CASE("parse_answer reads the last answer block") {
  auto v = parse_value_lists("Thinking <Answer>- chosen: ['sedan']</Answer> more\n<Answer>\n- chosen: ['ambulance']\n</Answer>");
  REQUIRE(v.size() == 1);
  CHECK(v[0].first == "chosen");
  CHECK(v[0].second == std::vector<std::string>{"ambulance"});
}

TEST_CASE("empty answer block parses to an empty payload") {
  CHECK(parse_name_desc_list("<Answer></Answer>").empty());
  CHECK(parse_value_lists("<Answer></Answer>").empty());
}

TEST_CASE("reasoning preamble does not change the parse") {
  std::string block = "<Answer>\n- debris ahead: Debris lies in the lane.\n- **animal on the road**: A deer.\n</Answer>";
  CHECK(parse_name_desc_list("Let's think step by step.\nSome reasoning.\n" + block) == parse_name_desc_list(block));
  CHECK(parse_name_desc_list(block)[1].name == "animal on the road");
}

TEST_CASE("missing or malformed answers are parse errors") {
  CHECK(kind_of([] { parse_name_desc_list("no block here"); }) == ErrorKind::kOracleParse);
  CHECK(kind_of([] { parse_value_lists("<Answer>\nthis is prose\n</Answer>"); }) == ErrorKind::kOracleParse);
}

TEST_CASE("formatted payloads reparse to themselves") {
  NameDescList nd{{"police chase", "A police car chases a suspect."}, {"road block", "Police block the road."}};
  CHECK(parse_name_desc_list(format_answer(nd)) == nd);
  ValueLists vl{{"ambulance1", {"behind the ego-vehicle on adjacent lane"}}, {"sedan1", {}}};
  CHECK(parse_value_lists(format_answer(vl)) == vl);
  GroundingAnswer g;
  g.states = {{"ego-vehicle", "Ego Braking", "is_braking(agent_name)"}};
  g.stages = {{{"ego-vehicle", "Ego Braking"}}};
  CHECK(parse_grounding(format_answer(g)) == g);
}

TEST_CASE("transcript serialization round-trips") {
  auto records = parse_transcript(read_file(data_dir() / "transcripts" / "abrupt_stop.transcript"), "abrupt_stop");
  CHECK(records.size() > 10);
  auto again = parse_transcript(serialize_transcript(records), "again");
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].vars == records[i].vars);
    CHECK(again[i].response == records[i].response);
  }
}
