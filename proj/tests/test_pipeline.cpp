#include <thread>

#include "cotphq/markers.hpp"
#include "cotphq/pipeline.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cotphq;
using testing::cot_replies;

namespace {

Transcript transcript(std::string id = "T1") {
    Transcript t;
    t.participant_id = std::move(id);
    t.turns = {{Speaker::Interviewer, "how are you"}, {Speaker::Participant, "tired all the time"}};
    return t;
}

std::vector<std::string> schemas_called(const MockBackend& mock) {
    std::vector<std::string> out;
    for (const auto& c : mock.calls()) out.push_back(markers::find(c.user_text, "schema").value_or("?"));
    return out;
}

struct VectorSink : RecordSink {
    std::vector<AssessmentRecord> records;
    void write(const AssessmentRecord& r) override { records.push_back(r); }
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("chain-of-thought runs four stages in order") {
    MockBackend mock(MockScript::from_queue(cot_replies(true, 16)));
    const auto r = run_pipeline(transcript(), PromptMode::ChainOfThought, mock, {});
    CHECK(schemas_called(mock) ==
          std::vector<std::string>{"emotion.v1", "classification.v1", "reasoning.v1", "severity.v1"});
    CHECK(r.ok());
    CHECK(r.reasoning->branch == Branch::Contributing);
    CHECK(r.severity->band == Band::ModeratelySevere);
    CHECK(r.raw_stage_outputs.size() == mock.call_count());
    CHECK(r.flags.empty());
    CHECK(r.backend_id == "mock:mock");
}

TEST_CASE("prior stage outputs reach later prompts") {
    MockBackend mock(MockScript::from_queue(cot_replies(false, 3)));
    run_pipeline(transcript(), PromptMode::ChainOfThought, mock, {});
    const auto calls = mock.calls();
    CHECK(calls[3].user_text.find("\"2_classification\"") != std::string::npos);
    CHECK(calls[2].user_text.find("protective factor analysis") != std::string::npos);
}

TEST_CASE("standard mode is a single call") {
    MockBackend mock(MockScript::from_queue({R"({"verdict":"depressed","phq8_score":13})"}));
    const auto r = run_pipeline(transcript(), PromptMode::Standard, mock, {});
    CHECK(mock.call_count() == 1);
    CHECK(r.classification->verdict == Verdict::Depressed);
    CHECK(r.severity->phq8_score == 13);
    CHECK_FALSE(r.emotion.has_value());
    CHECK_FALSE(r.reasoning.has_value());
}

TEST_CASE("verdict and score disagreement is flagged, not corrected") {
    MockBackend a(MockScript::from_queue(cot_replies(true, 4)));
    const auto r1 = run_pipeline(transcript(), PromptMode::ChainOfThought, a, {});
    REQUIRE(r1.flags.size() == 1);
    CHECK(r1.severity->phq8_score == 4);
    CHECK(r1.classification->verdict == Verdict::Depressed);

    MockBackend b(MockScript::from_queue(cot_replies(false, 10)));
    CHECK(run_pipeline(transcript(), PromptMode::ChainOfThought, b, {}).flags.size() == 1);
}

TEST_CASE("one repair retry rescues a malformed stage") {
    auto replies = cot_replies(true, 12);
    replies.insert(replies.begin() + 1, "verdict: depressed (sorry, no json)");
    MockBackend mock(MockScript::from_queue(replies));
    const auto r = run_pipeline(transcript(), PromptMode::ChainOfThought, mock, {});
    CHECK(mock.call_count() == 5);
    CHECK(r.raw_stage_outputs.size() == 5);
    CHECK(r.raw_stage_outputs[1].attempt == 1);
    CHECK(r.raw_stage_outputs[2].attempt == 2);
    CHECK(r.raw_stage_outputs[2].stage == Stage::Classification);
    const auto repair = mock.calls()[2].user_text;
    CHECK(repair.find("could not be accepted") != std::string::npos);
    CHECK(markers::find(repair, "schema") == "classification.v1");
}

TEST_CASE("branch mismatch goes through repair") {
    auto replies = cot_replies(true, 12);
    replies.insert(replies.begin() + 2, testing::stage_json_reasoning(false));
    MockBackend mock(MockScript::from_queue(replies));
    const auto r = run_pipeline(transcript(), PromptMode::ChainOfThought, mock, {});
    CHECK(r.reasoning->branch == Branch::Contributing);
    CHECK(mock.call_count() == 5);
}

TEST_CASE("second rejection raises StageParseFailure") {
    MockBackend mock(MockScript::from_queue({testing::stage_json_emotion(), "{}", "{\"verdict\":\"maybe\"}"}));
    try {
        run_pipeline(transcript(), PromptMode::ChainOfThought, mock, {});
        FAIL("expected throw");
    } catch (const StageParseFailure& e) {
        CHECK(e.stage() == Stage::Classification);
    }
    CHECK(mock.call_count() == 3);
}

TEST_CASE("assess turns failures into persisted error records") {
    VectorSink sink;
    MockBackend mock(MockScript::from_queue({testing::stage_json_emotion(), "{}", "{}"}));
    Pipeline p(mock, TemplateSet::defaults(), {}, &sink);
    const auto r = p.assess(transcript(), PromptMode::ChainOfThought);
    CHECK_FALSE(r.ok());
    CHECK(r.error_kind == "StageParseFailure");
    CHECK(r.emotion.has_value());
    CHECK(r.raw_stage_outputs.size() == 3);
    REQUIRE(sink.records.size() == 1);
    CHECK(to_json(sink.records[0]) == to_json(r));
}

TEST_CASE("backend errors end the assessment without retrying stages") {
    MockScript script;
    script.queue = {MockReply::ok(testing::stage_json_emotion()),
                    MockReply::fail(MockReply::Failure::RateLimited, "slow down")};
    MockBackend mock(script);
    Pipeline p(mock, TemplateSet::defaults(), {});
    CHECK_THROWS_AS(p.run(transcript(), PromptMode::ChainOfThought), RateLimited);

    MockBackend again(script);
    const auto r = Pipeline(again, TemplateSet::defaults(), {}).assess(transcript(), PromptMode::ChainOfThought);
    CHECK(r.error_kind == "BackendError");
    CHECK(again.call_count() == 2);
}

TEST_CASE("stop requests cancel before the next call") {
    std::stop_source stop;
    stop.request_stop();
    MockBackend mock(MockScript::from_queue(cot_replies(true, 12)));
    Pipeline p(mock, TemplateSet::defaults(), {});
    CHECK_THROWS_AS(p.assess(transcript(), PromptMode::ChainOfThought, stop.get_token()), Cancelled);
    CHECK(mock.call_count() == 0);
}

TEST_CASE("requests carry model, decoding settings and repeat seed") {
    MockBackend mock(MockScript::from_queue({R"({"verdict":"not_depressed","phq8_score":2})"}));
    PipelineConfig cfg;
    cfg.model_id = "some-model";
    cfg.temperature = 0.3;
    cfg.max_tokens = 512;
    cfg.seed = 40;
    cfg.repeat = 2;
    Pipeline(mock, TemplateSet::defaults(), cfg).run(transcript(), PromptMode::Standard);
    const auto c = mock.calls().at(0);
    CHECK(c.model_id == "some-model");
    CHECK(c.temperature == 0.3);
    CHECK(c.max_tokens == 512);
    CHECK(c.seed == 42);
}

TEST_CASE("jsonl writer keeps lines intact under concurrency") {
    testing::TempDir dir;
    const auto path = dir / "records.jsonl";
    {
        JsonlRecordWriter writer(path);
        std::vector<std::jthread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&writer, t] {
                for (int i = 0; i < 50; ++i) {
                    AssessmentRecord r;
                    r.participant_id = "T" + std::to_string(t) + "-" + std::to_string(i);
                    r.raw_stage_outputs = {{Stage::Emotion, 1, std::string(2000, 'x')}};
                    writer.write(r);
                }
            });
        }
    }
    const auto records = read_records(path);
    CHECK(records.size() == 400);
    CHECK(read_records(dir / "absent.jsonl").empty());
}

}
