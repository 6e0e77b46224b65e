#include <fstream>

#include "cotphq/stage_schema.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cotphq;
using nlohmann::json;

TEST_SUITE("schema") {

TEST_CASE("json objects are pulled out of chatty replies") {
    const auto objs = extract_json_objects(
        "Sure! ```json\n{\"a\": \"}{\", \"b\": {\"c\": 1}}\n``` and also {not json} then {\"d\":2}");
    REQUIRE(objs.size() == 2);
    CHECK(objs[0]["a"] == "}{");
    CHECK(objs[1]["d"] == 2);
    CHECK(extract_json_objects("no braces here").empty());
}

TEST_CASE("emotion parsing folds enum spelling") {
    const auto v = std::get<EmotionProfile>(parse_stage_output(
        Stage::Emotion,
        R"({"signals":[{"kind":"guilt","intensity":"HIGH","polarity":"Negative","source":"Internal Thoughts","evidence":"x"}]})"));
    REQUIRE(v.signals.size() == 1);
    CHECK(v.signals[0].intensity == Intensity::High);
    CHECK(v.signals[0].source == EmotionSource::InternalThoughts);
}

TEST_CASE("violations name the offending path") {
    try {
        parse_stage_output(Stage::Emotion,
                           R"({"signals":[{"kind":"a","intensity":"huge","polarity":"negative","source":"health","evidence":"x"}]})");
        FAIL("expected throw");
    } catch (const SchemaViolation& e) {
        CHECK(e.path() == "signals[0].intensity");
    }
    CHECK_THROWS_AS(parse_stage_output(Stage::Classification, "I think they are depressed."), NoJsonFound);
    CHECK_THROWS_AS(parse_stage_output(Stage::Classification, R"({"verdict":"depressed","rationale":"r","confidence":3})"),
                    SchemaViolation);
}

TEST_CASE("first conforming candidate wins") {
    const auto v = std::get<ClassificationResult>(parse_stage_output(
        Stage::Classification, R"({"note":"draft"} {"verdict":"not depressed","rationale":"fine"})"));
    CHECK(v.verdict == Verdict::NotDepressed);
    CHECK_FALSE(v.confidence.has_value());
}

TEST_CASE("reasoning branch and dimensions are enforced") {
    const std::string contributing =
        R"({"branch":"contributing","factors":[{"dimension":"social","description":"d","evidence":"e"}]})";
    CHECK_NOTHROW(parse_stage_output(Stage::Reasoning, contributing, {Branch::Contributing, false}));
    CHECK_THROWS_AS(parse_stage_output(Stage::Reasoning, contributing, {Branch::Protective, false}),
                    SchemaViolation);
    CHECK_THROWS_AS(
        parse_stage_output(Stage::Reasoning,
                           R"({"branch":"protective","factors":[{"dimension":"social","description":"d","evidence":"e"}]})"),
        SchemaViolation);
    CHECK_THROWS_AS(parse_stage_output(Stage::Reasoning, R"({"branch":"protective","factors":[]})"),
                    SchemaViolation);
}

TEST_CASE("severity rounds, recomputes band and range-checks") {
    auto sev = [](const std::string& raw, bool verdict = false) {
        return std::get<SeverityOutput>(parse_stage_output(Stage::Severity, raw, {std::nullopt, verdict}));
    };
    CHECK(sev(R"({"phq8_score": 9.5})").assessment.phq8_score == 10);
    CHECK(sev(R"({"phq8_score": 9.4})").assessment.band == Band::Mild);
    CHECK(sev(R"({"phq8_score": 14, "band": "Severe"})").assessment.band == Band::Moderate);
    CHECK(sev(R"({"phq8_score": 24.4})").assessment.phq8_score == 24);
    CHECK_THROWS_AS(sev(R"({"phq8_score": 24.5})"), StageScoreOutOfRange);
    CHECK_THROWS_AS(sev(R"({"phq8_score": -1})"), StageScoreOutOfRange);
    CHECK_THROWS_AS(sev(R"({"phq8_score": "12"})"), SchemaViolation);
    CHECK_THROWS_AS(sev(R"({"phq8_score": 12})", true), SchemaViolation);
    CHECK(sev(R"({"phq8_score": 12, "verdict": "depressed"})", true).verdict == Verdict::Depressed);
}

TEST_CASE("committed schema files match the code") {
    for (auto stage : kCotStages) {
        const auto path = std::filesystem::path(COTPHQ_SOURCE_DIR) / "schemas" /
                          (std::string(schema_id(stage)) + ".json");
        std::ifstream in(path);
        REQUIRE_MESSAGE(in, path.string());
        CHECK(json::parse(in) == schema_document(stage));
    }
}

TEST_CASE("records survive a JSON round trip") {
    AssessmentRecord r;
    r.participant_id = "P1";
    r.mode = PromptMode::Standard;
    r.model_id = "m";
    r.backend_id = "mock:x";
    r.repeat = 2;
    r.classification = ClassificationResult{Verdict::Depressed, "why", std::nullopt};
    r.severity = SeverityAssessment::from_score(7);
    r.raw_stage_outputs = {{Stage::Severity, 1, "{}"}, {Stage::Severity, 2, "{\"phq8_score\":7}"}};
    r.flags = {{Inconsistency::Kind::VerdictScoreMismatch, "d"}};
    r.prompt_tokens = 10;
    const auto back = record_from_json(to_json(r));
    CHECK(to_json(back) == to_json(r));
    CHECK(to_json(r)["schema"] == "cotphq.assessment.v1");
}

}
