#include "cotphq/markers.hpp"
#include "cotphq/prompts.hpp"
#include "cotphq/stage_schema.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cotphq;

namespace {

Transcript sample() {
    Transcript t;
    t.participant_id = "S1";
    t.turns = {{Speaker::Interviewer, "how are you"}, {Speaker::Participant, "not great, I barely sleep"}};
    return t;
}

AssessmentRecord prior_through(Stage last, Verdict verdict = Verdict::Depressed) {
    AssessmentRecord r;
    r.emotion = EmotionProfile{{{"sadness", Intensity::High, Polarity::Negative, EmotionSource::Health, "barely sleep"}}};
    if (last == Stage::Emotion) return r;
    r.classification = ClassificationResult{verdict, "why", 0.9};
    if (last == Stage::Classification) return r;
    r.reasoning = ReasoningReport{branch_for(verdict), {{FactorDimension::Biological, "sleep", "barely sleep"}}};
    return r;
}

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("builtin templates are complete") {
    const auto t = TemplateSet::defaults();
    for (const auto& name : TemplateSet::required_names()) CHECK(t.contains(name));
    CHECK_THROWS_AS(t.get("nope"), TemplateNotFound);
}

TEST_CASE("substitute") {
    CHECK(substitute("a {{ x }} b {{y}}\n\n", {{"x", "1"}, {"y", "{{z}}"}}) == "a 1 b {{z}}");
    CHECK_THROWS_AS(substitute("{{missing}}", {}), TemplateError);
    CHECK_THROWS_AS(substitute("{{open", {}), TemplateError);
}

TEST_CASE("participant-only rendering and truncation") {
    const auto t = sample();
    CHECK(transcript_for_prompt(t, {true, 1000}) == "Participant: not great, I barely sleep");
    CHECK(transcript_for_prompt(t, {false, 1000}) ==
          "Interviewer: how are you\nParticipant: not great, I barely sleep");
    const auto cut = transcript_for_prompt(t, {true, 12});
    CHECK(cut == "[Transcript truncated: showing the final 12 of 38 characters.]\nbarely sleep");

    Transcript only_interviewer;
    only_interviewer.participant_id = "I";
    only_interviewer.turns = {{Speaker::Interviewer, "hello?"}};
    CHECK_THROWS_AS(transcript_for_prompt(only_interviewer, {}), EmptyTranscript);
}

TEST_CASE("truncation never splits a UTF-8 sequence") {
    Transcript t;
    t.participant_id = "U";
    t.turns = {{Speaker::Participant, "caf\xC3\xA9 \xC3\xA9t\xC3\xA9"}};
    for (std::size_t budget = 1; budget < 20; ++budget) {
        const auto s = transcript_for_prompt(t, {true, budget});
        const auto body = s.substr(s.find('\n') == std::string::npos ? 0 : s.find('\n') + 1);
        CHECK((static_cast<unsigned char>(body.front()) & 0xC0) != 0x80);
    }
}

TEST_CASE("stage prompts carry schema markers and prior outputs") {
    const auto t = sample();
    const auto templates = TemplateSet::defaults();

    const auto emotion = render_stage_prompt(Stage::Emotion, t, {}, templates);
    CHECK(markers::find(emotion.user_text, "schema") == "emotion.v1");
    CHECK(markers::find(emotion.user_text, "mode") == "cot");
    CHECK(emotion.user_text.find("internal_thoughts") != std::string::npos);
    CHECK(emotion.user_text.find("barely sleep") != std::string::npos);
    CHECK(emotion.user_text.find("how are you") == std::string::npos);
    CHECK_FALSE(emotion.system_text.empty());

    const auto cls = render_stage_prompt(Stage::Classification, t, prior_through(Stage::Emotion), templates);
    CHECK(cls.user_text.find("\"1_emotion\"") != std::string::npos);

    const auto contributing =
        render_stage_prompt(Stage::Reasoning, t, prior_through(Stage::Classification), templates);
    CHECK(contributing.user_text.find("functional_impairment") != std::string::npos);
    const auto protective = render_stage_prompt(
        Stage::Reasoning, t, prior_through(Stage::Classification, Verdict::NotDepressed), templates);
    CHECK(protective.user_text.find("contributing") == std::string::npos);
    CHECK(protective.user_text.find("healthy_habits") != std::string::npos);

    const auto sev = render_stage_prompt(Stage::Severity, t, prior_through(Stage::Reasoning), templates);
    CHECK(sev.user_text.find("- Moderately Severe: 15-19") != std::string::npos);
    CHECK(sev.user_text.find("\"3_reasoning\"") != std::string::npos);
}

TEST_CASE("stage prompts refuse to skip ahead") {
    const auto t = sample();
    const auto templates = TemplateSet::defaults();
    CHECK_THROWS_AS(render_stage_prompt(Stage::Classification, t, {}, templates), MissingPriorStage);
    try {
        render_stage_prompt(Stage::Severity, t, prior_through(Stage::Emotion), templates);
        FAIL("expected throw");
    } catch (const MissingPriorStage& e) {
        CHECK(e.missing() == Stage::Classification);
    }
}

TEST_CASE("standard prompt asks for verdict and score in one call") {
    const auto p = render_standard_prompt(sample(), TemplateSet::defaults());
    CHECK(p.mode == PromptMode::Standard);
    CHECK(markers::find(p.user_text, "mode") == "standard");
    CHECK(p.user_text.find("\"verdict\"") != std::string::npos);
    CHECK(p.user_text.find("prior") == std::string::npos);
}

TEST_CASE("repair prompt restates schema and keeps a single marker") {
    const auto original = render_stage_prompt(Stage::Emotion, sample(), {}, TemplateSet::defaults());
    const auto repair = render_repair_prompt(original, "schema violation at signals[0].intensity: bad",
                                             TemplateSet::defaults());
    CHECK(repair.user_text.find("signals[0].intensity") != std::string::npos);
    CHECK(repair.user_text.find("\"$schema\"") != std::string::npos);
    std::size_t markers_seen = 0;
    for (auto pos = repair.user_text.find("[schema: "); pos != std::string::npos;
         pos = repair.user_text.find("[schema: ", pos + 1))
        ++markers_seen;
    CHECK(markers_seen == 1);
}

TEST_CASE("template overrides from a directory") {
    testing::TempDir dir;
    testing::write_text(dir / "system.txt", "Be terse.\n");
    const auto t = TemplateSet::load(dir.path());
    CHECK(t.get("system") == "Be terse.\n");
    CHECK(t.contains("severity"));
    const auto p = render_standard_prompt(sample(), t);
    CHECK(p.system_text == "Be terse.");
    CHECK_THROWS_AS(TemplateSet::load(dir / "absent"), TemplateNotFound);
}

}
