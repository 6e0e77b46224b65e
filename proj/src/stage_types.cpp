#include "cotphq/stage_types.hpp"

#include <stdexcept>

#include "cotphq/stage_schema.hpp"

namespace cotphq {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
std::string_view lookup(const std::array<VocabEntry<E>, N>& vocab, E v) noexcept {
    for (const auto& e : vocab) {
        if (e.value == v) return e.token;
    }
    return "?";
}

}  // namespace

std::string_view stage_name(Stage s) noexcept {
    switch (s) {
        case Stage::Emotion: return "emotion";
        case Stage::Classification: return "classification";
        case Stage::Reasoning: return "reasoning";
        case Stage::Severity: return "severity";
    }
    return "?";
}

std::string_view schema_id(Stage s) noexcept {
    switch (s) {
        case Stage::Emotion: return "emotion.v1";
        case Stage::Classification: return "classification.v1";
        case Stage::Reasoning: return "reasoning.v1";
        case Stage::Severity: return "severity.v1";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
    for (auto s : kCotStages) {
        if (stage_name(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view mode_name(PromptMode m) noexcept {
    return m == PromptMode::Standard ? "standard" : "cot";
}

std::optional<PromptMode> parse_mode(std::string_view name) {
    if (name == "standard") return PromptMode::Standard;
    if (name == "cot") return PromptMode::ChainOfThought;
    return std::nullopt;
}

std::string_view token_of(Intensity v) noexcept { return lookup(kIntensityVocab, v); }
std::string_view token_of(Polarity v) noexcept { return lookup(kPolarityVocab, v); }
std::string_view token_of(EmotionSource v) noexcept { return lookup(kSourceVocab, v); }
std::string_view token_of(Verdict v) noexcept { return lookup(kVerdictVocab, v); }
std::string_view token_of(Branch v) noexcept { return lookup(kBranchVocab, v); }
std::string_view token_of(FactorDimension v) noexcept {
    for (const auto& e : kContributingVocab) {
        if (e.value == v) return e.token;
    }
    return lookup(kProtectiveVocab, v);
}

Branch branch_for(Verdict v) noexcept {
    return v == Verdict::Depressed ? Branch::Contributing : Branch::Protective;
}

bool dimension_allowed(Branch branch, FactorDimension dim) noexcept {
    const auto in = [dim](const auto& vocab) {
        for (const auto& e : vocab) {
            if (e.value == dim) return true;
        }
        return false;
    };
    return branch == Branch::Contributing ? in(kContributingVocab) : in(kProtectiveVocab);
}

SeverityAssessment SeverityAssessment::from_score(int score) {
    return {score, band_of(score)};
}

std::string_view inconsistency_name(Inconsistency::Kind k) noexcept {
    switch (k) {
        case Inconsistency::Kind::VerdictScoreMismatch: return "VerdictScoreMismatch";
    }
    return "?";
}

json to_json(const EmotionProfile& v) {
    json signals = json::array();
    for (const auto& s : v.signals) {
        signals.push_back({{"kind", s.kind},
                           {"intensity", token_of(s.intensity)},
                           {"polarity", token_of(s.polarity)},
                           {"source", token_of(s.source)},
                           {"evidence", s.evidence}});
    }
    return {{"signals", std::move(signals)}};
}

json to_json(const ClassificationResult& v) {
    json j = {{"verdict", token_of(v.verdict)}, {"rationale", v.rationale}};
    if (v.confidence) j["confidence"] = *v.confidence;
    return j;
}

json to_json(const ReasoningReport& v) {
    json factors = json::array();
    for (const auto& f : v.factors) {
        factors.push_back({{"dimension", token_of(f.dimension)},
                           {"description", f.description},
                           {"evidence", f.evidence}});
    }
    return {{"branch", token_of(v.branch)}, {"factors", std::move(factors)}};
}

json to_json(const SeverityAssessment& v) {
    return {{"phq8_score", v.phq8_score}, {"band", band_key(v.band)}};
}

json to_json(const AssessmentRecord& r) {
    json raw = json::array();
    for (const auto& o : r.raw_stage_outputs) {
        raw.push_back({{"stage", stage_name(o.stage)}, {"attempt", o.attempt}, {"text", o.text}});
    }
    json flags = json::array();
    for (const auto& f : r.flags) {
        flags.push_back({{"kind", inconsistency_name(f.kind)}, {"detail", f.detail}});
    }
    json j = {
        {"schema", kRecordSchema},
        {"participant_id", r.participant_id},
        {"mode", mode_name(r.mode)},
        {"model_id", r.model_id},
        {"backend_id", r.backend_id},
        {"repeat", r.repeat},
        {"status", r.ok() ? "ok" : "failed"},
        {"emotion", r.emotion ? to_json(*r.emotion) : json(nullptr)},
        {"classification", r.classification ? to_json(*r.classification) : json(nullptr)},
        {"reasoning", r.reasoning ? to_json(*r.reasoning) : json(nullptr)},
        {"severity", r.severity ? to_json(*r.severity) : json(nullptr)},
        {"flags", std::move(flags)},
        {"raw_stage_outputs", std::move(raw)},
        {"usage",
         {{"prompt_tokens", r.prompt_tokens},
          {"completion_tokens", r.completion_tokens},
          {"cached_calls", r.cached_calls}}},
        {"started_at", r.started_at},
        {"finished_at", r.finished_at},
    };
    if (!r.ok()) {
        j["error_kind"] = r.error_kind;
        j["error"] = r.error;
    }
    return j;
}

AssessmentRecord record_from_json(const json& j) {
    if (j.value("schema", std::string{}) != kRecordSchema) {
        throw std::runtime_error("not a " + std::string(kRecordSchema) + " record");
    }
    AssessmentRecord r;
    r.participant_id = j.at("participant_id").get<std::string>();
    const auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw std::runtime_error("record has unknown mode");
    r.mode = *mode;
    r.model_id = j.at("model_id").get<std::string>();
    r.backend_id = j.value("backend_id", std::string{});
    r.repeat = j.value("repeat", 0);
    r.status = j.at("status").get<std::string>() == "ok" ? RecordStatus::Ok : RecordStatus::Failed;
    r.error_kind = j.value("error_kind", std::string{});
    r.error = j.value("error", std::string{});

    auto present = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
    if (present("emotion")) r.emotion = emotion_from_json(j.at("emotion"));
    if (present("classification")) r.classification = classification_from_json(j.at("classification"));
    if (present("reasoning")) r.reasoning = reasoning_from_json(j.at("reasoning"));
    if (present("severity")) r.severity = severity_assessment_from_json(j.at("severity"));

    for (const auto& f : j.value("flags", json::array())) {
        const auto kind = f.at("kind").get<std::string>();
        if (kind != inconsistency_name(Inconsistency::Kind::VerdictScoreMismatch)) {
            throw std::runtime_error("unknown flag kind " + kind);
        }
        r.flags.push_back({Inconsistency::Kind::VerdictScoreMismatch, f.value("detail", "")});
    }
    for (const auto& o : j.value("raw_stage_outputs", json::array())) {
        const auto stage = parse_stage(o.at("stage").get<std::string>());
        if (!stage) throw std::runtime_error("unknown stage in raw_stage_outputs");
        r.raw_stage_outputs.push_back({*stage, o.value("attempt", 1), o.at("text").get<std::string>()});
    }
    if (j.contains("usage")) {
        const auto& u = j.at("usage");
        r.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
        r.completion_tokens = u.value("completion_tokens", std::int64_t{0});
        r.cached_calls = u.value("cached_calls", std::size_t{0});
    }
    r.started_at = j.value("started_at", std::string{});
    r.finished_at = j.value("finished_at", std::string{});
    return r;
}

}  // namespace cotphq
