#pragma once
// Structured outputs of the four assessment stages and the audit record that
// ties them together. Every closed vocabulary used by prompts and parsers is
// defined here.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cotphq/metrics.hpp"
#include "json.hpp"

namespace cotphq {

enum class Stage { Emotion, Classification, Reasoning, Severity };
inline constexpr std::array<Stage, 4> kCotStages = {Stage::Emotion, Stage::Classification,
                                                    Stage::Reasoning, Stage::Severity};

std::string_view stage_name(Stage s) noexcept;  // "emotion"
std::string_view schema_id(Stage s) noexcept;   // "emotion.v1"
std::optional<Stage> parse_stage(std::string_view name);

enum class PromptMode { Standard, ChainOfThought };

std::string_view mode_name(PromptMode m) noexcept;  // "standard" | "cot"
std::optional<PromptMode> parse_mode(std::string_view name);

enum class Intensity { Low, Medium, High };
enum class Polarity { Positive, Negative, Neutral };
enum class EmotionSource { InternalThoughts, ExternalEvents, Relationships, Health };
enum class Verdict { Depressed, NotDepressed };
enum class Branch { Contributing, Protective };
enum class FactorDimension {
    // Contributing
    Social,
    Biological,
    Psychological,
    FunctionalImpairment,
    // Protective
    SocialSupport,
    PsychologicalResilience,
    HealthyHabits,
};

template <class E>
struct VocabEntry {
    E value;
    std::string_view token;  // wire spelling
    std::string_view hint;   // shown next to the token in prompts
};

inline constexpr std::array<VocabEntry<Intensity>, 3> kIntensityVocab = {{
    {Intensity::Low, "low", ""},
    {Intensity::Medium, "medium", ""},
    {Intensity::High, "high", ""},
}};

inline constexpr std::array<VocabEntry<Polarity>, 3> kPolarityVocab = {{
    {Polarity::Positive, "positive", ""},
    {Polarity::Negative, "negative", ""},
    {Polarity::Neutral, "neutral", ""},
}};

inline constexpr std::array<VocabEntry<EmotionSource>, 4> kSourceVocab = {{
    {EmotionSource::InternalThoughts, "internal_thoughts", "the speaker's own thoughts and self-appraisal"},
    {EmotionSource::ExternalEvents, "external_events", "things that happened to or around the speaker"},
    {EmotionSource::Relationships, "relationships", "family, partners, friends, colleagues"},
    {EmotionSource::Health, "health", "physical or mental health, sleep, energy, appetite"},
}};

inline constexpr std::array<VocabEntry<Verdict>, 2> kVerdictVocab = {{
    {Verdict::Depressed, "depressed", ""},
    {Verdict::NotDepressed, "not_depressed", ""},
}};

inline constexpr std::array<VocabEntry<Branch>, 2> kBranchVocab = {{
    {Branch::Contributing, "contributing", ""},
    {Branch::Protective, "protective", ""},
}};

inline constexpr std::array<VocabEntry<FactorDimension>, 4> kContributingVocab = {{
    {FactorDimension::Social, "social", "isolation, interpersonal conflict, lack of support"},
    {FactorDimension::Biological, "biological", "disturbed sleep, appetite change, fatigue"},
    {FactorDimension::Psychological, "psychological", "guilt, worthlessness, negative self-perception"},
    {FactorDimension::FunctionalImpairment, "functional_impairment",
     "reduced functioning at work, in relationships or in daily activities"},
}};

inline constexpr std::array<VocabEntry<FactorDimension>, 3> kProtectiveVocab = {{
    {FactorDimension::SocialSupport, "social_support", "supportive, fulfilling relationships"},
    {FactorDimension::PsychologicalResilience, "psychological_resilience",
     "coping strategies, resilience, healthy self-esteem"},
    {FactorDimension::HealthyHabits, "healthy_habits", "regular sleep, balanced eating, exercise"},
}};

std::string_view token_of(Intensity v) noexcept;
std::string_view token_of(Polarity v) noexcept;
std::string_view token_of(EmotionSource v) noexcept;
std::string_view token_of(Verdict v) noexcept;
std::string_view token_of(Branch v) noexcept;
std::string_view token_of(FactorDimension v) noexcept;

Branch branch_for(Verdict v) noexcept;
bool dimension_allowed(Branch branch, FactorDimension dim) noexcept;

struct EmotionSignal {
    std::string kind;
    Intensity intensity = Intensity::Low;
    Polarity polarity = Polarity::Neutral;
    EmotionSource source = EmotionSource::InternalThoughts;
    std::string evidence;
};

struct EmotionProfile {
    std::vector<EmotionSignal> signals;
};

struct ClassificationResult {
    Verdict verdict = Verdict::NotDepressed;
    std::string rationale;
    std::optional<double> confidence;
};

struct Factor {
    FactorDimension dimension = FactorDimension::Social;
    std::string description;
    std::string evidence;
};

struct ReasoningReport {
    Branch branch = Branch::Protective;
    std::vector<Factor> factors;  // rank order
};

struct SeverityAssessment {
    int phq8_score = 0;
    Band band = Band::Minimal;

    // The only way to build one: band always derives from the score.
    static SeverityAssessment from_score(int score);
};

// Parsed severity.v1 payload. Standard mode carries the verdict here.
struct SeverityOutput {
    SeverityAssessment assessment;
    std::optional<Verdict> verdict;
    std::string rationale;
};

using StageValue = std::variant<EmotionProfile, ClassificationResult, ReasoningReport, SeverityOutput>;

struct Inconsistency {
    enum class Kind { VerdictScoreMismatch };
    Kind kind = Kind::VerdictScoreMismatch;
    std::string detail;
};
std::string_view inconsistency_name(Inconsistency::Kind k) noexcept;

struct RawStageOutput {
    Stage stage = Stage::Emotion;
    int attempt = 1;
    std::string text;
};

enum class RecordStatus { Ok, Failed };

inline constexpr std::string_view kRecordSchema = "cotphq.assessment.v1";

struct AssessmentRecord {
    std::string participant_id;
    PromptMode mode = PromptMode::ChainOfThought;
    std::string model_id;
    std::string backend_id;
    int repeat = 0;

    RecordStatus status = RecordStatus::Ok;
    std::string error_kind;  // e.g. "StageParseFailure", "BackendError"
    std::string error;

    std::optional<EmotionProfile> emotion;
    std::optional<ClassificationResult> classification;
    std::optional<ReasoningReport> reasoning;
    std::optional<SeverityAssessment> severity;

    std::vector<RawStageOutput> raw_stage_outputs;
    std::vector<Inconsistency> flags;

    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::size_t cached_calls = 0;
    std::string started_at;
    std::string finished_at;

    bool ok() const noexcept { return status == RecordStatus::Ok; }
};

nlohmann::json to_json(const EmotionProfile& v);
nlohmann::json to_json(const ClassificationResult& v);
nlohmann::json to_json(const ReasoningReport& v);
nlohmann::json to_json(const SeverityAssessment& v);
nlohmann::json to_json(const AssessmentRecord& r);

// Inverse of to_json(AssessmentRecord); throws std::runtime_error on an
// unknown schema tag or missing fields.
AssessmentRecord record_from_json(const nlohmann::json& j);

}  // namespace cotphq
