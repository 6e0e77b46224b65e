#pragma once
// Stage output schemas (emotion.v1, classification.v1, reasoning.v1,
// severity.v1) and the strict parsers that enforce them.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cotphq/stage_types.hpp"

namespace cotphq {

class StageOutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaViolation : public StageOutputError {
public:
    SchemaViolation(std::string path, std::string reason)
        : StageOutputError("schema violation at " + path + ": " + reason),
          path_(std::move(path)),
          reason_(std::move(reason)) {}
    const std::string& path() const noexcept { return path_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string path_;
    std::string reason_;
};

class NoJsonFound : public StageOutputError {
public:
    NoJsonFound() : StageOutputError("no well-formed JSON object in response") {}
};

// Severity score outside [0, 24] after rounding.
class StageScoreOutOfRange : public SchemaViolation {
public:
    explicit StageScoreOutOfRange(double value);
    double value() const noexcept { return value_; }

private:
    double value_;
};

struct ParseOptions {
    // Reasoning: the branch implied by the classification verdict.
    std::optional<Branch> expected_branch;
    // Severity: standard mode needs the verdict in the same payload.
    bool require_verdict = false;
};

// Every balanced, parseable top-level JSON object in text, in order of
// appearance. Objects nested inside an earlier match are not reported
// separately.
std::vector<nlohmann::json> extract_json_objects(std::string_view text);

EmotionProfile emotion_from_json(const nlohmann::json& j);
ClassificationResult classification_from_json(const nlohmann::json& j);
ReasoningReport reasoning_from_json(const nlohmann::json& j,
                                    std::optional<Branch> expected_branch = std::nullopt);
SeverityOutput severity_from_json(const nlohmann::json& j, bool require_verdict = false);
// Stored severity (already an integer score); band is recomputed.
SeverityAssessment severity_assessment_from_json(const nlohmann::json& j);

// Returns the first extracted object that conforms to the stage schema.
// Throws NoJsonFound when nothing parses, otherwise the violation raised by
// the first well-formed object.
StageValue parse_stage_output(Stage stage, std::string_view raw, const ParseOptions& options = {});

// JSON Schema document published for the stage.
nlohmann::json schema_document(Stage stage);

// Compact example of the expected object, shown to the model. For Reasoning
// the branch selects the dimension vocabulary; for Severity, with_verdict
// adds the verdict field used by standard mode.
std::string output_format(Stage stage, std::optional<Branch> branch = std::nullopt,
                          bool with_verdict = false);

}  // namespace cotphq
