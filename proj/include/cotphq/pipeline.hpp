#pragma once
// Per-transcript assessment state machine.
//
// Chain-of-thought mode runs Emotion -> Classification -> Reasoning ->
// Severity, each stage seeing the structured outputs of the ones before it.
// Standard mode makes a single call that returns verdict and score together.
// A stage answer that fails its schema gets exactly one repair re-prompt;
// every backend reply, accepted or not, lands in raw_stage_outputs.
//
// One run is sequential. Distinct transcripts may run concurrently against a
// shared Backend and RecordSink.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <vector>

#include "cotphq/backend.hpp"
#include "cotphq/dataset.hpp"
#include "cotphq/prompts.hpp"
#include "cotphq/stage_schema.hpp"
#include "cotphq/stage_types.hpp"

namespace cotphq {

class StageParseFailure : public StageOutputError {
public:
    StageParseFailure(Stage stage, const std::string& detail)
        : StageOutputError(std::string(stage_name(stage)) + " output rejected after repair retry: " +
                           detail),
          stage_(stage) {}
    Stage stage() const noexcept { return stage_; }

private:
    Stage stage_;
};

class Cancelled : public std::runtime_error {
public:
    Cancelled() : std::runtime_error("assessment cancelled") {}
};

struct PipelineConfig {
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    int max_tokens = 4096;
    std::optional<std::int64_t> seed = 0;
    PromptOptions prompt;
    int repeat = 0;
};

class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void write(const AssessmentRecord& record) = 0;
};

// Append-only JSONL file; one record per line, serialized through a mutex.
class JsonlRecordWriter : public RecordSink {
public:
    explicit JsonlRecordWriter(const std::filesystem::path& path);
    void write(const AssessmentRecord& record) override;

private:
    std::mutex mu_;
    std::ofstream out_;
};

// Reads every record in a JSONL file; a missing file yields an empty list.
// Throws std::runtime_error naming the line on malformed input.
std::vector<AssessmentRecord> read_records(const std::filesystem::path& path);

// VerdictScoreMismatch when the verdict disagrees with the PHQ-8 >= 10 cutoff.
std::vector<Inconsistency> check_consistency(const ClassificationResult& classification,
                                             const SeverityAssessment& severity);

// Re-prompts once for a rejected stage answer. Appends the reply to audit;
// throws StageParseFailure if it is rejected too.
StageValue repair_retry(const StagePrompt& original, std::string_view violation, Backend& backend,
                        const PipelineConfig& config, const TemplateSet& templates,
                        const ParseOptions& parse_options, AssessmentRecord& audit);

class Pipeline {
public:
    Pipeline(Backend& backend, TemplateSet templates, PipelineConfig config,
             RecordSink* sink = nullptr);

    // Throws BackendError, StageParseFailure or Cancelled. The returned record
    // has already been handed to the sink.
    AssessmentRecord run(const Transcript& transcript, PromptMode mode,
                         std::stop_token stop = {}) const;

    // As run(), but BackendError / StageParseFailure / prompt errors become a
    // persisted error record holding whatever was audited before the failure.
    // Cancelled propagates.
    AssessmentRecord assess(const Transcript& transcript, PromptMode mode,
                            std::stop_token stop = {}) const;

    const PipelineConfig& config() const noexcept { return config_; }

private:
    void run_into(AssessmentRecord& record, const Transcript& transcript, PromptMode mode,
                  std::stop_token stop) const;
    StageValue call_stage(const StagePrompt& prompt, const ParseOptions& parse_options,
                          AssessmentRecord& record, std::stop_token stop) const;

    Backend& backend_;
    TemplateSet templates_;
    PipelineConfig config_;
    RecordSink* sink_;
};

AssessmentRecord run_pipeline(const Transcript& transcript, PromptMode mode, Backend& backend,
                              const PipelineConfig& config,
                              const TemplateSet& templates = TemplateSet::defaults());

}  // namespace cotphq
