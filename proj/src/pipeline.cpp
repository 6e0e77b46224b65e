#include "cotphq/pipeline.hpp"

#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

JsonlRecordWriter::JsonlRecordWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for appending");
}

void JsonlRecordWriter::write(const AssessmentRecord& record) {
    const auto line = to_json(record).dump() + "\n";
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw std::runtime_error("failed to append assessment record");
}

std::vector<AssessmentRecord> read_records(const std::filesystem::path& path) {
    std::vector<AssessmentRecord> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (util::trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Inconsistency> check_consistency(const ClassificationResult& classification,
                                             const SeverityAssessment& severity) {
    const int score = severity.phq8_score;
    const bool depressed = classification.verdict == Verdict::Depressed;
    if (depressed && score < kDepressedCutoff) {
        return {{Inconsistency::Kind::VerdictScoreMismatch,
                 "verdict depressed but PHQ-8 score " + std::to_string(score) + " < " +
                     std::to_string(kDepressedCutoff)}};
    }
    if (!depressed && score >= kDepressedCutoff) {
        return {{Inconsistency::Kind::VerdictScoreMismatch,
                 "verdict not_depressed but PHQ-8 score " + std::to_string(score) +
                     " >= " + std::to_string(kDepressedCutoff)}};
    }
    return {};
}

namespace {

CompletionRequest make_request(const StagePrompt& prompt, const PipelineConfig& config) {
    CompletionRequest r;
    r.model_id = config.model_id;
    r.system_text = prompt.system_text;
    r.user_text = prompt.user_text;
    r.temperature = config.temperature;
    r.max_tokens = config.max_tokens;
    if (config.seed) r.seed = *config.seed + config.repeat;
    return r;
}

CompletionResponse call_backend(Backend& backend, const StagePrompt& prompt,
                                const PipelineConfig& config, int attempt,
                                AssessmentRecord& audit) {
    auto response = backend.complete(make_request(prompt, config));
    audit.raw_stage_outputs.push_back({prompt.stage, attempt, response.text});
    audit.prompt_tokens += response.usage.prompt_tokens;
    audit.completion_tokens += response.usage.completion_tokens;
    if (response.cached) ++audit.cached_calls;
    return response;
}

}  // namespace

StageValue repair_retry(const StagePrompt& original, std::string_view violation, Backend& backend,
                        const PipelineConfig& config, const TemplateSet& templates,
                        const ParseOptions& parse_options, AssessmentRecord& audit) {
    const auto repair = render_repair_prompt(original, violation, templates);
    const auto response = call_backend(backend, repair, config, 2, audit);
    try {
        return parse_stage_output(original.stage, response.text, parse_options);
    } catch (const StageOutputError& e) {
        throw StageParseFailure(original.stage, e.what());
    }
}

Pipeline::Pipeline(Backend& backend, TemplateSet templates, PipelineConfig config, RecordSink* sink)
    : backend_(backend), templates_(std::move(templates)), config_(std::move(config)), sink_(sink) {}

StageValue Pipeline::call_stage(const StagePrompt& prompt, const ParseOptions& parse_options,
                                AssessmentRecord& record, std::stop_token stop) const {
    if (stop.stop_requested()) throw Cancelled();
    const auto response = call_backend(backend_, prompt, config_, 1, record);
    try {
        return parse_stage_output(prompt.stage, response.text, parse_options);
    } catch (const StageOutputError& e) {
        if (stop.stop_requested()) throw Cancelled();
        return repair_retry(prompt, e.what(), backend_, config_, templates_, parse_options, record);
    }
}

void Pipeline::run_into(AssessmentRecord& record, const Transcript& transcript, PromptMode mode,
                        std::stop_token stop) const {
    const auto& popts = config_.prompt;
    if (mode == PromptMode::Standard) {
        const auto prompt = render_standard_prompt(transcript, templates_, popts);
        auto out = std::get<SeverityOutput>(
            call_stage(prompt, {.expected_branch = std::nullopt, .require_verdict = true}, record, stop));
        record.classification = ClassificationResult{*out.verdict, out.rationale, std::nullopt};
        record.severity = out.assessment;
    } else {
        for (auto stage : kCotStages) {
            const auto prompt = render_stage_prompt(stage, transcript, record, templates_, popts);
            ParseOptions parse;
            if (stage == Stage::Reasoning) parse.expected_branch = branch_for(record.classification->verdict);
            auto value = call_stage(prompt, parse, record, stop);
            switch (stage) {
                case Stage::Emotion: record.emotion = std::get<EmotionProfile>(std::move(value)); break;
                case Stage::Classification:
                    record.classification = std::get<ClassificationResult>(std::move(value));
                    break;
                case Stage::Reasoning: record.reasoning = std::get<ReasoningReport>(std::move(value)); break;
                case Stage::Severity: record.severity = std::get<SeverityOutput>(value).assessment; break;
            }
        }
    }
    record.flags = check_consistency(*record.classification, *record.severity);
}

AssessmentRecord Pipeline::run(const Transcript& transcript, PromptMode mode,
                               std::stop_token stop) const {
    AssessmentRecord record;
    record.participant_id = transcript.participant_id;
    record.mode = mode;
    record.model_id = config_.model_id;
    record.backend_id = backend_.id();
    record.repeat = config_.repeat;
    record.started_at = util::utc_timestamp();
    run_into(record, transcript, mode, stop);
    record.finished_at = util::utc_timestamp();
    if (sink_) sink_->write(record);
    return record;
}

AssessmentRecord Pipeline::assess(const Transcript& transcript, PromptMode mode,
                                  std::stop_token stop) const {
    AssessmentRecord record;
    record.participant_id = transcript.participant_id;
    record.mode = mode;
    record.model_id = config_.model_id;
    record.backend_id = backend_.id();
    record.repeat = config_.repeat;
    record.started_at = util::utc_timestamp();

    auto fail = [&](std::string kind, std::string message) {
        record.status = RecordStatus::Failed;
        record.error_kind = std::move(kind);
        record.error = std::move(message);
    };
    try {
        run_into(record, transcript, mode, stop);
    } catch (const Cancelled&) {
        throw;
    } catch (const StageParseFailure& e) {
        fail("StageParseFailure", e.what());
    } catch (const BackendError& e) {
        fail("BackendError", e.what());
    } catch (const PromptError& e) {
        fail("PromptError", e.what());
    } catch (const DatasetError& e) {
        fail("DatasetError", e.what());
    }
    record.finished_at = util::utc_timestamp();
    if (sink_) sink_->write(record);
    return record;
}

AssessmentRecord run_pipeline(const Transcript& transcript, PromptMode mode, Backend& backend,
                              const PipelineConfig& config, const TemplateSet& templates) {
    return Pipeline(backend, templates, config).run(transcript, mode);
}

}  // namespace cotphq
