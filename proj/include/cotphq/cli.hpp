#pragma once
// Command-line front end: validate, run, eval, ablate.
//
// Exit codes are a stable contract:
//   0 success, 1 usage error, 2 dataset validation failure,
//   3 more than half the transcripts of a run failed, 4 evaluation join failure.
//
// Settings resolve as flags > --config JSON file > environment > defaults.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <vector>

#include "cotphq/backend.hpp"
#include "cotphq/dataset.hpp"
#include "cotphq/metrics.hpp"
#include "cotphq/pipeline.hpp"
#include "json.hpp"

namespace cotphq::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitRunFailure = 3,
    kExitJoinFailure = 4,
};

struct RunConfig {
    std::filesystem::path manifest;
    std::string split = "test";  // train | val | test | unassigned | all
    PromptMode mode = PromptMode::ChainOfThought;
    std::vector<std::string> models = {"gpt-4o"};
    // "" (default endpoint), "mock:<script.json>", or an http(s) base URL.
    std::string backend;
    std::optional<std::filesystem::path> cache_dir;
    std::filesystem::path out_dir = "cotphq-out";
    int workers = 1;
    std::optional<std::filesystem::path> templates;
    bool participant_only = true;
    std::size_t max_chars = kDefaultMaxTranscriptChars;
    int repeats = 1;
    double temperature = 0.0;
    int max_tokens = 4096;
    std::optional<std::int64_t> seed = 0;

    // Throws std::invalid_argument naming the offending setting.
    void validate() const;
    std::optional<Split> split_filter() const;
    std::filesystem::path records_path() const { return out_dir / "records.jsonl"; }

    // Overlays keys present in a JSON config object (same names as the flags,
    // with underscores: cache_dir, max_chars, participant_only, ...).
    void apply_json(const nlohmann::json& j);
};

using BackendFactory = std::function<std::shared_ptr<Backend>(const RunConfig&)>;

// Builds the backend named by config.backend (without caching).
std::shared_ptr<Backend> make_backend(const RunConfig& config);

struct RunOutcome {
    std::size_t attempted = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;  // already recorded
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    // More than half of the attempted transcripts failed.
    bool over_failure_threshold() const noexcept { return failed * 2 > attempted; }
};

// Assesses every transcript of the selected split for each configured model
// and repeat, appending to config.records_path(). Records already present
// with status ok for the same (participant, mode, model, repeat) are skipped.
RunOutcome execute_run(const RunConfig& config, PromptMode mode, Backend& backend,
                       std::ostream& log, std::stop_token stop = {});

class JoinFailure : public std::runtime_error {
public:
    JoinFailure(std::vector<std::string> missing, std::vector<std::string> unmatched);
    const std::vector<std::string>& missing() const noexcept { return missing_; }
    const std::vector<std::string>& unmatched() const noexcept { return unmatched_; }

private:
    std::vector<std::string> missing_;
    std::vector<std::string> unmatched_;
};

struct EvalRow {
    std::string model;
    PromptMode mode = PromptMode::ChainOfThought;
    std::vector<EvalSummary> runs;  // one per repeat
    bool failed = false;            // no usable predictions
    std::string failure;

    // Averages over repeats; with a single repeat these are that run's values.
    std::optional<double> ccc() const;
    double mae() const;
    double binary_accuracy() const;
    std::size_t n() const;
    std::size_t excluded_count() const;
    BandConfusion band_confusion() const;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // sorted by model, then standard before cot
};

// Joins records to gold labels of the selected split; rows per (model, mode).
// Throws JoinFailure when records and the split disagree on participants.
EvalReport evaluate(const std::vector<AssessmentRecord>& records, const CorpusManifest& manifest,
                    std::optional<Split> split);

nlohmann::json report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);

struct AblationReport {
    EvalReport eval;
    bool standard_over_threshold = false;
    bool cot_over_threshold = false;
};

nlohmann::json ablation_json(const AblationReport& report);
std::string ablation_text(const AblationReport& report);

struct Environment {
    std::ostream& out;
    std::ostream& err;
    // Replaces make_backend(), e.g. with a shared counting mock in tests.
    BackendFactory backend_factory;
    std::stop_token stop;
};

Environment default_environment();

int run_cli(const std::vector<std::string>& args, Environment& env);

}  // namespace cotphq::cli
