#pragma once
// Prompt rendering for the four-stage chain-of-thought mode and the
// single-shot standard mode.
//
// Templates are plain UTF-8 text with {{placeholder}} markers. The shipped
// defaults (templates/*.txt) are compiled in; TemplateSet::load() overlays a
// directory of replacements. Rendering is pure: the same inputs always give
// byte-identical prompts.
//
// Placeholders:
//   all stages      {{transcript}} {{output_format}}
//   emotion         {{intensity_options}} {{polarity_options}} {{source_options}}
//   classification  {{verdict_options}} {{prior_outputs}}
//   reasoning_*     {{factor_dimensions}} {{prior_outputs}}
//   severity        {{severity_bands}} {{prior_outputs}}
//   standard        {{verdict_options}}
//   repair          {{original_prompt}} {{violation}} {{schema}}

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cotphq/dataset.hpp"
#include "cotphq/stage_types.hpp"

namespace cotphq {

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingPriorStage : public PromptError {
public:
    MissingPriorStage(Stage stage, Stage missing)
        : PromptError("cannot render " + std::string(stage_name(stage)) + " prompt: " +
                      std::string(stage_name(missing)) + " output missing"),
          missing_(missing) {}
    Stage missing() const noexcept { return missing_; }

private:
    Stage missing_;
};

class TemplateNotFound : public PromptError {
public:
    explicit TemplateNotFound(const std::string& name)
        : PromptError("template '" + name + "' not found") {}
};

class TemplateError : public PromptError {
public:
    using PromptError::PromptError;
};

inline constexpr std::size_t kDefaultMaxTranscriptChars = 48000;

struct StagePrompt {
    Stage stage = Stage::Emotion;
    PromptMode mode = PromptMode::ChainOfThought;
    std::string system_text;
    std::string user_text;
    std::string schema_id;
};

struct PromptOptions {
    bool participant_only = true;
    // Transcript budget in bytes of rendered text; longer transcripts keep the tail.
    std::size_t max_chars = kDefaultMaxTranscriptChars;
};

class TemplateSet {
public:
    TemplateSet() = default;

    // Compiled-in defaults.
    static TemplateSet defaults();
    // Defaults overlaid with every <name>.txt found in dir.
    static TemplateSet load(const std::filesystem::path& dir);

    // Names every complete set must provide.
    static const std::vector<std::string>& required_names();

    const std::string& get(const std::string& name) const;
    void set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }
    bool contains(const std::string& name) const { return templates_.contains(name); }

private:
    std::map<std::string, std::string> templates_;
};

// Replaces every {{name}}; throws TemplateError on an unknown placeholder or
// an unterminated marker.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& values);

// Transcript text as placed into prompts, tail-truncated to the budget with
// a leading notice.
std::string transcript_for_prompt(const Transcript& transcript, const PromptOptions& options);

// JSON serialization of the stage outputs present in prior.
std::string serialize_prior(const AssessmentRecord& prior);

StagePrompt render_stage_prompt(Stage stage, const Transcript& transcript,
                                const AssessmentRecord& prior, const TemplateSet& templates,
                                const PromptOptions& options = {});

// Throws EmptyTranscript when the transcript has nothing to show.
StagePrompt render_standard_prompt(const Transcript& transcript, const TemplateSet& templates,
                                   const PromptOptions& options = {});

// One re-prompt after a rejected answer: the original prompt, the violation
// and the stage's JSON Schema.
StagePrompt render_repair_prompt(const StagePrompt& original, std::string_view violation,
                                 const TemplateSet& templates);

namespace detail {
// Generated from templates/*.txt at build time.
const std::map<std::string, std::string>& builtin_templates();
}  // namespace detail

}  // namespace cotphq
