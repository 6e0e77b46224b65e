#include "cotphq/prompts.hpp"

#include "cotphq/markers.hpp"
#include "cotphq/stage_schema.hpp"
#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
std::string inline_options(const std::array<VocabEntry<E>, N>& vocab) {
    std::string out;
    for (std::size_t i = 0; i < N; ++i) {
        if (i) out += (i + 1 == N) ? " or " : ", ";
        out += "\"";
        out += vocab[i].token;
        out += "\"";
    }
    return out;
}

template <class E, std::size_t N>
std::string bullet_options(const std::array<VocabEntry<E>, N>& vocab) {
    std::string out;
    for (const auto& e : vocab) {
        out += "  - \"";
        out += e.token;
        out += "\"";
        if (!e.hint.empty()) {
            out += ": ";
            out += e.hint;
        }
        out += "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string severity_band_lines() {
    std::string out;
    for (auto b : kAllBands) {
        out += "- " + band_definition(b) + "\n";
    }
    out.pop_back();
    return out;
}

std::string finish_user_text(std::string body, std::string_view schema, PromptMode mode) {
    body += "\n\n";
    body += markers::tag_line(schema, mode_name(mode));
    return body;
}

void require_prior(Stage stage, const AssessmentRecord& prior) {
    if (stage == Stage::Emotion) return;
    if (!prior.emotion) throw MissingPriorStage(stage, Stage::Emotion);
    if (stage == Stage::Classification) return;
    if (!prior.classification) throw MissingPriorStage(stage, Stage::Classification);
    if (stage == Stage::Reasoning) return;
    if (!prior.reasoning) throw MissingPriorStage(stage, Stage::Reasoning);
}

}  // namespace

TemplateSet TemplateSet::defaults() {
    TemplateSet t;
    t.templates_ = detail::builtin_templates();
    return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw TemplateNotFound(dir.string());
    auto t = defaults();
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        auto text = util::read_file(entry.path());
        if (!text) throw TemplateNotFound(entry.path().string());
        t.templates_[entry.path().stem().string()] = std::move(*text);
    }
    return t;
}

const std::vector<std::string>& TemplateSet::required_names() {
    static const std::vector<std::string> names = {
        "system",   "emotion",  "classification", "reasoning_contributing", "reasoning_protective",
        "severity", "standard", "repair"};
    return names;
}

const std::string& TemplateSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw TemplateNotFound(name);
    return it->second;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) throw TemplateError("unterminated {{ in template");
        const std::string name(util::trim(text.substr(open + 2, close - open - 2)));
        auto it = values.find(name);
        if (it == values.end()) throw TemplateError("unknown placeholder {{" + name + "}}");
        out.append(it->second);
        pos = close + 2;
    }
    // Templates are authored with a trailing newline; prompts end at the content.
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

std::string transcript_for_prompt(const Transcript& transcript, const PromptOptions& options) {
    auto text = transcript.render(options.participant_only);
    if (text.empty()) throw EmptyTranscript(transcript.participant_id);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (text.size() <= options.max_chars) return text;

    std::size_t start = text.size() - options.max_chars;
    // Do not begin in the middle of a UTF-8 sequence.
    while (start < text.size() && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) ++start;
    const auto kept = text.size() - start;
    return "[Transcript truncated: showing the final " + std::to_string(kept) + " of " +
           std::to_string(text.size()) + " characters.]\n" + text.substr(start);
}

std::string serialize_prior(const AssessmentRecord& prior) {
    json j = json::object();
    if (prior.emotion) j["1_emotion"] = to_json(*prior.emotion);
    if (prior.classification) j["2_classification"] = to_json(*prior.classification);
    if (prior.reasoning) j["3_reasoning"] = to_json(*prior.reasoning);
    return j.dump(2);
}

StagePrompt render_stage_prompt(Stage stage, const Transcript& transcript,
                                const AssessmentRecord& prior, const TemplateSet& templates,
                                const PromptOptions& options) {
    require_prior(stage, prior);

    std::map<std::string, std::string> values = {
        {"transcript", transcript_for_prompt(transcript, options)},
    };
    std::string name;
    switch (stage) {
        case Stage::Emotion:
            name = "emotion";
            values["intensity_options"] = inline_options(kIntensityVocab);
            values["polarity_options"] = inline_options(kPolarityVocab);
            values["source_options"] = bullet_options(kSourceVocab);
            values["output_format"] = output_format(stage);
            break;
        case Stage::Classification:
            name = "classification";
            values["verdict_options"] = inline_options(kVerdictVocab);
            values["prior_outputs"] = serialize_prior(prior);
            values["output_format"] = output_format(stage);
            break;
        case Stage::Reasoning: {
            const auto branch = branch_for(prior.classification->verdict);
            name = branch == Branch::Contributing ? "reasoning_contributing" : "reasoning_protective";
            values["factor_dimensions"] = branch == Branch::Contributing
                                              ? bullet_options(kContributingVocab)
                                              : bullet_options(kProtectiveVocab);
            values["prior_outputs"] = serialize_prior(prior);
            values["output_format"] = output_format(stage, branch);
            break;
        }
        case Stage::Severity:
            name = "severity";
            values["severity_bands"] = severity_band_lines();
            values["prior_outputs"] = serialize_prior(prior);
            values["output_format"] = output_format(stage);
            break;
    }

    StagePrompt p;
    p.stage = stage;
    p.mode = PromptMode::ChainOfThought;
    p.schema_id = std::string(schema_id(stage));
    p.system_text = substitute(templates.get("system"), {});
    p.user_text = finish_user_text(substitute(templates.get(name), values), p.schema_id, p.mode);
    return p;
}

StagePrompt render_standard_prompt(const Transcript& transcript, const TemplateSet& templates,
                                   const PromptOptions& options) {
    std::map<std::string, std::string> values = {
        {"transcript", transcript_for_prompt(transcript, options)},
        {"verdict_options", inline_options(kVerdictVocab)},
        {"output_format", output_format(Stage::Severity, std::nullopt, /*with_verdict=*/true)},
    };
    StagePrompt p;
    p.stage = Stage::Severity;
    p.mode = PromptMode::Standard;
    p.schema_id = std::string(schema_id(Stage::Severity));
    p.system_text = substitute(templates.get("system"), {});
    p.user_text = finish_user_text(substitute(templates.get("standard"), values), p.schema_id, p.mode);
    return p;
}

StagePrompt render_repair_prompt(const StagePrompt& original, std::string_view violation,
                                 const TemplateSet& templates) {
    std::string body = original.user_text;
    const auto tag = "\n\n" + markers::tag_line(original.schema_id, mode_name(original.mode));
    if (body.size() >= tag.size() && body.compare(body.size() - tag.size(), tag.size(), tag) == 0) {
        body.resize(body.size() - tag.size());
    }
    auto schema = schema_document(original.stage);
    if (original.mode == PromptMode::Standard) {
        schema["required"] = json::array({"phq8_score", "verdict"});
    }
    StagePrompt p = original;
    p.user_text = finish_user_text(substitute(templates.get("repair"),
                                              {{"original_prompt", body},
                                               {"violation", std::string(violation)},
                                               {"schema", schema.dump(2)}}),
                                   p.schema_id, p.mode);
    return p;
}

}  // namespace cotphq
