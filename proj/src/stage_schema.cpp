#include "cotphq/stage_schema.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

StageScoreOutOfRange::StageScoreOutOfRange(double value)
    : SchemaViolation("phq8_score", [value] {
          std::ostringstream s;
          s << "score " << value << " rounds outside [0, 24]";
          return s.str();
      }()),
      value_(value) {}

std::vector<json> extract_json_objects(std::string_view text) {
    std::vector<json> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string_view::npos;
        for (std::size_t k = i; k < text.size(); ++k) {
            const char c = text[k];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                end = k;
                break;
            }
        }
        if (end == std::string_view::npos) {
            ++i;
            continue;
        }
        auto parsed = json::parse(text.substr(i, end - i + 1), nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            out.push_back(std::move(parsed));
            i = end + 1;
        } else {
            ++i;
        }
    }
    return out;
}

namespace {

std::string index_path(const std::string& base, std::size_t i, const char* field) {
    return base + "[" + std::to_string(i) + "]." + field;
}

// path is the full path of obj[key].
const json& require(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw SchemaViolation(path, "required field missing");
    return *it;
}

std::string string_at(const json& obj, const std::string& key, const std::string& path,
                      bool non_empty) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaViolation(path, "expected a string");
    auto s = v.get<std::string>();
    if (non_empty && util::trim(s).empty()) throw SchemaViolation(path, "must not be empty");
    return s;
}

template <class E, std::size_t N>
E enum_at(const json& obj, const std::string& key, const std::string& path,
          const std::array<VocabEntry<E>, N>& vocab) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaViolation(path, "expected a string");
    const auto folded = util::fold_token(v.get<std::string>());
    for (const auto& e : vocab) {
        if (util::fold_token(e.token) == folded) return e.value;
    }
    std::string allowed;
    for (const auto& e : vocab) {
        if (!allowed.empty()) allowed += ", ";
        allowed += e.token;
    }
    throw SchemaViolation(path, "'" + v.get<std::string>() + "' is not one of: " + allowed);
}

Verdict verdict_at(const json& obj, const std::string& path) {
    return enum_at(obj, "verdict", path, kVerdictVocab);
}

}  // namespace

EmotionProfile emotion_from_json(const json& j) {
    if (!j.is_object()) throw SchemaViolation("$", "expected an object");
    const auto& signals = require(j, "signals", "signals");
    if (!signals.is_array()) throw SchemaViolation("signals", "expected an array");
    EmotionProfile out;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const auto& s = signals[i];
        const auto base = std::string("signals");
        if (!s.is_object()) throw SchemaViolation(base + "[" + std::to_string(i) + "]", "expected an object");
        EmotionSignal sig;
        sig.kind = string_at(s, "kind", index_path(base, i, "kind"), true);
        sig.intensity = enum_at(s, "intensity", index_path(base, i, "intensity"), kIntensityVocab);
        sig.polarity = enum_at(s, "polarity", index_path(base, i, "polarity"), kPolarityVocab);
        sig.source = enum_at(s, "source", index_path(base, i, "source"), kSourceVocab);
        sig.evidence = string_at(s, "evidence", index_path(base, i, "evidence"), true);
        out.signals.push_back(std::move(sig));
    }
    return out;
}

ClassificationResult classification_from_json(const json& j) {
    if (!j.is_object()) throw SchemaViolation("$", "expected an object");
    ClassificationResult out;
    out.verdict = verdict_at(j, "verdict");
    out.rationale = string_at(j, "rationale", "rationale", false);
    if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw SchemaViolation("confidence", "expected a number");
        const double c = it->get<double>();
        if (!(c >= 0.0 && c <= 1.0)) throw SchemaViolation("confidence", "must lie in [0, 1]");
        out.confidence = c;
    }
    return out;
}

ReasoningReport reasoning_from_json(const json& j, std::optional<Branch> expected_branch) {
    if (!j.is_object()) throw SchemaViolation("$", "expected an object");
    ReasoningReport out;
    out.branch = enum_at(j, "branch", "branch", kBranchVocab);
    if (expected_branch && out.branch != *expected_branch) {
        throw SchemaViolation("branch", "expected '" + std::string(token_of(*expected_branch)) +
                                            "' for the classification verdict, got '" +
                                            std::string(token_of(out.branch)) + "'");
    }
    const auto& factors = require(j, "factors", "factors");
    if (!factors.is_array()) throw SchemaViolation("factors", "expected an array");
    if (factors.empty()) throw SchemaViolation("factors", "at least one factor is required");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        const std::string base = "factors";
        if (!f.is_object()) throw SchemaViolation(base + "[" + std::to_string(i) + "]", "expected an object");
        Factor factor;
        const auto path = index_path(base, i, "dimension");
        factor.dimension = out.branch == Branch::Contributing
                               ? enum_at(f, "dimension", path, kContributingVocab)
                               : enum_at(f, "dimension", path, kProtectiveVocab);
        factor.description = string_at(f, "description", index_path(base, i, "description"), true);
        factor.evidence = string_at(f, "evidence", index_path(base, i, "evidence"), true);
        out.factors.push_back(std::move(factor));
    }
    return out;
}

SeverityOutput severity_from_json(const json& j, bool require_verdict) {
    if (!j.is_object()) throw SchemaViolation("$", "expected an object");
    const auto& score = require(j, "phq8_score", "phq8_score");
    if (!score.is_number()) throw SchemaViolation("phq8_score", "expected a number");
    const double raw = score.get<double>();
    // std::round rounds half away from zero.
    const double rounded = std::round(raw);
    if (!(rounded >= kMinScore && rounded <= kMaxScore)) throw StageScoreOutOfRange(raw);

    SeverityOutput out;
    out.assessment = SeverityAssessment::from_score(static_cast<int>(rounded));
    if (auto it = j.find("verdict"); it != j.end() && !it->is_null()) {
        out.verdict = verdict_at(j, "verdict");
    } else if (require_verdict) {
        throw SchemaViolation("verdict", "required field missing");
    }
    if (auto it = j.find("rationale"); it != j.end() && it->is_string()) {
        out.rationale = it->get<std::string>();
    }
    // Any model-reported band is ignored.
    return out;
}

SeverityAssessment severity_assessment_from_json(const json& j) {
    const auto& score = require(j, "phq8_score", "phq8_score");
    if (!score.is_number_integer()) throw SchemaViolation("phq8_score", "expected an integer");
    const auto v = score.get<long long>();
    if (!is_valid_score(v)) throw StageScoreOutOfRange(static_cast<double>(v));
    return SeverityAssessment::from_score(static_cast<int>(v));
}

StageValue parse_stage_output(Stage stage, std::string_view raw, const ParseOptions& options) {
    const auto candidates = extract_json_objects(raw);
    if (candidates.empty()) throw NoJsonFound();

    std::exception_ptr first_violation;
    for (const auto& c : candidates) {
        try {
            switch (stage) {
                case Stage::Emotion: return emotion_from_json(c);
                case Stage::Classification: return classification_from_json(c);
                case Stage::Reasoning: return reasoning_from_json(c, options.expected_branch);
                case Stage::Severity: return severity_from_json(c, options.require_verdict);
            }
        } catch (const SchemaViolation&) {
            if (!first_violation) first_violation = std::current_exception();
        }
    }
    std::rethrow_exception(first_violation);
}

namespace {

template <class E, std::size_t N>
json enum_schema(const std::array<VocabEntry<E>, N>& vocab) {
    json values = json::array();
    for (const auto& e : vocab) values.push_back(e.token);
    return {{"type", "string"}, {"enum", std::move(values)}};
}

json object_schema(json properties, json required) {
    return {{"type", "object"}, {"properties", std::move(properties)}, {"required", std::move(required)}};
}

template <class E, std::size_t N>
std::string alternatives(const std::array<VocabEntry<E>, N>& vocab) {
    std::string out;
    for (const auto& e : vocab) {
        if (!out.empty()) out += "|";
        out += e.token;
    }
    return out;
}

}  // namespace

json schema_document(Stage stage) {
    json doc = {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
                {"$id", std::string(schema_id(stage))},
                {"title", std::string(stage_name(stage)) + " stage output"}};
    const json non_empty = {{"type", "string"}, {"minLength", 1}};
    switch (stage) {
        case Stage::Emotion: {
            auto signal = object_schema({{"kind", non_empty},
                                         {"intensity", enum_schema(kIntensityVocab)},
                                         {"polarity", enum_schema(kPolarityVocab)},
                                         {"source", enum_schema(kSourceVocab)},
                                         {"evidence", non_empty}},
                                        {"kind", "intensity", "polarity", "source", "evidence"});
            doc.update(object_schema({{"signals", {{"type", "array"}, {"items", signal}}}}, {"signals"}));
            break;
        }
        case Stage::Classification:
            doc.update(object_schema(
                {{"verdict", enum_schema(kVerdictVocab)},
                 {"rationale", {{"type", "string"}}},
                 {"confidence", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}}},
                {"verdict", "rationale"}));
            break;
        case Stage::Reasoning: {
            auto factor_for = [&](const json& dims) {
                return object_schema({{"dimension", dims}, {"description", non_empty}, {"evidence", non_empty}},
                                     {"dimension", "description", "evidence"});
            };
            auto branch_schema = [&](std::string_view branch, const json& dims) {
                return object_schema(
                    {{"branch", {{"const", std::string(branch)}}},
                     {"factors", {{"type", "array"}, {"minItems", 1}, {"items", factor_for(dims)}}}},
                    {"branch", "factors"});
            };
            doc["oneOf"] = json::array(
                {branch_schema(token_of(Branch::Contributing), enum_schema(kContributingVocab)),
                 branch_schema(token_of(Branch::Protective), enum_schema(kProtectiveVocab))});
            break;
        }
        case Stage::Severity:
            doc.update(object_schema({{"phq8_score", {{"type", "number"}, {"minimum", kMinScore}, {"maximum", kMaxScore}}},
                                      {"verdict", enum_schema(kVerdictVocab)},
                                      {"rationale", {{"type", "string"}}}},
                                     {"phq8_score"}));
            break;
    }
    return doc;
}

std::string output_format(Stage stage, std::optional<Branch> branch, bool with_verdict) {
    switch (stage) {
        case Stage::Emotion:
            return R"({"signals": [{"kind": "<emotion, e.g. sadness, guilt, hope>", "intensity": ")" +
                   alternatives(kIntensityVocab) + R"(", "polarity": ")" + alternatives(kPolarityVocab) +
                   R"(", "source": ")" + alternatives(kSourceVocab) +
                   R"(", "evidence": "<verbatim excerpt from the transcript>"}]})";
        case Stage::Classification:
            return R"({"verdict": ")" + alternatives(kVerdictVocab) +
                   R"(", "rationale": "<short justification>", "confidence": <number between 0 and 1>})";
        case Stage::Reasoning: {
            const auto b = branch.value_or(Branch::Contributing);
            const auto dims = b == Branch::Contributing ? alternatives(kContributingVocab)
                                                        : alternatives(kProtectiveVocab);
            return R"({"branch": ")" + std::string(token_of(b)) + R"(", "factors": [{"dimension": ")" +
                   dims +
                   R"(", "description": "<what the factor is>", "evidence": "<verbatim excerpt from the transcript>"}]})";
        }
        case Stage::Severity:
            if (with_verdict) {
                return R"({"verdict": ")" + alternatives(kVerdictVocab) +
                       R"(", "phq8_score": <integer 0-24>})";
            }
            return R"({"phq8_score": <integer 0-24>, "rationale": "<short justification>"})";
    }
    return {};
}

}  // namespace cotphq
