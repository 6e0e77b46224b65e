#include "cotphq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "cotphq/csv.hpp"
#include "cotphq/util.hpp"

namespace cotphq {

namespace fs = std::filesystem;

std::string_view speaker_name(Speaker s) noexcept {
    return s == Speaker::Interviewer ? "Interviewer" : "Participant";
}

std::string_view split_name(Split s) noexcept {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::Unassigned: return "unassigned";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view text) {
    const auto t = util::to_lower(util::trim(text));
    if (t.empty() || t == "unassigned") return Split::Unassigned;
    if (t == "train" || t == "training") return Split::Train;
    if (t == "val" || t == "dev" || t == "validation" || t == "development") return Split::Val;
    if (t == "test") return Split::Test;
    return std::nullopt;
}

std::string Transcript::render(bool participant_only) const {
    std::string out;
    for (const auto& t : turns) {
        if (participant_only && t.speaker != Speaker::Participant) continue;
        out += speaker_name(t.speaker);
        out += ": ";
        out += t.text;
        out.push_back('\n');
    }
    return out;
}

const ManifestEntry* CorpusManifest::find(std::string_view participant_id) const {
    for (const auto& e : entries) {
        if (e.participant_id == participant_id) return &e;
    }
    return nullptr;
}

std::vector<const ManifestEntry*> CorpusManifest::in_split(std::optional<Split> split) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
        if (!split || e.split == *split) out.push_back(&e);
    }
    return out;
}

fs::path resolve_transcript_path(const fs::path& labels_dir, std::string_view participant_id) {
    const auto dir = labels_dir / "transcripts";
    auto csv_path = dir / (std::string(participant_id) + ".csv");
    if (fs::exists(csv_path)) return csv_path;
    auto txt_path = dir / (std::string(participant_id) + ".txt");
    if (fs::exists(txt_path)) return txt_path;
    return csv_path;
}

namespace {

struct Columns {
    std::size_t id = 0;
    std::size_t split = 1;
    std::size_t score = 2;
};

std::optional<Columns> header_columns(const csv::Row& row) {
    Columns c;
    bool have_id = false, have_split = false, have_score = false;
    for (std::size_t i = 0; i < row.fields.size(); ++i) {
        const auto name = util::to_lower(util::trim(row.fields[i]));
        if (name == "participant_id") { c.id = i; have_id = true; }
        else if (name == "split") { c.split = i; have_split = true; }
        else if (name == "phq8_score") { c.score = i; have_score = true; }
    }
    if (have_id && have_split && have_score && row.fields.size() == 3) return c;
    return std::nullopt;
}

std::optional<long long> parse_integer(std::string_view s) {
    s = util::trim(s);
    if (s.empty()) return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

ManifestValidation validate_manifest(const fs::path& labels_path, bool check_transcripts) {
    auto text = util::read_file(labels_path);
    if (!text) throw MissingFile(labels_path);

    ManifestValidation out;
    out.manifest.source = labels_path;
    for (auto s : kAllSplits) out.manifest.counts_by_split[s] = 0;

    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(*text);
    } catch (const csv::ParseError& e) {
        // Nothing after the broken quote can be trusted; report and stop.
        out.issues.push_back({ValidationIssue::Kind::Malformed, e.line(), {}, e.what(), std::nullopt});
        return out;
    }
    if (rows.empty()) return out;

    const auto columns = header_columns(rows.front());
    if (!columns) {
        out.issues.push_back({ValidationIssue::Kind::Malformed, rows.front().line, {},
                              "expected header participant_id,split,phq8_score", std::nullopt});
        out.input_rows = rows.size() - 1;
        out.rejected_rows = out.input_rows;
        return out;
    }

    const auto labels_dir = labels_path.parent_path();
    std::set<std::string, std::less<>> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        ++out.input_rows;
        auto reject = [&](ValidationIssue::Kind kind, std::string id, std::string reason,
                          std::optional<long long> value = std::nullopt) {
            out.issues.push_back({kind, row.line, std::move(id), std::move(reason), value});
            ++out.rejected_rows;
        };

        if (row.fields.size() != 3) {
            reject(ValidationIssue::Kind::Malformed, {},
                   "expected 3 fields, found " + std::to_string(row.fields.size()));
            continue;
        }
        const std::string id(util::trim(row.fields[columns->id]));
        if (id.empty()) {
            reject(ValidationIssue::Kind::Malformed, {}, "empty participant_id");
            continue;
        }
        const auto split = parse_split(row.fields[columns->split]);
        if (!split) {
            reject(ValidationIssue::Kind::Malformed, id,
                   "unknown split '" + row.fields[columns->split] + "'");
            continue;
        }
        std::optional<int> score;
        const auto score_text = util::trim(row.fields[columns->score]);
        if (!score_text.empty()) {
            const auto v = parse_integer(score_text);
            if (!v) {
                reject(ValidationIssue::Kind::Malformed, id,
                       "phq8_score '" + std::string(score_text) + "' is not an integer");
                continue;
            }
            if (!is_valid_score(*v)) {
                reject(ValidationIssue::Kind::ScoreOutOfRange, id,
                       "phq8_score " + std::to_string(*v) + " outside [0, 24]", *v);
                continue;
            }
            score = static_cast<int>(*v);
        }
        if (seen.contains(id)) {
            reject(ValidationIssue::Kind::Duplicate, id, "duplicate participant_id");
            continue;
        }

        ManifestEntry entry{id, resolve_transcript_path(labels_dir, id), score, *split, row.line};
        if (check_transcripts) {
            if (!fs::exists(entry.transcript_path)) {
                reject(ValidationIssue::Kind::MissingTranscript, id,
                       "no transcript at " + entry.transcript_path.string());
                continue;
            }
            try {
                (void)load_transcript(entry);
            } catch (const DatasetError& e) {
                reject(ValidationIssue::Kind::BadTranscript, id, e.what());
                continue;
            }
        }
        seen.insert(id);
        ++out.manifest.counts_by_split[*split];
        out.manifest.entries.push_back(std::move(entry));
    }
    return out;
}

CorpusManifest load_manifest(const fs::path& labels_path) {
    auto v = validate_manifest(labels_path, false);
    if (v.issues.empty()) return std::move(v.manifest);
    const auto& first = v.issues.front();
    switch (first.kind) {
        case ValidationIssue::Kind::ScoreOutOfRange:
            throw ScoreOutOfRange(first.participant_id, first.value.value_or(0));
        case ValidationIssue::Kind::Duplicate:
            throw DuplicateParticipant(first.participant_id);
        default:
            throw MalformedRow(first.line, first.reason);
    }
}

namespace {

std::optional<Speaker> parse_speaker(std::string_view label) {
    const auto t = util::fold_token(label);
    if (t == "participant" || t == "p" || t == "subject" || t == "patient" || t == "user")
        return Speaker::Participant;
    if (t == "interviewer" || t == "ellie" || t == "i" || t == "agent" || t == "therapist" ||
        t == "assistant")
        return Speaker::Interviewer;
    return std::nullopt;
}

}  // namespace

Transcript load_transcript_file(const fs::path& path, std::string participant_id) {
    auto text = util::read_file(path);
    if (!text) throw MissingFile(path);

    Transcript out;
    out.participant_id = std::move(participant_id);

    if (path.extension() == ".csv") {
        std::vector<csv::Row> rows;
        try {
            rows = csv::parse(*text);
        } catch (const csv::ParseError& e) {
            throw MalformedLine(path, e.line(), e.what());
        }
        std::size_t start = 0;
        if (!rows.empty() && rows.front().fields.size() == 2 &&
            util::to_lower(util::trim(rows.front().fields[0])) == "speaker" &&
            util::to_lower(util::trim(rows.front().fields[1])) == "text") {
            start = 1;
        }
        for (std::size_t r = start; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.fields.size() != 2) {
                throw MalformedLine(path, row.line,
                                    "expected speaker,text but found " +
                                        std::to_string(row.fields.size()) + " fields");
            }
            const auto body = util::trim(row.fields[1]);
            if (body.empty()) continue;
            auto speaker = parse_speaker(row.fields[0]);
            if (!speaker) {
                out.warnings.push_back("line " + std::to_string(row.line) + ": unknown speaker '" +
                                       row.fields[0] + "' treated as Interviewer");
                speaker = Speaker::Interviewer;
            }
            out.turns.push_back({*speaker, std::string(body)});
        }
    } else {
        std::string_view rest = *text;
        if (rest.size() >= 3 && rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);
        while (!rest.empty()) {
            const auto nl = rest.find('\n');
            const auto line = rest.substr(0, nl);
            const auto body = util::trim(line);
            if (!body.empty()) out.turns.push_back({Speaker::Participant, std::string(body)});
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    if (out.turns.empty()) throw EmptyTranscript(out.participant_id);
    return out;
}

Transcript load_transcript(const ManifestEntry& entry) {
    auto t = load_transcript_file(entry.transcript_path, entry.participant_id);
    t.gold_score = entry.gold_score;
    t.split = entry.split;
    return t;
}

void write_transcript(const Transcript& transcript, const fs::path& path) {
    std::string out = "speaker,text\n";
    for (const auto& t : transcript.turns) {
        out += csv::format_row({std::string(speaker_name(t.speaker)), t.text});
    }
    util::atomic_write_file(path, out);
}

std::map<Band, std::size_t> band_distribution(const CorpusManifest& manifest, Split split) {
    std::map<Band, std::size_t> out;
    for (auto b : kAllBands) out[b] = 0;
    for (const auto& e : manifest.entries) {
        if (e.split != split) continue;
        if (!e.gold_score) throw MissingGoldScore(e.participant_id);
        ++out[band_of(*e.gold_score)];
    }
    return out;
}

}  // namespace cotphq
