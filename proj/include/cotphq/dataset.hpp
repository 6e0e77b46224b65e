#pragma once
// Interview corpus ingestion: labels manifest plus per-participant transcripts.
//
// Layout on disk:
//   <root>/labels.csv                  participant_id,split,phq8_score
//   <root>/transcripts/<id>.csv        speaker,text
//   <root>/transcripts/<id>.txt        one participant utterance per line
//
// Loaded manifests and transcripts are plain values; share them freely
// across worker threads once constructed.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cotphq/metrics.hpp"

namespace cotphq {

enum class Speaker { Interviewer, Participant };
enum class Split { Train, Val, Test, Unassigned };

inline constexpr std::array<Split, 4> kAllSplits = {Split::Train, Split::Val, Split::Test,
                                                    Split::Unassigned};

std::string_view speaker_name(Speaker s) noexcept;
std::string_view split_name(Split s) noexcept;
// Accepts train/val/dev/validation/test (any case); empty means Unassigned.
std::optional<Split> parse_split(std::string_view text);

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingFile : public DatasetError {
public:
    explicit MissingFile(const std::filesystem::path& p)
        : DatasetError("missing file: " + p.string()), path_(p) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

class MalformedRow : public DatasetError {
public:
    MalformedRow(std::size_t line, std::string reason)
        : DatasetError("labels line " + std::to_string(line) + ": " + reason),
          line_(line),
          reason_(std::move(reason)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class DuplicateParticipant : public DatasetError {
public:
    explicit DuplicateParticipant(const std::string& id)
        : DatasetError("duplicate participant_id " + id) {}
};

class EmptyTranscript : public DatasetError {
public:
    explicit EmptyTranscript(const std::string& id)
        : DatasetError("transcript for " + id + " has no non-blank turns") {}
};

class MalformedLine : public DatasetError {
public:
    MalformedLine(const std::filesystem::path& p, std::size_t line, const std::string& reason)
        : DatasetError(p.string() + ":" + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class MissingGoldScore : public DatasetError {
public:
    explicit MissingGoldScore(const std::string& id)
        : DatasetError("participant " + id + " has no gold PHQ-8 score"), participant_id_(id) {}
    const std::string& participant_id() const noexcept { return participant_id_; }

private:
    std::string participant_id_;
};

struct Turn {
    Speaker speaker = Speaker::Participant;
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct Transcript {
    std::string participant_id;
    std::vector<Turn> turns;
    std::optional<int> gold_score;
    Split split = Split::Unassigned;
    // Non-fatal ingestion notes, e.g. unknown speaker labels.
    std::vector<std::string> warnings;

    // One "Speaker: text" line per turn. With participant_only, interviewer
    // turns are dropped.
    std::string render(bool participant_only) const;
};

struct ManifestEntry {
    std::string participant_id;
    std::filesystem::path transcript_path;
    std::optional<int> gold_score;
    Split split = Split::Unassigned;
    std::size_t line = 0;
};

struct CorpusManifest {
    std::filesystem::path source;
    std::vector<ManifestEntry> entries;
    std::map<Split, std::size_t> counts_by_split;

    const ManifestEntry* find(std::string_view participant_id) const;
    std::vector<const ManifestEntry*> in_split(std::optional<Split> split) const;
};

struct ValidationIssue {
    enum class Kind { Malformed, ScoreOutOfRange, Duplicate, MissingTranscript, BadTranscript };
    Kind kind;
    std::size_t line = 0;
    std::string participant_id;
    std::string reason;
    std::optional<long long> value;  // offending score, for ScoreOutOfRange
};

struct ManifestValidation {
    CorpusManifest manifest;  // accepted rows only
    std::vector<ValidationIssue> issues;
    std::size_t input_rows = 0;
    std::size_t rejected_rows = 0;

    bool ok() const noexcept { return issues.empty(); }
};

// Transcript lookup used for every manifest row: prefers <id>.csv over <id>.txt
// under <labels dir>/transcripts/.
std::filesystem::path resolve_transcript_path(const std::filesystem::path& labels_dir,
                                              std::string_view participant_id);

// Lenient pass: every row is either accepted or recorded as an issue. With
// check_transcripts, each accepted row's transcript must exist and load.
ManifestValidation validate_manifest(const std::filesystem::path& labels_path,
                                     bool check_transcripts = false);

// Strict load; throws MissingFile, MalformedRow, ScoreOutOfRange or
// DuplicateParticipant for the first offending row.
CorpusManifest load_manifest(const std::filesystem::path& labels_path);

Transcript load_transcript(const ManifestEntry& entry);
Transcript load_transcript_file(const std::filesystem::path& path, std::string participant_id);

// Writes the two-column CSV form.
void write_transcript(const Transcript& transcript, const std::filesystem::path& path);

// Throws MissingGoldScore if an entry in the split lacks a label.
std::map<Band, std::size_t> band_distribution(const CorpusManifest& manifest, Split split);

}  // namespace cotphq
