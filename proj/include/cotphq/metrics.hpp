#pragma once
// Agreement metrics for PHQ-8 severity predictions.
//
// CCC uses population moments (divide by N). All sums are accumulated in
// long double with Neumaier compensation so results stay stable for large N.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cotphq {

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 24;
// PHQ-8 >= 10 is read as a positive screen.
inline constexpr int kDepressedCutoff = 10;

class ScoreOutOfRange : public std::runtime_error {
public:
    ScoreOutOfRange(std::string participant_id, long long value);
    explicit ScoreOutOfRange(long long value) : ScoreOutOfRange({}, value) {}

    const std::string& participant_id() const noexcept { return participant_id_; }
    long long value() const noexcept { return value_; }

private:
    std::string participant_id_;
    long long value_;
};

class EmptyInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Band { Minimal = 0, Mild, Moderate, ModeratelySevere, Severe };
inline constexpr std::size_t kBandCount = 5;
inline constexpr std::array<Band, kBandCount> kAllBands = {
    Band::Minimal, Band::Mild, Band::Moderate, Band::ModeratelySevere, Band::Severe};

struct BandRange {
    Band band;
    int lo;
    int hi;
};

inline constexpr std::array<BandRange, kBandCount> kBandTable = {{
    {Band::Minimal, 0, 4},
    {Band::Mild, 5, 9},
    {Band::Moderate, 10, 14},
    {Band::ModeratelySevere, 15, 19},
    {Band::Severe, 20, 24},
}};

// Throws ScoreOutOfRange outside [0, 24].
Band band_of(int score);

bool is_valid_score(long long score) noexcept;

// "Moderately Severe"
std::string_view band_label(Band band) noexcept;
// "moderately_severe"
std::string_view band_key(Band band) noexcept;
// "Moderately Severe: 15-19"
std::string band_definition(Band band);

struct EvalPairs {
    std::vector<int> predictions;
    std::vector<int> golds;
    std::size_t excluded_count = 0;

    // Length match and value range; throws std::invalid_argument / ScoreOutOfRange.
    void validate() const;
};

using BandConfusion = std::array<std::array<std::size_t, kBandCount>, kBandCount>;

struct EvalSummary {
    // nullopt when CCC is undefined (zero denominator or fewer than two pairs).
    std::optional<double> ccc;
    double mae = 0.0;
    std::size_t n = 0;
    std::size_t excluded_count = 0;
    // [gold band][predicted band]
    BandConfusion band_confusion{};
    double binary_accuracy = 0.0;
};

// Concordance correlation coefficient. Requires at least two pairs; returns
// nullopt when both sequences are constant with equal means.
std::optional<double> ccc(std::span<const int> predictions, std::span<const int> golds);
// Pair overloads also range-check every score.
std::optional<double> ccc(const EvalPairs& pairs);

// Mean absolute error. Throws EmptyInput on empty input.
double mae(std::span<const int> predictions, std::span<const int> golds);
double mae(const EvalPairs& pairs);

EvalSummary summarize(const EvalPairs& pairs);

}  // namespace cotphq
