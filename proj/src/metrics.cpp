#include "cotphq/metrics.hpp"

#include <cmath>

namespace cotphq {

namespace {

// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(long double x) noexcept {
        const long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    long double value() const noexcept { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

void check_lengths(std::span<const int> predictions, std::span<const int> golds) {
    if (predictions.size() != golds.size()) {
        throw std::invalid_argument("prediction and gold vectors differ in length (" +
                                    std::to_string(predictions.size()) + " vs " +
                                    std::to_string(golds.size()) + ")");
    }
}

long double mean_of(std::span<const int> xs) {
    CompensatedSum s;
    for (int x : xs) s.add(static_cast<long double>(x));
    return s.value() / static_cast<long double>(xs.size());
}

}  // namespace

ScoreOutOfRange::ScoreOutOfRange(std::string participant_id, long long value)
    : std::runtime_error(
          "PHQ-8 score " + std::to_string(value) + " outside [0, 24]" +
          (participant_id.empty() ? std::string{} : " for participant " + participant_id)),
      participant_id_(std::move(participant_id)),
      value_(value) {}

bool is_valid_score(long long score) noexcept {
    return score >= kMinScore && score <= kMaxScore;
}

Band band_of(int score) {
    for (const auto& r : kBandTable) {
        if (score >= r.lo && score <= r.hi) return r.band;
    }
    throw ScoreOutOfRange(score);
}

std::string_view band_label(Band band) noexcept {
    switch (band) {
        case Band::Minimal: return "Minimal";
        case Band::Mild: return "Mild";
        case Band::Moderate: return "Moderate";
        case Band::ModeratelySevere: return "Moderately Severe";
        case Band::Severe: return "Severe";
    }
    return "?";
}

std::string_view band_key(Band band) noexcept {
    switch (band) {
        case Band::Minimal: return "minimal";
        case Band::Mild: return "mild";
        case Band::Moderate: return "moderate";
        case Band::ModeratelySevere: return "moderately_severe";
        case Band::Severe: return "severe";
    }
    return "?";
}

std::string band_definition(Band band) {
    const auto& r = kBandTable[static_cast<std::size_t>(band)];
    return std::string(band_label(band)) + ": " + std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

void EvalPairs::validate() const {
    check_lengths(predictions, golds);
    for (int p : predictions) {
        if (!is_valid_score(p)) throw ScoreOutOfRange(p);
    }
    for (int g : golds) {
        if (!is_valid_score(g)) throw ScoreOutOfRange(g);
    }
}

std::optional<double> ccc(std::span<const int> predictions, std::span<const int> golds) {
    check_lengths(predictions, golds);
    if (predictions.size() < 2) {
        throw std::invalid_argument("CCC needs at least two pairs");
    }
    const auto n = static_cast<long double>(predictions.size());
    const long double mean_p = mean_of(predictions);
    const long double mean_g = mean_of(golds);

    CompensatedSum var_p, var_g, cov;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const long double dp = predictions[i] - mean_p;
        const long double dg = golds[i] - mean_g;
        var_p.add(dp * dp);
        var_g.add(dg * dg);
        cov.add(dp * dg);
    }
    const long double s_pp = var_p.value() / n;
    const long double s_gg = var_g.value() / n;
    const long double s_pg = cov.value() / n;
    const long double shift = mean_p - mean_g;
    const long double denom = s_pp + s_gg + shift * shift;
    if (denom == 0.0L) return std::nullopt;
    return static_cast<double>(2.0L * s_pg / denom);
}

std::optional<double> ccc(const EvalPairs& pairs) {
    pairs.validate();
    return ccc(pairs.predictions, pairs.golds);
}

double mae(std::span<const int> predictions, std::span<const int> golds) {
    check_lengths(predictions, golds);
    if (predictions.empty()) throw EmptyInput("MAE over zero pairs");
    CompensatedSum s;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        s.add(std::fabs(static_cast<long double>(predictions[i]) - golds[i]));
    }
    return static_cast<double>(s.value() / static_cast<long double>(predictions.size()));
}

double mae(const EvalPairs& pairs) {
    pairs.validate();
    return mae(pairs.predictions, pairs.golds);
}

EvalSummary summarize(const EvalPairs& pairs) {
    pairs.validate();
    EvalSummary out;
    out.n = pairs.predictions.size();
    out.excluded_count = pairs.excluded_count;
    out.mae = mae(pairs.predictions, pairs.golds);
    if (out.n >= 2) out.ccc = ccc(pairs.predictions, pairs.golds);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < out.n; ++i) {
        const int p = pairs.predictions[i];
        const int g = pairs.golds[i];
        ++out.band_confusion[static_cast<std::size_t>(band_of(g))]
                            [static_cast<std::size_t>(band_of(p))];
        if ((p >= kDepressedCutoff) == (g >= kDepressedCutoff)) ++agree;
    }
    out.binary_accuracy = static_cast<double>(agree) / static_cast<double>(out.n);
    return out;
}

}  // namespace cotphq
