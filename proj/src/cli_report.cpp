#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "cotphq/cli.hpp"

namespace cotphq::cli {

using nlohmann::json;

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

std::string join_failure_message(const std::vector<std::string>& missing,
                                 const std::vector<std::string>& unmatched) {
    std::string msg = "records do not join to gold labels";
    if (!missing.empty()) msg += "; no record for: " + join_ids(missing);
    if (!unmatched.empty()) msg += "; not in manifest: " + join_ids(unmatched);
    return msg;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    // "-0.000" reads as a regression that is not there.
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

std::string signed_fixed(double v, int decimals) {
    auto s = fixed(v, decimals);
    if (s.front() != '-') s.insert(0, "+");
    return s;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
    if (s.size() >= width) return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

json confusion_json(const BandConfusion& m) {
    json out = json::object();
    for (auto gold : kAllBands) {
        json row = json::object();
        for (auto pred : kAllBands) {
            row[std::string(band_key(pred))] = m[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)];
        }
        out[std::string(band_key(gold))] = std::move(row);
    }
    return out;
}

json ccc_json(const std::optional<double>& v) { return v ? json(*v) : json("undefined"); }

json row_json(const EvalRow& row) {
    json j;
    j["model"] = row.model;
    j["mode"] = std::string(mode_name(row.mode));
    j["status"] = row.failed ? "failed" : "ok";
    if (row.failed) j["failure"] = row.failure;
    j["repeats"] = row.runs.size();
    j["n"] = row.n();
    j["excluded_count"] = row.excluded_count();
    if (!row.failed) {
        j["ccc"] = ccc_json(row.ccc());
        j["mae"] = row.mae();
        j["binary_accuracy"] = row.binary_accuracy();
        j["band_confusion"] = confusion_json(row.band_confusion());
    }
    if (row.runs.size() > 1) {
        json runs = json::array();
        for (const auto& r : row.runs) {
            json rj;
            rj["n"] = r.n;
            rj["excluded_count"] = r.excluded_count;
            if (r.n > 0) {
                rj["ccc"] = ccc_json(r.ccc);
                rj["mae"] = r.mae;
                rj["binary_accuracy"] = r.binary_accuracy;
            }
            runs.push_back(std::move(rj));
        }
        j["runs"] = std::move(runs);
    }
    return j;
}

std::string ccc_text(const EvalRow& row) {
    if (row.failed) return "failed";
    const auto c = row.ccc();
    return c ? fixed(*c, 3) : "undefined";
}

std::string confusion_text(const BandConfusion& m) {
    std::ostringstream os;
    os << "    " << pad("gold \\ pred", 20);
    for (auto b : kAllBands) os << pad(std::string(band_label(b)), 19, true);
    os << '\n';
    for (auto gold : kAllBands) {
        os << "    " << pad(std::string(band_label(gold)), 20);
        for (auto pred : kAllBands) {
            os << pad(std::to_string(m[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)]), 19, true);
        }
        os << '\n';
    }
    return os.str();
}

const EvalRow* find_row(const EvalReport& report, const std::string& model, PromptMode mode) {
    for (const auto& r : report.rows) {
        if (r.model == model && r.mode == mode) return &r;
    }
    return nullptr;
}

std::vector<std::string> models_of(const EvalReport& report) {
    std::vector<std::string> out;
    for (const auto& r : report.rows) {
        if (std::find(out.begin(), out.end(), r.model) == out.end()) out.push_back(r.model);
    }
    return out;
}

EvalRow placeholder_row(const std::string& model, PromptMode mode) {
    EvalRow r;
    r.model = model;
    r.mode = mode;
    r.failed = true;
    r.failure = "no records";
    return r;
}

struct Delta {
    std::optional<double> ccc;
    std::optional<double> mae;
};

Delta delta_of(const EvalRow& standard, const EvalRow& cot) {
    Delta d;
    if (standard.failed || cot.failed) return d;
    d.mae = cot.mae() - standard.mae();
    const auto a = standard.ccc();
    const auto b = cot.ccc();
    if (a && b) d.ccc = *b - *a;
    return d;
}

}  // namespace

JoinFailure::JoinFailure(std::vector<std::string> missing, std::vector<std::string> unmatched)
    : std::runtime_error(join_failure_message(missing, unmatched)),
      missing_(std::move(missing)),
      unmatched_(std::move(unmatched)) {}

std::optional<double> EvalRow::ccc() const {
    if (runs.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& r : runs) {
        // One undefined repeat makes the mean undefined too.
        if (!r.ccc) return std::nullopt;
        sum += *r.ccc;
    }
    return sum / static_cast<double>(runs.size());
}

double EvalRow::mae() const {
    if (runs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : runs) sum += r.mae;
    return sum / static_cast<double>(runs.size());
}

double EvalRow::binary_accuracy() const {
    if (runs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : runs) sum += r.binary_accuracy;
    return sum / static_cast<double>(runs.size());
}

std::size_t EvalRow::n() const {
    std::size_t total = 0;
    for (const auto& r : runs) total += r.n;
    return total;
}

std::size_t EvalRow::excluded_count() const {
    std::size_t total = 0;
    for (const auto& r : runs) total += r.excluded_count;
    return total;
}

BandConfusion EvalRow::band_confusion() const {
    BandConfusion out{};
    for (const auto& r : runs) {
        for (std::size_t g = 0; g < kBandCount; ++g) {
            for (std::size_t p = 0; p < kBandCount; ++p) out[g][p] += r.band_confusion[g][p];
        }
    }
    return out;
}

EvalReport evaluate(const std::vector<AssessmentRecord>& records, const CorpusManifest& manifest,
                    std::optional<Split> split) {
    std::map<std::string, int> gold;
    std::vector<std::string> order;
    for (const auto* e : manifest.in_split(split)) {
        if (!e->gold_score) throw MissingGoldScore(e->participant_id);
        gold.emplace(e->participant_id, *e->gold_score);
        order.push_back(e->participant_id);
    }
    std::sort(order.begin(), order.end());

    std::set<std::string> unmatched;
    // (model, mode) -> repeat -> participant -> latest record (by file order)
    using PerRepeat = std::map<int, std::map<std::string, const AssessmentRecord*>>;
    std::map<std::pair<std::string, int>, PerRepeat> groups;
    for (const auto& r : records) {
        if (!manifest.find(r.participant_id)) {
            unmatched.insert(r.participant_id);
            continue;
        }
        if (!gold.contains(r.participant_id)) continue;  // other split
        auto& slot = groups[{r.model_id, static_cast<int>(r.mode)}][r.repeat][r.participant_id];
        // A later ok record replaces anything; a later failure never hides an ok one.
        if (!slot || r.ok() || !slot->ok()) slot = &r;
    }

    std::set<std::string> missing;
    EvalReport report;
    for (const auto& [key, repeats] : groups) {
        EvalRow row;
        row.model = key.first;
        row.mode = static_cast<PromptMode>(key.second);
        for (const auto& [repeat, by_id] : repeats) {
            EvalPairs pairs;
            for (const auto& id : order) {
                auto it = by_id.find(id);
                if (it == by_id.end()) {
                    missing.insert(id);
                    continue;
                }
                const auto* rec = it->second;
                if (!rec->ok()) {
                    ++pairs.excluded_count;
                    continue;
                }
                pairs.predictions.push_back(rec->severity->phq8_score);
                pairs.golds.push_back(gold.at(id));
            }
            if (pairs.predictions.empty()) {
                EvalSummary empty;
                empty.excluded_count = pairs.excluded_count;
                row.runs.push_back(empty);
                row.failed = true;
                row.failure = "no successful assessments";
            } else {
                row.runs.push_back(summarize(pairs));
            }
        }
        report.rows.push_back(std::move(row));
    }
    if (!missing.empty() || !unmatched.empty()) {
        throw JoinFailure({missing.begin(), missing.end()}, {unmatched.begin(), unmatched.end()});
    }

    // Standard sorts before ChainOfThought by enum order.
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.model != b.model) return a.model < b.model;
        return static_cast<int>(a.mode) < static_cast<int>(b.mode);
    });
    return report;
}

json report_json(const EvalReport& report) {
    json j;
    j["schema"] = "cotphq.eval.v1";
    json rows = json::array();
    for (const auto& r : report.rows) rows.push_back(row_json(r));
    j["rows"] = std::move(rows);
    return j;
}

std::string report_text(const EvalReport& report) {
    std::ostringstream os;
    os << pad("Method", 28) << pad("CCC", 10, true) << pad("MAE", 8, true) << pad("n", 6, true)
       << pad("excluded", 10, true) << pad("binary acc", 12, true) << '\n';
    for (const auto& r : report.rows) {
        const std::string method = r.model + " (" + std::string(mode_name(r.mode)) + ")";
        os << pad(method, 28) << pad(ccc_text(r), 10, true)
           << pad(r.failed ? "-" : fixed(r.mae(), 2), 8, true) << pad(std::to_string(r.n()), 6, true)
           << pad(std::to_string(r.excluded_count()), 10, true)
           << pad(r.failed ? "-" : fixed(r.binary_accuracy(), 3), 12, true) << '\n';
    }
    for (const auto& r : report.rows) {
        if (r.failed) continue;
        os << '\n' << r.model << " (" << mode_name(r.mode) << ") band confusion";
        if (r.runs.size() > 1) os << ", summed over " << r.runs.size() << " repeats";
        os << ":\n" << confusion_text(r.band_confusion());
    }
    return os.str();
}

json ablation_json(const AblationReport& report) {
    json j;
    j["schema"] = "cotphq.ablation.v1";
    j["failure_threshold_exceeded"] = {{"standard", report.standard_over_threshold},
                                       {"cot", report.cot_over_threshold}};
    json models = json::array();
    for (const auto& model : models_of(report.eval)) {
        const auto* s = find_row(report.eval, model, PromptMode::Standard);
        const auto* c = find_row(report.eval, model, PromptMode::ChainOfThought);
        const auto standard = s ? *s : placeholder_row(model, PromptMode::Standard);
        const auto cot = c ? *c : placeholder_row(model, PromptMode::ChainOfThought);
        const auto d = delta_of(standard, cot);
        json m;
        m["model"] = model;
        m["standard"] = row_json(standard);
        m["cot"] = row_json(cot);
        m["delta"] = {{"ccc", d.ccc ? json(*d.ccc) : json(nullptr)},
                      {"mae", d.mae ? json(*d.mae) : json(nullptr)}};
        models.push_back(std::move(m));
    }
    j["models"] = std::move(models);
    return j;
}

std::string ablation_text(const AblationReport& report) {
    std::ostringstream os;
    os << pad("Model", 20) << pad("Method", 12) << pad("CCC", 10, true) << pad("MAE", 8, true)
       << pad("n", 6, true) << pad("excluded", 10, true) << '\n';
    for (const auto& model : models_of(report.eval)) {
        const auto* s = find_row(report.eval, model, PromptMode::Standard);
        const auto* c = find_row(report.eval, model, PromptMode::ChainOfThought);
        const auto standard = s ? *s : placeholder_row(model, PromptMode::Standard);
        const auto cot = c ? *c : placeholder_row(model, PromptMode::ChainOfThought);
        for (const auto* r : {&standard, &cot}) {
            os << pad(model, 20) << pad(r->mode == PromptMode::Standard ? "Standard" : "CoT", 12)
               << pad(ccc_text(*r), 10, true) << pad(r->failed ? "-" : fixed(r->mae(), 2), 8, true)
               << pad(std::to_string(r->n()), 6, true)
               << pad(std::to_string(r->excluded_count()), 10, true);
            if (r->failed) os << "  (" << r->failure << ")";
            os << '\n';
        }
        const auto d = delta_of(standard, cot);
        os << pad("", 20) << pad("delta", 12) << pad(d.ccc ? signed_fixed(*d.ccc, 3) : "-", 10, true)
           << pad(d.mae ? signed_fixed(*d.mae, 2) : "-", 8, true) << '\n';
    }
    if (report.standard_over_threshold) os << "warning: more than half of the standard run failed\n";
    if (report.cot_over_threshold) os << "warning: more than half of the cot run failed\n";
    return os.str();
}

}  // namespace cotphq::cli
