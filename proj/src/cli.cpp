#include <algorithm>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cotphq/cli.hpp"
#include "cotphq/util.hpp"

namespace cotphq::cli {

using nlohmann::json;

namespace {

// Flag values land here first so that a --config file can sit underneath them.
struct FlagValues {
    std::string config;
    std::string manifest;
    std::string split;
    std::string mode;
    std::vector<std::string> models;
    std::string backend;
    std::string cache_dir;
    std::string out;
    int workers = 0;
    std::string templates;
    bool participant_only = true;
    std::size_t max_chars = 0;
    int repeats = 0;
    double temperature = 0.0;
    int max_tokens = 0;
    std::int64_t seed = 0;
    std::string records;
    bool skip_transcripts = false;
};

struct Options {
    CLI::Option* config = nullptr;
    CLI::Option* manifest = nullptr;
    CLI::Option* split = nullptr;
    CLI::Option* mode = nullptr;
    CLI::Option* models = nullptr;
    CLI::Option* backend = nullptr;
    CLI::Option* cache_dir = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* workers = nullptr;
    CLI::Option* templates = nullptr;
    CLI::Option* participant_only = nullptr;
    CLI::Option* max_chars = nullptr;
    CLI::Option* repeats = nullptr;
    CLI::Option* temperature = nullptr;
    CLI::Option* max_tokens = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* records = nullptr;
};

bool given(const CLI::Option* o) { return o && o->count() > 0; }

void add_common(CLI::App* sub, FlagValues& v, Options& o) {
    o.config = sub->add_option("--config", v.config, "JSON file with settings (flags override it)");
    o.manifest = sub->add_option("--manifest", v.manifest, "labels CSV (participant_id,split,phq8_score)");
    o.split = sub->add_option("--split", v.split, "train | val | test | unassigned | all (default test)");
    o.out = sub->add_option("--out", v.out, "output directory (default cotphq-out)");
}

void add_run_flags(CLI::App* sub, FlagValues& v, Options& o, bool with_mode) {
    if (with_mode) o.mode = sub->add_option("--mode", v.mode, "standard | cot (default cot)");
    o.models = sub->add_option("--model", v.models, "model id; repeat for several");
    o.backend = sub->add_option("--backend", v.backend,
                                "mock:<script.json> or an http(s) base URL (default $COTPHQ_BASE_URL)");
    o.cache_dir = sub->add_option("--cache-dir", v.cache_dir, "response cache directory");
    o.workers = sub->add_option("--workers", v.workers, "concurrent transcripts (default 1)");
    o.templates = sub->add_option("--templates", v.templates, "directory of prompt template overrides");
    o.participant_only = sub->add_flag("--participant-only", v.participant_only,
                                       "drop interviewer turns (default true; =false keeps them)");
    o.max_chars = sub->add_option("--max-chars", v.max_chars, "transcript budget per prompt");
    o.repeats = sub->add_option("--repeats", v.repeats, "independent runs per transcript (default 1)");
    o.temperature = sub->add_option("--temperature", v.temperature, "sampling temperature (default 0)");
    o.max_tokens = sub->add_option("--max-tokens", v.max_tokens, "completion budget (default 4096)");
    o.seed = sub->add_option("--seed", v.seed, "base request seed (default 0)");
}

RunConfig resolve(const FlagValues& v, const Options& o) {
    RunConfig c;
    if (given(o.config)) {
        std::ifstream in(v.config);
        if (!in) throw std::invalid_argument("cannot read config file " + v.config);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file " + v.config + ": " + e.what());
        }
        try {
            c.apply_json(j);
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file " + v.config + ": " + e.what());
        }
    }
    if (given(o.manifest)) c.manifest = v.manifest;
    if (given(o.split)) c.split = v.split;
    if (given(o.mode)) {
        const auto m = parse_mode(v.mode);
        if (!m) throw std::invalid_argument("--mode must be standard or cot");
        c.mode = *m;
    }
    if (given(o.models)) c.models = v.models;
    if (given(o.backend)) c.backend = v.backend;
    if (given(o.cache_dir)) c.cache_dir = v.cache_dir;
    if (given(o.out)) c.out_dir = v.out;
    if (given(o.workers)) c.workers = v.workers;
    if (given(o.templates)) c.templates = v.templates;
    if (given(o.participant_only)) c.participant_only = v.participant_only;
    if (given(o.max_chars)) c.max_chars = v.max_chars;
    if (given(o.repeats)) c.repeats = v.repeats;
    if (given(o.temperature)) c.temperature = v.temperature;
    if (given(o.max_tokens)) c.max_tokens = v.max_tokens;
    if (given(o.seed)) c.seed = v.seed;
    return c;
}

std::string issue_kind(ValidationIssue::Kind k) {
    switch (k) {
        case ValidationIssue::Kind::Malformed: return "malformed row";
        case ValidationIssue::Kind::ScoreOutOfRange: return "score out of range";
        case ValidationIssue::Kind::Duplicate: return "duplicate participant";
        case ValidationIssue::Kind::MissingTranscript: return "missing transcript";
        case ValidationIssue::Kind::BadTranscript: return "unreadable transcript";
    }
    return "issue";
}

int cmd_validate(const std::filesystem::path& manifest, bool check_transcripts, std::ostream& out) {
    const auto result = validate_manifest(manifest, check_transcripts);
    out << "manifest: " << manifest.string() << '\n';
    out << "rows: " << result.input_rows << " (" << result.manifest.entries.size() << " accepted, "
        << result.rejected_rows << " rejected)\n\n";

    out << "split         count\n";
    for (auto s : kAllSplits) {
        auto it = result.manifest.counts_by_split.find(s);
        const auto n = it == result.manifest.counts_by_split.end() ? 0 : it->second;
        char line[64];
        std::snprintf(line, sizeof line, "%-12s %6zu\n", std::string(split_name(s)).c_str(), n);
        out << line;
    }

    out << "\nband distribution\n";
    char head[128];
    std::snprintf(head, sizeof head, "%-12s", "split");
    out << head;
    for (auto b : kAllBands) {
        std::snprintf(head, sizeof head, " %18s", std::string(band_label(b)).c_str());
        out << head;
    }
    out << "  unlabeled\n";
    for (auto s : kAllSplits) {
        std::array<std::size_t, kBandCount> counts{};
        std::size_t unlabeled = 0;
        for (const auto& e : result.manifest.entries) {
            if (e.split != s) continue;
            if (e.gold_score) ++counts[static_cast<std::size_t>(band_of(*e.gold_score))];
            else ++unlabeled;
        }
        std::snprintf(head, sizeof head, "%-12s", std::string(split_name(s)).c_str());
        out << head;
        for (auto c : counts) {
            std::snprintf(head, sizeof head, " %18zu", c);
            out << head;
        }
        std::snprintf(head, sizeof head, " %10zu\n", unlabeled);
        out << head;
    }

    if (result.ok()) {
        out << "\nOK\n";
        return kExitOk;
    }
    out << "\n" << result.issues.size() << " issue(s):\n";
    for (const auto& issue : result.issues) {
        out << "  line " << issue.line;
        if (!issue.participant_id.empty()) out << " (" << issue.participant_id << ")";
        out << ": " << issue_kind(issue.kind) << ": " << issue.reason << '\n';
    }
    return kExitValidation;
}

void write_report(const std::filesystem::path& path, const json& j) {
    util::atomic_write_file(path, j.dump(2) + "\n");
}

std::shared_ptr<Backend> backend_for(const Environment& env, const RunConfig& config) {
    return env.backend_factory ? env.backend_factory(config) : make_backend(config);
}

}  // namespace

Environment default_environment() { return Environment{std::cout, std::cerr, make_backend, {}}; }

int run_cli(const std::vector<std::string>& args, Environment& env) {
    CLI::App app{"Staged PHQ-8 assessment of interview transcripts", "cotphq"};
    app.require_subcommand(1);

    FlagValues v;
    Options validate_opts, run_opts, eval_opts, ablate_opts;

    auto* validate = app.add_subcommand("validate", "check a labels manifest and report split counts");
    validate_opts.manifest = validate->add_option("--manifest", v.manifest, "labels CSV")->required();
    validate->add_flag("--skip-transcripts", v.skip_transcripts, "do not open transcript files");

    auto* run = app.add_subcommand("run", "assess every transcript of a split");
    add_common(run, v, run_opts);
    add_run_flags(run, v, run_opts, true);

    auto* eval = app.add_subcommand("eval", "score records against gold labels");
    add_common(eval, v, eval_opts);
    eval_opts.records = eval->add_option("--records", v.records, "records JSONL (default <out>/records.jsonl)");

    auto* ablate = app.add_subcommand("ablate", "run standard and chain-of-thought prompting and compare");
    add_common(ablate, v, ablate_opts);
    add_run_flags(ablate, v, ablate_opts, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, env.out, env.err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) {
            return cmd_validate(v.manifest, !v.skip_transcripts, env.out);
        }

        if (run->parsed()) {
            const auto config = resolve(v, run_opts);
            config.validate();
            auto backend = backend_for(env, config);
            const auto outcome = execute_run(config, config.mode, *backend, env.err, env.stop);
            env.out << "records: " << config.records_path().string() << '\n';
            if (outcome.over_failure_threshold()) {
                env.err << "error: " << outcome.failed << " of " << outcome.attempted
                        << " transcripts failed\n";
                return kExitRunFailure;
            }
            return kExitOk;
        }

        if (eval->parsed()) {
            const auto config = resolve(v, eval_opts);
            if (config.manifest.empty()) throw std::invalid_argument("--manifest is required");
            if (config.split != "all" && !parse_split(config.split)) {
                throw std::invalid_argument("unknown --split '" + config.split + "'");
            }
            const std::filesystem::path records_path =
                given(eval_opts.records) ? std::filesystem::path(v.records) : config.records_path();
            if (!std::filesystem::exists(records_path)) {
                throw std::invalid_argument("no records at " + records_path.string());
            }
            const auto manifest = load_manifest(config.manifest);
            const auto report = evaluate(read_records(records_path), manifest, config.split_filter());
            write_report(config.out_dir / "eval_report.json", report_json(report));
            env.out << report_text(report);
            return kExitOk;
        }

        if (ablate->parsed()) {
            const auto config = resolve(v, ablate_opts);
            config.validate();
            auto backend = backend_for(env, config);
            AblationReport report;
            env.err << "ablation: standard prompting\n";
            report.standard_over_threshold =
                execute_run(config, PromptMode::Standard, *backend, env.err, env.stop).over_failure_threshold();
            env.err << "ablation: chain-of-thought prompting\n";
            report.cot_over_threshold =
                execute_run(config, PromptMode::ChainOfThought, *backend, env.err, env.stop)
                    .over_failure_threshold();

            auto records = read_records(config.records_path());
            std::erase_if(records, [&](const AssessmentRecord& r) {
                return std::find(config.models.begin(), config.models.end(), r.model_id) ==
                           config.models.end() ||
                       r.repeat >= config.repeats;
            });
            const auto manifest = load_manifest(config.manifest);
            report.eval = evaluate(records, manifest, config.split_filter());
            write_report(config.out_dir / "ablation_report.json", ablation_json(report));
            env.out << ablation_text(report);
            return report.standard_over_threshold || report.cot_over_threshold ? kExitRunFailure : kExitOk;
        }
    } catch (const Cancelled&) {
        env.err << "interrupted\n";
        return 130;
    } catch (const JoinFailure& e) {
        env.err << "error: " << e.what() << '\n';
        return kExitJoinFailure;
    } catch (const DatasetError& e) {
        env.err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ScoreOutOfRange& e) {
        env.err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        env.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        env.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace cotphq::cli
