#include <atomic>
#include <map>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "cotphq/cli.hpp"
#include "cotphq/http_backend.hpp"
#include "cotphq/mock_backend.hpp"
#include "cotphq/response_cache.hpp"

namespace cotphq::cli {

using nlohmann::json;

void RunConfig::validate() const {
    if (manifest.empty()) throw std::invalid_argument("--manifest is required");
    if (split != "all" && !parse_split(split)) throw std::invalid_argument("unknown --split '" + split + "'");
    if (models.empty()) throw std::invalid_argument("at least one --model is required");
    for (const auto& m : models) {
        if (m.empty()) throw std::invalid_argument("--model must not be empty");
    }
    if (workers < 1) throw std::invalid_argument("--workers must be >= 1");
    if (repeats < 1) throw std::invalid_argument("--repeats must be >= 1");
    if (max_chars == 0) throw std::invalid_argument("--max-chars must be positive");
    if (!(temperature >= 0.0)) throw std::invalid_argument("--temperature must be >= 0");
    if (max_tokens <= 0) throw std::invalid_argument("--max-tokens must be positive");
}

std::optional<Split> RunConfig::split_filter() const {
    if (split == "all") return std::nullopt;
    return parse_split(split);
}

void RunConfig::apply_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    static const std::set<std::string> known = {
        "manifest", "split",     "mode",      "model",          "models",    "backend",
        "cache_dir", "out",      "workers",   "templates",      "participant_only",
        "max_chars", "repeats",  "temperature", "max_tokens",   "seed"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    }
    if (j.contains("manifest")) manifest = j["manifest"].get<std::string>();
    if (j.contains("split")) split = j["split"].get<std::string>();
    if (j.contains("mode")) {
        const auto m = parse_mode(j["mode"].get<std::string>());
        if (!m) throw std::invalid_argument("config mode must be standard or cot");
        mode = *m;
    }
    for (const char* key : {"model", "models"}) {
        if (!j.contains(key)) continue;
        const auto& v = j[key];
        models = v.is_array() ? v.get<std::vector<std::string>>()
                              : std::vector<std::string>{v.get<std::string>()};
    }
    if (j.contains("backend")) backend = j["backend"].get<std::string>();
    if (j.contains("cache_dir")) {
        if (j["cache_dir"].is_null()) cache_dir.reset();
        else cache_dir = j["cache_dir"].get<std::string>();
    }
    if (j.contains("out")) out_dir = j["out"].get<std::string>();
    if (j.contains("workers")) workers = j["workers"].get<int>();
    if (j.contains("templates")) {
        if (j["templates"].is_null()) templates.reset();
        else templates = j["templates"].get<std::string>();
    }
    if (j.contains("participant_only")) participant_only = j["participant_only"].get<bool>();
    if (j.contains("max_chars")) max_chars = j["max_chars"].get<std::size_t>();
    if (j.contains("repeats")) repeats = j["repeats"].get<int>();
    if (j.contains("temperature")) temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) max_tokens = j["max_tokens"].get<int>();
    if (j.contains("seed")) {
        if (j["seed"].is_null()) seed.reset();
        else seed = j["seed"].get<std::int64_t>();
    }
}

std::shared_ptr<Backend> make_backend(const RunConfig& config) {
    const std::string_view spec = config.backend;
    if (spec.starts_with("mock:")) {
        const std::filesystem::path script(spec.substr(5));
        return std::make_shared<MockBackend>(MockScript::load(script), script.stem().string());
    }
    auto options = HttpBackendOptions::from_env();
    if (!spec.empty()) options.base_url = std::string(spec);
    return std::make_shared<HttpBackend>(std::move(options));
}

namespace {

// Counts calls that reach the provider (i.e. below the cache).
class CountingBackend : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}
    CompletionResponse complete(const CompletionRequest& request) override {
        calls_.fetch_add(1);
        return inner_.complete(request);
    }
    std::string id() const override { return inner_.id(); }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    Backend& inner_;
    std::atomic<std::size_t> calls_{0};
};

using DoneKey = std::tuple<std::string, std::string, std::string, int>;

DoneKey key_of(const AssessmentRecord& r) {
    return {r.participant_id, std::string(mode_name(r.mode)), r.model_id, r.repeat};
}

struct Job {
    const ManifestEntry* entry;
    std::size_t pipeline;  // index into pipelines
};

}  // namespace

RunOutcome execute_run(const RunConfig& config, PromptMode mode, Backend& backend,
                       std::ostream& log, std::stop_token stop) {
    config.validate();
    const auto manifest = load_manifest(config.manifest);
    const auto templates = config.templates ? TemplateSet::load(*config.templates) : TemplateSet::defaults();

    std::set<DoneKey> done;
    for (const auto& r : read_records(config.records_path())) {
        if (r.ok()) done.insert(key_of(r));
    }

    std::mutex log_mu;
    auto say = [&](const std::string& line) {
        std::lock_guard lock(log_mu);
        log << line << '\n';
    };

    CountingBackend provider(backend);
    std::shared_ptr<Backend> provider_ref(std::shared_ptr<Backend>{}, &provider);
    std::shared_ptr<CachedBackend> cached;
    Backend* top = &provider;
    if (config.cache_dir) {
        auto cache = std::make_shared<ResponseCache>(*config.cache_dir, [&](const std::string& w) {
            say("warning: " + w);
        });
        cached = std::make_shared<CachedBackend>(provider_ref, std::move(cache));
        top = cached.get();
    }

    JsonlRecordWriter writer(config.records_path());

    std::vector<Pipeline> pipelines;
    std::vector<Job> jobs;
    RunOutcome outcome;
    const auto entries = manifest.in_split(config.split_filter());
    for (const auto& model : config.models) {
        for (int repeat = 0; repeat < config.repeats; ++repeat) {
            PipelineConfig pc;
            pc.model_id = model;
            pc.temperature = config.temperature;
            pc.max_tokens = config.max_tokens;
            pc.seed = config.seed;
            pc.repeat = repeat;
            pc.prompt = {config.participant_only, config.max_chars};
            pipelines.emplace_back(*top, templates, pc, &writer);
            for (const auto* e : entries) {
                if (done.contains(DoneKey{e->participant_id, std::string(mode_name(mode)), model, repeat})) {
                    ++outcome.skipped;
                    continue;
                }
                jobs.push_back({e, pipelines.size() - 1});
            }
        }
    }

    say("run: " + std::to_string(jobs.size()) + " assessments (" + std::string(mode_name(mode)) +
        "), " + std::to_string(outcome.skipped) + " already recorded");

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0}, ok{0}, failed{0};
    std::atomic<std::int64_t> prompt_tokens{0}, completion_tokens{0};
    std::atomic<bool> cancelled{false};

    auto worker = [&] {
        while (!stop.stop_requested()) {
            const auto i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const auto& job = jobs[i];
            const auto& pipeline = pipelines[job.pipeline];
            AssessmentRecord record;
            try {
                const auto transcript = load_transcript(*job.entry);
                record = pipeline.assess(transcript, mode, stop);
            } catch (const Cancelled&) {
                cancelled = true;
                return;
            } catch (const std::exception& e) {
                // Transcript load failures and anything the pipeline does not
                // turn into an error record itself.
                record = AssessmentRecord{};
                record.participant_id = job.entry->participant_id;
                record.mode = mode;
                record.model_id = pipeline.config().model_id;
                record.backend_id = top->id();
                record.repeat = pipeline.config().repeat;
                record.status = RecordStatus::Failed;
                record.error_kind = dynamic_cast<const DatasetError*>(&e) ? "DatasetError" : "Error";
                record.error = e.what();
                try {
                    writer.write(record);
                } catch (const std::exception& w) {
                    say(std::string("error: could not persist record: ") + w.what());
                }
            }
            prompt_tokens += record.prompt_tokens;
            completion_tokens += record.completion_tokens;
            (record.ok() ? ok : failed).fetch_add(1);
            const auto n = finished.fetch_add(1) + 1;
            std::string line = "[" + std::to_string(n) + "/" + std::to_string(jobs.size()) + "] " +
                               record.participant_id + " " + record.model_id;
            if (config.repeats > 1) line += " #" + std::to_string(record.repeat);
            if (record.ok()) {
                line += " score=" + std::to_string(record.severity->phq8_score) + " (" +
                        std::string(band_label(record.severity->band)) + ")";
                for (const auto& f : record.flags) line += " [" + std::string(inconsistency_name(f.kind)) + "]";
            } else {
                line += " FAILED " + record.error_kind + ": " + record.error;
            }
            say(line);
        }
        if (stop.stop_requested()) cancelled = true;
    };

    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers),
                                                 std::max<std::size_t>(jobs.size(), 1));
    {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    }
    if (cancelled) throw Cancelled();

    outcome.attempted = finished.load();
    outcome.succeeded = ok.load();
    outcome.failed = failed.load();
    outcome.provider_calls = provider.calls();
    outcome.cache_hits = cached ? cached->hits() : 0;
    outcome.prompt_tokens = prompt_tokens.load();
    outcome.completion_tokens = completion_tokens.load();
    say("done: " + std::to_string(outcome.succeeded) + " ok, " + std::to_string(outcome.failed) +
        " failed; " + std::to_string(outcome.provider_calls) + " provider calls, " +
        std::to_string(outcome.cache_hits) + " cache hits; tokens " +
        std::to_string(outcome.prompt_tokens) + " prompt / " +
        std::to_string(outcome.completion_tokens) + " completion");
    return outcome;
}

}  // namespace cotphq::cli
