#include "cotphq/cli.hpp"
#include "cotphq/markers.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cotphq;
using nlohmann::json;
using testing::run_cli;
using testing::TempDir;
using testing::write_text;

namespace {

// A labels file over the first n test participants of the fixture corpus.
std::filesystem::path small_corpus(const TempDir& dir, int n) {
    const auto src = testing::fixture_dir() / "corpus";
    std::filesystem::create_directories(dir / "corpus/transcripts");
    std::string labels = "participant_id,split,phq8_score\n";
    const auto m = load_manifest(src / "labels.csv");
    int taken = 0;
    for (const auto* e : m.in_split(Split::Test)) {
        if (taken++ == n) break;
        labels += e->participant_id + ",test," + std::to_string(*e->gold_score) + "\n";
        std::filesystem::copy_file(e->transcript_path,
                                   dir / "corpus/transcripts" / e->transcript_path.filename());
    }
    write_text(dir / "corpus/labels.csv", labels);
    return dir / "corpus/labels.csv";
}

std::shared_ptr<MockBackend> fixture_mock() {
    return std::make_shared<MockBackend>(MockScript::load(testing::fixture_script()), "interviews");
}

AssessmentRecord scored(const std::string& id, int score, PromptMode mode = PromptMode::ChainOfThought) {
    AssessmentRecord r;
    r.participant_id = id;
    r.mode = mode;
    r.model_id = "m";
    r.classification = ClassificationResult{score >= 10 ? Verdict::Depressed : Verdict::NotDepressed, "", {}};
    r.severity = SeverityAssessment::from_score(score);
    return r;
}

void write_records(const std::filesystem::path& path, const std::vector<AssessmentRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    write_text(path, out);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate reports split counts") {
    const auto r = run_cli({"validate", "--manifest", testing::fixture_labels().string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("test             10") != std::string::npos);
    CHECK(r.out.find("OK") != std::string::npos);
}

TEST_CASE("validate cites an out-of-range row") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,3\nB,test,30\n");
    const auto r = run_cli({"validate", "--manifest", (dir / "labels.csv").string(), "--skip-transcripts"});
    CHECK(r.code == cli::kExitValidation);
    CHECK(r.out.find("line 3 (B)") != std::string::npos);
    CHECK(r.out.find("30") != std::string::npos);
}

TEST_CASE("validate accepts an empty manifest") {
    TempDir dir;
    write_text(dir / "labels.csv", "");
    const auto r = run_cli({"validate", "--manifest", (dir / "labels.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("train             0") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run_cli({"run", "--manifest", "x.csv", "--workers", "0"}).code == cli::kExitUsage);
    CHECK(run_cli({"run", "--manifest", "x.csv", "--mode", "fancy"}).code == cli::kExitUsage);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("run makes four calls per transcript in cot mode and one in standard") {
    TempDir dir;
    const auto labels = small_corpus(dir, 3);
    auto mock = fixture_mock();
    auto r = run_cli({"run", "--manifest", labels.string(), "--out", (dir / "out").string()}, mock);
    CHECK(r.code == 0);
    CHECK(mock->call_count() == 12);
    CHECK(read_records(dir / "out/records.jsonl").size() == 3);

    auto standard = fixture_mock();
    r = run_cli({"run", "--manifest", labels.string(), "--out", (dir / "std").string(), "--mode", "standard"},
                standard);
    CHECK(r.code == 0);
    CHECK(standard->call_count() == 3);
}

TEST_CASE("re-run with a cache makes no provider calls") {
    TempDir dir;
    const auto labels = small_corpus(dir, 3);
    const std::vector<std::string> base = {"run", "--manifest", labels.string(), "--cache-dir",
                                           (dir / "cache").string(), "--workers", "3"};
    auto first = fixture_mock();
    auto args = base;
    args.insert(args.end(), {"--out", (dir / "a").string()});
    CHECK(run_cli(args, first).code == 0);
    CHECK(first->call_count() == 12);

    auto second = fixture_mock();
    args = base;
    args.insert(args.end(), {"--out", (dir / "b").string()});
    const auto r = run_cli(args, second);
    CHECK(r.code == 0);
    CHECK(second->call_count() == 0);
    CHECK(r.err.find("0 provider calls, 12 cache hits") != std::string::npos);
}

TEST_CASE("restart skips recorded participants") {
    TempDir dir;
    const auto labels = small_corpus(dir, 3);
    const std::vector<std::string> args = {"run", "--manifest", labels.string(), "--out", (dir / "out").string()};
    CHECK(run_cli(args, fixture_mock()).code == 0);
    auto again = fixture_mock();
    CHECK(run_cli(args, again).code == 0);
    CHECK(again->call_count() == 0);
    CHECK(read_records(dir / "out/records.jsonl").size() == 3);

    // Another model is a different key.
    auto other = fixture_mock();
    auto more = args;
    more.insert(more.end(), {"--model", "other"});
    CHECK(run_cli(more, other).code == 0);
    CHECK(other->call_count() == 12);
}

TEST_CASE("mostly failing run exits 3 but keeps error records") {
    TempDir dir;
    const auto labels = small_corpus(dir, 3);
    auto broken = std::make_shared<MockBackend>(MockScript::from_json(json::parse(
        R"({"rules":[{"schema":"emotion.v1","response":"not json"}]})")));
    const auto r = run_cli({"run", "--manifest", labels.string(), "--out", (dir / "out").string()}, broken);
    CHECK(r.code == cli::kExitRunFailure);
    const auto records = read_records(dir / "out/records.jsonl");
    REQUIRE(records.size() == 3);
    for (const auto& rec : records) {
        CHECK(rec.error_kind == "StageParseFailure");
        CHECK(rec.raw_stage_outputs.size() == 2);
    }
}

TEST_CASE("config file sits under flags") {
    TempDir dir;
    const auto labels = small_corpus(dir, 2);
    write_text(dir / "cfg.json", json{{"manifest", labels.string()},
                                      {"mode", "standard"},
                                      {"model", "from-config"},
                                      {"out", (dir / "cfg-out").string()}}
                                     .dump());
    auto mock = fixture_mock();
    CHECK(run_cli({"run", "--config", (dir / "cfg.json").string(), "--model", "from-flag"}, mock).code == 0);
    const auto records = read_records(dir / "cfg-out/records.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].model_id == "from-flag");
    CHECK(records[0].mode == PromptMode::Standard);

    write_text(dir / "bad.json", R"({"manifest": "x", "colour": "blue"})");
    CHECK(run_cli({"run", "--config", (dir / "bad.json").string()}).code == cli::kExitUsage);
}

TEST_CASE("participant-only can be switched off") {
    TempDir dir;
    const auto labels = small_corpus(dir, 1);
    auto mock = fixture_mock();
    CHECK(run_cli({"run", "--manifest", labels.string(), "--out", (dir / "o").string(), "--mode", "standard",
                   "--participant-only=false"},
                  mock)
              .code == 0);
    CHECK(mock->calls().at(0).user_text.find("Interviewer: ") != std::string::npos);
}

TEST_CASE("eval with perfect predictions") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,1\nB,test,2\nC,test,4\n");
    write_records(dir / "out/records.jsonl", {scored("A", 1), scored("B", 2), scored("C", 4)});
    const auto r = run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    const auto report = json::parse(testing::read_text(dir / "out/eval_report.json"));
    CHECK(report["rows"][0]["ccc"] == 1.0);
    CHECK(report["rows"][0]["mae"] == 0.0);
    CHECK(r.out.find("1.000") != std::string::npos);
}

TEST_CASE("eval on the hand-checked case") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,1\nB,test,2\nC,test,4\nD,test,9\n");
    auto failed = scored("D", 0);
    failed.status = RecordStatus::Failed;
    failed.severity.reset();
    failed.error_kind = "StageParseFailure";
    write_records(dir / "out/records.jsonl", {scored("A", 1), scored("B", 2), scored("C", 3), failed});
    const auto r = run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    const auto row = json::parse(testing::read_text(dir / "out/eval_report.json"))["rows"][0];
    // 2(3*17 - 6*7) / (3*14 - 36 + 3*21 - 49 + 1) = 18/21
    CHECK(row["ccc"].get<double>() == doctest::Approx(18.0 / 21.0).epsilon(1e-12));
    CHECK(row["mae"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(row["n"] == 3);
    CHECK(row["excluded_count"] == 1);
    CHECK(r.out.find("0.857") != std::string::npos);
    CHECK(r.out.find("0.33") != std::string::npos);
}

TEST_CASE("eval refuses to join incomplete records") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,1\nB,test,2\nC,test,4\nZ,train,3\n");
    write_records(dir / "out/records.jsonl", {scored("A", 1), scored("Z", 3)});
    const auto r = run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()});
    CHECK(r.code == cli::kExitJoinFailure);
    CHECK(r.err.find("B, C") != std::string::npos);

    write_records(dir / "out/records.jsonl", {scored("A", 1), scored("B", 1), scored("C", 1), scored("Q", 1)});
    const auto r2 = run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()});
    CHECK(r2.code == cli::kExitJoinFailure);
    CHECK(r2.err.find("Q") != std::string::npos);
}

TEST_CASE("constant predictions report undefined ccc only when degenerate") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,5\nB,test,5\n");
    write_records(dir / "out/records.jsonl", {scored("A", 5), scored("B", 5)});
    CHECK(run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()}).code == 0);
    const auto row = json::parse(testing::read_text(dir / "out/eval_report.json"))["rows"][0];
    CHECK(row["ccc"] == "undefined");
}

TEST_CASE("ablation with identical answers has zero deltas") {
    TempDir dir;
    const auto labels = small_corpus(dir, 4);
    const auto script = json::parse(R"({"rules":[
        {"schema":"emotion.v1","response":{"signals":[]}},
        {"schema":"classification.v1","response":{"verdict":"not_depressed","rationale":"r"}},
        {"schema":"reasoning.v1","response":{"branch":"protective","factors":[{"dimension":"healthy_habits","description":"d","evidence":"e"}]}},
        {"schema":"severity.v1","mode":"cot","contains":"beekeeper","response":{"phq8_score":3}},
        {"schema":"severity.v1","mode":"cot","response":{"phq8_score":8}},
        {"schema":"severity.v1","mode":"standard","contains":"beekeeper","response":{"phq8_score":3,"verdict":"not_depressed"}},
        {"schema":"severity.v1","mode":"standard","response":{"phq8_score":8,"verdict":"not_depressed"}}
    ]})");
    auto mock = std::make_shared<MockBackend>(MockScript::from_json(script));
    const auto r = run_cli({"ablate", "--manifest", labels.string(), "--out", (dir / "out").string()}, mock);
    CHECK(r.code == 0);
    const auto report = json::parse(testing::read_text(dir / "out/ablation_report.json"));
    CHECK(report["models"][0]["delta"]["ccc"] == 0.0);
    CHECK(report["models"][0]["delta"]["mae"] == 0.0);
}

TEST_CASE("ablation isolates a mode that fails wholesale") {
    TempDir dir;
    const auto labels = small_corpus(dir, 4);
    const auto script = json::parse(R"({"rules":[
        {"schema":"emotion.v1","response":{"error":"provider"}},
        {"schema":"severity.v1","mode":"standard","contains":"beekeeper","response":{"phq8_score":3,"verdict":"not_depressed"}},
        {"schema":"severity.v1","mode":"standard","response":{"phq8_score":12,"verdict":"depressed"}}
    ]})");
    auto mock = std::make_shared<MockBackend>(MockScript::from_json(script));
    const auto r = run_cli({"ablate", "--manifest", labels.string(), "--out", (dir / "out").string()}, mock);
    CHECK(r.code == cli::kExitRunFailure);
    const auto model = json::parse(testing::read_text(dir / "out/ablation_report.json"))["models"][0];
    CHECK(model["standard"]["status"] == "ok");
    CHECK(model["standard"]["n"] == 4);
    CHECK(model["cot"]["status"] == "failed");
    CHECK(model["cot"]["excluded_count"] == 4);
    CHECK(model["delta"]["ccc"].is_null());
    CHECK(r.out.find("failed") != std::string::npos);
}

TEST_CASE("repeats are averaged") {
    TempDir dir;
    write_text(dir / "labels.csv", "participant_id,split,phq8_score\nA,test,2\nB,test,6\n");
    auto a0 = scored("A", 2), b0 = scored("B", 6), a1 = scored("A", 4), b1 = scored("B", 6);
    a1.repeat = b1.repeat = 1;
    write_records(dir / "out/records.jsonl", {a0, b0, a1, b1});
    CHECK(run_cli({"eval", "--manifest", (dir / "labels.csv").string(), "--out", (dir / "out").string()}).code == 0);
    const auto row = json::parse(testing::read_text(dir / "out/eval_report.json"))["rows"][0];
    CHECK(row["repeats"] == 2);
    CHECK(row["mae"].get<double>() == doctest::Approx(0.5));
    CHECK(row["runs"].size() == 2);
}

}
