#pragma once
// Shared helpers for the unit and acceptance tests.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cotphq/cli.hpp"
#include "cotphq/mock_backend.hpp"
#include "json.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return COTPHQ_FIXTURE_DIR; }
inline std::filesystem::path fixture_labels() { return fixture_dir() / "corpus" / "labels.csv"; }
inline std::filesystem::path fixture_script() { return fixture_dir() / "mock" / "interviews.json"; }

// Removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("cotphq-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

// Runs the CLI in-process. A non-null backend replaces whatever --backend names.
inline CliResult run_cli(std::vector<std::string> args,
                         std::shared_ptr<cotphq::Backend> backend = nullptr) {
    std::ostringstream out, err;
    cotphq::cli::Environment env{out, err, {}, {}};
    if (backend) env.backend_factory = [backend](const cotphq::cli::RunConfig&) { return backend; };
    CliResult r;
    r.code = cotphq::cli::run_cli(args, env);
    r.out = out.str();
    r.err = err.str();
    return r;
}

inline std::string stage_json_emotion() {
    return R"({"signals":[{"kind":"sadness","intensity":"high","polarity":"negative","source":"health","evidence":"tired"}]})";
}

inline std::string stage_json_classification(bool depressed) {
    return std::string(R"({"verdict":")") + (depressed ? "depressed" : "not_depressed") +
           R"(","rationale":"r","confidence":0.7})";
}

inline std::string stage_json_reasoning(bool contributing) {
    return contributing
               ? R"({"branch":"contributing","factors":[{"dimension":"biological","description":"d","evidence":"e"}]})"
               : R"({"branch":"protective","factors":[{"dimension":"social_support","description":"d","evidence":"e"}]})";
}

inline std::string stage_json_severity(int score) {
    return R"({"phq8_score":)" + std::to_string(score) + R"(,"rationale":"r"})";
}

// Four well-formed chain-of-thought replies in stage order.
inline std::vector<std::string> cot_replies(bool depressed, int score) {
    return {stage_json_emotion(), stage_json_classification(depressed), stage_json_reasoning(depressed),
            stage_json_severity(score)};
}

}  // namespace testing
