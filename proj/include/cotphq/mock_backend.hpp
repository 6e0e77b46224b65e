#pragma once
// Deterministic scripted backend for offline runs and tests.
//
// Two script forms:
//   queue  replies handed out in call order; a call past the end raises
//          ScriptExhausted.
//   rules  first rule whose schema (and optional mode / transcript substring)
//          matches the prompt's marker tags answers. A rule with a single
//          `response` repeats forever; a `responses` list is consumed in
//          order and then raises ScriptExhausted.
//
// Internally synchronized: call counts are exact under concurrent use.
//
// Script file (JSON):
//   {"queue": ["...", {"error": "transport"}]}
//   {"rules": [{"schema": "severity.v1", "mode": "cot", "contains": "P301",
//               "response": "{\"phq8_score\": 7}"}]}

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cotphq/backend.hpp"

namespace cotphq {

struct MockReply {
    enum class Failure { None, Transport, Auth, RateLimited, Provider };

    std::string text;
    Failure failure = Failure::None;

    static MockReply ok(std::string text) { return {std::move(text), Failure::None}; }
    static MockReply fail(Failure f, std::string message = {}) { return {std::move(message), f}; }
};

struct MockRule {
    std::string schema_id;
    std::optional<std::string> mode;      // "standard" | "cot"
    std::optional<std::string> contains;  // substring of the user text
    std::vector<MockReply> replies;
    bool repeat = false;
};

struct MockScript {
    std::vector<MockReply> queue;
    std::vector<MockRule> rules;

    static MockScript from_queue(std::vector<std::string> texts);
    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);

    bool empty() const noexcept { return queue.empty() && rules.empty(); }
};

class MockBackend : public Backend {
public:
    explicit MockBackend(MockScript script, std::string name = "mock");

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "mock:" + name_; }

    std::size_t call_count() const;
    std::vector<CompletionRequest> calls() const;
    std::size_t remaining_queue() const;

private:
    CompletionResponse respond(const CompletionRequest& request, const MockReply& reply) const;

    mutable std::mutex mu_;
    std::string name_;
    MockScript script_;
    std::size_t queue_pos_ = 0;
    std::vector<std::size_t> rule_pos_;
    std::vector<CompletionRequest> calls_;
};

}  // namespace cotphq
