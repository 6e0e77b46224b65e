#include "cotphq/mock_backend.hpp"

#include "cotphq/markers.hpp"
#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

namespace {

MockReply reply_from_json(const json& j) {
    if (j.is_string()) return MockReply::ok(j.get<std::string>());
    if (j.is_object() && j.contains("error")) {
        const auto kind = util::fold_token(j.at("error").get<std::string>());
        const auto message = j.value("message", std::string("scripted failure"));
        if (kind == "transport") return MockReply::fail(MockReply::Failure::Transport, message);
        if (kind == "auth") return MockReply::fail(MockReply::Failure::Auth, message);
        if (kind == "ratelimited") return MockReply::fail(MockReply::Failure::RateLimited, message);
        if (kind == "provider") return MockReply::fail(MockReply::Failure::Provider, message);
        throw std::invalid_argument("unknown scripted error kind '" + kind + "'");
    }
    // Any other JSON value is the literal reply body.
    return MockReply::ok(j.dump());
}

}  // namespace

MockScript MockScript::from_queue(std::vector<std::string> texts) {
    MockScript s;
    for (auto& t : texts) s.queue.push_back(MockReply::ok(std::move(t)));
    return s;
}

MockScript MockScript::from_json(const json& j) {
    MockScript s;
    const json* queue = nullptr;
    if (j.is_array()) queue = &j;
    else if (j.contains("queue")) queue = &j.at("queue");
    if (queue) {
        for (const auto& item : *queue) s.queue.push_back(reply_from_json(item));
    }
    if (j.is_object() && j.contains("rules")) {
        for (const auto& r : j.at("rules")) {
            MockRule rule;
            rule.schema_id = r.at("schema").get<std::string>();
            if (r.contains("mode")) rule.mode = r.at("mode").get<std::string>();
            if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
            if (r.contains("response")) {
                rule.replies.push_back(reply_from_json(r.at("response")));
                rule.repeat = true;
            } else {
                for (const auto& item : r.at("responses")) rule.replies.push_back(reply_from_json(item));
            }
            if (rule.replies.empty()) {
                throw std::invalid_argument("mock rule for " + rule.schema_id + " has no replies");
            }
            s.rules.push_back(std::move(rule));
        }
    }
    return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    auto text = util::read_file(path);
    if (!text) throw std::runtime_error("cannot read mock script " + path.string());
    return from_json(json::parse(*text));
}

MockBackend::MockBackend(MockScript script, std::string name)
    : name_(std::move(name)), script_(std::move(script)), rule_pos_(script_.rules.size(), 0) {
    if (script_.empty()) throw std::invalid_argument("mock script is empty");
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
    std::unique_lock lock(mu_);
    calls_.push_back(request);

    if (!script_.rules.empty()) {
        const auto schema = markers::find(request.user_text, "schema");
        const auto mode = markers::find(request.user_text, "mode");
        for (std::size_t i = 0; i < script_.rules.size(); ++i) {
            const auto& rule = script_.rules[i];
            if (!schema || *schema != rule.schema_id) continue;
            if (rule.mode && (!mode || *mode != *rule.mode)) continue;
            if (rule.contains && request.user_text.find(*rule.contains) == std::string::npos) continue;
            if (rule.repeat) return respond(request, rule.replies.front());
            if (rule_pos_[i] >= rule.replies.size()) {
                throw ScriptExhausted("mock rule " + rule.schema_id + " has no replies left");
            }
            return respond(request, rule.replies[rule_pos_[i]++]);
        }
        if (script_.queue.empty()) {
            throw ScriptExhausted("no mock rule matches schema " + schema.value_or("<none>") +
                                  ", mode " + mode.value_or("<none>"));
        }
    }
    if (queue_pos_ >= script_.queue.size()) {
        throw ScriptExhausted("mock queue exhausted after " + std::to_string(queue_pos_) +
                              " replies");
    }
    return respond(request, script_.queue[queue_pos_++]);
}

CompletionResponse MockBackend::respond(const CompletionRequest& request,
                                        const MockReply& reply) const {
    switch (reply.failure) {
        case MockReply::Failure::None: break;
        case MockReply::Failure::Transport: throw TransportError(reply.text);
        case MockReply::Failure::Auth: throw AuthError(reply.text);
        case MockReply::Failure::RateLimited: throw RateLimited(reply.text);
        case MockReply::Failure::Provider: throw ProviderError(500, reply.text);
    }
    CompletionResponse r;
    r.text = reply.text;
    r.model_id = request.model_id;
    // Rough 4-characters-per-token estimate keeps cost logs meaningful offline.
    r.usage.prompt_tokens =
        static_cast<std::int64_t>((request.system_text.size() + request.user_text.size() + 3) / 4);
    r.usage.completion_tokens = static_cast<std::int64_t>((reply.text.size() + 3) / 4);
    return r;
}

std::size_t MockBackend::call_count() const {
    std::lock_guard lock(mu_);
    return calls_.size();
}

std::vector<CompletionRequest> MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t MockBackend::remaining_queue() const {
    std::lock_guard lock(mu_);
    return script_.queue.size() - queue_pos_;
}

}  // namespace cotphq
