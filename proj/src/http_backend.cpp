#include "cotphq/http_backend.hpp"

#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"

namespace cotphq {

using nlohmann::json;

namespace {

std::string excerpt(const std::string& body, std::size_t limit = 300) {
    if (body.size() <= limit) return body;
    return body.substr(0, limit) + "...";
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& p, int attempt) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const double step = static_cast<double>(p.base_delay.count()) * static_cast<double>(1 << (attempt - 1));
    std::uniform_real_distribution<double> u(0.0, p.jitter);
    return std::chrono::milliseconds(static_cast<long long>(step * (1.0 + u(rng))));
}

}  // namespace

HttpBackendOptions HttpBackendOptions::from_env() {
    HttpBackendOptions o;
    if (const char* url = std::getenv(kBaseUrlEnv); url && *url) o.base_url = url;
    if (const char* key = std::getenv(kApiKeyEnv); key && *key) o.api_key = key;
    return o;
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)), endpoint_(split_url(options_.base_url)) {
    if (!options_.sleep) {
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

HttpBackend::Endpoint HttpBackend::split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("base URL must start with http:// or https://: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = base_url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    e.path = path + "/chat/completions";
    return e;
}

json HttpBackend::request_body(const CompletionRequest& r) {
    json messages = json::array();
    if (!r.system_text.empty()) messages.push_back({{"role", "system"}, {"content", r.system_text}});
    messages.push_back({{"role", "user"}, {"content", r.user_text}});
    json body = {{"model", r.model_id},
                 {"messages", std::move(messages)},
                 {"temperature", r.temperature},
                 {"max_tokens", r.max_tokens}};
    if (r.seed) body["seed"] = *r.seed;
    return body;
}

CompletionResponse HttpBackend::parse_response(const std::string& body,
                                               const std::string& fallback_model) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        throw ProviderError(200, "response is not JSON: " + excerpt(body));
    }
    CompletionResponse r;
    try {
        const auto& message = j.at("choices").at(0).at("message");
        const auto& content = message.at("content");
        r.text = content.is_null() ? std::string{} : content.get<std::string>();
        r.model_id = j.value("model", fallback_model);
        if (j.contains("usage") && j["usage"].is_object()) {
            r.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
            r.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
        }
    } catch (const json::exception& e) {
        throw ProviderError(200, std::string("unexpected response shape (") + e.what() + "): " +
                                     excerpt(body));
    }
    return r;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    request.validate();
    const auto body = request_body(request).dump();

    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    httplib::Headers headers;
    if (options_.api_key) headers.emplace("Authorization", "Bearer " + *options_.api_key);

    const int attempts = std::max(1, options_.retry.attempts);
    std::string last_error;
    enum class Transient { Transport, RateLimit, Server } last_kind = Transient::Transport;
    int last_status = 0;

    for (int attempt = 1; attempt <= attempts; ++attempt) {
        last_attempts_ = attempt;
        auto res = client.Post(endpoint_.path, headers, body, "application/json");
        if (!res) {
            last_kind = Transient::Transport;
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            return parse_response(res->body, request.model_id);
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError("provider rejected credentials (HTTP " + std::to_string(res->status) +
                            "): " + excerpt(res->body));
        } else if (res->status == 429) {
            last_kind = Transient::RateLimit;
            last_status = res->status;
            last_error = excerpt(res->body);
        } else if (res->status >= 500) {
            last_kind = Transient::Server;
            last_status = res->status;
            last_error = excerpt(res->body);
        } else {
            throw ProviderError(res->status, excerpt(res->body));
        }
        if (attempt < attempts) options_.sleep(backoff_delay(options_.retry, attempt));
    }

    switch (last_kind) {
        case Transient::RateLimit:
            throw RateLimited("rate limited after " + std::to_string(attempts) +
                              " attempts: " + last_error);
        case Transient::Server:
            throw ProviderError(last_status, last_error);
        case Transient::Transport:
            break;
    }
    throw TransportError(last_error + " (after " + std::to_string(attempts) + " attempts)");
}

}  // namespace cotphq
