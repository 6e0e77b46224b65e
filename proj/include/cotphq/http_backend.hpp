#pragma once
// OpenAI-compatible chat-completions client.
//
// POST <base_url>/chat/completions with a system + user message pair.
// 429, 5xx and transport failures are retried with jittered exponential
// backoff; 401/403 raise AuthError immediately and any other 4xx raises
// ProviderError without retry.

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "cotphq/backend.hpp"

namespace cotphq {

inline constexpr const char* kApiKeyEnv = "COTPHQ_API_KEY";
inline constexpr const char* kBaseUrlEnv = "COTPHQ_BASE_URL";
inline constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    // Extra random delay as a fraction of the current backoff step.
    double jitter = 0.5;
};

struct HttpBackendOptions {
    std::string base_url = kDefaultBaseUrl;
    std::optional<std::string> api_key;
    RetryPolicy retry;
    std::chrono::seconds connect_timeout{30};
    std::chrono::seconds read_timeout{600};
    // Replaceable for tests.
    std::function<void(std::chrono::milliseconds)> sleep;

    // base_url from COTPHQ_BASE_URL, api_key from COTPHQ_API_KEY.
    static HttpBackendOptions from_env();
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "http:" + options_.base_url; }

    // Request body sent for a completion request.
    static nlohmann::json request_body(const CompletionRequest& request);
    // Parses a chat-completions response body.
    static CompletionResponse parse_response(const std::string& body,
                                             const std::string& fallback_model);

    int last_attempt_count() const noexcept { return last_attempts_.load(); }

private:
    struct Endpoint {
        std::string origin;  // scheme://host[:port]
        std::string path;    // /v1/chat/completions
    };
    static Endpoint split_url(const std::string& base_url);

    HttpBackendOptions options_;
    Endpoint endpoint_;
    // Attempts used by the most recent call on any thread.
    std::atomic<int> last_attempts_{0};
};

}  // namespace cotphq
