#pragma once
// Text-generation provider contract.
//
// Every provider sits behind Backend::complete(). Implementations must
// tolerate concurrent calls from pipeline workers.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace cotphq {

struct CompletionRequest {
    std::string model_id;
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_tokens = 4096;
    std::optional<std::int64_t> seed;

    // Throws std::invalid_argument on empty user_text, negative temperature or
    // non-positive max_tokens.
    void validate() const;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct CompletionResponse {
    std::string text;
    std::string model_id;
    TokenUsage usage;
    bool cached = false;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

class RateLimited : public BackendError {
public:
    using BackendError::BackendError;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class ProviderError : public BackendError {
public:
    ProviderError(int status, std::string body_excerpt)
        : BackendError("provider returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(std::move(body_excerpt)) {}
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

class ScriptExhausted : public BackendError {
public:
    using BackendError::BackendError;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual CompletionResponse complete(const CompletionRequest& request) = 0;

    // Stable identifier recorded in every assessment, e.g. "http:https://api.x/v1".
    virtual std::string id() const = 0;
};

// SHA-256 over a canonical JSON serialization of the request fields.
class CacheKey {
public:
    static CacheKey of(const CompletionRequest& request);

    // The exact bytes hashed; stored alongside cache entries for audit.
    static std::string preimage(const CompletionRequest& request);

    const std::string& hex() const noexcept { return hex_; }
    bool operator==(const CacheKey&) const = default;

private:
    explicit CacheKey(std::string hex) : hex_(std::move(hex)) {}
    std::string hex_;
};

nlohmann::json to_json(const CompletionRequest& request);
nlohmann::json to_json(const CompletionResponse& response);
CompletionResponse response_from_json(const nlohmann::json& j);

}  // namespace cotphq
