#include "cotphq/backend.hpp"

#include <openssl/evp.h>

#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

void CompletionRequest::validate() const {
    if (model_id.empty()) throw std::invalid_argument("completion request has no model_id");
    if (user_text.empty()) throw std::invalid_argument("completion request has empty user_text");
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

std::string CacheKey::preimage(const CompletionRequest& r) {
    // Fixed field order; the array form keeps the serialization canonical.
    json fields = json::array({"cotphq.cache.v1", r.model_id, r.system_text, r.user_text,
                               r.temperature, r.max_tokens,
                               r.seed ? json(*r.seed) : json(nullptr)});
    return fields.dump();
}

CacheKey CacheKey::of(const CompletionRequest& request) {
    const auto bytes = preimage(request);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return CacheKey(util::hex(digest, len));
}

json to_json(const CompletionRequest& r) {
    json j = {{"model_id", r.model_id},     {"system_text", r.system_text},
              {"user_text", r.user_text},   {"temperature", r.temperature},
              {"max_tokens", r.max_tokens}, {"seed", nullptr}};
    if (r.seed) j["seed"] = *r.seed;
    return j;
}

json to_json(const CompletionResponse& r) {
    return {{"text", r.text},
            {"model_id", r.model_id},
            {"usage",
             {{"prompt_tokens", r.usage.prompt_tokens},
              {"completion_tokens", r.usage.completion_tokens}}}};
}

CompletionResponse response_from_json(const json& j) {
    CompletionResponse r;
    r.text = j.at("text").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    const auto& u = j.at("usage");
    r.usage.prompt_tokens = u.at("prompt_tokens").get<std::int64_t>();
    r.usage.completion_tokens = u.at("completion_tokens").get<std::int64_t>();
    return r;
}

}  // namespace cotphq
