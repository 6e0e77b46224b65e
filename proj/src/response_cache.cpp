#include "cotphq/response_cache.hpp"

#include "cotphq/util.hpp"

namespace cotphq {

using nlohmann::json;

ResponseCache::ResponseCache(std::filesystem::path root, WarningSink warn)
    : root_(std::move(root)), warn_(std::move(warn)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
    const auto& h = key.hex();
    return root_ / h.substr(0, 2) / h.substr(2, 2) / (h + ".json");
}

std::optional<CompletionResponse> ResponseCache::lookup(const CompletionRequest& request) const {
    const auto key = CacheKey::of(request);
    const auto path = entry_path(key);
    auto text = util::read_file(path);
    if (!text) return std::nullopt;
    try {
        const auto j = json::parse(*text);
        if (j.at("key").get<std::string>() != key.hex()) {
            throw std::runtime_error("stored key does not match entry name");
        }
        auto response = response_from_json(j.at("response"));
        response.cached = true;
        return response;
    } catch (const std::exception& e) {
        corrupt_.fetch_add(1);
        if (warn_) warn_("cache entry " + path.string() + " is corrupt (" + e.what() + "); recomputing");
        return std::nullopt;
    }
}

void ResponseCache::store(const CompletionRequest& request,
                          const CompletionResponse& response) const {
    const auto key = CacheKey::of(request);
    json entry = {{"key", key.hex()},
                  {"preimage", CacheKey::preimage(request)},
                  {"request", to_json(request)},
                  {"response", to_json(response)}};
    util::atomic_write_file(entry_path(key), entry.dump(2) + "\n");
}

CompletionResponse cached_complete(const CompletionRequest& request, const ResponseCache& cache,
                                   Backend& provider) {
    if (auto hit = cache.lookup(request)) return *hit;
    auto response = provider.complete(request);
    response.cached = false;
    cache.store(request, response);
    return response;
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

CompletionResponse CachedBackend::complete(const CompletionRequest& request) {
    auto response = cached_complete(request, *cache_, *inner_);
    (response.cached ? hits_ : misses_).fetch_add(1);
    return response;
}

}  // namespace cotphq
