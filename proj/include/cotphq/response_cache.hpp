#pragma once
// Content-addressed on-disk response cache.
//
// Entries live at <root>/<h[0:2]>/<h[2:4]>/<h>.json where h is the hex
// SHA-256 CacheKey. Writes go through a temp file and rename, so readers
// never observe a partial entry. An unreadable or mismatched entry is
// treated as a miss and overwritten on the next store.

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cotphq/backend.hpp"

namespace cotphq {

class ResponseCache {
public:
    using WarningSink = std::function<void(const std::string&)>;

    explicit ResponseCache(std::filesystem::path root, WarningSink warn = {});

    std::optional<CompletionResponse> lookup(const CompletionRequest& request) const;
    void store(const CompletionRequest& request, const CompletionResponse& response) const;

    std::filesystem::path entry_path(const CacheKey& key) const;
    const std::filesystem::path& root() const noexcept { return root_; }

    std::size_t corrupt_entries() const noexcept { return corrupt_.load(); }

private:
    std::filesystem::path root_;
    WarningSink warn_;
    mutable std::atomic<std::size_t> corrupt_{0};
};

// Backend decorator: serves hits from the cache, delegates misses and stores
// the result.
class CachedBackend : public Backend {
public:
    CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return inner_->id(); }

    std::size_t hits() const noexcept { return hits_.load(); }
    std::size_t misses() const noexcept { return misses_.load(); }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

CompletionResponse cached_complete(const CompletionRequest& request, const ResponseCache& cache,
                                   Backend& provider);

}  // namespace cotphq
