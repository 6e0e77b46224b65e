#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace cotphq::util {

std::optional<std::string> read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

// Lowercase with spaces, underscores and hyphens removed: "Not Depressed",
// "not_depressed" and "NotDepressed" all fold to "notdepressed".
std::string fold_token(std::string_view s);

std::string hex(const unsigned char* data, std::size_t size);

// UTC, ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace cotphq::util
