#include "cotphq/markers.hpp"

namespace cotphq::markers {

std::string tag_line(std::string_view schema_id, std::string_view mode) {
    std::string out = "[schema: ";
    out += schema_id;
    out += "] [mode: ";
    out += mode;
    out += "]";
    return out;
}

std::optional<std::string> find(std::string_view text, std::string_view name) {
    std::string open = "[";
    open += name;
    open += ": ";
    const auto start = text.rfind(open);
    if (start == std::string_view::npos) return std::nullopt;
    const auto value_start = start + open.size();
    const auto end = text.find(']', value_start);
    if (end == std::string_view::npos) return std::nullopt;
    return std::string(text.substr(value_start, end - value_start));
}

}  // namespace cotphq::markers
