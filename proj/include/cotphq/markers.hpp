#pragma once
// Machine-readable tags appended to every rendered prompt. The mock backend
// routes on them; real models ignore them.

#include <optional>
#include <string>
#include <string_view>

namespace cotphq::markers {

// "[schema: severity.v1] [mode: cot]"
std::string tag_line(std::string_view schema_id, std::string_view mode);

// Value of the last "[name: value]" tag in text; the tag line always ends
// the prompt, so transcript content cannot shadow it.
std::optional<std::string> find(std::string_view text, std::string_view name);

}  // namespace cotphq::markers
