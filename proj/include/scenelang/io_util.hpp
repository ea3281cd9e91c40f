#pragma once

#include <string>

#include <json.hpp>

namespace scenelang {

std::string read_text_file(const std::string& path);

// Writes via a temp file in the same directory, then renames. Either the
// complete new content lands at `path` or the old content stays untouched.
void atomic_write_file(const std::string& path, const std::string& content);

nlohmann::json read_json_file(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& value);

// Whitespace token count, the unit of every text-length figure in reports.
int count_tokens(const std::string& text);

} // namespace scenelang
