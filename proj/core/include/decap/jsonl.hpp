#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace decap::jsonl {

/// Calls `visit(object, line_number)` for every non-blank line of a JSONL file.
/// Unparseable lines raise IngestionError with the 1-based line number; a
/// missing file raises IngestionError with line 0.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const nlohmann::json&, std::size_t)>& visit);

std::vector<nlohmann::json> read(const std::filesystem::path& path);

/// Writes one compact JSON document per line, '\n' terminated.
void write(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace decap::jsonl
