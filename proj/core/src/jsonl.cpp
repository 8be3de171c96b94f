#include "decap/jsonl.hpp"

#include "decap/errors.hpp"

#include <fstream>
#include <sstream>

namespace decap::jsonl {

namespace {

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const nlohmann::json&, std::size_t)>& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestionError(path.string(), number, std::string("malformed JSON: ") + e.what());
    }
    if (!object.is_object()) throw IngestionError(path.string(), number, "expected a JSON object");
    visit(object, number);
  }
}

std::vector<nlohmann::json> read(const std::filesystem::path& path) {
  std::vector<nlohmann::json> rows;
  for_each_line(path, [&](const nlohmann::json& row, std::size_t) { rows.push_back(row); });
  return rows;
}

void write(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += row.dump();
    text += '\n';
  }
  write_text(path, text);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace decap::jsonl
