#include "decap/corpus.hpp"

#include "decap/errors.hpp"
#include "decap/jsonl.hpp"
#include "decap/rng.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace decap {

namespace {

constexpr std::array<std::string_view, 10> kUnknownIdentifiers = {
    "Can't answer.",
    "Can't be determined.",
    "Cannot answer.",
    "Cannot be determined.",
    "Not answerable.",
    "Not enough info.",
    "Not enough information.",
    "Not known.",
    "Undetermined.",
    "Unknown.",
};

std::string normalize_unknown(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n\f\v");
  std::string out(text.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing field \"") + key + "\"");
  return it->get<T>();
}

std::string id_of(const nlohmann::json& row) {
  const auto it = row.find("id");
  if (it != row.end() && it->is_string()) return it->get<std::string>();
  return "<no id>";
}

void check_unique(std::set<std::string>& seen, const std::string& id) {
  if (!seen.insert(id).second) throw ValidationError(id, "duplicate record id");
}

std::vector<QuestionRecord> load_canonical(const std::filesystem::path& path) {
  std::vector<QuestionRecord> records;
  std::set<std::string> seen;
  jsonl::for_each_line(path, [&](const nlohmann::json& row, std::size_t line) {
    QuestionRecord record;
    try {
      record = row.get<QuestionRecord>();
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string(), line, e.what());
    } catch (const ConfigError& e) {
      throw IngestionError(path.string(), line, e.what());
    }
    validate(record);
    check_unique(seen, record.id);
    records.push_back(std::move(record));
  });
  return records;
}

}  // namespace

std::string_view to_string(DatasetKind kind) noexcept {
  return kind == DatasetKind::BbqLike ? "bbq-like" : "unqover-like";
}

std::string_view to_string(OptionRole role) noexcept {
  switch (role) {
    case OptionRole::Target: return "target";
    case OptionRole::NonTarget: return "non_target";
    case OptionRole::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(QuestionType type) noexcept {
  return type == QuestionType::Ambiguous ? "ambiguous" : "unambiguous";
}

std::string_view to_string(Polarity polarity) noexcept {
  return polarity == Polarity::Negative ? "negative" : "non_negative";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "bbq-like") return DatasetKind::BbqLike;
  if (text == "unqover-like") return DatasetKind::UnqoverLike;
  throw ConfigError("unknown dataset kind '" + std::string(text) + "'");
}

OptionRole parse_option_role(std::string_view text) {
  if (text == "target") return OptionRole::Target;
  if (text == "non_target") return OptionRole::NonTarget;
  if (text == "unknown") return OptionRole::Unknown;
  throw ConfigError("unknown option role '" + std::string(text) + "'");
}

QuestionType parse_question_type(std::string_view text) {
  if (text == "ambiguous") return QuestionType::Ambiguous;
  if (text == "unambiguous") return QuestionType::Unambiguous;
  throw ConfigError("unknown question type '" + std::string(text) + "'");
}

Polarity parse_polarity(std::string_view text) {
  if (text == "negative") return Polarity::Negative;
  if (text == "non_negative") return Polarity::NonNegative;
  throw ConfigError("unknown polarity '" + std::string(text) + "'");
}

std::size_t QuestionRecord::option_index(OptionRole role) const {
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].role == role) return i;
  }
  throw ValidationError(id, "no option with role " + std::string(to_string(role)));
}

std::vector<std::string> violations(const QuestionRecord& record) {
  std::vector<std::string> out;
  if (record.id.empty()) out.emplace_back("empty id");
  if (record.options.size() != 3) {
    out.push_back("expected exactly 3 options, found " + std::to_string(record.options.size()));
  }
  std::array<int, 3> role_counts{};
  for (const auto& option : record.options) {
    ++role_counts[static_cast<std::size_t>(option.role)];
    if (option.text.empty()) out.emplace_back("option with empty text");
  }
  if (role_counts[static_cast<std::size_t>(OptionRole::Unknown)] != 1) {
    out.emplace_back("expected exactly one option with role unknown");
  }
  if (role_counts[static_cast<std::size_t>(OptionRole::Target)] != 1) {
    out.emplace_back("expected exactly one option with role target");
  }
  if (role_counts[static_cast<std::size_t>(OptionRole::NonTarget)] != 1) {
    out.emplace_back("expected exactly one option with role non_target");
  }
  if (record.question_type == QuestionType::Ambiguous && record.gold_role != OptionRole::Unknown) {
    out.emplace_back("ambiguous question must have gold_role unknown");
  }
  return out;
}

void validate(const QuestionRecord& record) {
  const auto found = violations(record);
  if (!found.empty()) throw ValidationError(record.id, found.front());
}

std::span<const std::string_view> unknown_identifiers() noexcept { return kUnknownIdentifiers; }

bool is_unknown_option(std::string_view text) {
  const std::string needle = normalize_unknown(text);
  return std::any_of(kUnknownIdentifiers.begin(), kUnknownIdentifiers.end(),
                     [&](std::string_view id) { return normalize_unknown(id) == needle; });
}

std::vector<QuestionRecord> load_bbq_like(const std::filesystem::path& path) {
  return load_canonical(path);
}

std::vector<QuestionRecord> load_unqover_like(const std::filesystem::path& path,
                                              std::uint64_t rng_seed) {
  std::vector<QuestionRecord> records;
  std::set<std::string> seen;
  Engine engine(splitmix64(rng_seed));
  jsonl::for_each_line(path, [&](const nlohmann::json& row, std::size_t line) {
    QuestionRecord record;
    try {
      record.id = required<std::string>(row, "id");
      record.dataset = DatasetKind::UnqoverLike;
      record.category = required<std::string>(row, "category");
      record.context = required<std::string>(row, "context");
      record.question = required<std::string>(row, "question");
      record.polarity = parse_polarity(required<std::string>(row, "polarity"));
      for (const auto& option : required<nlohmann::json>(row, "options")) {
        record.options.push_back(option.get<OptionEntry>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string(), line, e.what());
    } catch (const ConfigError& e) {
      throw IngestionError(path.string(), line, std::string(e.what()) + " (record " + id_of(row) + ")");
    }
    for (const auto& option : record.options) {
      if (option.role == OptionRole::Unknown || is_unknown_option(option.text)) {
        throw ValidationError(record.id, "source already contains an unknown option");
      }
    }
    if (record.options.size() != 2) {
      throw ValidationError(record.id, "source must carry exactly 2 social-group options");
    }
    const auto pick = uniform_index(engine, kUnknownIdentifiers.size());
    record.options.push_back({std::string(kUnknownIdentifiers[pick]), OptionRole::Unknown});
    record.question_type = QuestionType::Ambiguous;
    record.gold_role = OptionRole::Unknown;
    validate(record);
    check_unique(seen, record.id);
    records.push_back(std::move(record));
  });
  return records;
}

std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path, std::uint64_t rng_seed) {
  bool unqover_source = false;
  bool decided = false;
  try {
    jsonl::for_each_line(path, [&](const nlohmann::json& row, std::size_t) {
      if (decided) return;
      decided = true;
      const auto dataset = row.value("dataset", std::string("bbq-like"));
      if (dataset != "unqover-like") return;
      const auto options = row.value("options", nlohmann::json::array());
      unqover_source = std::none_of(options.begin(), options.end(), [](const nlohmann::json& o) {
        return o.value("role", std::string()) == "unknown";
      });
    });
  } catch (const IngestionError&) {
    // Fall through: the real loader reports the error with full context.
  }
  return unqover_source ? load_unqover_like(path, rng_seed) : load_canonical(path);
}

DatasetCheck check_dataset(const std::filesystem::path& path) {
  DatasetCheck check;
  std::set<std::string> seen;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      check.issues.push_back({number, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    QuestionRecord record;
    try {
      if (row.value("dataset", std::string()) == "unqover-like" && !row.contains("question_type")) {
        // Source form: canonicalize with a placeholder unknown option.
        auto canonical = row;
        canonical["question_type"] = "ambiguous";
        canonical["gold_role"] = "unknown";
        bool has_unknown = false;
        for (const auto& option : row.value("options", nlohmann::json::array())) {
          if (option.value("role", std::string()) == "unknown" ||
              is_unknown_option(option.value("text", std::string()))) {
            has_unknown = true;
          }
        }
        if (has_unknown) {
          check.issues.push_back({number, id_of(row), "source already contains an unknown option"});
          ++check.n_records;
          continue;
        }
        canonical["options"].push_back({{"text", kUnknownIdentifiers.back()}, {"role", "unknown"}});
        record = canonical.get<QuestionRecord>();
      } else {
        record = row.get<QuestionRecord>();
      }
    } catch (const std::exception& e) {
      check.issues.push_back({number, id_of(row), e.what()});
      continue;
    }
    ++check.n_records;
    for (auto& message : violations(record)) {
      check.issues.push_back({number, record.id, std::move(message)});
    }
    if (!record.id.empty() && !seen.insert(record.id).second) {
      check.issues.push_back({number, record.id, "duplicate record id"});
    }
  }
  return check;
}

void to_json(nlohmann::json& j, const OptionEntry& option) {
  j = nlohmann::json{{"text", option.text}, {"role", to_string(option.role)}};
}

void from_json(const nlohmann::json& j, OptionEntry& option) {
  option.text = required<std::string>(j, "text");
  option.role = parse_option_role(required<std::string>(j, "role"));
}

void to_json(nlohmann::json& j, const QuestionRecord& record) {
  j = nlohmann::json{{"id", record.id},
                     {"dataset", to_string(record.dataset)},
                     {"category", record.category},
                     {"context", record.context},
                     {"question", record.question},
                     {"options", record.options},
                     {"gold_role", to_string(record.gold_role)},
                     {"question_type", to_string(record.question_type)},
                     {"polarity", to_string(record.polarity)}};
}

void from_json(const nlohmann::json& j, QuestionRecord& record) {
  record.id = required<std::string>(j, "id");
  record.dataset = parse_dataset_kind(required<std::string>(j, "dataset"));
  record.category = required<std::string>(j, "category");
  record.context = required<std::string>(j, "context");
  record.question = required<std::string>(j, "question");
  record.options = required<std::vector<OptionEntry>>(j, "options");
  record.gold_role = parse_option_role(required<std::string>(j, "gold_role"));
  record.question_type = parse_question_type(required<std::string>(j, "question_type"));
  record.polarity = parse_polarity(required<std::string>(j, "polarity"));
}

}  // namespace decap
