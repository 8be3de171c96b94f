#include "decap/evaluator.hpp"
#include "decap/format.hpp"

#include <map>
#include <set>

namespace decap {

namespace {

nlohmann::json optional_number(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json();
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

nlohmann::json counts_json(const BiasCounts& counts) {
  return nlohmann::json{{"n_total", counts.n_total},
                        {"n_correct", counts.n_correct},
                        {"n_non_unknown", counts.n_non_unknown},
                        {"n_biased", counts.n_biased},
                        {"n_ooa", counts.n_ooa}};
}

nlohmann::json diagnostics_json(const RunDiagnostics& diag) {
  nlohmann::json j{{"model", diag.model},
                   {"mode", diag.mode},
                   {"detection_failures", diag.detection_failures},
                   {"guidance_failures", diag.guidance_failures},
                   {"explanation_failures", diag.explanation_failures},
                   {"answer_failures", diag.answer_failures}};
  if (diag.detector) {
    const auto& c = *diag.detector;
    const auto acc = c.accuracy();
    j["detector"] = nlohmann::json{{"ambig_as_ambig", c.ambig_as_ambig},
                                   {"ambig_as_unambig", c.ambig_as_unambig},
                                   {"unambig_as_ambig", c.unambig_as_ambig},
                                   {"unambig_as_unambig", c.unambig_as_unambig},
                                   {"acc_ambiguous", optional_number(acc.ambiguous)},
                                   {"acc_unambiguous", optional_number(acc.unambiguous)},
                                   {"acc_total", optional_number(acc.total)}};
  }
  return j;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json results = nlohmann::json::object();
  for (const auto& row : report.rows) {
    const auto seed = row.seed ? std::to_string(*row.seed) : std::string("mean");
    auto cell = counts_json(row.counts);
    cell["acc"] = optional_number(row.accuracy);
    cell["bias_score"] = optional_number(row.bias_score);
    results[row.model][row.mode][seed][row.dataset][row.category][row.question_type] = std::move(cell);
  }
  nlohmann::json diagnostics = nlohmann::json::array();
  for (const auto& diag : report.diagnostics) diagnostics.push_back(diagnostics_json(diag));
  return nlohmann::json{{"results", std::move(results)}, {"diagnostics", std::move(diagnostics)}};
}

std::string report_to_json_text(const EvalReport& report) { return report_to_json(report).dump(2) + "\n"; }

std::string report_to_csv(const EvalReport& report) {
  std::string out =
      "model,mode,seed,dataset,category,question_type,acc,bias_score,n_total,n_ooa,n_non_unknown,n_biased,n_correct\n";
  for (const auto& row : report.rows) {
    out += csv_field(row.model) + ',' + csv_field(row.mode) + ',';
    out += (row.seed ? std::to_string(*row.seed) : std::string("mean")) + ',';
    out += csv_field(row.dataset) + ',' + csv_field(row.category) + ',' + row.question_type + ',';
    out += format_optional(row.accuracy) + ',' + format_optional(row.bias_score) + ',';
    out += std::to_string(row.counts.n_total) + ',' + std::to_string(row.counts.n_ooa) + ',';
    out += std::to_string(row.counts.n_non_unknown) + ',' + std::to_string(row.counts.n_biased) + ',';
    out += std::to_string(row.counts.n_correct) + '\n';
  }
  return out;
}

std::string category_matrix_csv(const EvalReport& report, std::string_view mode, MatrixMetric metric) {
  std::set<std::string> models;
  std::set<std::string> categories;
  std::map<std::pair<std::string, std::string>, std::optional<double>> cells;
  for (const auto& row : report.rows) {
    if (row.mode != mode || row.seed || row.question_type != kAllSlice || row.category == kAllSlice) continue;
    models.insert(row.model);
    categories.insert(row.category);
    cells[{row.category, row.model}] = metric == MatrixMetric::BiasScore ? row.bias_score : row.accuracy;
  }
  std::string out = "category";
  for (const auto& model : models) out += ',' + csv_field(model);
  out += '\n';
  for (const auto& category : categories) {
    out += csv_field(category);
    for (const auto& model : models) {
      const auto it = cells.find({category, model});
      out += ',' + (it == cells.end() ? std::string() : format_optional(it->second));
    }
    out += '\n';
  }
  return out;
}

}  // namespace decap
