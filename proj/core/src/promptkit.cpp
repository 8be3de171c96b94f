#include "decap/promptkit.hpp"

#include "decap/errors.hpp"
#include "decap/rng.hpp"

#include <algorithm>

namespace decap {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Base: return "base";
    case Mode::SelfDebias: return "sd";
    case Mode::Def1: return "def1";
    case Mode::Def2: return "def2";
    case Mode::Decap: return "decap";
    case Mode::DecapNoPrefix: return "decap_no_prefix";
    case Mode::DecapNoGuidance: return "decap_no_guidance";
    case Mode::RandomGuidance: return "random_guidance";
    case Mode::RetrievedGuidance: return "retrieved_guidance";
  }
  return "base";
}

std::string_view to_string(Template tmpl) noexcept {
  switch (tmpl) {
    case Template::Default: return "default";
    case Template::Choice: return "choice";
    case Template::ChoicePlus: return "choice_plus";
  }
  return "choice_plus";
}

Mode parse_mode(std::string_view text) {
  for (Mode mode : kAllModes) {
    if (to_string(mode) == text) return mode;
  }
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

Template parse_template(std::string_view text) {
  if (text == "choice+") return Template::ChoicePlus;
  for (Template tmpl : kAllTemplates) {
    if (to_string(tmpl) == text) return tmpl;
  }
  throw ConfigError("unknown template '" + std::string(text) + "'");
}

bool mode_uses_detection(Mode mode) noexcept {
  return mode == Mode::Decap || mode == Mode::DecapNoGuidance || mode == Mode::RandomGuidance ||
         mode == Mode::RetrievedGuidance;
}

bool mode_uses_guidance(Mode mode) noexcept {
  return mode == Mode::Decap || mode == Mode::DecapNoPrefix || mode == Mode::RandomGuidance ||
         mode == Mode::RetrievedGuidance;
}

bool mode_uses_corpus(Mode mode) noexcept { return mode_uses_guidance(mode); }

// --- LetterMap ---------------------------------------------------------------

LetterMap::LetterMap(std::array<std::size_t, 3> slots, std::uint64_t seed) : slots_(slots), seed_(seed) {
  auto sorted = slots;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<std::size_t, 3>{0, 1, 2}) {
    throw PreconditionError("LetterMap: slots must be a permutation of {0,1,2}");
  }
}

std::optional<std::size_t> LetterMap::option_for_letter(char letter) const noexcept {
  if (letter < 'A' || letter > 'C') return std::nullopt;
  return slots_[static_cast<std::size_t>(letter - 'A')];
}

char LetterMap::letter_for_option(std::size_t option) const {
  for (std::size_t slot = 0; slot < slots_.size(); ++slot) {
    if (slots_[slot] == option) return kLetters[slot];
  }
  throw PreconditionError("LetterMap: option index out of range");
}

LetterMap LetterMap::inverse() const {
  std::array<std::size_t, 3> inv{};
  for (std::size_t slot = 0; slot < 3; ++slot) inv[slots_[slot]] = slot;
  return LetterMap(inv, seed_);
}

LetterMap LetterMap::compose(const LetterMap& other) const {
  std::array<std::size_t, 3> out{};
  for (std::size_t slot = 0; slot < 3; ++slot) out[slot] = slots_[other.slots_[slot]];
  return LetterMap(out, seed_);
}

LetterMap shuffle_options(const QuestionRecord& record, std::uint64_t seed) {
  if (record.options.size() != 3) throw PreconditionError("shuffle_options: record needs 3 options");
  Engine engine(mix_seed(seed, record.id));
  std::array<std::size_t, 3> slots{0, 1, 2};
  for (std::size_t i = slots.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(engine, i + 1));
    std::swap(slots[i], slots[j]);
  }
  return LetterMap(slots, seed);
}

// --- prompt text -------------------------------------------------------------

namespace {

std::string question_line(const QuestionRecord& record, const std::optional<std::string>& guidance) {
  std::string line = "Question: " + record.context + " ";
  if (guidance) line += *guidance + " ";
  line += record.question;
  return line;
}

std::string option_lines(const QuestionRecord& record, const LetterMap& letter_map) {
  if (record.options.size() != 3) throw PreconditionError("record '" + record.id + "' needs 3 options");
  std::string out;
  for (std::size_t slot = 0; slot < 3; ++slot) {
    out += kLetters[slot];
    out += ": " + record.options[letter_map.option_for_slot(slot)].text + "\n";
  }
  return out;
}

std::string render(const std::optional<std::string>& prefix, const std::optional<std::string>& extra_line,
                   const QuestionRecord& record, const std::optional<std::string>& guidance,
                   const LetterMap& letter_map, Template tmpl) {
  std::string prompt;
  if (prefix) prompt += *prefix + "\n";
  if (tmpl == Template::ChoicePlus) {
    prompt += std::string(kChoicePlusInstruction) + "\n";
  } else if (tmpl == Template::Choice) {
    prompt += std::string(kChoiceInstruction) + "\n";
  }
  if (extra_line) prompt += *extra_line + "\n";
  prompt += question_line(record, guidance) + "\n";
  prompt += option_lines(record, letter_map);
  prompt += "Answer: ";
  return prompt;
}

}  // namespace

std::string assemble_qa_prompt(const std::optional<std::string>& prefix, const QuestionRecord& record,
                               const std::optional<std::string>& guidance, const LetterMap& letter_map,
                               Template tmpl) {
  return render(prefix, std::nullopt, record, guidance, letter_map, tmpl);
}

std::string build_baseline_prompt(const QuestionRecord& record, Mode mode, const LetterMap& letter_map,
                                  const std::optional<std::string>& sd_explanation, Template tmpl) {
  switch (mode) {
    case Mode::Base:
      return assemble_qa_prompt(std::nullopt, record, std::nullopt, letter_map, tmpl);
    case Mode::Def1:
      return assemble_qa_prompt(std::string(kDef1Instruction), record, std::nullopt, letter_map, tmpl);
    case Mode::Def2:
      return assemble_qa_prompt(std::string(kDef2Instruction), record, std::nullopt, letter_map, tmpl);
    case Mode::SelfDebias:
      if (!sd_explanation) throw PreconditionError("sd mode needs a pre-generated explanation");
      return render(std::nullopt, sd_explanation, record, std::nullopt, letter_map, tmpl);
    default:
      throw PreconditionError("build_baseline_prompt: '" + std::string(to_string(mode)) +
                              "' is not a baseline mode");
  }
}

std::string build_sd_explanation_prompt(const QuestionRecord& record) {
  std::string prompt = "Context: " + record.context + "\n";
  prompt += "Question: " + record.question + "\n";
  prompt += "Answer options:\n";
  for (const auto& option : record.options) prompt += "- " + option.text + "\n";
  prompt +=
      "For each answer option, explain why it may be an invalid answer to the question given the "
      "context.\n";
  prompt += "Explanation:";
  return prompt;
}

AssembledPrompt assemble_prompt(const QuestionRecord& record, Mode mode, Template tmpl,
                                const LetterMap& letter_map, const PromptInputs& inputs) {
  AssembledPrompt out;
  out.record_id = record.id;
  out.mode = mode;
  out.tmpl = tmpl;
  out.letter_map = letter_map;
  switch (mode) {
    case Mode::Base:
    case Mode::Def1:
    case Mode::Def2:
      if (mode == Mode::Def1) out.prefix = std::string(kDef1Instruction);
      if (mode == Mode::Def2) out.prefix = std::string(kDef2Instruction);
      out.body = build_baseline_prompt(record, mode, letter_map, std::nullopt, tmpl);
      return out;
    case Mode::SelfDebias:
      if (inputs.sd_explanation) {
        out.sd_explanation = inputs.sd_explanation;
        out.body = build_baseline_prompt(record, mode, letter_map, inputs.sd_explanation, tmpl);
      } else {
        out.explanation_failed = true;
        out.body = build_baseline_prompt(record, Mode::Base, letter_map, std::nullopt, tmpl);
      }
      return out;
    default:
      break;
  }
  if (mode_uses_detection(mode)) out.prefix = inputs.detected_prefix;
  if (mode_uses_guidance(mode)) {
    out.guidance = inputs.guidance;
    out.guidance_failed = !inputs.guidance.has_value();
  }
  out.body = assemble_qa_prompt(out.prefix, record, out.guidance, letter_map, tmpl);
  return out;
}

// --- json --------------------------------------------------------------------

void to_json(nlohmann::json& j, const LetterMap& map) {
  j = nlohmann::json{{"A", map.slots()[0]}, {"B", map.slots()[1]}, {"C", map.slots()[2]}, {"seed", map.seed()}};
}

void from_json(const nlohmann::json& j, LetterMap& map) {
  map = LetterMap({j.at("A").get<std::size_t>(), j.at("B").get<std::size_t>(), j.at("C").get<std::size_t>()},
                  j.value("seed", std::uint64_t{0}));
}

void to_json(nlohmann::json& j, const AssembledPrompt& prompt) {
  auto optional = [](const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  j = nlohmann::json{{"record_id", prompt.record_id},
                     {"mode", to_string(prompt.mode)},
                     {"template", to_string(prompt.tmpl)},
                     {"prefix", optional(prompt.prefix)},
                     {"guidance", optional(prompt.guidance)},
                     {"sd_explanation", optional(prompt.sd_explanation)},
                     {"guidance_failed", prompt.guidance_failed},
                     {"explanation_failed", prompt.explanation_failed},
                     {"letter_map", prompt.letter_map},
                     {"body", prompt.body}};
}

void from_json(const nlohmann::json& j, AssembledPrompt& prompt) {
  auto optional = [&](const char* key) -> std::optional<std::string> {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  prompt.record_id = j.at("record_id").get<std::string>();
  prompt.mode = parse_mode(j.at("mode").get<std::string>());
  prompt.tmpl = parse_template(j.at("template").get<std::string>());
  prompt.prefix = optional("prefix");
  prompt.guidance = optional("guidance");
  prompt.sd_explanation = optional("sd_explanation");
  prompt.guidance_failed = j.value("guidance_failed", false);
  prompt.explanation_failed = j.value("explanation_failed", false);
  prompt.letter_map = j.at("letter_map").get<LetterMap>();
  prompt.body = j.at("body").get<std::string>();
}

}  // namespace decap
