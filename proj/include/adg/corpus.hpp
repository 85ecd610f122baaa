#pragma once

// Prompts, analytic criteria and scored student responses, as produced by an
// upstream scoring model (per-criterion score plus justification-cue span).

#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adg/detail/json_io.hpp"
#include "adg/error.hpp"
#include "adg/report.hpp"
#include "adg/text.hpp"

namespace adg {

inline constexpr std::string_view kCorpusSchema = "adg-corpus/1";
inline constexpr std::string_view kCorpusManifestSchema = "adg-corpus-manifest/1";
inline constexpr std::string_view kResponseSchema = "adg-response/1";

struct Criterion {
  std::string id;
  std::string description;
  int max_score = 0;
  std::vector<Criterion> sub_criteria;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

struct LengthConstraint {
  std::size_t min_chars = 0;
  std::size_t max_chars = 0;

  bool admits(std::size_t chars) const noexcept { return min_chars <= chars && chars <= max_chars; }
  friend bool operator==(const LengthConstraint&, const LengthConstraint&) = default;
};

struct PromptSpec {
  std::string id;
  std::string prompt_text;
  std::string question;
  LengthConstraint length_constraint;
  std::vector<Criterion> criteria;  // rubric order
  std::string explanation;          // official model answer + explanation, may be empty

  /// Looks through criteria and their sub-criteria.
  const Criterion* find_criterion(std::string_view criterion_id) const {
    const Criterion* found = nullptr;
    const auto visit = [&](const auto& self, const std::vector<Criterion>& list) -> void {
      for (const auto& c : list) {
        if (found) return;
        if (c.id == criterion_id) {
          found = &c;
          return;
        }
        self(self, c.sub_criteria);
      }
    };
    visit(visit, criteria);
    return found;
  }

  int max_total() const {
    return std::accumulate(criteria.begin(), criteria.end(), 0,
                           [](int acc, const Criterion& c) { return acc + c.max_score; });
  }

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

struct CriterionScore {
  int score = 0;
  std::optional<Span> cue_span;
  std::optional<std::string> error_signature;  // analytic error type, when annotated

  friend bool operator==(const CriterionScore&, const CriterionScore&) = default;
};

struct ScoredResponse {
  std::string response_id;
  std::string prompt_id;
  std::string text;
  std::map<std::string, CriterionScore> per_criterion;

  friend bool operator==(const ScoredResponse&, const ScoredResponse&) = default;
};

using OracleKey = std::pair<std::string, std::string>;  // (response id, criterion id)

struct Corpus {
  std::vector<PromptSpec> prompts;
  std::vector<ScoredResponse> responses;
  std::map<OracleKey, std::string> oracle_nodes;

  const PromptSpec* find_prompt(std::string_view prompt_id) const {
    for (const auto& p : prompts) {
      if (p.id == prompt_id) return &p;
    }
    return nullptr;
  }

  const PromptSpec& prompt(std::string_view prompt_id) const {
    if (const auto* p = find_prompt(prompt_id)) return *p;
    throw Error("unknown-prompt", "no prompt '" + std::string(prompt_id) + "'", std::string(prompt_id));
  }

  std::optional<std::string> oracle_node(std::string_view response_id, std::string_view criterion_id) const {
    auto it = oracle_nodes.find({std::string(response_id), std::string(criterion_id)});
    if (it == oracle_nodes.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Sum of the top-level criteria scores (sub-criteria are carried separately).
inline int total_score(const PromptSpec& prompt, const ScoredResponse& response) {
  int total = 0;
  for (const auto& c : prompt.criteria) {
    if (auto it = response.per_criterion.find(c.id); it != response.per_criterion.end()) {
      total += it->second.score;
    }
  }
  return total;
}

/// Substring of the response at the criterion's cue span; absent when the
/// criterion has no cue or the span is empty.
inline std::optional<std::string> cue_text(const ScoredResponse& response, std::string_view criterion_id) {
  auto it = response.per_criterion.find(std::string(criterion_id));
  if (it == response.per_criterion.end()) {
    throw Error("unknown-criterion", "response '" + response.response_id + "' has no entry for criterion '" +
                                         std::string(criterion_id) + "'",
                std::string(criterion_id));
  }
  const auto& span = it->second.cue_span;
  if (!span || span->empty()) return std::nullopt;
  return slice(response.text, *span);
}

namespace detail {

inline void check_criteria(const std::vector<Criterion>& criteria, std::set<std::string>& ids,
                           const std::string& prompt_id) {
  for (const auto& c : criteria) {
    if (!ids.insert(c.id).second) {
      throw Error("duplicate-criterion", "criterion '" + c.id + "' repeated in prompt '" + prompt_id + "'", c.id);
    }
    if (c.max_score < 0) throw Error("schema", "max_score must be non-negative", c.id);
    if (!c.sub_criteria.empty()) {
      int sub_total = 0;
      for (const auto& s : c.sub_criteria) sub_total += s.max_score;
      if (c.max_score < sub_total) {
        throw Error("criterion-max", "max_score below the sum of its sub-criteria", c.id);
      }
      check_criteria(c.sub_criteria, ids, prompt_id);
    }
  }
}

}  // namespace detail

inline void validate_prompt(const PromptSpec& prompt) {
  if (prompt.criteria.empty()) throw Error("schema", "prompt has no criteria", prompt.id);
  if (prompt.length_constraint.min_chars > prompt.length_constraint.max_chars) {
    throw Error("schema", "min_chars exceeds max_chars", prompt.id);
  }
  std::set<std::string> ids;
  detail::check_criteria(prompt.criteria, ids, prompt.id);
}

/// Checks a response against its prompt. Hard violations throw; a positive
/// score without a cue is reported as a `missing-cue` warning.
inline void validate_response(const PromptSpec& prompt, const ScoredResponse& response,
                              ValidationReport* warnings = nullptr) {
  const std::size_t length = scalar_length(response.text);
  for (const auto& [criterion_id, entry] : response.per_criterion) {
    const auto* criterion = prompt.find_criterion(criterion_id);
    if (!criterion) {
      throw Error("unknown-criterion", "prompt '" + prompt.id + "' has no criterion '" + criterion_id + "'",
                  criterion_id);
    }
    if (entry.score < 0 || entry.score > criterion->max_score) {
      throw Error("score-range",
                  "score " + std::to_string(entry.score) + " outside [0, " +
                      std::to_string(criterion->max_score) + "] for response '" + response.response_id + "'",
                  criterion_id);
    }
    if (entry.cue_span && (entry.cue_span->start > entry.cue_span->end || entry.cue_span->end > length)) {
      throw Error("span-out-of-range", "cue span outside the response text of '" + response.response_id + "'",
                  criterion_id);
    }
    if (warnings && entry.score > 0 && (!entry.cue_span || entry.cue_span->empty())) {
      warnings->warning("missing-cue", "response '" + response.response_id + "' scored without a cue",
                        criterion_id);
    }
  }
}

namespace detail {

inline Criterion parse_criterion(const json& j, const std::string& where) {
  reject_unknown_fields(j, {"id", "description", "max_score", "sub_criteria"}, where);
  Criterion c{required_as<std::string>(j, "id", where), optional_as<std::string>(j, "description", where).value_or(""),
              required_as<int>(j, "max_score", where), {}};
  if (auto it = j.find("sub_criteria"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.sub_criteria.push_back(parse_criterion((*it)[i], where + ".sub_criteria[" + std::to_string(i) + "]"));
    }
  }
  return c;
}

inline PromptSpec parse_prompt(const json& j, const std::string& where) {
  reject_unknown_fields(j, {"id", "prompt_text", "question", "length_constraint", "criteria", "explanation"}, where);
  PromptSpec p;
  p.id = required_as<std::string>(j, "id", where);
  p.prompt_text = required_as<std::string>(j, "prompt_text", where);
  p.question = optional_as<std::string>(j, "question", where).value_or("");
  p.explanation = optional_as<std::string>(j, "explanation", where).value_or("");
  if (auto it = j.find("length_constraint"); it != j.end()) {
    reject_unknown_fields(*it, {"min_chars", "max_chars"}, where + ".length_constraint");
    p.length_constraint = {required_as<std::size_t>(*it, "min_chars", where),
                           required_as<std::size_t>(*it, "max_chars", where)};
  }
  const json& criteria = required(j, "criteria", where);
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    p.criteria.push_back(parse_criterion(criteria[i], where + ".criteria[" + std::to_string(i) + "]"));
  }
  return p;
}

inline CriterionScore parse_criterion_score(const json& j, const std::string& where) {
  reject_unknown_fields(j, {"score", "cue_span", "error_signature"}, where);
  CriterionScore s;
  s.score = required_as<int>(j, "score", where);
  if (auto it = j.find("cue_span"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned()) {
      throw Error("schema", where + ".cue_span must be [start, end]", where);
    }
    s.cue_span = Span{(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  }
  s.error_signature = optional_as<std::string>(j, "error_signature", where);
  return s;
}

inline ScoredResponse parse_response(const json& j, const std::string& where,
                                     std::map<std::string, std::string>* oracle = nullptr) {
  if (oracle) {
    reject_unknown_fields(j, {"schema", "response_id", "prompt_id", "text", "per_criterion", "oracle_nodes"}, where);
  } else {
    reject_unknown_fields(j, {"response_id", "prompt_id", "text", "per_criterion"}, where);
  }
  ScoredResponse r;
  r.response_id = required_as<std::string>(j, "response_id", where);
  r.prompt_id = required_as<std::string>(j, "prompt_id", where);
  r.text = required_as<std::string>(j, "text", where);
  const json& per = required(j, "per_criterion", where);
  require_object(per, where + ".per_criterion");
  for (const auto& [criterion, entry] : per.items()) {
    r.per_criterion.emplace(criterion, parse_criterion_score(entry, where + ".per_criterion." + criterion));
  }
  if (oracle) {
    if (auto it = j.find("oracle_nodes"); it != j.end()) {
      require_object(*it, where + ".oracle_nodes");
      for (const auto& [criterion, node] : it->items()) {
        (*oracle)[criterion] = get_as<std::string>(node, where + ".oracle_nodes." + criterion);
      }
    }
  }
  return r;
}

inline ordered_json criterion_json(const Criterion& c) {
  ordered_json out{{"id", c.id}, {"description", c.description}, {"max_score", c.max_score}};
  if (!c.sub_criteria.empty()) {
    out["sub_criteria"] = ordered_json::array();
    for (const auto& s : c.sub_criteria) out["sub_criteria"].push_back(criterion_json(s));
  }
  return out;
}

inline ordered_json prompt_json(const PromptSpec& p) {
  ordered_json out{{"id", p.id},
                   {"prompt_text", p.prompt_text},
                   {"question", p.question},
                   {"length_constraint",
                    {{"min_chars", p.length_constraint.min_chars}, {"max_chars", p.length_constraint.max_chars}}},
                   {"criteria", ordered_json::array()}};
  for (const auto& c : p.criteria) out["criteria"].push_back(criterion_json(c));
  if (!p.explanation.empty()) out["explanation"] = p.explanation;
  return out;
}

inline ordered_json response_json(const ScoredResponse& r) {
  ordered_json out{{"response_id", r.response_id}, {"prompt_id", r.prompt_id}, {"text", r.text}};
  out["per_criterion"] = ordered_json::object();
  for (const auto& [criterion, s] : r.per_criterion) {
    ordered_json entry{{"score", s.score}};
    if (s.cue_span) entry["cue_span"] = {s.cue_span->start, s.cue_span->end};
    if (s.error_signature) entry["error_signature"] = *s.error_signature;
    out["per_criterion"][criterion] = std::move(entry);
  }
  return out;
}

inline void check_corpus(const Corpus& corpus, ValidationReport* warnings) {
  std::set<std::string> prompt_ids;
  for (const auto& p : corpus.prompts) {
    if (!prompt_ids.insert(p.id).second) throw Error("duplicate-prompt", "prompt repeated", p.id);
    validate_prompt(p);
  }
  std::set<std::string> response_ids;
  for (const auto& r : corpus.responses) {
    if (!response_ids.insert(r.response_id).second) {
      throw Error("duplicate-response", "response id repeated", r.response_id);
    }
    const auto* prompt = corpus.find_prompt(r.prompt_id);
    if (!prompt) {
      throw Error("unknown-prompt", "response '" + r.response_id + "' cites unknown prompt '" + r.prompt_id + "'",
                  r.prompt_id);
    }
    validate_response(*prompt, r, warnings);
  }
  for (const auto& [key, node] : corpus.oracle_nodes) {
    if (!response_ids.count(key.first)) {
      throw Error("unknown-response", "oracle entry for unknown response '" + key.first + "'", key.first);
    }
  }
}

}  // namespace detail

/// Parses an `adg-corpus/1` document and applies all referential checks.
/// Ingestion warnings (e.g. `missing-cue`) go to `warnings` when given.
inline Corpus load_corpus(std::string_view document, ValidationReport* warnings = nullptr) {
  using detail::json;
  const json doc = detail::parse_document(document);
  detail::reject_unknown_fields(doc, {"schema", "prompts", "responses", "oracle_nodes"}, "document");
  detail::require_schema(doc, kCorpusSchema);

  Corpus corpus;
  const json& prompts = detail::required(doc, "prompts", "document");
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    corpus.prompts.push_back(detail::parse_prompt(prompts[i], "prompts[" + std::to_string(i) + "]"));
  }
  if (auto it = doc.find("responses"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      corpus.responses.push_back(detail::parse_response((*it)[i], "responses[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = doc.find("oracle_nodes"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto where = "oracle_nodes[" + std::to_string(i) + "]";
      const json& o = (*it)[i];
      detail::reject_unknown_fields(o, {"response_id", "criterion_id", "node_id"}, where);
      corpus.oracle_nodes[{detail::required_as<std::string>(o, "response_id", where),
                           detail::required_as<std::string>(o, "criterion_id", where)}] =
          detail::required_as<std::string>(o, "node_id", where);
    }
  }
  detail::check_corpus(corpus, warnings);
  return corpus;
}

inline std::string serialize_corpus(const Corpus& corpus) {
  detail::ordered_json doc;
  doc["schema"] = kCorpusSchema;
  doc["prompts"] = detail::ordered_json::array();
  for (const auto& p : corpus.prompts) doc["prompts"].push_back(detail::prompt_json(p));
  doc["responses"] = detail::ordered_json::array();
  for (const auto& r : corpus.responses) doc["responses"].push_back(detail::response_json(r));
  if (!corpus.oracle_nodes.empty()) {
    doc["oracle_nodes"] = detail::ordered_json::array();
    for (const auto& [key, node] : corpus.oracle_nodes) {
      doc["oracle_nodes"].push_back({{"response_id", key.first}, {"criterion_id", key.second}, {"node_id", node}});
    }
  }
  return doc.dump(2) + "\n";
}

/// Loads either a corpus file or a directory holding `manifest.json`
/// (`adg-corpus-manifest/1`): {"prompts": [corpus files], "responses":
/// [per-response files]}. Paths in the manifest are relative to it.
inline Corpus load_corpus_path(const std::filesystem::path& path, ValidationReport* warnings = nullptr) {
  if (!std::filesystem::is_directory(path)) return load_corpus(detail::read_file(path.string()), warnings);

  using detail::json;
  const auto manifest_path = path / "manifest.json";
  const json manifest = detail::parse_document(detail::read_file(manifest_path.string()));
  detail::reject_unknown_fields(manifest, {"schema", "prompts", "responses"}, "manifest");
  detail::require_schema(manifest, kCorpusManifestSchema);

  Corpus corpus;
  for (const auto& file : detail::required_as<std::vector<std::string>>(manifest, "prompts", "manifest")) {
    auto part = load_corpus(detail::read_file((path / file).string()));
    for (auto& p : part.prompts) corpus.prompts.push_back(std::move(p));
    for (auto& r : part.responses) corpus.responses.push_back(std::move(r));
    corpus.oracle_nodes.merge(part.oracle_nodes);
  }
  for (const auto& file : detail::required_as<std::vector<std::string>>(manifest, "responses", "manifest")) {
    const json doc = detail::parse_document(detail::read_file((path / file).string()));
    detail::require_schema(doc, kResponseSchema);
    std::map<std::string, std::string> oracle;
    auto response = detail::parse_response(doc, file, &oracle);
    for (auto& [criterion, node] : oracle) corpus.oracle_nodes[{response.response_id, criterion}] = node;
    corpus.responses.push_back(std::move(response));
  }
  detail::check_corpus(corpus, warnings);
  return corpus;
}

struct SplitRules {
  std::u32string terminators = U"。．.!?！？";
  std::u32string closing_quotes = U"」』）)\"”’";
  bool absorb_closing_quotes = true;
  bool break_on_newline = true;
};

/// Authoring helper: proposes sentence spans (scalar offsets). Spans never
/// start or end on whitespace and cover every non-whitespace character.
inline std::vector<Span> split_sentences(std::string_view text, const SplitRules& rules = {}) {
  const auto chars = to_u32(text);
  const auto is_terminator = [&](char32_t c) { return rules.terminators.find(c) != std::u32string::npos; };
  const auto is_closer = [&](char32_t c) { return rules.closing_quotes.find(c) != std::u32string::npos; };

  std::vector<Span> spans;
  std::size_t i = 0;
  const std::size_t n = chars.size();
  while (i < n) {
    while (i < n && is_space(chars[i])) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    std::size_t last_visible = i;
    while (i < n) {
      const char32_t c = chars[i];
      if (rules.break_on_newline && c == U'\n') break;
      if (!is_space(c)) last_visible = i;
      ++i;
      if (is_terminator(c)) {
        while (i < n && is_terminator(chars[i])) last_visible = i++;
        if (rules.absorb_closing_quotes) {
          while (i < n && is_closer(chars[i])) last_visible = i++;
        }
        break;
      }
    }
    spans.push_back({start, last_visible + 1});
  }
  return spans;
}

}  // namespace adg
