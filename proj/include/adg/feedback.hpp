#pragma once

// Feedback templates, the template-selection decision table, slot rendering
// and assembly of per-criterion items into one report per response.

#include <algorithm>
#include <array>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "adg/alignment.hpp"
#include "adg/corpus.hpp"
#include "adg/detail/json_io.hpp"
#include "adg/error.hpp"
#include "adg/graph.hpp"
#include "adg/report.hpp"
#include "adg/similarity.hpp"

namespace adg {

inline constexpr std::string_view kTemplatesSchema = "adg-templates/1";

enum class Slot {
  paragraph_number,
  criterion_excerpt,
  justification_cue,
  answer_hint,
  relation_name,
  score_fraction,
  node_excerpt,
};

inline constexpr std::array kAllSlots{Slot::paragraph_number, Slot::criterion_excerpt, Slot::justification_cue,
                                      Slot::answer_hint,      Slot::relation_name,     Slot::score_fraction,
                                      Slot::node_excerpt};

inline std::string_view to_string(Slot slot) {
  switch (slot) {
    case Slot::paragraph_number: return "paragraph_number";
    case Slot::criterion_excerpt: return "criterion_excerpt";
    case Slot::justification_cue: return "justification_cue";
    case Slot::answer_hint: return "answer_hint";
    case Slot::relation_name: return "relation_name";
    case Slot::score_fraction: return "score_fraction";
    case Slot::node_excerpt: return "node_excerpt";
  }
  return "?";
}

inline std::optional<Slot> parse_slot(std::string_view name) {
  for (Slot s : kAllSlots) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

using SlotValues = std::map<Slot, std::string>;

enum class TemplateScope { generic, analytic };

struct FeedbackTemplate {
  std::string key;
  TemplateScope scope = TemplateScope::generic;
  std::optional<std::string> criterion_id;     // analytic only
  std::optional<std::string> error_signature;  // analytic only
  std::string language = "en";
  std::string body;
  std::set<Slot> required_slots;

  friend bool operator==(const FeedbackTemplate&, const FeedbackTemplate&) = default;
};

/// The ten generic keys every registry must define.
inline constexpr std::array<std::string_view, 10> kGenericTemplateKeys{
    "full_credit",           "insufficient_elements",  "no_reference",       "off_structure",
    "wrong_part.elaboration", "wrong_part.cause",      "wrong_part.result",  "wrong_part.contrast",
    "wrong_part.example",    "wrong_part.paraphrase"};

namespace detail {

struct BodyPiece {
  bool placeholder = false;
  std::string text;  // literal text or placeholder name
};

/// Splits a body into literal runs and `{name}` placeholders. `{{` and `}}`
/// stand for literal braces.
inline std::vector<BodyPiece> parse_body(std::string_view body, const std::string& key) {
  std::vector<BodyPiece> pieces;
  std::string literal;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
      literal.push_back(c);
      ++i;
      continue;
    }
    if (c == '}') throw Error("template-syntax", "unmatched '}' in template body", key);
    if (c != '{') {
      literal.push_back(c);
      continue;
    }
    const auto close = body.find('}', i + 1);
    if (close == std::string_view::npos) throw Error("template-syntax", "unterminated placeholder", key);
    if (!literal.empty()) pieces.push_back({false, std::move(literal)});
    literal.clear();
    pieces.push_back({true, std::string(body.substr(i + 1, close - i - 1))});
    i = close;
  }
  if (!literal.empty()) pieces.push_back({false, std::move(literal)});
  return pieces;
}

inline std::set<Slot> placeholders_of(const std::string& body, const std::string& key) {
  std::set<Slot> out;
  for (const auto& piece : parse_body(body, key)) {
    if (!piece.placeholder) continue;
    auto slot = parse_slot(piece.text);
    if (!slot) throw Error("unknown-placeholder", "unknown placeholder '{" + piece.text + "}'", key);
    out.insert(*slot);
  }
  return out;
}

}  // namespace detail

/// Substitutes every placeholder. All required slots must be present and
/// non-empty; extra slot values are ignored.
inline std::string render(const FeedbackTemplate& tmpl, const SlotValues& slots) {
  for (Slot s : tmpl.required_slots) {
    auto it = slots.find(s);
    if (it == slots.end() || it->second.empty()) {
      throw Error("missing-slot", "template '" + tmpl.key + "' needs slot '" + std::string(to_string(s)) + "'",
                  std::string(to_string(s)));
    }
  }
  std::string out;
  for (const auto& piece : detail::parse_body(tmpl.body, tmpl.key)) {
    if (!piece.placeholder) {
      out += piece.text;
      continue;
    }
    auto slot = parse_slot(piece.text);
    if (!slot) throw Error("unknown-placeholder", "unknown placeholder '{" + piece.text + "}'", tmpl.key);
    auto it = slots.find(*slot);
    if (it == slots.end() || it->second.empty()) {
      throw Error("missing-slot", "template '" + tmpl.key + "' uses unfilled slot '" + piece.text + "'", piece.text);
    }
    out += it->second;
  }
  if (out.empty()) throw Error("empty-render", "template '" + tmpl.key + "' rendered to nothing", tmpl.key);
  return out;
}

class TemplateRegistry {
 public:
  TemplateRegistry() = default;
  explicit TemplateRegistry(std::vector<FeedbackTemplate> templates) : templates_(std::move(templates)) {}

  const std::vector<FeedbackTemplate>& templates() const noexcept { return templates_; }

  bool has_key(std::string_view key) const {
    return std::any_of(templates_.begin(), templates_.end(), [&](const auto& t) { return t.key == key; });
  }

  /// Template for a key in the requested language, else the first one with
  /// that key in any language.
  const FeedbackTemplate* find(std::string_view key, std::string_view language) const {
    const FeedbackTemplate* fallback = nullptr;
    for (const auto& t : templates_) {
      if (t.key != key) continue;
      if (t.language == language) return &t;
      if (!fallback) fallback = &t;
    }
    return fallback;
  }

  const FeedbackTemplate* find_analytic(std::string_view criterion_id, std::string_view error_signature,
                                        std::string_view language) const {
    const FeedbackTemplate* fallback = nullptr;
    for (const auto& t : templates_) {
      if (t.scope != TemplateScope::analytic || t.criterion_id != criterion_id ||
          t.error_signature != error_signature) {
        continue;
      }
      if (t.language == language) return &t;
      if (!fallback) fallback = &t;
    }
    return fallback;
  }

 private:
  std::vector<FeedbackTemplate> templates_;
};

/// Parses an `adg-templates/1` document. Placeholders are checked here, so
/// `unknown-placeholder` is a load-time error. When `required_slots` is
/// omitted it is derived from the body.
inline TemplateRegistry load_registry(std::string_view document) {
  using detail::json;
  const json doc = detail::parse_document(document);
  detail::reject_unknown_fields(doc, {"schema", "templates"}, "document");
  detail::require_schema(doc, kTemplatesSchema);
  const json& list = detail::required(doc, "templates", "document");
  if (!list.is_array()) throw Error("schema", "templates must be an array");

  std::vector<FeedbackTemplate> templates;
  std::set<std::tuple<std::string, std::string, std::string, std::string>> identities;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto where = "templates[" + std::to_string(i) + "]";
    const json& t = list[i];
    detail::reject_unknown_fields(
        t, {"key", "scope", "criterion_id", "error_signature", "language", "body", "required_slots"}, where);
    FeedbackTemplate tmpl;
    tmpl.key = detail::required_as<std::string>(t, "key", where);
    const auto scope = detail::optional_as<std::string>(t, "scope", where).value_or("generic");
    if (scope == "generic") {
      tmpl.scope = TemplateScope::generic;
    } else if (scope == "analytic") {
      tmpl.scope = TemplateScope::analytic;
    } else {
      throw Error("schema", where + ": unknown scope '" + scope + "'", tmpl.key);
    }
    tmpl.criterion_id = detail::optional_as<std::string>(t, "criterion_id", where);
    tmpl.error_signature = detail::optional_as<std::string>(t, "error_signature", where);
    if (tmpl.scope == TemplateScope::generic && (tmpl.criterion_id || tmpl.error_signature)) {
      throw Error("schema", where + ": generic templates carry no criterion_id or error_signature", tmpl.key);
    }
    if (tmpl.scope == TemplateScope::analytic && (!tmpl.criterion_id || !tmpl.error_signature)) {
      throw Error("schema", where + ": analytic templates need criterion_id and error_signature", tmpl.key);
    }
    tmpl.language = detail::optional_as<std::string>(t, "language", where).value_or("en");
    tmpl.body = detail::required_as<std::string>(t, "body", where);
    const auto used = detail::placeholders_of(tmpl.body, tmpl.key);
    if (auto declared = detail::optional_as<std::vector<std::string>>(t, "required_slots", where)) {
      for (const auto& name : *declared) {
        auto slot = parse_slot(name);
        if (!slot) throw Error("unknown-placeholder", "unknown slot '" + name + "'", tmpl.key);
        tmpl.required_slots.insert(*slot);
      }
      for (Slot s : used) {
        if (!tmpl.required_slots.count(s)) {
          throw Error("slot-mismatch", "placeholder '{" + std::string(to_string(s)) + "}' not in required_slots",
                      tmpl.key);
        }
      }
    } else {
      tmpl.required_slots = used;
    }
    if (!identities
             .insert({tmpl.key, tmpl.language, tmpl.criterion_id.value_or(""), tmpl.error_signature.value_or("")})
             .second) {
      throw Error("duplicate-template", where + ": repeated key/language", tmpl.key);
    }
    templates.push_back(std::move(tmpl));
  }
  return TemplateRegistry(std::move(templates));
}

inline TemplateRegistry load_registry_file(const std::string& path) {
  return load_registry(detail::read_file(path));
}

inline std::string serialize_registry(const TemplateRegistry& registry) {
  detail::ordered_json doc{{"schema", kTemplatesSchema}, {"templates", detail::ordered_json::array()}};
  for (const auto& t : registry.templates()) {
    detail::ordered_json entry{{"key", t.key}, {"scope", t.scope == TemplateScope::generic ? "generic" : "analytic"}};
    if (t.criterion_id) entry["criterion_id"] = *t.criterion_id;
    if (t.error_signature) entry["error_signature"] = *t.error_signature;
    entry["language"] = t.language;
    entry["body"] = t.body;
    entry["required_slots"] = detail::ordered_json::array();
    for (Slot s : t.required_slots) entry["required_slots"].push_back(to_string(s));
    doc["templates"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

enum class DecisionRow { analytic = 1, full_credit, no_reference, insufficient_elements, wrong_part, off_structure };

inline std::string_view to_string(DecisionRow row) {
  switch (row) {
    case DecisionRow::analytic: return "analytic";
    case DecisionRow::full_credit: return "full_credit";
    case DecisionRow::no_reference: return "no_reference";
    case DecisionRow::insufficient_elements: return "insufficient_elements";
    case DecisionRow::wrong_part: return "wrong_part";
    case DecisionRow::off_structure: return "off_structure";
  }
  return "?";
}

/// Slots each row can always fill. answer_hint depends on authored hints and
/// is never guaranteed.
inline std::set<Slot> guaranteed_slots(DecisionRow row) {
  std::set<Slot> slots{Slot::criterion_excerpt, Slot::score_fraction};
  if (row == DecisionRow::insufficient_elements || row == DecisionRow::wrong_part ||
      row == DecisionRow::off_structure) {
    slots.insert({Slot::justification_cue, Slot::paragraph_number, Slot::node_excerpt});
  }
  if (row == DecisionRow::wrong_part) slots.insert(Slot::relation_name);
  return slots;
}

inline std::optional<DecisionRow> generic_row(std::string_view key) {
  if (key == "full_credit") return DecisionRow::full_credit;
  if (key == "no_reference") return DecisionRow::no_reference;
  if (key == "insufficient_elements") return DecisionRow::insufficient_elements;
  if (key == "off_structure") return DecisionRow::off_structure;
  if (key.starts_with("wrong_part.")) return DecisionRow::wrong_part;
  return std::nullopt;
}

/// Registry checks against one graph and the prompts it may serve.
inline ValidationReport validate_registry(const TemplateRegistry& registry, const Adg& adg,
                                          const std::vector<PromptSpec>& prompts) {
  ValidationReport report;
  std::set<std::string> missing;
  for (auto key : kGenericTemplateKeys) {
    bool present = false;
    for (const auto& t : registry.templates()) {
      present = present || (t.key == key && t.scope == TemplateScope::generic);
    }
    if (!present) {
      missing.insert(std::string(key));
      report.error("missing-generic-template", "generic template '" + std::string(key) + "' is not defined",
                   std::string(key));
    }
  }

  std::set<std::string> reported;
  for (const auto& label : adg.label_vocabulary) {
    if (label.template_key.empty() || missing.count(label.template_key)) continue;
    if (!registry.has_key(label.template_key) && reported.insert(label.template_key).second) {
      report.error("unbound-template", "label '" + label.name + "' selects undefined template '" +
                                           label.template_key + "'",
                   label.template_key);
    }
  }

  const PromptSpec* own_prompt = nullptr;
  for (const auto& p : prompts) {
    if (p.id == adg.prompt_id) own_prompt = &p;
  }
  for (const auto& t : registry.templates()) {
    if (t.scope == TemplateScope::analytic) {
      bool known = false;
      if (own_prompt) {
        known = own_prompt->find_criterion(*t.criterion_id) != nullptr;
      } else {
        for (const auto& p : prompts) known = known || p.find_criterion(*t.criterion_id) != nullptr;
      }
      if (!known) {
        report.error("unknown-criterion", "analytic template names unknown criterion '" + *t.criterion_id + "'",
                     t.key);
      }
    }

    std::set<Slot> used;
    try {
      used = detail::placeholders_of(t.body, t.key);
    } catch (const Error& e) {
      report.error(e.code(), e.message(), t.key);
      continue;
    }
    for (Slot s : used) {
      if (!t.required_slots.count(s)) {
        report.error("slot-mismatch", "placeholder '{" + std::string(to_string(s)) + "}' not in required_slots",
                     t.key);
      }
    }
    for (Slot s : t.required_slots) {
      if (!used.count(s)) {
        report.warning("unused-slot", "required slot '" + std::string(to_string(s)) + "' never rendered", t.key);
      }
    }
    const auto row = t.scope == TemplateScope::analytic ? std::optional(DecisionRow::analytic) : generic_row(t.key);
    if (row) {
      const auto available = guaranteed_slots(*row);
      for (Slot s : t.required_slots) {
        if (!available.count(s)) {
          report.warning("slot-unavailable",
                         "slot '" + std::string(to_string(s)) + "' may be unfilled when this template is chosen",
                         t.key);
        }
      }
    }
  }
  return report;
}

struct SelectionContext {
  std::string criterion_id;
  int score = 0;
  int max_score = 0;
  bool has_cue = false;
  AlignmentResult alignment;              // meaningful when has_cue
  std::optional<RelationPath> relation;   // response node -> model-answer node
  std::optional<std::string> error_signature;
};

struct SelectionPolicy {
  // A chunk joined to the model-answer node by one of these labels counts as
  // part of that node.
  std::set<std::string> part_labels{"elaboration", "paraphrase"};
  std::string language = "en";
};

struct Selection {
  DecisionRow row = DecisionRow::off_structure;
  std::string template_key;
  std::string relation_name;  // effective label for wrong_part rows
};

/// Label of the edge touching the response node, seen from the response.
/// Walking out through `src` of a directed edge puts the response on the
/// nucleus side, so a label with an inverse flips (cause <-> result).
inline const RelationLabel& oriented_label(const Adg& adg, const RelationStep& step) {
  const auto* label = adg.find_label(step.edge.label);
  if (!label) throw Error("unbound-label", "label '" + step.edge.label + "' is not in the vocabulary", step.edge.label);
  if (step.forward && step.edge.directed && !label->inverse.empty()) {
    if (const auto* inverse = adg.find_label(label->inverse)) return *inverse;
  }
  return *label;
}

/// Ordered decision table; the first matching row wins:
///  1 analytic template for (criterion, error signature)
///  2 full score                              -> full_credit
///  3 no cue, or cue below threshold          -> no_reference
///  4 at the model-answer node, or a part-of chunk with a partial score
///                                            -> insufficient_elements
///  5 connected elsewhere                     -> template of the label on the
///                                               edge touching the response node
///  6 otherwise                               -> off_structure
inline Selection select_template(const TemplateRegistry& registry, const Adg& adg, const SelectionContext& ctx,
                                 const SelectionPolicy& policy = {}) {
  if (ctx.score < 0 || ctx.score > ctx.max_score) {
    throw Error("score-range", "score outside [0, max_score]", ctx.criterion_id);
  }
  const auto bound = [&](std::string key, DecisionRow row, std::string relation = {}) {
    if (!registry.has_key(key)) {
      throw Error("unbound-template", "registry has no template '" + key + "'", key);
    }
    return Selection{row, std::move(key), std::move(relation)};
  };

  if (ctx.error_signature) {
    if (const auto* t = registry.find_analytic(ctx.criterion_id, *ctx.error_signature, policy.language)) {
      return Selection{DecisionRow::analytic, t->key, {}};
    }
  }
  if (ctx.score == ctx.max_score) return bound("full_credit", DecisionRow::full_credit);
  if (!ctx.has_cue || !ctx.alignment.aligned) return bound("no_reference", DecisionRow::no_reference);

  if (ctx.relation && ctx.relation->empty()) {
    return bound("insufficient_elements", DecisionRow::insufficient_elements);
  }
  if (ctx.relation && ctx.relation->length() == 1 && ctx.score > 0) {
    const auto& step = ctx.relation->steps.front();
    const auto* node = adg.find_node(ctx.alignment.node_id);
    if (node && node->kind == NodeKind::chunk && policy.part_labels.count(step.edge.label)) {
      return bound("insufficient_elements", DecisionRow::insufficient_elements);
    }
  }
  if (ctx.relation && !ctx.relation->empty()) {
    const auto& label = oriented_label(adg, ctx.relation->steps.front());
    return bound(label.template_key, DecisionRow::wrong_part, label.name);
  }
  return bound("off_structure", DecisionRow::off_structure);
}

struct FeedbackConfig {
  AlignConfig align;
  SelectionPolicy policy;
};

struct FeedbackItem {
  std::string criterion_id;
  int score = 0;
  int max_score = 0;
  DecisionRow row = DecisionRow::off_structure;
  std::string template_key;
  std::string rendered_text;
  SlotValues slots;  // every slot value computed for this criterion
  std::optional<Span> cue_span;
  std::optional<AlignmentResult> alignment;

  friend bool operator==(const FeedbackItem&, const FeedbackItem&) = default;
};

struct FeedbackReport {
  std::string response_id;
  std::string prompt_id;
  std::string language;
  std::vector<FeedbackItem> items;  // rubric order
  int total_score = 0;
  int max_total = 0;
  std::string overall_message;

  detail::ordered_json to_json() const {
    detail::ordered_json out{{"response_id", response_id}, {"prompt_id", prompt_id}, {"language", language},
                             {"total_score", total_score}, {"max_total", max_total},
                             {"overall_message", overall_message}, {"items", detail::ordered_json::array()}};
    for (const auto& item : items) {
      detail::ordered_json entry{{"criterion_id", item.criterion_id},
                                 {"score", item.score},
                                 {"max_score", item.max_score},
                                 {"decision", to_string(item.row)},
                                 {"template_key", item.template_key},
                                 {"rendered_text", item.rendered_text},
                                 {"slots", detail::ordered_json::object()},
                                 {"cue_span", nullptr},
                                 {"alignment", nullptr}};
      for (const auto& [slot, value] : item.slots) entry["slots"][std::string(to_string(slot))] = value;
      if (item.cue_span) entry["cue_span"] = {item.cue_span->start, item.cue_span->end};
      if (item.alignment) entry["alignment"] = item.alignment->to_json();
      out["items"].push_back(std::move(entry));
    }
    return out;
  }

  std::string to_document() const { return to_json().dump(2) + "\n"; }

  /// Student-facing text: one block per criterion, prefixed with the
  /// criterion id and score fraction, then the overall message.
  std::string to_text() const {
    std::string out;
    for (const auto& item : items) {
      out += "[" + item.criterion_id + "] " + std::to_string(item.score) + "/" + std::to_string(item.max_score) + "\n";
      out += item.rendered_text + "\n\n";
    }
    out += overall_message + "\n";
    return out;
  }

  friend bool operator==(const FeedbackReport&, const FeedbackReport&) = default;
};

inline std::string overall_message(std::string_view language, int total, int max_total) {
  const auto fraction = std::to_string(total) + "/" + std::to_string(max_total);
  if (language == "ja") {
    if (total == max_total) return "満点です（" + fraction + "）。すべての観点を満たしています。";
    return "得点は" + fraction + "点です。各観点のフィードバックを読み、解答を見直しましょう。";
  }
  if (total == max_total) return "Full marks (" + fraction + "). Your answer meets every criterion. Well done!";
  return "You scored " + fraction + ". Read the feedback for each criterion, then revise your answer.";
}

/// Oracle response nodes for one response, keyed by criterion id. When a
/// criterion has an oracle node the aligner is bypassed for it.
using OracleNodes = std::map<std::string, std::string>;

/// Builds the full report for one response. Any failing criterion aborts the
/// whole report.
inline FeedbackReport generate_feedback(const Adg& adg, const TemplateRegistry& registry, const PromptSpec& prompt,
                                        const ScoredResponse& response, const SimilarityProvider& provider,
                                        const FeedbackConfig& config = {}, const OracleNodes* oracle = nullptr) {
  if (response.prompt_id != prompt.id) {
    throw Error("prompt-mismatch", "response '" + response.response_id + "' belongs to prompt '" +
                                       response.prompt_id + "'",
                response.response_id);
  }
  if (adg.prompt_id != prompt.id) {
    throw Error("prompt-mismatch", "graph '" + adg.id + "' belongs to prompt '" + adg.prompt_id + "'", adg.id);
  }
  validate_response(prompt, response);

  FeedbackReport report;
  report.response_id = response.response_id;
  report.prompt_id = prompt.id;
  report.language = config.policy.language;
  report.max_total = prompt.max_total();

  for (const auto& criterion : prompt.criteria) {
    auto entry_it = response.per_criterion.find(criterion.id);
    if (entry_it == response.per_criterion.end()) {
      throw Error("missing-score", "response '" + response.response_id + "' has no score for criterion '" +
                                       criterion.id + "'",
                  criterion.id);
    }
    const auto& entry = entry_it->second;
    const auto cue = cue_text(response, criterion.id);

    SelectionContext ctx;
    ctx.criterion_id = criterion.id;
    ctx.score = entry.score;
    ctx.max_score = criterion.max_score;
    ctx.has_cue = cue.has_value();
    ctx.error_signature = entry.error_signature;

    std::optional<AlignmentResult> alignment;
    if (cue) {
      const std::string* gold = nullptr;
      if (oracle) {
        if (auto it = oracle->find(criterion.id); it != oracle->end()) gold = &it->second;
      }
      if (gold) {
        adg.node(*gold);
        AlignmentResult r;
        r.node_id = *gold;
        r.similarity = 1.0;
        r.margin = 0.0;
        r.provider_kind = ProviderKind::oracle;
        r.aligned = true;
        r.threshold = config.align.threshold;
        alignment = r;
      } else {
        alignment = align_cue(adg, *cue, provider, config.align);
      }
      alignment->response_id = response.response_id;
      alignment->criterion_id = criterion.id;
      ctx.alignment = *alignment;
    }

    const auto bound_node = adg.bound_node(criterion.id);
    if (alignment && alignment->aligned && bound_node && adg.find_node(*bound_node)) {
      ctx.relation = relation_between(adg, alignment->node_id, *bound_node);
    }
    const auto selection = select_template(registry, adg, ctx, config.policy);

    SlotValues slots;
    slots[Slot::criterion_excerpt] = criterion.description.empty() ? criterion.id : criterion.description;
    slots[Slot::score_fraction] = std::to_string(entry.score) + "/" + std::to_string(criterion.max_score);
    if (cue) slots[Slot::justification_cue] = *cue;
    if (alignment && alignment->aligned) {
      const auto& node = adg.node(alignment->node_id);
      slots[Slot::paragraph_number] = std::to_string(node_paragraph(adg, node.id));
      slots[Slot::node_excerpt] = node.text;
      if (node.hint) {
        slots[Slot::answer_hint] = *node.hint;
      } else if (bound_node) {
        if (const auto* answer = adg.find_node(*bound_node); answer && answer->hint) {
          slots[Slot::answer_hint] = *answer->hint;
        }
      }
    }
    if (ctx.relation && !ctx.relation->empty()) {
      slots[Slot::relation_name] = oriented_label(adg, ctx.relation->steps.front()).name;
    }

    const FeedbackTemplate* tmpl =
        selection.row == DecisionRow::analytic
            ? registry.find_analytic(criterion.id, *entry.error_signature, config.policy.language)
            : registry.find(selection.template_key, config.policy.language);

    FeedbackItem item;
    item.criterion_id = criterion.id;
    item.score = entry.score;
    item.max_score = criterion.max_score;
    item.row = selection.row;
    item.template_key = selection.template_key;
    item.rendered_text = render(*tmpl, slots);
    item.slots = std::move(slots);
    item.cue_span = entry.cue_span;
    item.alignment = alignment;
    report.total_score += entry.score;
    report.items.push_back(std::move(item));
  }
  report.overall_message = overall_message(report.language, report.total_score, report.max_total);
  return report;
}

/// Reports for every response in the corpus, in corpus order. Responses are
/// processed on up to `workers` threads; output order never depends on that.
inline std::vector<FeedbackReport> generate_batch(const Corpus& corpus, const std::map<std::string, Adg>& graphs,
                                                  const TemplateRegistry& registry,
                                                  const SimilarityProvider& provider,
                                                  const FeedbackConfig& config = {}, bool use_oracle = false,
                                                  unsigned workers = 0) {
  const auto one = [&](const ScoredResponse& response) {
    auto g = graphs.find(response.prompt_id);
    if (g == graphs.end()) {
      throw Error("unknown-prompt", "no graph for prompt '" + response.prompt_id + "'", response.prompt_id);
    }
    OracleNodes oracle;
    if (use_oracle) {
      for (const auto& [key, node] : corpus.oracle_nodes) {
        if (key.first == response.response_id) oracle[key.second] = node;
      }
    }
    return generate_feedback(g->second, registry, corpus.prompt(response.prompt_id), response, provider, config,
                             use_oracle ? &oracle : nullptr);
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<FeedbackReport> reports(corpus.responses.size());
  std::vector<std::future<void>> tasks;
  const std::size_t stride = workers;
  for (std::size_t w = 0; w < std::min<std::size_t>(stride, reports.size()); ++w) {
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < reports.size(); i += stride) reports[i] = one(corpus.responses[i]);
    }));
  }
  for (auto& t : tasks) t.get();
  return reports;
}

}  // namespace adg
