#pragma once

// Answer diagnostic graphs: prompt-text sentences and chunks plus model-answer
// cue nodes, joined by relation-labelled edges whose labels bind to feedback
// templates.

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "adg/detail/json_io.hpp"
#include "adg/error.hpp"
#include "adg/report.hpp"
#include "adg/text.hpp"

namespace adg {

inline constexpr std::string_view kAdgSchema = "adg/1";

enum class NodeKind { sentence, chunk, answer_cue };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::sentence: return "sentence";
    case NodeKind::chunk: return "chunk";
    case NodeKind::answer_cue: return "answer_cue";
  }
  return "?";
}

inline NodeKind parse_node_kind(std::string_view name) {
  if (name == "sentence") return NodeKind::sentence;
  if (name == "chunk") return NodeKind::chunk;
  if (name == "answer_cue") return NodeKind::answer_cue;
  throw Error("schema", "unknown node kind '" + std::string(name) + "'");
}

/// A relation name and the template key it selects. `inverse`, when set,
/// names the label whose template applies when the response sits on the
/// nucleus (src) side of the edge, e.g. cause <-> result.
struct RelationLabel {
  std::string name;
  std::string template_key;
  std::string inverse;

  friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
};

inline std::vector<RelationLabel> default_label_vocabulary() {
  return {
      {"elaboration", "wrong_part.elaboration", ""},
      {"cause", "wrong_part.cause", "result"},
      {"result", "wrong_part.result", "cause"},
      {"contrast", "wrong_part.contrast", ""},
      {"concession", "wrong_part.contrast", ""},
      {"example", "wrong_part.example", ""},
      {"paraphrase", "wrong_part.paraphrase", ""},
      {"summary", "wrong_part.paraphrase", ""},
      {"background", "wrong_part.elaboration", ""},
      {"condition", "wrong_part.cause", ""},
  };
}

struct AdgNode {
  std::string id;
  NodeKind kind = NodeKind::sentence;
  std::string text;
  int paragraph = 0;  // 1-based for prompt nodes, 0 for answer_cue
  std::optional<Span> span;
  std::optional<std::string> hint;

  friend bool operator==(const AdgNode&, const AdgNode&) = default;
};

struct AdgEdge {
  std::string src;  // nucleus / claim side
  std::string dst;
  std::string label;
  bool directed = true;

  friend bool operator==(const AdgEdge&, const AdgEdge&) = default;
};

struct Adg {
  std::string id;
  std::string prompt_id;
  std::string prompt_text;
  std::vector<RelationLabel> label_vocabulary;
  std::vector<AdgNode> nodes;
  std::vector<AdgEdge> edges;
  std::map<std::string, std::string> criteria_bindings;  // criterion id -> answer_cue node id

  const AdgNode* find_node(std::string_view node_id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const AdgNode& n) { return n.id == node_id; });
    return it == nodes.end() ? nullptr : &*it;
  }

  const AdgNode& node(std::string_view node_id) const {
    if (const auto* n = find_node(node_id)) return *n;
    throw Error("unknown-node", "no node with id '" + std::string(node_id) + "'",
                std::string(node_id));
  }

  const RelationLabel* find_label(std::string_view name) const {
    auto it = std::find_if(label_vocabulary.begin(), label_vocabulary.end(),
                           [&](const RelationLabel& l) { return l.name == name; });
    return it == label_vocabulary.end() ? nullptr : &*it;
  }

  /// Model-answer node bound to a criterion, if any.
  std::optional<std::string> bound_node(std::string_view criterion_id) const {
    auto it = criteria_bindings.find(std::string(criterion_id));
    if (it == criteria_bindings.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Adg&, const Adg&) = default;
};

/// 1 + number of paragraph breaks (runs of newlines after the first visible
/// character) strictly before `offset`.
inline int paragraph_at(std::string_view prompt_text, std::size_t offset) {
  const auto text = to_u32(prompt_text);
  int paragraph = 1;
  bool seen_content = false;
  bool in_break = false;
  for (std::size_t i = 0; i < text.size() && i < offset; ++i) {
    const char32_t c = text[i];
    if (c == U'\n') {
      if (seen_content && !in_break) {
        ++paragraph;
        in_break = true;
      }
    } else if (!is_space(c)) {
      seen_content = true;
      in_break = false;
    }
  }
  return paragraph;
}

enum class LoadMode {
  strict,   // duplicate ids and dangling references are load errors
  lenient,  // structure only; referential problems are left for validate_graph
};

namespace detail {

inline Span parse_span(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    throw Error("schema", where + " must be [start, end] with non-negative integers", where);
  }
  return Span{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace detail

/// Parses an `adg/1` document. Node text may be omitted when a span is
/// present; it is then taken from the prompt text. Paragraph may be omitted
/// for spanned nodes and is then computed from the span start.
inline Adg load_adg(std::string_view document, LoadMode mode = LoadMode::strict) {
  using detail::json;
  const json doc = detail::parse_document(document);
  detail::reject_unknown_fields(doc,
                                {"schema", "id", "prompt_id", "prompt_text", "label_vocabulary",
                                 "nodes", "edges", "criteria_bindings"},
                                "document");
  detail::require_schema(doc, kAdgSchema);

  Adg adg;
  adg.id = detail::required_as<std::string>(doc, "id", "document");
  adg.prompt_id = detail::required_as<std::string>(doc, "prompt_id", "document");
  adg.prompt_text = detail::required_as<std::string>(doc, "prompt_text", "document");
  const std::size_t prompt_len = scalar_length(adg.prompt_text);

  if (auto it = doc.find("label_vocabulary"); it != doc.end()) {
    if (!it->is_array()) throw Error("schema", "label_vocabulary must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto where = "label_vocabulary[" + std::to_string(i) + "]";
      const json& l = (*it)[i];
      detail::reject_unknown_fields(l, {"name", "template_key", "inverse"}, where);
      adg.label_vocabulary.push_back({detail::required_as<std::string>(l, "name", where),
                                      detail::required_as<std::string>(l, "template_key", where),
                                      detail::optional_as<std::string>(l, "inverse", where).value_or("")});
    }
  } else {
    adg.label_vocabulary = default_label_vocabulary();
  }

  const json& nodes = detail::required(doc, "nodes", "document");
  if (!nodes.is_array()) throw Error("schema", "nodes must be an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto where = "nodes[" + std::to_string(i) + "]";
    const json& n = nodes[i];
    detail::reject_unknown_fields(n, {"id", "kind", "text", "paragraph", "span", "hint"}, where);
    AdgNode node;
    node.id = detail::required_as<std::string>(n, "id", where);
    node.kind = parse_node_kind(detail::required_as<std::string>(n, "kind", where));
    if (auto s = n.find("span"); s != n.end() && !s->is_null()) {
      node.span = detail::parse_span(*s, where + ".span");
    }
    if (auto text = detail::optional_as<std::string>(n, "text", where)) {
      node.text = *text;
    } else if (node.span) {
      if (node.span->start > node.span->end || node.span->end > prompt_len) {
        throw Error("span-out-of-range", "cannot resolve text of node '" + node.id + "'", node.id);
      }
      node.text = slice(adg.prompt_text, *node.span);
    } else {
      throw Error("schema", where + " needs either text or span", node.id);
    }
    if (auto p = detail::optional_as<int>(n, "paragraph", where)) {
      node.paragraph = *p;
    } else if (node.kind != NodeKind::answer_cue && node.span) {
      node.paragraph = paragraph_at(adg.prompt_text, node.span->start);
    } else if (node.kind != NodeKind::answer_cue) {
      throw Error("schema", where + " needs a paragraph or a span", node.id);
    }
    node.hint = detail::optional_as<std::string>(n, "hint", where);
    if (!seen.insert(node.id).second && mode == LoadMode::strict) {
      throw Error("duplicate-node-id", "node id '" + node.id + "' appears more than once", node.id);
    }
    adg.nodes.push_back(std::move(node));
  }

  const json& edges = detail::required(doc, "edges", "document");
  if (!edges.is_array()) throw Error("schema", "edges must be an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto where = "edges[" + std::to_string(i) + "]";
    const json& e = edges[i];
    detail::reject_unknown_fields(e, {"src", "dst", "label", "directed"}, where);
    AdgEdge edge{detail::required_as<std::string>(e, "src", where),
                 detail::required_as<std::string>(e, "dst", where),
                 detail::required_as<std::string>(e, "label", where),
                 detail::optional_as<bool>(e, "directed", where).value_or(true)};
    if (mode == LoadMode::strict) {
      for (const auto* end : {&edge.src, &edge.dst}) {
        if (!seen.count(*end)) {
          throw Error("unknown-node", where + " references unknown node '" + *end + "'", *end);
        }
      }
    }
    adg.edges.push_back(std::move(edge));
  }

  const json& bindings = detail::required(doc, "criteria_bindings", "document");
  detail::require_object(bindings, "criteria_bindings");
  for (const auto& [criterion, node_id] : bindings.items()) {
    auto id = detail::get_as<std::string>(node_id, "criteria_bindings." + criterion);
    if (mode == LoadMode::strict && !seen.count(id)) {
      throw Error("unknown-node", "criterion '" + criterion + "' bound to unknown node '" + id + "'",
                  criterion);
    }
    adg.criteria_bindings.emplace(criterion, std::move(id));
  }
  return adg;
}

inline Adg load_adg_file(const std::string& path, LoadMode mode = LoadMode::strict) {
  return load_adg(detail::read_file(path), mode);
}

/// Canonical encoding: fixed field order, two-space indent, trailing newline.
inline std::string serialize_adg(const Adg& adg) {
  detail::ordered_json doc;
  doc["schema"] = kAdgSchema;
  doc["id"] = adg.id;
  doc["prompt_id"] = adg.prompt_id;
  doc["prompt_text"] = adg.prompt_text;
  doc["label_vocabulary"] = detail::ordered_json::array();
  for (const auto& l : adg.label_vocabulary) {
    detail::ordered_json label{{"name", l.name}, {"template_key", l.template_key}};
    if (!l.inverse.empty()) label["inverse"] = l.inverse;
    doc["label_vocabulary"].push_back(std::move(label));
  }
  doc["nodes"] = detail::ordered_json::array();
  for (const auto& n : adg.nodes) {
    detail::ordered_json node{{"id", n.id}, {"kind", to_string(n.kind)}, {"text", n.text},
                              {"paragraph", n.paragraph}};
    if (n.span) node["span"] = {n.span->start, n.span->end};
    if (n.hint) node["hint"] = *n.hint;
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = detail::ordered_json::array();
  for (const auto& e : adg.edges) {
    detail::ordered_json edge{{"src", e.src}, {"dst", e.dst}, {"label", e.label}};
    if (!e.directed) edge["directed"] = false;
    doc["edges"].push_back(std::move(edge));
  }
  doc["criteria_bindings"] = detail::ordered_json::object();
  for (const auto& [criterion, node_id] : adg.criteria_bindings) {
    doc["criteria_bindings"][criterion] = node_id;
  }
  return doc.dump(2) + "\n";
}

/// Optional hook telling validate_graph which template keys exist.
using TemplateKeyCheck = std::function<bool(std::string_view)>;

inline std::string edge_subject(std::size_t index) { return "edges[" + std::to_string(index) + "]"; }

inline ValidationReport validate_graph(const Adg& adg, const TemplateKeyCheck& template_known = {}) {
  ValidationReport report;

  // Only the first node carrying a given id takes part in the remaining checks.
  std::map<std::string, const AdgNode*> by_id;
  std::map<std::string, int> id_counts;
  for (const auto& n : adg.nodes) {
    by_id.emplace(n.id, &n);
    ++id_counts[n.id];
  }
  for (const auto& [id, count] : id_counts) {
    if (count > 1) {
      report.error("duplicate-node-id", "node id appears " + std::to_string(count) + " times", id);
    }
  }

  const std::size_t prompt_len = scalar_length(adg.prompt_text);
  for (const auto& [id, node] : by_id) {
    if (node->kind == NodeKind::answer_cue) {
      if (node->paragraph < 0) report.error("invalid-paragraph", "paragraph must be >= 0", id);
      continue;
    }
    if (node->paragraph < 1) {
      report.error("invalid-paragraph", "prompt nodes need a 1-based paragraph", id);
    }
    if (!node->span) {
      report.error("missing-span", "sentence and chunk nodes must carry a span", id);
      continue;
    }
    if (node->span->start > node->span->end || node->span->end > prompt_len) {
      report.error("span-out-of-range", "span lies outside the prompt text", id);
      continue;
    }
    if (slice(adg.prompt_text, *node->span) != node->text) {
      report.error("span-text-mismatch", "text differs from the prompt text at its span", id);
    } else if (node->paragraph >= 1 &&
               paragraph_at(adg.prompt_text, node->span->start) != node->paragraph) {
      report.warning("paragraph-mismatch", "paragraph disagrees with the span position", id);
    }
  }

  // Chunk spans under the same parent sentence (smallest containing sentence).
  std::map<std::string, std::vector<const AdgNode*>> chunks_by_parent;
  for (const auto& [id, node] : by_id) {
    if (node->kind != NodeKind::chunk || !node->span) continue;
    const AdgNode* parent = nullptr;
    for (const auto& [pid, candidate] : by_id) {
      if (candidate->kind != NodeKind::sentence || !candidate->span) continue;
      if (!candidate->span->contains(*node->span)) continue;
      if (!parent || candidate->span->width() < parent->span->width()) parent = candidate;
    }
    if (parent) chunks_by_parent[parent->id].push_back(node);
  }
  for (auto& [parent, chunks] : chunks_by_parent) {
    std::sort(chunks.begin(), chunks.end(), [](const AdgNode* a, const AdgNode* b) {
      return std::tie(a->span->start, a->id) < std::tie(b->span->start, b->id);
    });
    for (std::size_t i = 1; i < chunks.size(); ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        if (chunks[k]->span->overlaps(*chunks[i]->span)) {
          report.error("chunk-overlap", "overlaps chunk '" + chunks[k]->id + "' of sentence '" + parent + "'",
                       chunks[i]->id);
        }
      }
    }
  }

  std::map<std::string, int> label_counts;
  for (const auto& l : adg.label_vocabulary) ++label_counts[l.name];
  for (const auto& [name, count] : label_counts) {
    if (count > 1) report.error("duplicate-label", "label defined more than once", name);
  }
  for (const auto& l : adg.label_vocabulary) {
    if (l.template_key.empty()) report.error("empty-template-key", "label has no template key", l.name);
    if (!l.inverse.empty() && !label_counts.count(l.inverse)) {
      report.error("unknown-inverse-label", "inverse label '" + l.inverse + "' is not in the vocabulary",
                   l.name);
    }
  }

  std::set<std::tuple<std::string, std::string, std::string>> triples;
  std::set<std::string> used_labels;
  for (std::size_t i = 0; i < adg.edges.size(); ++i) {
    const auto& e = adg.edges[i];
    const auto subject = edge_subject(i);
    if (!by_id.count(e.src) || !by_id.count(e.dst)) {
      const auto& missing = by_id.count(e.src) ? e.dst : e.src;
      report.error("dangling-edge", "references unknown node '" + missing + "'", subject);
      continue;
    }
    if (e.src == e.dst) {
      report.error("self-loop", "edge connects node '" + e.src + "' to itself", subject);
      continue;
    }
    if (!triples.insert({e.src, e.dst, e.label}).second) {
      report.error("duplicate-edge", "repeats (" + e.src + ", " + e.dst + ", " + e.label + ")", subject);
    }
    if (const auto* label = adg.find_label(e.label)) {
      used_labels.insert(label->name);
      if (!label->inverse.empty()) used_labels.insert(label->inverse);
    } else {
      report.error("unbound-label", "label '" + e.label + "' is not in the vocabulary", subject);
    }
  }

  if (template_known) {
    std::set<std::string> reported_keys;
    for (const auto& name : used_labels) {
      const auto* label = adg.find_label(name);
      if (!label || label->template_key.empty()) continue;
      if (!template_known(label->template_key) && reported_keys.insert(label->template_key).second) {
        report.warning("unbound-template-key",
                       "template key '" + label->template_key + "' is not in the registry", name);
      }
    }
  }

  for (const auto& [criterion, node_id] : adg.criteria_bindings) {
    auto it = by_id.find(node_id);
    if (it == by_id.end()) {
      report.error("unknown-binding-node", "bound to unknown node '" + node_id + "'", criterion);
    } else if (it->second->kind != NodeKind::answer_cue) {
      report.error("binding-not-answer-cue", "bound node '" + node_id + "' is not an answer_cue", criterion);
    }
  }

  // Undirected reachability of answer cues from prompt nodes.
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& e : adg.edges) {
    if (!by_id.count(e.src) || !by_id.count(e.dst) || e.src == e.dst) continue;
    adjacency[e.src].push_back(e.dst);
    adjacency[e.dst].push_back(e.src);
  }
  std::set<std::string> reached;
  std::deque<std::string> queue;
  for (const auto& [id, node] : by_id) {
    if (node->kind != NodeKind::answer_cue) {
      reached.insert(id);
      queue.push_back(id);
    }
  }
  while (!queue.empty()) {
    const auto current = queue.front();
    queue.pop_front();
    for (const auto& next : adjacency[current]) {
      if (reached.insert(next).second) queue.push_back(next);
    }
  }
  for (const auto& [id, node] : by_id) {
    if (node->kind == NodeKind::answer_cue && !reached.count(id)) {
      report.error("unreachable-answer-node", "no path from any sentence or chunk node", id);
    }
  }
  return report;
}

/// One traversed edge. `forward` is true when the walk goes src -> dst.
struct RelationStep {
  std::size_t edge_index = 0;
  AdgEdge edge;
  bool forward = true;

  const std::string& from() const { return forward ? edge.src : edge.dst; }
  const std::string& to() const { return forward ? edge.dst : edge.src; }

  friend bool operator==(const RelationStep&, const RelationStep&) = default;
};

struct RelationPath {
  std::vector<RelationStep> steps;

  std::size_t length() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }

  /// Visited node ids including both ends; empty for the identity path.
  std::vector<std::string> nodes() const {
    std::vector<std::string> out;
    if (steps.empty()) return out;
    out.push_back(steps.front().from());
    for (const auto& s : steps) out.push_back(s.to());
    return out;
  }

  friend bool operator==(const RelationPath&, const RelationPath&) = default;
};

/// Shortest undirected path from `from` to `to`, ties broken by the
/// lexicographically smallest node-id sequence, then by lowest edge index.
/// Absent when the nodes are disconnected.
inline std::optional<RelationPath> relation_between(const Adg& adg, std::string_view from,
                                                    std::string_view to) {
  adg.node(from);
  adg.node(to);
  RelationPath path;
  if (from == to) return path;

  struct Arc {
    std::string neighbour;
    std::size_t edge_index;
    bool forward;
  };
  std::map<std::string, std::vector<Arc>, std::less<>> adjacency;
  for (std::size_t i = 0; i < adg.edges.size(); ++i) {
    const auto& e = adg.edges[i];
    if (e.src == e.dst || !adg.find_node(e.src) || !adg.find_node(e.dst)) continue;
    adjacency[e.src].push_back({e.dst, i, true});
    adjacency[e.dst].push_back({e.src, i, false});
  }

  std::map<std::string, std::size_t, std::less<>> distance{{std::string(to), 0}};
  std::deque<std::string> queue{std::string(to)};
  while (!queue.empty()) {
    const auto current = queue.front();
    queue.pop_front();
    for (const auto& arc : adjacency[current]) {
      if (distance.emplace(arc.neighbour, distance[current] + 1).second) queue.push_back(arc.neighbour);
    }
  }
  auto start = distance.find(from);
  if (start == distance.end()) return std::nullopt;

  std::string current(from);
  while (current != to) {
    const std::size_t here = distance.find(current)->second;
    const Arc* best = nullptr;
    for (const auto& arc : adjacency.find(current)->second) {
      auto d = distance.find(arc.neighbour);
      if (d == distance.end() || d->second + 1 != here) continue;
      if (!best || arc.neighbour < best->neighbour ||
          (arc.neighbour == best->neighbour && arc.edge_index < best->edge_index)) {
        best = &arc;
      }
    }
    path.steps.push_back({best->edge_index, adg.edges[best->edge_index], best->forward});
    current = best->neighbour;
  }
  return path;
}

inline int node_paragraph(const Adg& adg, std::string_view node_id) {
  const auto& node = adg.node(node_id);
  return node.kind == NodeKind::answer_cue ? 0 : node.paragraph;
}

}  // namespace adg
