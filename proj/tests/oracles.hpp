#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the code it is used to check, except
// to build inputs.

#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <adg/adg.hpp>

namespace oracle {

using nlohmann::json;

// --- distributions ----------------------------------------------------------------

constexpr double kDistributionTolerance = 1e-6;

// Composite Simpson on [a, b] with an even number of panels.
template <class F>
double simpson(F f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Two-sided t tail by integrating the density over [0, |t|].
inline double t_p_by_integration(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto density = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  return 1.0 - 2.0 * simpson(density, 0.0, std::fabs(t), 200000);
}

// Chi-square upper tail; u = v^2 removes the singularity at 0 for df = 1.
inline double chi_p_by_integration(double x, double df) {
  const double log_c = (df / 2) * std::log(2.0) + std::lgamma(df / 2);
  const auto density = [&](double v) {
    return v == 0.0 && df < 1.0 + 1e-12 ? 2.0 * std::exp(-log_c)
                                        : 2.0 * std::pow(v, df - 1) * std::exp(-v * v / 2 - log_c);
  };
  return 1.0 - simpson(density, 0.0, std::sqrt(x), 200000);
}

// (t, df); includes the df values produced by the published tables.
inline const std::vector<std::pair<double, double>>& t_points() {
  static const std::vector<std::pair<double, double>> p{
      {0.1, 1},     {0.5, 2},     {1.0, 3},     {2.0, 4},      {-1.5, 5},    {3.0, 7},     {0.8, 10},
      {2.5, 15},    {1.96, 30},   {-3.78, 50},  {4.18, 68},    {2.98, 54.7}, {2.33, 56.5}, {0.88, 67.3},
      {1.44, 63.8}, {1.97, 63.1}, {0.078, 36.7}, {1.28, 32.6}, {5.0, 3.5},   {0.3, 120}};
  return p;
}

// (x, df)
inline const std::vector<std::pair<double, double>>& chi_points() {
  static const std::vector<std::pair<double, double>> p{
      {0.5, 1},  {1.0, 1},   {3.84, 1}, {6.63, 1}, {0.67, 1},  {4.0, 2},  {14.11, 2}, {0.1, 2},  {7.8, 3},  {1.0, 3},
      {11.07, 5}, {3.0, 5},  {18.3, 10}, {9.0, 10}, {2.0, 4},  {25.0, 15}, {0.02, 1}, {5.99, 2}, {9.49, 4}, {12.0, 6}};
  return p;
}

// --- alignment --------------------------------------------------------------------

// Character trigram cosine written out from the definition.
inline double trigram_cosine(const std::string& a, const std::string& b) {
  const auto count = [](const std::string& t) {
    const auto s = adg::normalize_for_matching(t);
    std::unordered_map<std::u32string, double> m;
    if (s.empty()) return m;
    if (s.size() < 3) {
      m[s] = 1;
      return m;
    }
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) m[s.substr(i, 3)] += 1;
    return m;
  };
  const auto ca = count(a);
  const auto cb = count(b);
  double dot = 0, na = 0, nb = 0;
  for (const auto& [g, c] : ca) {
    na += c * c;
    if (cb.count(g)) dot += c * cb.at(g);
  }
  for (const auto& [g, c] : cb) nb += c * c;
  return (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
}

struct ScanInstance {
  adg::Adg graph;
  std::string cue;
  std::optional<std::string> best_id;  // nullopt: no eligible node
  double best_score = 0.0;
};

// Random graph of 1..8 nodes and a random cue, with the expected argmax
// found by scoring every eligible node (smallest id wins ties).
inline ScanInstance random_scan_instance(std::mt19937& rng) {
  static const std::vector<std::string> words{"language", "symbol", "word", "thing", "abstract", "picture", "idea",
                                              "言葉", "記号", "抽象", "絵", "考え", "似ていない", "は", "の"};
  const auto phrase = [&](std::size_t k) {
    std::string s;
    for (std::size_t i = 0; i < k; ++i) s += (i ? " " : "") + words[rng() % words.size()];
    return s;
  };
  ScanInstance out;
  const std::size_t n = 1 + rng() % 8;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind =
        rng() % 4 == 0 ? adg::NodeKind::answer_cue : (rng() % 2 ? adg::NodeKind::sentence : adg::NodeKind::chunk);
    out.graph.nodes.push_back({"n" + std::to_string(rng() % 100), kind, phrase(1 + rng() % 5), 1, std::nullopt, std::nullopt});
  }
  out.cue = phrase(1 + rng() % 4);

  double best = -1;
  std::set<std::string> seen;
  for (const auto& node : out.graph.nodes) {
    if (node.kind == adg::NodeKind::answer_cue || !seen.insert(node.id).second) continue;
    const double s = trigram_cosine(out.cue, node.text);
    if (s > best + 1e-12 || (std::fabs(s - best) <= 1e-12 && node.id < *out.best_id)) {
      out.best_id = node.id;
      best = s;
    }
  }
  out.best_score = best;
  return out;
}

// --- decision table ----------------------------------------------------------------

enum class Relation { label, self, none };

// Response node r is a chunk of sentence s; the model-answer node is ans.
inline adg::Adg decision_graph(const std::string& label, bool response_is_source) {
  adg::Adg g;
  g.id = g.prompt_id = "dt";
  g.prompt_text = "Alpha beta.";
  g.label_vocabulary = adg::default_label_vocabulary();
  g.nodes = {{"s", adg::NodeKind::sentence, "Alpha beta.", 1, adg::Span{0, 11}, std::nullopt},
             {"r", adg::NodeKind::chunk, "Alpha", 1, adg::Span{0, 5}, std::nullopt},
             {"ans", adg::NodeKind::answer_cue, "The answer", 0, std::nullopt, std::nullopt}};
  if (!label.empty()) {
    g.edges.push_back(response_is_source ? adg::AdgEdge{"r", "ans", label} : adg::AdgEdge{"ans", "r", label});
  }
  g.criteria_bindings["K"] = "ans";
  return g;
}

struct DecisionCell {
  int score = 0;
  bool aligned = false;
  Relation relation = Relation::none;
  std::string label;
  adg::Adg graph;
  adg::SelectionContext context;
  std::vector<adg::DecisionRow> firing;  // rows whose condition holds, in table order
};

// 3 score classes x aligned/unaligned x (every label, self, none).
inline std::vector<DecisionCell> decision_cells(const adg::SelectionPolicy& policy = {}) {
  using adg::DecisionRow;
  constexpr int max = 2;
  std::vector<DecisionCell> cells;
  for (int score : {0, 1, max}) {
    for (bool aligned : {true, false}) {
      std::vector<std::pair<Relation, std::string>> relations{{Relation::self, ""}, {Relation::none, ""}};
      for (const auto& l : adg::default_label_vocabulary()) relations.emplace_back(Relation::label, l.name);
      for (const auto& [kind, label] : relations) {
        DecisionCell cell{score, aligned, kind, label, decision_graph(kind == Relation::label ? label : "", false), {}, {}};
        auto& ctx = cell.context;
        ctx.criterion_id = "K";
        ctx.score = score;
        ctx.max_score = max;
        ctx.has_cue = true;
        ctx.alignment.node_id = kind == Relation::self ? "ans" : "r";
        ctx.alignment.aligned = aligned;
        if (aligned) ctx.relation = adg::relation_between(cell.graph, ctx.alignment.node_id, "ans");

        const bool partial = score > 0 && score < max;
        const bool self = kind == Relation::self;
        const bool part_chunk = kind == Relation::label && policy.part_labels.count(label) > 0;
        const std::vector<std::pair<DecisionRow, bool>> rows{
            {DecisionRow::analytic, false},
            {DecisionRow::full_credit, score == max},
            {DecisionRow::no_reference, !aligned},
            {DecisionRow::insufficient_elements, aligned && ((self && score < max) || (part_chunk && partial))},
            {DecisionRow::wrong_part, aligned && kind == Relation::label},
            {DecisionRow::off_structure, aligned && kind == Relation::none},
        };
        for (const auto& [row, fires] : rows) {
          if (fires) cell.firing.push_back(row);
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

// --- planted defects ------------------------------------------------------------------

struct AdgDefect {
  const char* name;
  std::function<void(json&)> plant;
  const char* code;
};

// The six taxonomy defects, planted into a clean graph document.
inline std::vector<AdgDefect> adg_defects() {
  return {
      {"dangling_edge", [](json& d) { d["edges"].push_back({{"src", "s1"}, {"dst", "n99"}, {"label", "elaboration"}}); },
       "dangling-edge"},
      {"duplicate_node_id", [](json& d) { d["nodes"].push_back(d["nodes"][0]); }, "duplicate-node-id"},
      {"self_loop", [](json& d) { d["edges"].push_back({{"src", "s1"}, {"dst", "s1"}, {"label", "elaboration"}}); },
       "self-loop"},
      {"unbound_label", [](json& d) { d["edges"].push_back({{"src", "s1"}, {"dst", "s5"}, {"label", "sarcasm"}}); },
       "unbound-label"},
      {"unreachable_answer_cue",
       [](json& d) { d["nodes"].push_back({{"id", "aZ"}, {"kind", "answer_cue"}, {"text", "An orphan claim"}}); },
       "unreachable-answer-node"},
      {"span_text_mismatch", [](json& d) { d["nodes"][0]["text"] = "People share ideas."; }, "span-text-mismatch"},
  };
}

inline void PrintTo(const AdgDefect& d, std::ostream* os) { *os << d.name; }

struct RegistryDefect {
  const char* name;
  std::function<void(json& templates, json& graph)> plant;
  const char* code;
};

inline std::vector<RegistryDefect> registry_defects() {
  return {
      {"missing_generic_template",
       [](json& t, json&) {
         auto& list = t["templates"];
         for (auto it = list.begin(); it != list.end();) {
           it = (*it)["key"] == "wrong_part.contrast" ? list.erase(it) : std::next(it);
         }
       },
       "missing-generic-template"},
      {"analytic_unknown_criterion",
       [](json& t, json&) {
         t["templates"].push_back({{"key", "analytic.Z"}, {"scope", "analytic"}, {"criterion_id", "Z"},
                                   {"error_signature", "x"}, {"body", "About Z."}});
       },
       "unknown-criterion"},
      {"unbound_label_template",
       [](json&, json& g) { g["label_vocabulary"].push_back({{"name", "irony"}, {"template_key", "wrong_part.irony"}}); },
       "unbound-template"},
  };
}

inline void PrintTo(const RegistryDefect& d, std::ostream* os) { *os << d.name; }

}  // namespace oracle
