#pragma once

// Response-node estimation: score the justification cue against every
// eligible node and take the argmax.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adg/error.hpp"
#include "adg/graph.hpp"
#include "adg/similarity.hpp"

namespace adg {

enum class TieBreak { smallest_node_id, document_order };

struct AlignConfig {
  double threshold = 0.15;
  std::set<NodeKind> candidate_kinds{NodeKind::sentence, NodeKind::chunk};
  TieBreak tie_break = TieBreak::smallest_node_id;

  void check() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw Error("invalid-argument", "alignment threshold must lie in [0, 1]");
    }
  }
};

struct AlignmentResult {
  std::string response_id;
  std::string criterion_id;
  std::string node_id;
  double similarity = 0.0;
  std::optional<std::string> runner_up_node_id;
  double margin = 0.0;  // similarity minus runner-up similarity
  ProviderKind provider_kind = ProviderKind::char_ngram;
  bool aligned = false;
  double threshold = 0.0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out{{"response_id", response_id},
                               {"criterion_id", criterion_id},
                               {"node_id", node_id},
                               {"similarity", similarity},
                               {"runner_up_node_id", nullptr},
                               {"margin", margin},
                               {"provider_kind", to_string(provider_kind)},
                               {"aligned", aligned},
                               {"threshold", threshold}};
    if (runner_up_node_id) out["runner_up_node_id"] = *runner_up_node_id;
    return out;
  }

  friend bool operator==(const AlignmentResult&, const AlignmentResult&) = default;
};

/// Eligible candidates in document order; a repeated id keeps its first node.
inline std::vector<const AdgNode*> alignment_candidates(const Adg& adg, const AlignConfig& config) {
  std::vector<const AdgNode*> out;
  std::set<std::string> seen;
  for (const auto& n : adg.nodes) {
    if (config.candidate_kinds.count(n.kind) && seen.insert(n.id).second) out.push_back(&n);
  }
  return out;
}

inline AlignmentResult align_cue(const Adg& adg, std::string_view cue, const SimilarityProvider& provider,
                                 const AlignConfig& config = {}) {
  config.check();
  if (cue.empty()) throw Error("empty-cue", "justification cue is empty");
  const auto candidates = alignment_candidates(adg, config);
  if (candidates.empty()) throw Error("no-candidates", "graph '" + adg.id + "' has no eligible nodes", adg.id);

  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto* n : candidates) texts.push_back(n->text);
  const auto scores = provider.score(cue, texts);
  if (scores.values.size() != candidates.size()) {
    throw Error("provider-malformed", "provider returned the wrong number of scores");
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.values[a] != scores.values[b]) return scores.values[a] > scores.values[b];
    if (config.tie_break == TieBreak::smallest_node_id) return candidates[a]->id < candidates[b]->id;
    return a < b;
  });

  AlignmentResult result;
  result.node_id = candidates[order[0]]->id;
  result.similarity = scores.values[order[0]];
  result.provider_kind = scores.kind;
  result.threshold = config.threshold;
  result.aligned = result.similarity >= config.threshold;
  if (order.size() > 1) {
    result.runner_up_node_id = candidates[order[1]]->id;
    result.margin = result.similarity - scores.values[order[1]];
  } else {
    result.margin = result.similarity;
  }
  return result;
}

}  // namespace adg
