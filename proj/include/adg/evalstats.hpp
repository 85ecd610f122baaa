#pragma once

// Significance tests from published summary statistics (Welch t, Pearson
// chi-square goodness of fit) and alignment accuracy against gold nodes.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "adg/alignment.hpp"
#include "adg/corpus.hpp"
#include "adg/error.hpp"
#include "adg/graph.hpp"

namespace adg::stats {

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error("invalid-argument", "degrees of freedom must be positive");
  if (std::isnan(t)) throw Error("invalid-argument", "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

/// P(X >= x) for chi-square with `df` degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw Error("invalid-argument", "degrees of freedom must be positive");
  if (std::isnan(x)) throw Error("invalid-argument", "chi-square statistic is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

enum class Verdict { sig_01, sig_05, ns };

/// Which markers a published table uses. Some tables only print ** and ns,
/// i.e. they test at alpha = 0.01 alone.
enum class MarkerScale { three_level, two_level };

inline Verdict verdict_for(double p, MarkerScale scale = MarkerScale::three_level) {
  if (p < 0.01) return Verdict::sig_01;
  if (scale == MarkerScale::three_level && p < 0.05) return Verdict::sig_05;
  return Verdict::ns;
}

inline std::string_view marker(Verdict v) {
  switch (v) {
    case Verdict::sig_01: return "**";
    case Verdict::sig_05: return "*";
    case Verdict::ns: return "ns";
  }
  return "?";
}

inline std::optional<Verdict> parse_marker(std::string_view m) {
  if (m == "**") return Verdict::sig_01;
  if (m == "*") return Verdict::sig_05;
  if (m == "ns") return Verdict::ns;
  return std::nullopt;
}

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  Verdict verdict = Verdict::ns;

  nlohmann::ordered_json to_json() const {
    return {{"statistic", statistic}, {"df", df}, {"p_value", p_value}, {"verdict", marker(verdict)}};
  }
};

struct SummaryStats {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation

  void check() const {
    if (n < 2) throw Error("invalid-argument", "summary statistics need n >= 2");
    if (!(sd >= 0.0)) throw Error("invalid-argument", "standard deviation must be non-negative");
  }
};

/// Unequal-variance two-sample t test from summary data with
/// Welch-Satterthwaite degrees of freedom. The statistic is a - b.
inline TestResult welch_t(const SummaryStats& a, const SummaryStats& b) {
  a.check();
  b.check();
  const double va = a.sd * a.sd / a.n;
  const double vb = b.sd * b.sd / b.n;
  const double se2 = va + vb;
  TestResult r;
  if (se2 == 0.0) {
    r.df = a.n + b.n - 2.0;
    if (a.mean == b.mean) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = a.mean > b.mean ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
  } else {
    r.statistic = (a.mean - b.mean) / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (a.n - 1) + vb * vb / (b.n - 1));
    r.p_value = t_two_sided_p(r.statistic, r.df);
  }
  r.verdict = verdict_for(r.p_value);
  return r;
}

struct ChiSquareOptions {
  std::vector<double> expected;  // proportions; empty means uniform
  bool yates = false;            // continuity correction
  MarkerScale scale = MarkerScale::three_level;
};

/// Pearson goodness-of-fit test, df = k - 1.
inline TestResult chi_square_gof(const std::vector<long>& counts, const ChiSquareOptions& options = {}) {
  const std::size_t k = counts.size();
  if (k < 2) throw Error("invalid-argument", "chi-square needs at least two categories");
  if (std::any_of(counts.begin(), counts.end(), [](long c) { return c < 0; })) {
    throw Error("invalid-argument", "counts must be non-negative");
  }
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0L));
  if (total == 0.0) throw Error("empty-sample", "all counts are zero");

  std::vector<double> proportions = options.expected;
  if (proportions.empty()) proportions.assign(k, 1.0 / static_cast<double>(k));
  if (proportions.size() != k) throw Error("invalid-argument", "expected proportions do not match the categories");
  const double mass = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  if (std::any_of(proportions.begin(), proportions.end(), [](double p) { return !(p > 0.0); }) || !(mass > 0.0)) {
    throw Error("invalid-argument", "expected proportions must be positive");
  }

  TestResult r;
  for (std::size_t i = 0; i < k; ++i) {
    const double expected = total * proportions[i] / mass;
    double deviation = std::fabs(static_cast<double>(counts[i]) - expected);
    if (options.yates) deviation = std::max(0.0, deviation - 0.5);
    r.statistic += deviation * deviation / expected;
  }
  r.df = static_cast<double>(k - 1);
  r.p_value = chi_square_sf(r.statistic, r.df);
  r.verdict = verdict_for(r.p_value, options.scale);
  return r;
}

/// Six-point Likert counts, strongly disagree ... strongly agree.
using LikertCounts = std::array<long, 6>;

struct Trichotomy {
  long negative = 0;
  long neutral = 0;
  long positive = 0;

  friend bool operator==(const Trichotomy&, const Trichotomy&) = default;
};

inline Trichotomy trichotomize(const LikertCounts& likert) {
  return {likert[0] + likert[1], likert[2] + likert[3], likert[4] + likert[5]};
}

struct PairwiseResult {
  std::string_view pair;  // "neg-neu", "neg-pos", "neu-pos"
  TestResult test;
};

/// Two-category 50/50 goodness-of-fit for each pair of groups.
inline std::array<PairwiseResult, 3> pairwise_tests(const Trichotomy& t, const ChiSquareOptions& options) {
  ChiSquareOptions pairwise = options;
  pairwise.expected.clear();
  return {PairwiseResult{"neg-neu", chi_square_gof({t.negative, t.neutral}, pairwise)},
          PairwiseResult{"neg-pos", chi_square_gof({t.negative, t.positive}, pairwise)},
          PairwiseResult{"neu-pos", chi_square_gof({t.neutral, t.positive}, pairwise)}};
}

// ---------------------------------------------------------------------------
// Table files: delimiter-separated rows (tab, else comma). Blank lines and
// lines starting with '#' are skipped. A trailing non-numeric column holds
// the expected marker(s) for comparison.

struct WelchRow {
  std::string id;
  SummaryStats a;
  SummaryStats b;
  std::optional<std::string> expected;
};

struct CountRow {
  std::string id;
  std::vector<long> counts;
  std::optional<std::string> expected;
};

namespace detail {

inline std::vector<std::string> split_row(const std::string& line) {
  const char delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) {
    const auto first = field.find_first_not_of(" \r");
    const auto last = field.find_last_not_of(" \r");
    out.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
  }
  return out;
}

inline std::vector<std::vector<std::string>> table_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    rows.push_back(split_row(line));
  }
  return rows;
}

inline double to_number(const std::string& field, std::size_t row) {
  try {
    std::size_t used = 0;
    const double value = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return value;
  } catch (const std::exception&) {
    throw Error("syntax", "row " + std::to_string(row + 1) + ": '" + field + "' is not a number");
  }
}

inline bool is_number(const std::string& field) {
  try {
    std::size_t used = 0;
    std::stod(field, &used);
    return used == field.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

/// Rows of: id, n1, mean1, sd1, n2, mean2, sd2 [, expected marker].
inline std::vector<WelchRow> parse_welch_table(std::string_view text) {
  std::vector<WelchRow> out;
  const auto rows = detail::table_rows(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 7 && f.size() != 8) {
      throw Error("syntax", "row " + std::to_string(i + 1) + ": expected 7 or 8 fields, got " + std::to_string(f.size()));
    }
    WelchRow row;
    row.id = f[0];
    row.a = {static_cast<int>(detail::to_number(f[1], i)), detail::to_number(f[2], i), detail::to_number(f[3], i)};
    row.b = {static_cast<int>(detail::to_number(f[4], i)), detail::to_number(f[5], i), detail::to_number(f[6], i)};
    if (f.size() == 8) row.expected = f[7];
    out.push_back(std::move(row));
  }
  return out;
}

/// Rows of: id, count, count, ... [, expected].
inline std::vector<CountRow> parse_count_table(std::string_view text) {
  std::vector<CountRow> out;
  const auto rows = detail::table_rows(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    CountRow row;
    row.id = f.empty() ? std::string() : f[0];
    std::size_t end = f.size();
    if (end > 1 && !detail::is_number(f.back())) {
      row.expected = f.back();
      --end;
    }
    for (std::size_t k = 1; k < end; ++k) {
      const double v = detail::to_number(f[k], i);
      if (v < 0 || v != std::floor(v)) throw Error("syntax", "row " + std::to_string(i + 1) + ": counts must be whole");
      row.counts.push_back(static_cast<long>(v));
    }
    if (row.counts.size() < 2) throw Error("syntax", "row " + std::to_string(i + 1) + ": need at least two counts");
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table reproduction: one produced marker string per row, compared with the
// row's expected column when present.

struct TableLine {
  std::string id;
  std::string produced;
  std::optional<std::string> expected;
  nlohmann::ordered_json tests = nlohmann::ordered_json::array();

  bool matches() const { return !expected || *expected == produced; }

  nlohmann::ordered_json to_json() const {
    return {{"id", id}, {"produced", produced}, {"expected", expected ? nlohmann::ordered_json(*expected) : nullptr},
            {"match", matches()}, {"tests", tests}};
  }
};

inline std::string roman(std::size_t index) {
  static constexpr std::array<std::string_view, 10> numerals{"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"};
  return index < numerals.size() ? std::string(numerals[index]) : std::to_string(index + 1);
}

/// Index of the strictly largest count; nullopt on a tie for first place.
inline std::optional<std::size_t> majority_category(const std::vector<long>& counts) {
  if (counts.empty()) return std::nullopt;
  const auto best = std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), *best) > 1) return std::nullopt;
  return static_cast<std::size_t>(best - counts.begin());
}

inline std::vector<TableLine> reproduce_welch(const std::vector<WelchRow>& rows) {
  std::vector<TableLine> out;
  for (const auto& row : rows) {
    const auto r = welch_t(row.a, row.b);
    TableLine line{row.id, std::string(marker(r.verdict)), row.expected};
    line.tests.push_back(r.to_json());
    out.push_back(std::move(line));
  }
  return out;
}

/// Goodness of fit over all categories; the marker is followed by the
/// majority category in roman numerals, e.g. "**(I)".
inline std::vector<TableLine> reproduce_counts(const std::vector<CountRow>& rows, const ChiSquareOptions& options = {}) {
  std::vector<TableLine> out;
  for (const auto& row : rows) {
    const auto r = chi_square_gof(row.counts, options);
    const auto major = majority_category(row.counts);
    TableLine line{row.id, std::string(marker(r.verdict)) + "(" + (major ? roman(*major) : std::string("tie")) + ")",
                   row.expected};
    line.tests.push_back(r.to_json());
    out.push_back(std::move(line));
  }
  return out;
}

/// Six-point Likert rows collapsed to three groups, then the three pairwise
/// tests; markers joined with '/' in neg-neu, neg-pos, neu-pos order.
inline std::vector<TableLine> reproduce_pairwise(const std::vector<CountRow>& rows, const ChiSquareOptions& options) {
  std::vector<TableLine> out;
  for (const auto& row : rows) {
    if (row.counts.size() != 6) {
      throw Error("syntax", "row '" + row.id + "': expected 6 Likert counts, got " + std::to_string(row.counts.size()));
    }
    LikertCounts likert{};
    std::copy(row.counts.begin(), row.counts.end(), likert.begin());
    TableLine line{row.id, {}, row.expected};
    for (const auto& pr : pairwise_tests(trichotomize(likert), options)) {
      if (!line.produced.empty()) line.produced += "/";
      line.produced += marker(pr.test.verdict);
      auto j = pr.test.to_json();
      j["pair"] = pr.pair;
      line.tests.push_back(std::move(j));
    }
    out.push_back(std::move(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignment accuracy against oracle response nodes.

struct AlignmentEvaluation {
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t skipped = 0;  // pairs with a cue but no oracle entry
  std::optional<double> top1;
  std::optional<double> mean_margin;
  std::map<std::pair<std::string, std::string>, std::size_t> confusion;  // (oracle kind, predicted kind)
  std::vector<AlignmentResult> results;
  std::vector<std::string> oracle_for_result;  // parallel to results

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out{{"evaluated", evaluated}, {"correct", correct}, {"skipped", skipped},
                               {"top1", nullptr},         {"mean_margin", nullptr}};
    if (top1) out["top1"] = *top1;
    if (mean_margin) out["mean_margin"] = *mean_margin;
    out["confusion"] = nlohmann::ordered_json::array();
    for (const auto& [kinds, count] : confusion) {
      out["confusion"].push_back({{"oracle_kind", kinds.first}, {"predicted_kind", kinds.second}, {"count", count}});
    }
    return out;
  }
};

/// Aligns every (response, criterion) pair that has a cue and compares the
/// chosen node with the oracle node. Pairs lacking an oracle entry are skipped.
inline AlignmentEvaluation alignment_accuracy(const Corpus& corpus, const std::map<std::string, Adg>& graphs,
                                              const SimilarityProvider& provider, const AlignConfig& config = {}) {
  AlignmentEvaluation eval;
  double margin_sum = 0.0;
  for (const auto& response : corpus.responses) {
    auto g = graphs.find(response.prompt_id);
    if (g == graphs.end()) {
      throw Error("unknown-prompt", "no graph for prompt '" + response.prompt_id + "'", response.prompt_id);
    }
    const Adg& adg = g->second;
    for (const auto& [criterion_id, entry] : response.per_criterion) {
      const auto cue = cue_text(response, criterion_id);
      if (!cue) continue;
      const auto oracle = corpus.oracle_node(response.response_id, criterion_id);
      if (!oracle) {
        ++eval.skipped;
        continue;
      }
      const auto& oracle_node = adg.node(*oracle);
      auto result = align_cue(adg, *cue, provider, config);
      result.response_id = response.response_id;
      result.criterion_id = criterion_id;
      const auto& predicted = adg.node(result.node_id);
      ++eval.evaluated;
      if (result.node_id == *oracle) ++eval.correct;
      margin_sum += result.margin;
      ++eval.confusion[{std::string(to_string(oracle_node.kind)), std::string(to_string(predicted.kind))}];
      eval.oracle_for_result.push_back(*oracle);
      eval.results.push_back(std::move(result));
    }
  }
  if (eval.evaluated > 0) {
    eval.top1 = static_cast<double>(eval.correct) / static_cast<double>(eval.evaluated);
    eval.mean_margin = margin_sum / static_cast<double>(eval.evaluated);
  }
  return eval;
}

}  // namespace adg::stats
