#pragma once

// Lexical similarity between a justification cue and graph node texts.
// Providers return one score in [0, 1] per candidate text.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/uscript.h>

#include "adg/error.hpp"
#include "adg/text.hpp"

namespace adg {

/// Sparse weighted vector keyed by UTF-8 feature strings.
using SparseVector = std::map<std::string, double>;

/// Counts of overlapping character n-grams over the normalized text. Text
/// shorter than n contributes itself as a single gram.
inline SparseVector ngram_profile(std::string_view text, int n) {
  if (n < 1) throw Error("invalid-argument", "n-gram order must be >= 1");
  const auto normalized = normalize_for_matching(text);
  SparseVector profile;
  if (normalized.empty()) return profile;
  const auto order = static_cast<std::size_t>(n);
  if (normalized.size() < order) {
    profile[to_utf8(normalized)] = 1.0;
    return profile;
  }
  for (std::size_t i = 0; i + order <= normalized.size(); ++i) {
    profile[to_utf8(std::u32string_view(normalized).substr(i, order))] += 1.0;
  }
  return profile;
}

inline double norm(const SparseVector& v) {
  double sum = 0.0;
  for (const auto& [key, weight] : v) sum += weight * weight;
  return std::sqrt(sum);
}

/// Cosine of two non-negative sparse vectors, clamped to [0, 1]; 0 when
/// either is empty.
inline double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [key, weight] : small) {
    if (auto it = large.find(key); it != large.end()) dot += weight * it->second;
  }
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [key, weight] : a) sa += weight * weight;
  for (const auto& [key, weight] : b) sb += weight * weight;
  const double denom = std::sqrt(sa * sb);
  if (denom == 0.0) return 0.0;
  return std::clamp(dot / denom, 0.0, 1.0);
}

enum class ProviderKind { char_ngram, token_tfidf, remote_embedding, oracle };

inline std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::char_ngram: return "char_ngram";
    case ProviderKind::token_tfidf: return "token_tfidf";
    case ProviderKind::remote_embedding: return "remote_embedding";
    case ProviderKind::oracle: return "oracle";
  }
  return "?";
}

struct SimilarityScores {
  std::vector<double> values;  // parallel to the candidate list
  ProviderKind kind = ProviderKind::char_ngram;
};

/// Contract: scores in [0, 1], deterministic for fixed parameters and inputs.
/// Remote-backed providers signal failure with `provider-unavailable`.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual ProviderKind kind() const = 0;
  virtual SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const = 0;
};

class CharNgramProvider final : public SimilarityProvider {
 public:
  explicit CharNgramProvider(int n = 3) : n_(n) {
    if (n < 1) throw Error("invalid-argument", "n-gram order must be >= 1");
  }

  int order() const noexcept { return n_; }
  ProviderKind kind() const override { return ProviderKind::char_ngram; }

  SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const override {
    const auto query = ngram_profile(cue, n_);
    SimilarityScores out{{}, kind()};
    out.values.reserve(candidates.size());
    for (const auto& text : candidates) out.values.push_back(cosine(query, ngram_profile(text, n_)));
    return out;
  }

 private:
  int n_;
};

struct TokenizerRules {
  // Han/kana runs have no spaces; emit overlapping character bigrams for them.
  bool cjk_bigrams = true;
};

/// Splits normalized text into word tokens: runs of letters/digits of one
/// script. Whitespace and punctuation separate tokens.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerRules& rules = {}) {
  const auto normalized = normalize_for_matching(text);
  const auto script_of = [](char32_t c) {
    UErrorCode status = U_ZERO_ERROR;
    auto script = uscript_getScript(static_cast<UChar32>(c), &status);
    if (script == USCRIPT_COMMON || script == USCRIPT_INHERITED) {
      return u_isdigit(static_cast<UChar32>(c)) ? USCRIPT_LATIN : script;
    }
    return script;
  };
  const auto is_cjk = [](UScriptCode s) {
    return s == USCRIPT_HAN || s == USCRIPT_HIRAGANA || s == USCRIPT_KATAKANA;
  };
  const auto is_word_char = [](char32_t c) {
    return u_isalnum(static_cast<UChar32>(c)) || c == U'ー';
  };

  std::vector<std::string> tokens;
  const auto flush = [&](std::u32string_view run, UScriptCode script) {
    if (run.empty()) return;
    if (rules.cjk_bigrams && is_cjk(script) && run.size() > 1) {
      for (std::size_t i = 0; i + 2 <= run.size(); ++i) tokens.push_back(to_utf8(run.substr(i, 2)));
    } else {
      tokens.push_back(to_utf8(run));
    }
  };
  std::u32string run;
  UScriptCode run_script = USCRIPT_INVALID_CODE;
  for (char32_t c : normalized) {
    if (!is_word_char(c)) {
      flush(run, run_script);
      run.clear();
      continue;
    }
    // the prolonged sound mark continues whatever run it follows
    const auto script = (c == U'ー' && !run.empty()) ? run_script : script_of(c);
    if (!run.empty() && script != run_script) {
      flush(run, run_script);
      run.clear();
    }
    if (run.empty()) run_script = script;
    run.push_back(c);
  }
  flush(run, run_script);
  return tokens;
}

/// TF-IDF over tokens; document frequencies come from a fixed corpus (by
/// default the node texts the provider is built from).
class TokenTfidfProvider final : public SimilarityProvider {
 public:
  explicit TokenTfidfProvider(std::span<const std::string> documents, TokenizerRules rules = {})
      : rules_(rules), documents_(documents.size()) {
    for (const auto& doc : documents) {
      auto tokens = tokenize(doc, rules_);
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
      for (auto& t : tokens) ++document_frequency_[std::move(t)];
    }
  }

  ProviderKind kind() const override { return ProviderKind::token_tfidf; }

  double idf(const std::string& token) const {
    auto it = document_frequency_.find(token);
    const double df = it == document_frequency_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
  }

  SparseVector weigh(std::string_view text) const {
    SparseVector v;
    for (auto& t : tokenize(text, rules_)) v[std::move(t)] += 1.0;
    for (auto& [token, weight] : v) weight *= idf(token);
    return v;
  }

  SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const override {
    const auto query = weigh(cue);
    SimilarityScores out{{}, kind()};
    out.values.reserve(candidates.size());
    for (const auto& text : candidates) out.values.push_back(cosine(query, weigh(text)));
    return out;
  }

 private:
  TokenizerRules rules_;
  std::size_t documents_;
  std::map<std::string, std::size_t> document_frequency_;
};

/// Tries providers in order; moves on only when one reports
/// `provider-unavailable`. The last failure propagates.
class FallbackProvider final : public SimilarityProvider {
 public:
  explicit FallbackProvider(std::vector<std::shared_ptr<const SimilarityProvider>> chain)
      : chain_(std::move(chain)) {
    if (chain_.empty()) throw Error("invalid-argument", "fallback chain is empty");
  }

  ProviderKind kind() const override { return chain_.front()->kind(); }

  SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const override {
    for (std::size_t i = 0; i < chain_.size(); ++i) {
      try {
        return chain_[i]->score(cue, candidates);
      } catch (const Error& e) {
        if (e.code() != "provider-unavailable" || i + 1 == chain_.size()) throw;
      }
    }
    throw Error("provider-unavailable", "no provider answered");
  }

 private:
  std::vector<std::shared_ptr<const SimilarityProvider>> chain_;
};

}  // namespace adg
