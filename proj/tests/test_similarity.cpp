#include <gtest/gtest.h>

#include <random>
#include <unordered_map>

#include "support.hpp"

namespace {

// Separately coded n-gram counter and cosine used as an oracle.
std::unordered_map<std::u32string, int> count_grams(const std::string& text, std::size_t n) {
  const std::u32string s = adg::normalize_for_matching(text);
  std::unordered_map<std::u32string, int> counts;
  if (s.empty()) return counts;
  if (s.size() < n) {
    counts[s] = 1;
    return counts;
  }
  for (std::size_t i = 0; i + n <= s.size(); ++i) counts[s.substr(i, n)]++;
  return counts;
}

double oracle_cosine(const std::string& a, const std::string& b, std::size_t n) {
  const auto ca = count_grams(a, n);
  const auto cb = count_grams(b, n);
  if (ca.empty() || cb.empty()) return 0.0;
  long dot = 0, na = 0, nb = 0;
  for (const auto& [g, c] : ca) {
    na += static_cast<long>(c) * c;
    auto it = cb.find(g);
    if (it != cb.end()) dot += static_cast<long>(c) * it->second;
  }
  for (const auto& [g, c] : cb) nb += static_cast<long>(c) * c;
  return static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

std::string random_text(std::mt19937& rng, std::size_t len) {
  static const std::u32string alphabet = U"abcde fgAB言葉記号はのにをがるいうあ。、ー ";
  std::u32string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
  return adg::to_utf8(s);
}

}  // namespace

TEST(NgramProfile, HandEnumeratedExamples) {
  EXPECT_EQ(adg::ngram_profile("abab", 2), (adg::SparseVector{{"ab", 2.0}, {"ba", 1.0}}));
  EXPECT_EQ(adg::ngram_profile("あ", 3), (adg::SparseVector{{"あ", 1.0}}));
  EXPECT_TRUE(adg::ngram_profile("", 3).empty());
  EXPECT_THROW(adg::ngram_profile("abc", 0), adg::Error);
}

TEST(Cosine, Examples) {
  const auto v = adg::ngram_profile("language is a symbol", 3);
  EXPECT_EQ(adg::cosine(v, v), 1.0);
  EXPECT_EQ(adg::cosine(adg::ngram_profile("abc", 2), adg::ngram_profile("xyz", 2)), 0.0);
  EXPECT_NEAR(adg::cosine(adg::ngram_profile("abc", 2), adg::ngram_profile("abd", 2)), 0.5, 1e-15);
  EXPECT_EQ(adg::cosine({}, v), 0.0);
}

TEST(Cosine, SymmetricAndMatchesOracle) {
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_text(rng, 1 + rng() % 30);
    const auto b = random_text(rng, 1 + rng() % 30);
    for (int n : {1, 2, 3}) {
      const auto pa = adg::ngram_profile(a, n);
      const auto pb = adg::ngram_profile(b, n);
      const double ab = adg::cosine(pa, pb);
      EXPECT_NEAR(ab, adg::cosine(pb, pa), 1e-12);
      EXPECT_NEAR(ab, oracle_cosine(a, b, static_cast<std::size_t>(n)), 1e-12) << a << " | " << b;
      EXPECT_GE(ab, 0.0);
      EXPECT_LE(ab, 1.0);
    }
  }
}

TEST(Tokenize, ScriptRunsAndCjkBigrams) {
  EXPECT_EQ(adg::tokenize("Hello, World 42"), (std::vector<std::string>{"hello", "world", "42"}));
  EXPECT_EQ(adg::tokenize("言葉は記号"), (std::vector<std::string>{"言葉", "は", "記号"}));
  EXPECT_EQ(adg::tokenize("コーヒー"), (std::vector<std::string>{"コー", "ーヒ", "ヒー"}));
  adg::TokenizerRules whole;
  whole.cjk_bigrams = false;
  EXPECT_EQ(adg::tokenize("記号である", whole), (std::vector<std::string>{"記号", "である"}));
}

TEST(TokenTfidf, IdfAndScores) {
  const std::vector<std::string> docs{"the cat sat", "the dog ran", "a cat ran"};
  adg::TokenTfidfProvider p(docs);
  EXPECT_NEAR(p.idf("the"), std::log(4.0 / 3.0) + 1.0, 1e-12);
  EXPECT_NEAR(p.idf("unseen"), std::log(4.0) + 1.0, 1e-12);
  const auto s = p.score("the cat sat", docs);
  EXPECT_NEAR(s.values[0], 1.0, 1e-12);
  EXPECT_GT(s.values[2], 0.0);
  EXPECT_EQ(s.kind, adg::ProviderKind::token_tfidf);
}

namespace {
class Throwing final : public adg::SimilarityProvider {
 public:
  explicit Throwing(std::string code) : code_(std::move(code)) {}
  adg::ProviderKind kind() const override { return adg::ProviderKind::remote_embedding; }
  adg::SimilarityScores score(std::string_view, std::span<const std::string>) const override {
    throw adg::Error(code_, "simulated");
  }

 private:
  std::string code_;
};
}  // namespace

TEST(Fallback, MovesOnOnlyWhenUnavailable) {
  const std::vector<std::string> candidates{"abc"};
  adg::FallbackProvider chain({std::make_shared<Throwing>("provider-unavailable"), std::make_shared<adg::CharNgramProvider>()});
  EXPECT_EQ(chain.score("abc", candidates).kind, adg::ProviderKind::char_ngram);

  adg::FallbackProvider strict({std::make_shared<Throwing>("numeric"), std::make_shared<adg::CharNgramProvider>()});
  EXPECT_THROW(strict.score("abc", candidates), adg::Error);

  adg::FallbackProvider exhausted({std::make_shared<Throwing>("provider-unavailable")});
  try {
    exhausted.score("abc", candidates);
    FAIL();
  } catch (const adg::Error& e) {
    EXPECT_EQ(e.code(), "provider-unavailable");
  }
}
