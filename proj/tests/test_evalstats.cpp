#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"

namespace st = adg::stats;
using testing_support::read_fixture;

namespace {

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const adg::Error& e) {
    return e.code();
  }
  return "no error";
}

}  // namespace

TEST(Distributions, TMatchesNumericIntegration) {
  ASSERT_EQ(oracle::t_points().size(), 20u);
  for (const auto& [t, df] : oracle::t_points()) {
    EXPECT_NEAR(st::t_two_sided_p(t, df), oracle::t_p_by_integration(t, df), oracle::kDistributionTolerance)
        << "t=" << t << " df=" << df;
  }
}

TEST(Distributions, ChiSquareMatchesNumericIntegration) {
  ASSERT_EQ(oracle::chi_points().size(), 20u);
  for (const auto& [x, df] : oracle::chi_points()) {
    EXPECT_NEAR(st::chi_square_sf(x, df), oracle::chi_p_by_integration(x, df), oracle::kDistributionTolerance)
        << "x=" << x << " df=" << df;
  }
}

TEST(Verdict, ThresholdsAndMarkers) {
  EXPECT_EQ(st::verdict_for(0.0099), st::Verdict::sig_01);
  EXPECT_EQ(st::verdict_for(0.01), st::Verdict::sig_05);
  EXPECT_EQ(st::verdict_for(0.0499), st::Verdict::sig_05);
  EXPECT_EQ(st::verdict_for(0.05), st::Verdict::ns);
  EXPECT_EQ(st::verdict_for(0.03, st::MarkerScale::two_level), st::Verdict::ns);
  EXPECT_EQ(st::marker(st::Verdict::sig_01), "**");
  EXPECT_EQ(st::parse_marker("*"), st::Verdict::sig_05);
  EXPECT_FALSE(st::parse_marker("***"));
}

TEST(Welch, PublishedRowExamples) {
  EXPECT_EQ(st::welch_t({35, 4.2, 1.4}, {35, 5.2, 0.7}).verdict, st::Verdict::sig_01);
  EXPECT_EQ(st::welch_t({35, 4.4, 1.0}, {35, 4.6, 0.9}).verdict, st::Verdict::ns);
}

TEST(Welch, StatisticAndDegreesOfFreedom) {
  // hand-computed: se^2 = 1.96/35 + 0.49/35 = 0.07, t = -1/sqrt(0.07)
  const auto r = st::welch_t({35, 4.2, 1.4}, {35, 5.2, 0.7});
  EXPECT_NEAR(r.statistic, -1.0 / std::sqrt(0.07), 1e-12);
  const double va = 1.96 / 35, vb = 0.49 / 35;
  EXPECT_NEAR(r.df, (va + vb) * (va + vb) / (va * va / 34 + vb * vb / 34), 1e-9);
}

TEST(Welch, Properties) {
  const st::SummaryStats a{20, 5.9, 4.28}, b{19, 5.79, 4.47};
  const auto ab = st::welch_t(a, b);
  const auto ba = st::welch_t(b, a);
  EXPECT_NEAR(ab.statistic, -ba.statistic, 1e-15);
  EXPECT_NEAR(ab.p_value, ba.p_value, 1e-15);

  const auto same = st::welch_t(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);

  double previous = 1.0;
  for (double t = 0.25; t < 8; t += 0.25) {
    const double p = st::t_two_sided_p(t, 12.5);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(Welch, ZeroVariance) {
  const auto equal = st::welch_t({5, 3.0, 0.0}, {6, 3.0, 0.0});
  EXPECT_EQ(equal.p_value, 1.0);
  const auto apart = st::welch_t({5, 3.0, 0.0}, {6, 4.0, 0.0});
  EXPECT_EQ(apart.p_value, 0.0);
  EXPECT_EQ(apart.verdict, st::Verdict::sig_01);
  EXPECT_EQ(code_of([] { st::welch_t({1, 3.0, 1.0}, {6, 4.0, 0.0}); }), "invalid-argument");
  EXPECT_EQ(code_of([] { st::welch_t({4, 3.0, -1.0}, {6, 4.0, 0.0}); }), "invalid-argument");
}

TEST(ChiSquare, Examples) {
  const auto t2 = st::chi_square_gof({22, 8, 5});
  EXPECT_EQ(t2.verdict, st::Verdict::sig_01);
  EXPECT_EQ(t2.df, 2.0);
  EXPECT_NEAR(t2.statistic, (std::pow(22 - 35.0 / 3, 2) + std::pow(8 - 35.0 / 3, 2) + std::pow(5 - 35.0 / 3, 2)) / (35.0 / 3),
              1e-12);
  EXPECT_EQ(st::chi_square_gof({2, 4}).verdict, st::Verdict::ns);
  const auto flat = st::chi_square_gof({7, 7});
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_EQ(flat.p_value, 1.0);
  EXPECT_EQ(code_of([] { st::chi_square_gof({0, 0, 0}); }), "empty-sample");
  EXPECT_EQ(code_of([] { st::chi_square_gof({5}); }), "invalid-argument");
  st::ChiSquareOptions skewed;
  skewed.expected = {0.8, 0.2};
  EXPECT_NEAR(st::chi_square_gof({8, 2}, skewed).statistic, 0.0, 1e-12);
}

TEST(ChiSquare, YatesIsOptIn) {
  st::ChiSquareOptions yates;
  yates.yates = true;
  yates.scale = st::MarkerScale::two_level;
  // |0 - 3.5| - 0.5 = 3 -> 2 * 9 / 3.5
  EXPECT_NEAR(st::chi_square_gof({0, 7}, yates).statistic, 18.0 / 3.5, 1e-12);
  EXPECT_NEAR(st::chi_square_gof({0, 7}).statistic, 7.0, 1e-12);
}

TEST(Trichotomize, PublishedRows) {
  EXPECT_EQ(st::trichotomize({0, 2, 1, 3, 13, 16}), (st::Trichotomy{2, 4, 29}));
  EXPECT_EQ(st::trichotomize({0, 1, 5, 7, 12, 10}), (st::Trichotomy{1, 12, 22}));
  EXPECT_EQ(st::trichotomize({0, 0, 0, 0, 0, 0}), (st::Trichotomy{0, 0, 0}));
}

TEST(Tables, ParseAndReproduce) {
  const auto t1 = st::parse_welch_table(read_fixture("table1.tsv"));
  ASSERT_EQ(t1.size(), 8u);
  EXPECT_EQ(t1[0].a.n, 35);
  EXPECT_EQ(t1[7].expected, "**");
  const auto lines = st::reproduce_welch(t1);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_TRUE(lines[i].matches()) << lines[i].id;

  // Row 8 computed by hand: t = 0.5 / sqrt(2.25 / 35), df = 2.25^2 * 34 / (1.44^2 + 0.81^2).
  // Its p lands just above .05, so the unpaired test cannot give the printed marker.
  const auto row8 = lines[7].tests.front();
  EXPECT_NEAR(row8["statistic"].get<double>(), -0.5 / std::sqrt(2.25 / 35), 1e-12);
  EXPECT_NEAR(row8["df"].get<double>(), 2.25 * 2.25 * 34 / (1.44 * 1.44 + 0.81 * 0.81), 1e-9);
  EXPECT_NEAR(row8["p_value"].get<double>(), 0.0529966, 1e-6);
  EXPECT_EQ(lines[7].produced, "ns");

  const auto t2 = st::reproduce_counts(st::parse_count_table(read_fixture("table2.tsv")));
  ASSERT_EQ(t2.size(), 2u);
  for (const auto& l : t2) EXPECT_TRUE(l.matches()) << l.id << " " << l.produced;

  st::ChiSquareOptions two_level;
  two_level.scale = st::MarkerScale::two_level;
  const auto t3 = st::reproduce_pairwise(st::parse_count_table(read_fixture("table3.tsv")), two_level);
  ASSERT_EQ(t3.size(), 4u);
  for (const auto& l : t3) EXPECT_TRUE(l.matches()) << l.id << " " << l.produced;

  for (const auto& l : st::reproduce_welch(st::parse_welch_table(read_fixture("table5.tsv")))) {
    EXPECT_EQ(l.produced, "ns") << l.id;
  }
}

TEST(Tables, RejectMalformedRows) {
  EXPECT_EQ(code_of([] { st::parse_welch_table("q\t35\t4.2\n"); }), "syntax");
  EXPECT_EQ(code_of([] { st::parse_welch_table("q,35,x,1,35,2,1\n"); }), "syntax");
  EXPECT_EQ(code_of([] { st::parse_count_table("q\t1.5\t2\n"); }), "syntax");
  const auto rows = st::parse_count_table("# comment\n\nq,3,4,ns\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].counts, (std::vector<long>{3, 4}));
  EXPECT_EQ(rows[0].expected, "ns");
  EXPECT_EQ(st::majority_category({3, 9, 1}), 1u);
  EXPECT_FALSE(st::majority_category({4, 4, 1}));
}

TEST(AlignmentAccuracy, ExactPlantedAndEmpty) {
  const std::map<std::string, adg::Adg> graphs{{"en1", testing_support::en1()}};
  const adg::CharNgramProvider provider;
  const auto exact = st::alignment_accuracy(adg::load_corpus(read_fixture("exact_corpus.json")), graphs, provider);
  EXPECT_EQ(exact.evaluated, 30u);
  EXPECT_EQ(exact.top1, 1.0);

  const auto planted = st::alignment_accuracy(adg::load_corpus(read_fixture("planted_corpus.json")), graphs, provider);
  EXPECT_EQ(planted.correct, 27u);
  EXPECT_EQ(planted.top1, 0.9);

  auto corpus = adg::load_corpus(read_fixture("exact_corpus.json"));
  corpus.responses.clear();
  corpus.oracle_nodes.clear();
  const auto empty = st::alignment_accuracy(corpus, graphs, provider);
  EXPECT_EQ(empty.skipped, 0u);
  EXPECT_FALSE(empty.top1);
  EXPECT_TRUE(empty.to_json()["top1"].is_null());

  auto partial = adg::load_corpus(read_fixture("exact_corpus.json"));
  partial.oracle_nodes.erase(partial.oracle_nodes.begin());
  const auto skipped = st::alignment_accuracy(partial, graphs, provider);
  EXPECT_EQ(skipped.skipped, 1u);
  EXPECT_EQ(skipped.evaluated, 29u);
}
