#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "ccoach/errors.hpp"
#include "ccoach/eval.hpp"
#include "fixtures.hpp"

using namespace ccoach;

namespace {

RubricRecord rec(std::string pair, std::string reviewer, bool conceptual, Phase phase = Phase::CompileTime) {
  RubricRecord r;
  r.pair_id = std::move(pair);
  r.reviewer_id = std::move(reviewer);
  r.phase = phase;
  r.conceptual_accuracy = conceptual;
  return r;
}

std::string row_of(const std::string& table, const std::string& name) {
  std::size_t at = table.find(name);
  if (at == std::string::npos) return {};
  return table.substr(at, table.find('\n', at) - at);
}

}  // namespace

TEST(Kappa, MatchesOracleOnRandomSets) {
  std::mt19937_64 rng(7);
  int computed = 0;
  for (int i = 0; i < 200; ++i) {
    auto records = fixtures::random_review_set(rng);
    for (Category c : kAllCategories) {
      double expected = fixtures::oracle_lights_kappa(records, c);
      EXPECT_NEAR(lights_kappa(records, c).kappa, expected, 1e-12) << "set " << i;
      ++computed;
    }
  }
  EXPECT_EQ(computed, 200 * 7);
}

TEST(Kappa, ChanceAgreementIsExactlyZero) {
  EXPECT_EQ(cohen_kappa({"Y", "Y", "N", "N"}, {"Y", "N", "N", "Y"}), 0.0);
  std::vector<RubricRecord> records = {rec("1", "a", true),  rec("2", "a", true),  rec("3", "a", false),
                                       rec("4", "a", false), rec("1", "b", true),  rec("2", "b", false),
                                       rec("3", "b", false), rec("4", "b", true)};
  EXPECT_EQ(lights_kappa(records, Category::ConceptualAccuracy).kappa, 0.0);
}

TEST(Kappa, PerfectAndDegenerate) {
  EXPECT_DOUBLE_EQ(cohen_kappa({"Y", "N", "Y"}, {"Y", "N", "Y"}), 1.0);
  // Everyone says Y: expected agreement is total, treated as perfect.
  EXPECT_DOUBLE_EQ(cohen_kappa({"Y", "Y"}, {"Y", "Y"}), 1.0);
  EXPECT_LT(cohen_kappa({"Y", "N"}, {"N", "Y"}), 0.0);
}

TEST(Kappa, Errors) {
  EXPECT_THROW(cohen_kappa({"Y"}, {"Y", "N"}), LengthMismatch);
  EXPECT_THROW(cohen_kappa({}, {}), EmptyInput);
  std::vector<RubricRecord> disjoint = {rec("1", "a", true), rec("2", "b", true)};
  EXPECT_THROW(lights_kappa(disjoint, Category::ConceptualAccuracy), NoOverlap);
}

TEST(Kappa, PairwiseBreakdown) {
  std::vector<RubricRecord> records = {rec("1", "a", true), rec("2", "a", false), rec("1", "b", true),
                                       rec("2", "b", false), rec("9", "c", true)};
  LightsKappa k = lights_kappa(records, Category::ConceptualAccuracy);
  ASSERT_EQ(k.pairwise.size(), 1u);  // c shares nothing
  EXPECT_EQ(k.pairwise[0].reviewer_a, "a");
  EXPECT_EQ(k.pairwise[0].reviewer_b, "b");
  EXPECT_EQ(k.pairwise[0].common_items, 2u);
  EXPECT_DOUBLE_EQ(k.kappa, 1.0);
}

TEST(RubricCsv, ParsesExport) {
  auto records = parse_rubric_csv(
      "pair_id,reviewer_id,phase,conceptual,no_inaccuracy,correctness,relevance,completeness,code_solution,"
      "response_type\n"
      "p1,alice,CT,Y,Y,N,Y,Y,N,Tutor\n"
      "\"p,2\",bob,RT,n,yes,1,0,true,false,peer\r\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].pair_id, "p1");
  EXPECT_TRUE(records[0].conceptual_accuracy);
  EXPECT_FALSE(records[0].correctness);
  EXPECT_EQ(records[0].response_type, ResponseType::Tutor);
  EXPECT_EQ(records[1].pair_id, "p,2");
  EXPECT_EQ(records[1].phase, Phase::RunTime);
  EXPECT_FALSE(records[1].conceptual_accuracy);
  EXPECT_TRUE(records[1].correctness);
  EXPECT_EQ(records[1].response_type, ResponseType::Peer);
}

TEST(RubricCsv, ColumnsInAnyOrder) {
  auto records = parse_rubric_csv(
      "reviewer_id,pair_id,response_type,phase,conceptual,no_inaccuracy,correctness,relevance,completeness,"
      "code_solution\n"
      "alice,p1,peer,RT,Y,N,N,N,N,Y\n");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].reviewer_id, "alice");
  EXPECT_TRUE(records[0].code_solution_present);
}

TEST(RubricCsv, RejectsBadInput) {
  const std::string header =
      "pair_id,reviewer_id,phase,conceptual,no_inaccuracy,correctness,relevance,completeness,code_solution,"
      "response_type\n";
  EXPECT_THROW(parse_rubric_csv(""), ParseError);
  EXPECT_THROW(parse_rubric_csv("pair_id,reviewer_id\n"), ParseError);
  EXPECT_THROW(parse_rubric_csv(header + "p1,alice,CT,maybe,Y,Y,Y,Y,N,peer\n"), ParseError);
  EXPECT_THROW(parse_rubric_csv(header + "p1,alice,XT,Y,Y,Y,Y,Y,N,peer\n"), ParseError);
  EXPECT_THROW(parse_rubric_csv(header + "p1,alice,CT,Y,Y,Y,Y,Y,N,expert\n"), ParseError);
  EXPECT_THROW(parse_rubric_csv(header + "p1,alice,CT,Y\n"), ParseError);
  EXPECT_THROW(parse_rubric_csv(header + "p1,alice,CT,Y,Y,Y,Y,Y,N,peer\np1,alice,CT,Y,Y,Y,Y,Y,N,peer\n"),
               ParseError);
  try {
    parse_rubric_csv(header + "p1,alice,CT,Y,Y,Y,Y,Y,N,peer\np2,alice,CT,Y,Y,Y,Y,Y,N,nobody\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(FrequencyTable, ReferenceRowReadsNinetyAndSeventyFive) {
  std::string table = frequency_table(fixtures::rubric_reference_records());
  EXPECT_EQ(table.substr(0, table.find('\n')).find("Measure (n=400)"), 0u) << table;
  std::string row = row_of(table, "Conceptually accurate");
  ASSERT_FALSE(row.empty()) << table;
  EXPECT_NE(row.find(" 90% "), std::string::npos) << row;
  EXPECT_NE(row.find(" 75% "), std::string::npos) << row;
}

TEST(FrequencyTable, PeerAndTutorSumToHundred) {
  std::vector<RubricRecord> records;
  for (int i = 0; i < 3; ++i) {
    RubricRecord r = rec(std::to_string(i), "a", true);
    r.response_type = i == 0 ? ResponseType::Tutor : ResponseType::Peer;
    records.push_back(r);
  }
  std::string table = frequency_table(records);
  EXPECT_NE(row_of(table, "Response of tutor quality").find("33%"), std::string::npos) << table;
  EXPECT_NE(row_of(table, "Response of peer quality").find("67%"), std::string::npos) << table;
  // No runtime records and no reviewer overlap.
  EXPECT_NE(row_of(table, "Conceptually accurate").find("n/a"), std::string::npos) << table;
}

TEST(Bands, Boundaries) {
  EXPECT_EQ(interpret_kappa(-0.01), AgreementBand::Poor);
  EXPECT_EQ(interpret_kappa(0.0), AgreementBand::Slight);
  EXPECT_EQ(interpret_kappa(0.20), AgreementBand::Slight);
  EXPECT_EQ(interpret_kappa(0.21), AgreementBand::Fair);
  EXPECT_EQ(interpret_kappa(0.41), AgreementBand::Moderate);
  EXPECT_EQ(interpret_kappa(0.61), AgreementBand::Substantial);
  EXPECT_EQ(interpret_kappa(0.81), AgreementBand::AlmostPerfect);
  EXPECT_EQ(to_string(AgreementBand::AlmostPerfect), "Almost perfect");
}

TEST(Reliability, WarnsWhenNoOverlap) {
  std::vector<RubricRecord> records = {rec("1", "a", true), rec("2", "b", true)};
  ReliabilityReport r = build_reliability_report(records);
  EXPECT_TRUE(r.per_category.empty());
  EXPECT_EQ(r.warnings.size(), kAllCategories.size());
  EXPECT_NE(format_reliability(r).find("warning: conceptual"), std::string::npos);
}

TEST(Assign, DisjointBaseAndOverlap) {
  std::vector<std::string> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back("p" + std::to_string(i));
  std::vector<std::string> reviewers = {"ann", "ben", "cat", "dev"};
  auto a = assign_reviews(pairs, reviewers, 20, 0.25, 11);
  ASSERT_EQ(a.size(), 4u);
  std::set<std::string> all_base;
  std::map<std::string, std::set<std::string>> base;
  for (const auto& [who, list] : a) {
    int overlap = 0;
    for (const auto& item : list) {
      EXPECT_EQ(item.reviewer, who);
      if (item.overlap) {
        ++overlap;
      } else {
        base[who].insert(item.pair_id);
        all_base.insert(item.pair_id);
      }
    }
    EXPECT_EQ(base[who].size(), 20u);
    EXPECT_EQ(overlap, 3 * 5);  // ceil(0.25 * 20) from each of three others
  }
  EXPECT_EQ(all_base.size(), 80u);
  // Overlap items come from other reviewers' base sets.
  for (const auto& [who, list] : a) {
    for (const auto& item : list) {
      if (!item.overlap) continue;
      EXPECT_FALSE(base[who].count(item.pair_id));
      bool owned = false;
      for (const auto& [other, set] : base) owned = owned || (other != who && set.count(item.pair_id));
      EXPECT_TRUE(owned);
    }
  }
}

TEST(Assign, OverlapRoundsUpAndIsDeterministic) {
  std::vector<std::string> pairs;
  for (int i = 0; i < 30; ++i) pairs.push_back("p" + std::to_string(i));
  auto a = assign_reviews(pairs, {"x", "y"}, 10, 0.11, 5);
  int overlap = 0;
  for (const auto& item : a["x"]) overlap += item.overlap;
  EXPECT_EQ(overlap, 2);  // ceil(1.1)
  auto b = assign_reviews(pairs, {"x", "y"}, 10, 0.11, 5);
  EXPECT_EQ(format_assignment_csv(a), format_assignment_csv(b));
  auto c = assign_reviews(pairs, {"x", "y"}, 10, 0.11, 6);
  EXPECT_NE(format_assignment_csv(a), format_assignment_csv(c));
}

TEST(Assign, Errors) {
  std::vector<std::string> pairs = {"a", "b", "c"};
  EXPECT_THROW(assign_reviews(pairs, {"x", "y"}, 2, 0.1, 1), InsufficientPairs);
  EXPECT_THROW(assign_reviews(pairs, {}, 1, 0.1, 1), UsageError);
  EXPECT_THROW(assign_reviews(pairs, {"x", "x"}, 1, 0.1, 1), UsageError);
  EXPECT_THROW(assign_reviews(pairs, {"x"}, 1, 1.5, 1), UsageError);
}
