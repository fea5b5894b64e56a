#include <random>

#include <gtest/gtest.h>

#include "placebo/cnf.hpp"
#include "placebo/io.hpp"
#include "support/test_support.hpp"

using namespace placebo;
using testsupport::recount_sat_literals;
using testsupport::recount_unsat;

namespace {

const char* kTwoClauses = "p cnf 3 2\n1 2 3 0\n-1 2 3 0\n";

std::vector<std::vector<std::int64_t>> dimacs_clauses(const CnfFormula& f) {
  std::vector<std::vector<std::int64_t>> out;
  for (std::size_t c = 0; c < f.num_clauses(); ++c) {
    out.emplace_back();
    for (const Literal l : f.clause(c)) out.back().push_back(l.to_dimacs());
  }
  return out;
}

Assignment bits(std::vector<std::uint8_t> v) { return Assignment(std::move(v)); }

}  // namespace

TEST(ParseDimacs, ReadsClausesInOrder) {
  const auto f = parse_dimacs(kTwoClauses);
  EXPECT_EQ(f.num_vars(), 3u);
  EXPECT_EQ(dimacs_clauses(f), (std::vector<std::vector<std::int64_t>>{{1, 2, 3}, {-1, 2, 3}}));
}

TEST(ParseDimacs, MinimalInstance) {
  const auto f = parse_dimacs("p cnf 1 1\n1 0\n");
  EXPECT_EQ(f.num_vars(), 1u);
  EXPECT_EQ(dimacs_clauses(f), (std::vector<std::vector<std::int64_t>>{{1}}));
}

TEST(ParseDimacs, ClausesMaySpanLinesAndShareLines) {
  const auto f = parse_dimacs("c hi\np cnf 4 3\n1 -2\n 3 0 4 0 -1\n-4 0\n");
  EXPECT_EQ(dimacs_clauses(f), (std::vector<std::vector<std::int64_t>>{{1, -2, 3}, {4}, {-1, -4}}));
}

TEST(ParseDimacs, ToleratesSatlibFooter) {
  const auto f = parse_dimacs("p cnf 2 1\n1 -2 0\n%\n0\n\n");
  EXPECT_EQ(f.num_clauses(), 1u);
}

TEST(ParseDimacs, FixtureHeaderMatchesFile) {
  // Header fields counted independently from the raw text.
  const std::string path = testsupport::fixture_dir() + "/uf50-218/uf50-01.cnf";
  const std::string text = read_file(path);
  std::size_t clause_lines = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c' || line[0] == 'p' || line[0] == '%' || line == "0") continue;
    ++clause_lines;
  }
  const auto f = parse_dimacs(text, "uf50-01.cnf");
  EXPECT_EQ(f.num_vars(), 50u);
  EXPECT_EQ(f.num_clauses(), 218u);
  EXPECT_EQ(clause_lines, 218u);
  EXPECT_EQ(f.uniform_width(), 3u);
}

struct BadInput {
  const char* text;
  std::size_t line;
  const char* fragment;
};

class ParseErrors : public ::testing::TestWithParam<BadInput> {};

TEST_P(ParseErrors, ReportLineAndReason) {
  const auto& p = GetParam();
  try {
    parse_dimacs(p.text);
    FAIL() << "accepted: " << p.text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), p.line) << e.what();
    EXPECT_NE(std::string(e.what()).find(p.fragment), std::string::npos) << e.what();
  }
}

INSTANTIATE_TEST_SUITE_P(
    Cases, ParseErrors,
    ::testing::Values(BadInput{"1 2 0\n", 1, "before"}, BadInput{"c only comments\n", 2, "missing"},
                      BadInput{"p cnf x 2\n", 1, "problem line"}, BadInput{"p dnf 3 2\n", 1, "problem line"},
                      BadInput{"p cnf 3 2\n1 4 0\n1 0\n", 2, "range"}, BadInput{"p cnf 3 2\n1 2 0\n", 3, "declares 2"},
                      BadInput{"p cnf 3 1\n1 0\n2 0\n", 3, "more clauses"}, BadInput{"p cnf 3 2\n1 0\n0\n", 3, "empty"},
                      BadInput{"p cnf 3 1\n1 2\n", 2, "terminated"}, BadInput{"p cnf 3 1\n1 a 0\n", 2, "token"},
                      BadInput{"p cnf 3 1\np cnf 3 1\n1 0\n", 2, "duplicate"}));

TEST(CnfFormula, RejectsBrokenInvariants) {
  EXPECT_THROW(CnfFormula(0, {{Literal(0, true)}}), std::invalid_argument);
  EXPECT_THROW(CnfFormula(2, {}), std::invalid_argument);
  EXPECT_THROW(CnfFormula(2, {Clause{}}), std::invalid_argument);
  EXPECT_THROW(CnfFormula(2, {{Literal(2, true)}}), std::invalid_argument);
}

TEST(UnsatFraction, HandExamples) {
  const auto f = parse_dimacs(kTwoClauses);
  EXPECT_EQ(EvalState(f, bits({0, 1, 0})).unsat_fraction(), 0.0);
  EXPECT_EQ(EvalState(f, bits({1, 0, 0})).unsat_fraction(), 0.5);
  const auto g = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n");
  EXPECT_EQ(unsat_fraction(EvalState(g, bits({0}))), 0.5);
  EXPECT_EQ(unsat_fraction(EvalState(g, bits({1}))), 0.5);
}

TEST(EvalState, RejectsAssignmentOfWrongLength) {
  const auto f = parse_dimacs(kTwoClauses);
  EXPECT_THROW(EvalState(f, Assignment(2)), std::invalid_argument);
}

TEST(FlipGain, HandExamples) {
  const auto f = parse_dimacs(kTwoClauses);
  EXPECT_EQ(EvalState(f, bits({0, 0, 0})).flip_gain(1), 1);
  EXPECT_EQ(EvalState(f, bits({0, 1, 0})).flip_gain(1), -1);
}

TEST(FlipGain, OutOfRangeVariable) {
  const auto f = parse_dimacs(kTwoClauses);
  EvalState s(f, Assignment(3));
  EXPECT_THROW(s.flip_gain(3), std::out_of_range);
  EXPECT_THROW(s.apply_flip(7), std::out_of_range);
}

TEST(ApplyFlip, TogglesAndUpdatesCounts) {
  const auto f = parse_dimacs(kTwoClauses);
  EvalState s(f, bits({0, 0, 0}));
  const EvalState original = s;
  s.apply_flip(0);
  EXPECT_EQ(s.assignment(), bits({1, 0, 0}));
  EXPECT_EQ(s.sat_count(0), 1u);
  EXPECT_EQ(s.sat_count(1), 0u);
  EXPECT_EQ(s.unsat_count(), 1u);
  s.apply_flip(0);
  EXPECT_EQ(s, original);
}

TEST(EvalState, DuplicateLiteralsCountTwice) {
  const auto f = parse_dimacs("p cnf 2 2\n1 1 2 0\n1 -1 0\n");
  const EvalState s(f, bits({1, 0}));
  EXPECT_EQ(s.sat_count(0), 2u);
  EXPECT_EQ(s.sat_count(1), 1u);
  EXPECT_EQ(s.flip_gain(0), -1);  // the tautology stays satisfied
}

// Property: incremental gain and counts agree with a from-scratch scan on
// random formulas, including ones with duplicate literals and tautologies.
TEST(EvalStateProperty, IncrementalMatchesRecount) {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + g() % 20, m = 1 + g() % 90;
    const auto f = testsupport::random_cnf(g, n, m, trial % 2 == 1);
    EvalState s(f, testsupport::random_assignment(g, n));
    for (int step = 0; step < 40; ++step) {
      const auto v = static_cast<Var>(g() % n);
      const std::size_t before = recount_unsat(f, s.assignment());
      Assignment flipped = s.assignment();
      flipped.toggle(v);
      const long expected = static_cast<long>(before) - static_cast<long>(recount_unsat(f, flipped));
      ASSERT_EQ(s.flip_gain(v), expected);
      s.apply_flip(v);
      ASSERT_EQ(s.flip_gain(v), -expected);
      ASSERT_EQ(s.unsat_count(), recount_unsat(f, s.assignment()));
      for (std::size_t c = 0; c < m; ++c) ASSERT_EQ(s.sat_count(c), recount_sat_literals(f, s.assignment(), c));
      const double y = s.unsat_fraction();
      ASSERT_GE(y, 0.0);
      ASSERT_LE(y, 1.0);
      ASSERT_EQ(y == 0.0, recount_unsat(f, s.assignment()) == 0);
    }
    EvalState rebuilt(f, s.assignment());
    ASSERT_EQ(s, rebuilt);
  }
}

TEST(DimacsRoundTrip, SerializeThenParseIsIdentity) {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + g() % 30, m = 1 + g() % 60;
    const auto f = testsupport::random_cnf(g, n, m, trial % 3 == 0);
    const std::string text = to_dimacs(f);
    const auto back = parse_dimacs(text, f.source_id());
    ASSERT_EQ(back, f);
    ASSERT_EQ(to_dimacs(back), text);
  }
}

TEST(DimacsRoundTrip, WriterLayout) {
  const auto f = parse_dimacs(kTwoClauses, "two");
  EXPECT_EQ(to_dimacs(f), "c source: two\np cnf 3 2\n1 2 3 0\n-1 2 3 0\n");
}
