#include <gtest/gtest.h>

#include "edusim/dsl.hpp"
#include "support.hpp"

using namespace edusim;

namespace {

const ParseError* find_error(const ParseResult& r, const std::string& code) {
  for (const auto& e : r.errors)
    if (e.code == code) return &e;
  return nullptr;
}

}  // namespace

TEST(Parse, Hou) {
  auto r = parse_curriculum(testing_support::hou_source());
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.errors.empty());
  EXPECT_TRUE(r.warnings.empty());
  const auto& c = *r.curriculum;
  EXPECT_EQ(c.name, "MSC-IS");
  ASSERT_EQ(c.modules.size(), 5u);
  EXPECT_TRUE(c.find("50")->first_marker);
  EXPECT_FALSE(c.find("60")->compulsory);
  EXPECT_EQ(c.find("62")->level, "senior");
  EXPECT_EQ(c.rules, (ProgramRules{2, 4}));
  ASSERT_EQ(c.choice_groups.size(), 1u);
  EXPECT_EQ(c.choice_groups[0], (ChoiceGroup{{"60", "61", "62"}, 2}));

  std::vector<PrecedenceConstraint> expected = {
      {Precedence::hard, "50", "60"}, {Precedence::hard, "50", "61"}, {Precedence::hard, "51", "62"},
      {Precedence::soft, "50", "62"}, {Precedence::soft, "51", "60"}, {Precedence::soft, "51", "61"}};
  EXPECT_EQ(c.constraints, expected);
}

TEST(Parse, RuleDefaults) {
  auto r = parse_curriculum(
      "program \"D\"\n"
      "module A level x compulsory year 1\n"
      "module B level x optional year 1\n"
      "module C level x optional year 1\n"
      "choose 1 of {B, C}\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.curriculum->rules.max_modules_per_year, 3);
  EXPECT_EQ(r.curriculum->rules.modules_required_for_thesis, 2);
}

TEST(Parse, CommentsAndBlankLines) {
  auto r = parse_curriculum(
      "# heading\n\nprogram \"C # not a comment\"   # trailing\n"
      "module A level x compulsory year 1 # note\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.curriculum->name, "C # not a comment");
}

TEST(Parse, EscapedProgramName) {
  Curriculum c = testing_support::hou();
  c.name = "quote \" and back\\slash";
  auto r = parse_curriculum(serialize_curriculum(c));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.curriculum->name, c.name);
}

TEST(ParseErrors, UndefinedModuleHasSpan) {
  auto r = parse_curriculum(
      "program \"E\"\n"
      "module A level x compulsory year 1\n"
      "constraint hard A -> Z\n");
  ASSERT_FALSE(r.ok());
  const auto* e = find_error(r, "undefined-module");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->span, (SourceSpan{3, 22, 1}));
}

TEST(ParseErrors, UnknownKeyword) {
  auto r = parse_curriculum("program \"E\"\nmodul A level x compulsory year 1\n");
  const auto* e = find_error(r, "unknown-keyword");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->span, (SourceSpan{2, 1, 5}));
}

TEST(ParseErrors, RecoversAtLineBoundaries) {
  auto r = parse_curriculum(
      "program \"E\"\n"
      "module A level x compulsory\n"
      "frobnicate\n"
      "module B level x compulsory year two\n"
      "module C level x compulsory year 1\n"
      "module C level x compulsory year 1\n"
      "rule max_per_year\n"
      "choose 1 of {C,}\n"
      "constraint soft level:nope -> C\n"
      "program \"again\"\n");
  ASSERT_FALSE(r.ok());
  EXPECT_FALSE(r.curriculum.has_value());
  std::vector<std::pair<int, std::string>> got;
  for (const auto& e : r.errors) got.emplace_back(e.span.line, e.code);
  std::sort(got.begin(), got.end());
  std::vector<std::pair<int, std::string>> expected = {
      {2, "malformed-line"},        {3, "unknown-keyword"}, {4, "invalid-number"},
      {6, "duplicate-declaration"}, {7, "malformed-line"},  {8, "malformed-line"},
      {9, "undefined-level"},       {10, "duplicate-declaration"}};
  EXPECT_EQ(got, expected);
}

TEST(ParseErrors, UnterminatedString) {
  auto r = parse_curriculum("program \"open\nmodule A level x compulsory year 1\n");
  EXPECT_TRUE(r.has_error("unterminated-string"));
}

TEST(ParseErrors, MissingProgram) {
  auto r = parse_curriculum("module A level x compulsory year 1\n");
  EXPECT_TRUE(r.has_error("missing-program"));
}

TEST(ParseErrors, ValidationErrorsPointAtLines) {
  auto r = parse_curriculum(
      "program \"E\"\n"
      "module A level x compulsory year 1\n"
      "module B level x compulsory year 1\n"
      "constraint hard A -> B\n"
      "constraint soft B -> A\n");
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].code, "precedence-cycle");
  EXPECT_EQ(r.errors[0].message, "precedence cycle: A,B");
  EXPECT_GE(r.errors[0].span.line, 4);

  auto arithmetic = parse_curriculum(
      "program \"E\"\nmodule A level x compulsory year 1\nrule thesis_after 3\n");
  ASSERT_EQ(arithmetic.errors.size(), 1u);
  EXPECT_EQ(arithmetic.errors[0].code, "completion-arithmetic");
  EXPECT_EQ(arithmetic.errors[0].span.line, 3);
}

TEST(ParseWarnings, DuplicateExplicitConstraint) {
  auto r = parse_curriculum(
      "program \"W\"\n"
      "module A level x compulsory year 1\n"
      "module B level x compulsory year 1\n"
      "constraint soft A -> B\n"
      "constraint hard A -> B\n");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].code, "duplicate-constraint");
  EXPECT_EQ(r.warnings[0].span.line, 5);
  ASSERT_EQ(r.curriculum->constraints.size(), 1u);
  EXPECT_EQ(r.curriculum->constraints[0].kind, Precedence::hard);
}

TEST(ParseWarnings, LevelRuleOverlappingExplicitEdgeIsQuiet) {
  auto r = parse_curriculum(
      "program \"W\"\n"
      "module A level j compulsory year 1\n"
      "module B level s compulsory year 1\n"
      "constraint soft level:j -> level:s\n"
      "constraint hard A -> B\n");
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.curriculum->constraints,
            (std::vector<PrecedenceConstraint>{{Precedence::hard, "A", "B"}}));
}

TEST(ParseWarnings, SameLevelGroupSkipsSelfPairs) {
  auto r = parse_curriculum(
      "program \"W\"\n"
      "module A level j compulsory year 1\n"
      "module B level j compulsory year 1\n"
      "constraint soft level:j -> B\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.curriculum->constraints,
            (std::vector<PrecedenceConstraint>{{Precedence::soft, "A", "B"}}));
}

TEST(Serialize, HouCanonicalText) {
  EXPECT_EQ(serialize_curriculum(testing_support::hou()),
            "program \"MSC-IS\"\n"
            "module 50 level junior compulsory year 1 first\n"
            "module 51 level junior compulsory year 1\n"
            "module 60 level senior optional year 2\n"
            "module 61 level senior optional year 2\n"
            "module 62 level senior optional year 2\n"
            "constraint hard 50 -> 60\n"
            "constraint hard 50 -> 61\n"
            "constraint hard 51 -> 62\n"
            "constraint soft 50 -> 62\n"
            "constraint soft 51 -> 60\n"
            "constraint soft 51 -> 61\n"
            "choose 2 of {60, 61, 62}\n"
            "rule max_per_year 2\n"
            "rule thesis_after 4\n");
}

TEST(RoundTrip, HouFixpoint) {
  const auto first = parse_curriculum(testing_support::hou_source());
  const auto text = serialize_curriculum(*first.curriculum);
  const auto second = parse_curriculum(text);
  ASSERT_TRUE(second.ok());
  EXPECT_EQ(*second.curriculum, *first.curriculum);
  EXPECT_EQ(serialize_curriculum(*second.curriculum), text);
}

TEST(RoundTrip, RandomCurricula) {
  std::mt19937 rng(20240611);
  for (int i = 0; i < 200; ++i) {
    const auto source = testing_support::random_valid_source(rng);
    const auto first = parse_curriculum(source);
    const auto text = serialize_curriculum(*first.curriculum);
    const auto second = parse_curriculum(text);
    ASSERT_TRUE(second.ok()) << source;
    EXPECT_EQ(*second.curriculum, *first.curriculum) << source;
    EXPECT_EQ(serialize_curriculum(*second.curriculum), text) << source;
  }
}
