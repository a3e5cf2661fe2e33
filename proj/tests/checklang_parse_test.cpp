#include <gtest/gtest.h>

#include <random>

#include "logicode/checklang/parser.hpp"
#include "logicode/checklang/printer.hpp"
#include "support/program_gen.hpp"

using namespace logicode;
using namespace logicode::checklang;

namespace {

const char* kMinimal =
    R"(check c1 covers r_len type Size when not (size("cable",0).length in [90,110]) reason "Size Anomaly: cable length {L} outside [90.00, 110.00]" with L = size("cable",0).length)";

}  // namespace

TEST(Parser, MinimalProgram) {
  auto p = parse(kMinimal);
  ASSERT_EQ(p.checks.size(), 1u);
  const auto& c = p.checks[0];
  EXPECT_EQ(c.name, "c1");
  EXPECT_EQ(c.covers, "r_len");
  EXPECT_EQ(c.type, AnomalyType::Size);
  EXPECT_EQ(c.condition.kind, Expr::Kind::Unary);
  ASSERT_EQ(c.bindings.size(), 1u);
  EXPECT_EQ(c.bindings[0].name, "L");
  EXPECT_EQ(p.source_text, kMinimal);
}

TEST(Parser, EmptySourceIsEmptyProgram) {
  EXPECT_TRUE(parse("").checks.empty());
  EXPECT_TRUE(parse("  # only a comment\n").checks.empty());
}

TEST(Parser, UnbalancedParenthesisReportsPosition) {
  try {
    parse("check c covers r type Size\n  when (count(\"a\") > 1\n  reason \"Size Anomaly: x\"");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.pos().line, 3);
    EXPECT_EQ(e.pos().col, 3);
    EXPECT_NE(e.message().find("')'"), std::string::npos) << e.what();
  }
}

TEST(Parser, ErrorPositions) {
  auto pos_of = [](std::string_view src) {
    try {
      parse(src);
    } catch (const SyntaxError& e) {
      return std::pair{e.pos().line, e.pos().col};
    }
    return std::pair{0, 0};
  };
  EXPECT_EQ(pos_of("check c covers r type Bogus when true reason \"x\""), (std::pair{1, 23}));
  EXPECT_EQ(pos_of("check c covers r type Size when 1 + reason \"x\""), (std::pair{1, 37}));
  EXPECT_EQ(pos_of("check c covers r type Size when $"), (std::pair{1, 33}));
  EXPECT_EQ(pos_of("check c covers r type Size when \"abc"), (std::pair{1, 33}));
  EXPECT_EQ(pos_of("check c covers r type Size when 99999999999999999999 reason \"x\""), (std::pair{1, 33}));
  EXPECT_EQ(pos_of("check let covers r type Size when true reason \"x\""), (std::pair{1, 7}));
}

TEST(Parser, PrecedenceAndAssociativity) {
  EXPECT_EQ(pretty_print(parse_expression("1 + 2 * 3 - 4")), "1 + 2 * 3 - 4");
  EXPECT_EQ(pretty_print(parse_expression("(1 + 2) * 3")), "(1 + 2) * 3");
  EXPECT_EQ(pretty_print(parse_expression("1 - (2 - 3)")), "1 - (2 - 3)");
  EXPECT_EQ(pretty_print(parse_expression("a or b and not c = d")), "a or b and not c = d");
  EXPECT_EQ(pretty_print(parse_expression("(a or b) and c")), "(a or b) and c");
  auto e = parse_expression("1 - 2 - 3");
  ASSERT_EQ(e.kind, Expr::Kind::Binary);
  EXPECT_EQ(e.args[0].kind, Expr::Kind::Binary);  // left associative
}

TEST(Parser, NegativeLiteralsFold) {
  auto e = parse_expression("-3");
  EXPECT_EQ(e.kind, Expr::Kind::Int);
  EXPECT_EQ(e.int_value, -3);
  EXPECT_EQ(parse_expression("-(2.5)").float_value, -2.5);
  EXPECT_EQ(parse_expression("-x").kind, Expr::Kind::Unary);
  EXPECT_EQ(pretty_print(parse_expression("(-3).x")), "(-3).x");
  EXPECT_EQ(pretty_print(parse_expression("a - -3")), "a - -3");
}

TEST(Parser, UnicodeComparisonsNormalise) {
  EXPECT_EQ(pretty_print(parse_expression("a ≤ 1 and b ≥ 2 and c ≠ 3")), "a <= 1 and b >= 2 and c != 3");
}

TEST(Parser, OpenFormsPrintWithParentheses) {
  EXPECT_EQ(pretty_print(parse_expression("a and (let x = 1 in x > 0)")), "a and (let x = 1 in x > 0)");
  EXPECT_EQ(pretty_print(parse_expression("exists o in find(\"t\"): o.id = \"a\" or false")),
            "exists o in find(\"t\"): o.id = \"a\" or false");
  EXPECT_EQ(pretty_print(parse_expression("(if a then 1 else 2) + 3")), "(if a then 1 else 2) + 3");
  EXPECT_THROW(parse_expression("a and let x = 1 in x"), SyntaxError);
}

TEST(Parser, CanonicalProgramLayout) {
  auto p = parse(std::string(kMinimal) + "\ncheck c2 covers r2 type Quantity when count(\"a\")!=1 reason \"Quantity Anomaly: n\"");
  EXPECT_EQ(pretty_print(p),
            "check c1 covers r_len type Size\n"
            "  when not size(\"cable\", 0).length in [90, 110]\n"
            "  reason \"Size Anomaly: cable length {L} outside [90.00, 110.00]\"\n"
            "  with L = size(\"cable\", 0).length\n"
            "\n"
            "check c2 covers r2 type Quantity\n"
            "  when count(\"a\") != 1\n"
            "  reason \"Quantity Anomaly: n\"\n");
}

TEST(Parser, RoundTripFuzzCorpus) {
  fuzz::ProgramGen gen(12345);
  int fixpoints = 0;
  for (int i = 0; i < 1000; ++i) {
    const CheckProgram original = gen.program(1 + int(gen.pick(3)), 5);
    const std::string text = pretty_print(original);
    CheckProgram once;
    ASSERT_NO_THROW(once = parse(text)) << text;
    ASSERT_TRUE(once.same_structure(original)) << text;
    const CheckProgram twice = parse(pretty_print(once));
    ASSERT_TRUE(twice.same_structure(once)) << text;
    ASSERT_EQ(pretty_print(twice), text);
    ++fixpoints;
  }
  EXPECT_EQ(fixpoints, 1000);
}

TEST(Parser, RandomBytesOnlyRaiseSyntaxErrors) {
  std::mt19937_64 rng(777);
  int rejected = 0, accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s(std::uniform_int_distribution<int>(0, 200)(rng), '\0');
    for (auto& c : s) c = char(std::uniform_int_distribution<int>(0, 255)(rng));
    try {
      parse(s);
      ++accepted;
    } catch (const SyntaxError&) {
      ++rejected;
    }
  }
  EXPECT_EQ(rejected + accepted, 10000);
}

TEST(Parser, MutatedProgramsOnlyRaiseSyntaxErrors) {
  // Token-level damage gets deeper into the grammar than random bytes.
  fuzz::ProgramGen gen(99);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) {
    std::string s = pretty_print(gen.program(2, 4));
    const int edits = 1 + int(rng() % 4);
    for (int k = 0; k < edits && !s.empty(); ++k) {
      const std::size_t at = rng() % s.size();
      switch (rng() % 3) {
        case 0: s.erase(at, 1 + rng() % 5); break;
        case 1: s.insert(at, 1, "()[],.:=<>+-*/\"\\ #"[rng() % 18]); break;
        default: s[at] = char(rng() % 256);
      }
    }
    try {
      parse(s);
    } catch (const SyntaxError&) {
    }
  }
  SUCCEED();
}

TEST(Parser, DeepNestingIsAnErrorNotACrash) {
  std::string deep(100000, '(');
  EXPECT_THROW(parse_expression(deep), SyntaxError);
  std::string nots;
  for (int i = 0; i < 100000; ++i) nots += "not ";
  EXPECT_THROW(parse_expression(nots + "true"), SyntaxError);
  std::string negs(100000, '-');
  EXPECT_THROW(parse_expression(negs + "x"), SyntaxError);
}

TEST(Parser, Placeholders) {
  EXPECT_EQ(placeholders("a {x} b {y_1}"), (std::vector<std::string>{"x", "y_1"}));
  EXPECT_THROW(placeholders("a {x"), std::invalid_argument);
  EXPECT_THROW(placeholders("a }"), std::invalid_argument);
  EXPECT_THROW(placeholders("{}"), std::invalid_argument);
}
