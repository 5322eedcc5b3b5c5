#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"

using namespace hmlc;

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto t = csv::parse("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n,3\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x, y");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][0], "");
  EXPECT_EQ(t.rows[1][1], "3");
}

TEST(Csv, RaggedRowIsAnError) { EXPECT_THROW(csv::parse("a,b\n1\n"), DataError); }

TEST(Csv, UnterminatedQuote) { EXPECT_THROW(csv::parse("a\n\"x\n"), DataError); }

TEST(Csv, JoinThenParseKeepsFields) {
  const csv::Row row{"plain", "with,comma", "with\"quote", ""};
  const auto t = csv::parse("h1,h2,h3,h4\n" + csv::join(row) + "\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], row);
}

TEST(Csv, DoublesRoundTripBitExactly) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    double back = 0;
    ASSERT_TRUE(csv::parse_double(csv::format_double(v), back));
    EXPECT_EQ(back, v);
  }
  double x;
  EXPECT_FALSE(csv::parse_double("1.0abc", x));
  EXPECT_FALSE(csv::parse_double("", x));
}
