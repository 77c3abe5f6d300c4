#include <gtest/gtest.h>

#include <cmath>

#include "finmoral/context.hpp"
#include "finmoral/encoder.hpp"
#include "finmoral/errors.hpp"

using namespace finmoral;

namespace {

double norm(const Vector& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(HashEncoder, DeterministicUnitVectors) {
  const HashEncoder a(64, 42), b(64, 42);
  for (const char* s : {"revenue", "Net Profit (B)", "5.6", "what is the yoy change"}) {
    const Vector x = a.encode(s);
    ASSERT_EQ(x.size(), 64u);
    EXPECT_NEAR(norm(x), 1.0, 1e-12);
    EXPECT_EQ(x, b.encode(s));
  }
}

TEST(HashEncoder, CaseInsensitiveAndSeedSensitive) {
  const HashEncoder a(32, 1), b(32, 2);
  EXPECT_EQ(a.encode("Revenue"), a.encode("revenue"));
  EXPECT_NE(a.encode("revenue"), b.encode("revenue"));
}

TEST(HashEncoder, EmptyTextIsZero) {
  const HashEncoder e(16);
  EXPECT_EQ(norm(e.encode("")), 0.0);
  EXPECT_EQ(norm(e.encode(" ,;")), 0.0);
}

TEST(HashEncoder, ZeroDimensionRejected) { EXPECT_THROW(HashEncoder(0), DimensionError); }

TEST(HashEncoder, DotRequiresEqualLengths) {
  EXPECT_THROW(dot(Vector(3, 1.0), Vector(4, 1.0)), DimensionError);
  EXPECT_DOUBLE_EQ(dot(Vector{1, 2}, Vector{3, 4}), 11.0);
}

TEST(EncodeContext, ShapesFollowContext) {
  const Table t = make_table({"Year", "Revenue"}, {{"2022", "5.6"}, {"2021", "5.0"}});
  const Context ctx = make_context(t, std::nullopt);
  const HashEncoder e(16, 3);
  const auto enc = encode_context(e, "revenue change", ctx);
  ASSERT_EQ(enc.table.size(), 2u);
  ASSERT_EQ(enc.table[0].size(), 2u);
  EXPECT_EQ(enc.passage, Vector(16, 0.0));
  EXPECT_EQ(enc.numbers.size(), ctx.numbers.size());
  Vector expect = e.encode("5.6");
  add_into(expect, e.encode("Revenue"));
  EXPECT_EQ(enc.table[0][1], expect);
}
