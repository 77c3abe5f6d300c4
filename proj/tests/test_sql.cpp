#include <gtest/gtest.h>

#include <random>

#include "finmoral/errors.hpp"
#include "finmoral/sql.hpp"
#include "finmoral/sql_exec.hpp"
#include "oracles.hpp"

using namespace finmoral;
using namespace finmoral::sql;

namespace {

Table segments() {
  return make_table({"Segment", "Region", "Revenue (B)", "Margin", "Reported"},
                    {{"Cloud", "Europe", "3.2", "18.5%", "2023-03-31"},
                     {"Devices", "Asia", "2.7", "9.0%", "2023-06-30"},
                     {"Services", "Europe", "1.9", "12.25%", "2023-03-31"},
                     {"Licensing", "Americas", "0.8", "n/a", "2022-12-31"}});
}

std::size_t error_offset(std::string_view q) {
  try {
    parse_sql(q);
  } catch (const SqlSyntaxError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no error for " << q;
  return 0;
}

}  // namespace

TEST(SqlParse, ProjectionWithEverything) {
  const auto q = parse_sql(
      "select Segment, \"Revenue (B)\" WHERE Region = 'Europe' and \"Revenue (B)\" >= 1.5 ORDER BY Segment desc LIMIT 2;");
  ASSERT_FALSE(q.is_aggregate());
  EXPECT_EQ(q.columns(), (Projection{"Segment", "Revenue (B)"}));
  ASSERT_EQ(q.where.size(), 2u);
  EXPECT_EQ(q.where[1].op, CompareOp::ge);
  EXPECT_EQ(q.where[1].literal.number.to_string(), "1.5");
  ASSERT_TRUE(q.order_by);
  EXPECT_TRUE(q.order_by->descending);
  EXPECT_EQ(q.limit, 2u);
}

TEST(SqlParse, Aggregates) {
  EXPECT_EQ(parse_sql("SELECT COUNT(*)").aggregate().column, "*");
  EXPECT_EQ(parse_sql("SELECT avg(Margin)").aggregate().fn, AggregateFn::avg);
  EXPECT_EQ(parse_sql("SELECT MAX(\"Revenue (B)\") WHERE Region CONTAINS 'eur'").where[0].op, CompareOp::contains);
}

TEST(SqlParse, LiteralForms) {
  const auto q = parse_sql("SELECT a WHERE a <> $1.4B AND b \xE2\x89\xA4 12% AND c = '2023-03-31' AND d = 'it''s'");
  EXPECT_EQ(q.where[0].op, CompareOp::ne);
  EXPECT_EQ(q.where[0].literal.number.to_string(), "1400000000");
  EXPECT_TRUE(q.where[1].literal.percent);
  EXPECT_TRUE(q.where[2].literal.is_date());
  EXPECT_EQ(q.where[3].literal.surface, "it's");
}

TEST(SqlParse, ErrorsCarryOffsets) {
  EXPECT_EQ(error_offset("SELECT FROM"), 7u);
  EXPECT_EQ(error_offset("SELECT a WHERE"), 14u);
  EXPECT_EQ(error_offset("SELECT a WHERE b = "), 19u);
  EXPECT_EQ(error_offset("SELECT MEDIAN(a)"), 7u);
  EXPECT_EQ(error_offset("SELECT a LIMIT 0"), 15u);
  EXPECT_EQ(error_offset("SELECT a WHERE b = 12abc"), 19u);
  EXPECT_EQ(error_offset("SELECT a WHERE b = 'open"), 19u);
  EXPECT_THROW(parse_sql("SELECT a; extra"), SqlSyntaxError);
  EXPECT_THROW(parse_sql(""), SqlSyntaxError);
}

TEST(SqlParse, RenderRoundTripsOnRandomQueries) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto inst = oracle::random_sql_instance(rng);
    const std::string text = render(inst.query);
    EXPECT_EQ(parse_sql(text), inst.query) << text;
    EXPECT_EQ(render(parse_sql(text)), text);
  }
}

TEST(SqlRender, QuotesWhenNeeded) {
  EXPECT_EQ(render_identifier("Segment"), "Segment");
  EXPECT_EQ(render_identifier("Revenue (B)"), "\"Revenue (B)\"");
  EXPECT_EQ(render_identifier("order"), "\"order\"");
  EXPECT_EQ(render_identifier("a\"b"), "\"a\"\"b\"");
}

TEST(SqlExecute, LookupAndAggregates) {
  const Table t = segments();
  auto run = [&](std::string_view q) { return execute(parse_sql(q), t); };

  auto r = run("SELECT Segment WHERE \"Revenue (B)\" = 3.2");
  ASSERT_TRUE(r.executed_ok) << r.error;
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0][0].surface, "Cloud");

  r = run("SELECT COUNT(*) WHERE Region = 'europe'");
  EXPECT_EQ(to_string(*r.scalar), "2");

  r = run("SELECT SUM(\"Revenue (B)\")");
  EXPECT_EQ(to_string(*r.scalar), "8.6");

  r = run("SELECT AVG(Margin)");
  EXPECT_EQ(format_answer(*r.scalar), "13.3%");
  EXPECT_TRUE(r.scalar->percent);

  r = run("SELECT MAX(Reported)");
  EXPECT_EQ(r.scalar->surface, "2023-06-30");

  r = run("SELECT Segment ORDER BY Reported DESC LIMIT 3");
  ASSERT_EQ(r.cells.size(), 3u);
  EXPECT_EQ(r.cells[0][0].surface, "Devices");
  EXPECT_EQ(r.cells[1][0].surface, "Cloud");  // stable on ties
  EXPECT_EQ(r.cells[2][0].surface, "Services");
}

TEST(SqlExecute, EmptyInputs) {
  const Table t = segments();
  auto r = execute(parse_sql("SELECT SUM(\"Revenue (B)\") WHERE Region = 'Mars'"), t);
  ASSERT_TRUE(r.executed_ok);
  EXPECT_EQ(to_string(*r.scalar), "0");
  r = execute(parse_sql("SELECT MIN(\"Revenue (B)\") WHERE Region = 'Mars'"), t);
  EXPECT_FALSE(r.executed_ok);
  EXPECT_EQ(r.error, "MIN over zero rows");
}

TEST(SqlExecute, ValidationErrors) {
  const Table t = segments();
  EXPECT_NE(execute(parse_sql("SELECT Profit"), t).error.find("unknown column"), std::string::npos);
  EXPECT_NE(execute(parse_sql("SELECT SUM(Segment)"), t).error.find("type mismatch"), std::string::npos);
  EXPECT_NE(execute(parse_sql("SELECT Segment WHERE Segment > 3"), t).error.find("type mismatch"), std::string::npos);
  EXPECT_NE(execute(parse_sql("SELECT Segment WHERE Margin CONTAINS 'x'"), t).error.find("type mismatch"),
            std::string::npos);
  EXPECT_FALSE(execute(parse_sql("SELECT Segment WHERE Reported < 5"), t).executed_ok);
}

TEST(SqlExecute, DoesNotMutateTable) {
  const Table t = segments();
  const Table copy = t;
  execute(parse_sql("SELECT Segment ORDER BY Segment DESC LIMIT 1"), t);
  EXPECT_EQ(t, copy);
}

TEST(SqlExecute, MatchesReferenceOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto inst = oracle::random_sql_instance(rng);
    ASSERT_FALSE(validate(inst.query, inst.table)) << render(inst.query);
    EXPECT_TRUE(oracle::same_outcome(oracle::run_sql(inst.query, inst.table), execute(inst.query, inst.table)))
        << render(inst.query);
  }
}
