#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "finmoral/context.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/table.hpp"
#include "oracles.hpp"

using namespace finmoral;

namespace {

const char* kRevenueCsv = "Year,Revenue (B),Net Profit (B)\n2022,5.6,1.2\n2021,5.0,1.0\n";
const char* kRevenuePassage =
    "The revenue for 2022 was $5.6B, while for 2021 it was $5.0B. The company's net profit also "
    "increased year-over-year. Table below shows quarterly breakdowns.";

}  // namespace

TEST(Table, LoadsCsvWithTypesAndUnits) {
  const Table t = load_table(kRevenueCsv, TableFormat::csv);
  ASSERT_EQ(t.column_count(), 3u);
  ASSERT_EQ(t.row_count(), 2u);
  EXPECT_EQ(t.header_units, (std::vector<std::string>{"", "B", "B"}));
  for (auto k : t.column_types) EXPECT_EQ(k, ValueKind::number);
  // the header unit is metadata; cells keep their own magnitude
  EXPECT_EQ(t.rows[0][1].number.to_string(), "5.6");
  EXPECT_EQ(t.column_index("revenue (b)"), 1u);
  EXPECT_FALSE(t.column_index("Revenue"));
}

TEST(Table, CsvQuotingAndLineEndings) {
  const Table t = load_table("Name,Note\r\n\"Smith, J\",\"say \"\"hi\"\"\"\r\n", TableFormat::csv);
  ASSERT_EQ(t.row_count(), 1u);
  EXPECT_EQ(t.rows[0][0].surface, "Smith, J");
  EXPECT_EQ(t.rows[0][1].surface, "say \"hi\"");
  EXPECT_THROW(load_table("a,b\n\"open,1\n", TableFormat::csv), IngestError);
}

TEST(Table, RejectsBadInput) {
  EXPECT_THROW(load_table("", TableFormat::csv), IngestError);
  EXPECT_THROW(load_table("  \n ", TableFormat::json), IngestError);
  EXPECT_THROW(load_table("A,a \n1,2\n", TableFormat::csv), SchemaError);
  try {
    load_table("A,B\n1,2\n3\n", TableFormat::csv);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(Table, MajorityKindWithTiesPreferringNumber) {
  const Table t = make_table({"A", "B", "C"}, {{"1", "x", "2020-01-01"}, {"y", "2", "z"}});
  EXPECT_EQ(t.column_types[0], ValueKind::number);
  EXPECT_EQ(t.column_types[1], ValueKind::number);
  EXPECT_EQ(t.column_types[2], ValueKind::date);
  EXPECT_EQ(make_table({"A"}, {}).column_types[0], ValueKind::text);
}

TEST(Table, JsonNumbersAndNulls) {
  const Table t = load_table(R"({"headers":["k","v"],"rows":[["a",1.50],["b",null]]})", TableFormat::json);
  EXPECT_EQ(t.rows[0][1].surface, "1.5");
  EXPECT_EQ(t.rows[1][1].surface, "");
}

TEST(Table, RoundTripsThroughCsvAndJson) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Table t = oracle::random_sql_instance(rng).table;
    EXPECT_EQ(load_table(to_csv(t), TableFormat::csv), t);
    EXPECT_EQ(load_table(to_json(t), TableFormat::json), t);
  }
}

TEST(Table, FileExtensionSelectsFormat) {
  const auto dir = std::filesystem::temp_directory_path();
  {
    std::ofstream(dir / "finmoral_t.json") << R"({"headers":["a"],"rows":[["1"]]})";
    std::ofstream(dir / "finmoral_t.csv") << "a\n1\n";
  }
  EXPECT_EQ(load_table_file(dir / "finmoral_t.json"), load_table_file(dir / "finmoral_t.csv"));
  EXPECT_THROW(load_table_file(dir / "does_not_exist.csv"), IngestError);
}

TEST(Context, ScanNumbersSkipsLabelsAndKeepsUnits) {
  const auto ms = scan_numbers("Q4 revenue was $5.6B, up 12% from 5th place (3) and 1,250 units; x=-2.", Source::passage);
  std::vector<std::string> got;
  for (const auto& m : ms) got.push_back(to_string(m.value));
  EXPECT_EQ(got, (std::vector<std::string>{"5600000000", "12%", "3", "1250", "-2"}));
  EXPECT_EQ(ms[0].where.begin, 15u);
}

TEST(Context, ScanNumbersHandlesSentenceEnd) {
  const auto ms = scan_numbers("It was 5.0B. Then 7.", Source::passage);
  ASSERT_EQ(ms.size(), 2u);
  EXPECT_EQ(ms[0].value.number.to_string(), "5000000000");
  EXPECT_EQ(ms[1].value.number.to_string(), "7");
}

TEST(Context, ExtractNumbersPassageThenTable) {
  const Context ctx = make_context(load_table(kRevenueCsv, TableFormat::csv), std::string(kRevenuePassage));
  std::vector<std::string> got;
  for (const auto& m : ctx.numbers) got.push_back(to_string(m.value));
  EXPECT_EQ(got, (std::vector<std::string>{"2022", "5600000000", "2021", "5000000000", "2022", "5.6", "1.2", "2021",
                                           "5", "1"}));
  EXPECT_EQ(ctx.numbers[5].where.source, Source::table);
  EXPECT_EQ(ctx.numbers[5].where.row, 0u);
  EXPECT_EQ(ctx.numbers[5].where.column, 1u);
  ASSERT_TRUE(ctx.schema);
  EXPECT_EQ(ctx.schema->column_names.size(), 3u);
}

TEST(Context, BlankPassageIsAbsent) {
  const Context ctx = make_context(std::nullopt, std::string("   "));
  EXPECT_FALSE(ctx.passage);
  EXPECT_FALSE(ctx.valid());
}
