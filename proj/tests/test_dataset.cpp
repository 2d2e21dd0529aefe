#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "causalnet/dataset.hpp"
#include "causalnet/rng.hpp"

using namespace causalnet;

namespace {

Schema xy_schema() {
  return Schema::make({{"x", {"a", "b"}, {"", "NA"}}, {"y", {"lo", "hi"}, {"", "NA"}}});
}

}  // namespace

TEST_CASE("schema text round-trip and validation") {
  std::string text =
      "x: a,b\n"
      "y: lo,hi missing=?|none\n";
  Schema s = Schema::parse(text);
  CHECK(s.size() == 2);
  CHECK(s.var(1).missing_tokens == std::vector<std::string>{"?", "none"});
  CHECK(s.format() == text);

  CHECK(Schema::parse("x: a,b # comment\n").var(0).levels == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(Schema::parse("x a,b\n"), FormatError);
  CHECK_THROWS_AS(Schema::parse("x: a,a\n"), FormatError);
  CHECK_THROWS_AS(Schema::parse("x: a,b\nx: c\n"), FormatError);
  CHECK_THROWS_AS(Schema::parse("x: a,b missing=a\n"), FormatError);
  CHECK_THROWS_AS(Schema::parse("x: a,b extra\n"), FormatError);
  CHECK_THROWS_AS(Schema::make({{"x", {}, {}}}), FormatError);
}

TEST_CASE("csv parses, maps levels and round-trips quoting") {
  Schema s = Schema::make({{"x", {"a,1", "b"}, {"", "NA"}}, {"y", {"lo", "hi"}, {"", "NA"}}});
  std::string text =
      "x,y\n"
      "\"a,1\",lo\n"
      "b,hi\n"
      "b,\n";
  Dataset d = Dataset::parse_csv(text, s);
  REQUIRE(d.row_count() == 3);
  CHECK(d.cell(0, 0) == 0);
  CHECK(d.cell(0, 1) == 0);
  CHECK(d.cell(2, 1) == kMissing);
  CHECK(d.format_csv() == text);

  // Embedded quotes and newlines survive a round trip.
  Schema q = Schema::make({{"v", {"say \"hi\"", "line\nbreak", "plain"}, {"", "NA"}}});
  Dataset dq(q);
  dq.append_row({0});
  dq.append_row({1});
  dq.append_row({2});
  Dataset back = Dataset::parse_csv(dq.format_csv(), q);
  REQUIRE(back.row_count() == 3);
  for (size_t r = 0; r < 3; ++r) CHECK(back.cell(r, 0) == static_cast<int32_t>(r));
}

TEST_CASE("csv header may permute columns") {
  Dataset d = Dataset::parse_csv("y,x\nlo,a\nhi,b\n", xy_schema());
  CHECK(d.cell(0, 0) == 0);  // x=a
  CHECK(d.cell(1, 1) == 1);  // y=hi
}

TEST_CASE("csv errors carry position context") {
  Schema s = xy_schema();
  CHECK_THROWS_AS(Dataset::parse_csv("x\na\n", s), MissingColumn);
  CHECK_THROWS_AS(Dataset::parse_csv("x,y,z\na,lo,1\n", s), FormatError);
  CHECK_THROWS_AS(Dataset::parse_csv("x,y,x\na,lo,a\n", s), FormatError);
  CHECK_THROWS_AS(Dataset::parse_csv("", s), FormatError);
  try {
    Dataset::parse_csv("x,y\na,lo\nq,hi\n", s);
    FAIL("expected UnknownLevel");
  } catch (const UnknownLevel& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'x'") != std::string::npos);
    CHECK(msg.find("'q'") != std::string::npos);
  }
  try {
    Dataset::parse_csv("x,y\na\n", s);
    FAIL("expected RaggedRow");
  } catch (const RaggedRow& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("missing tokens map to missing cells in any declared spelling") {
  Schema s = Schema::make({{"x", {"a", "b"}, {"?", "none"}}});
  Dataset d = Dataset::parse_csv("x\n?\nnone\na\n", s);
  CHECK(d.cell(0, 0) == kMissing);
  CHECK(d.cell(1, 0) == kMissing);
  CHECK(d.cell(2, 0) == 0);
}

TEST_CASE("derive_indicators adds binary columns named after graph indicators") {
  MGraph g = MGraph::build({{"x", NodeRole::partially_observed()},
                            {"y", NodeRole::partially_observed()},
                            {"R_x", NodeRole::miss_indicator("x")}},
                           {});
  Dataset d(xy_schema());
  d.append_row({0, kMissing});
  d.append_row({kMissing, 1});
  d.append_row({1, 0});

  Dataset e = derive_indicators(d, g);
  int rx = e.schema().index_of("R_x");
  int ry = e.schema().index_of("R_y");  // no indicator node declared: default name
  CHECK(e.column(rx) == std::vector<int32_t>{0, 1, 0});
  CHECK(e.column(ry) == std::vector<int32_t>{1, 0, 0});
  // Substantive cells untouched.
  CHECK(e.cell(1, 0) == kMissing);
  CHECK(e.cell(2, 1) == 0);

  // Idempotent: a second application yields an identical table.
  Dataset e2 = derive_indicators(e, g);
  CHECK(e2.schema().size() == e.schema().size());
  CHECK(e2.format_csv() == e.format_csv());

  MGraph missing_col = MGraph::build({{"z", NodeRole::partially_observed()}}, {});
  CHECK_THROWS_AS(derive_indicators(d, missing_col), MissingColumn);
}

TEST_CASE("split_train_test takes floor(frac * n) per cohort and partitions rows") {
  Schema s = Schema::make({{"cohort", {"pbc", "cbc"}, {"", "NA"}}, {"v", {"0", "1"}, {"", "NA"}}});
  Dataset d(s);
  for (int i = 0; i < 1500; ++i) d.append_row({0, static_cast<int32_t>(i % 2)});
  for (int i = 0; i < 340; ++i) d.append_row({1, static_cast<int32_t>(i % 2)});
  d.designate_cohort("cohort");

  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto [train, test] = split_train_test(d, {{"pbc", 0.667}, {"cbc", 1.0}}, seed);
    size_t train_pbc = 0, train_cbc = 0;
    for (size_t r = 0; r < train.row_count(); ++r) {
      (train.cell(r, 0) == 0 ? train_pbc : train_cbc) += 1;
    }
    CHECK(train_pbc == 1000);  // floor(0.667 * 1500)
    CHECK(train_cbc == 340);
    CHECK(train.row_count() + test.row_count() == d.row_count());
    for (size_t r = 0; r < test.row_count(); ++r) CHECK(test.cell(r, 0) == 0);
  }

  // Deterministic for a fixed seed, different across seeds.
  auto [a1, b1] = split_train_test(d, {{"pbc", 0.5}, {"cbc", 0.5}}, 7);
  auto [a2, b2] = split_train_test(d, {{"pbc", 0.5}, {"cbc", 0.5}}, 7);
  auto [a3, b3] = split_train_test(d, {{"pbc", 0.5}, {"cbc", 0.5}}, 8);
  CHECK(a1.format_csv() == a2.format_csv());
  CHECK(b1.format_csv() == b2.format_csv());
  CHECK(a1.format_csv() != a3.format_csv());
  (void)b3;
}

TEST_CASE("split preconditions") {
  Schema s = Schema::make({{"cohort", {"pbc", "cbc"}, {"", "NA"}}});
  Dataset d(s);
  d.append_row({0});
  CHECK_THROWS_AS(split_train_test(d, {{"pbc", 0.5}}, 1), NoCohortColumn);
  d.designate_cohort("cohort");
  CHECK_THROWS_AS(split_train_test(d, {{"cbc", 0.5}}, 1), InvalidArgument);
  CHECK_THROWS_AS(split_train_test(d, {{"pbc", 1.5}}, 1), InvalidArgument);

  Dataset m(s);
  m.append_row({kMissing});
  CHECK_THROWS_AS(m.designate_cohort("cohort"), NoCohortColumn);
}

TEST_CASE("weights and row selection") {
  Dataset d(xy_schema());
  d.append_row({0, 0}, 2.0);
  d.append_row({1, kMissing}, 0.5);
  CHECK(d.total_weight() == 2.5);
  CHECK_THROWS_AS(d.set_weight(0, -1.0), InvalidArgument);

  CHECK_FALSE(d.complete_on({0, 1}));
  Dataset kept = d.drop_incomplete({0, 1});
  REQUIRE(kept.row_count() == 1);
  CHECK(kept.weight(0) == 2.0);
}
