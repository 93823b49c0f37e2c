#include <doctest.h>

#include <cmath>

#include "jointgibbs/dataset.hpp"
#include "jointgibbs/error.hpp"
#include "support.hpp"

using namespace jointgibbs;

TEST_CASE("csv with a missing cell") {
  auto ds = parse_csv("a,b\n1,x\n2,NA\n");
  REQUIRE(ds.n_cols() == 2);
  CHECK(ds.n_rows() == 2);
  CHECK(ds.column("b").n_missing() == 1);
  CHECK(ds.column("b").categorical);
  CHECK(ds.column("a").numbers == std::vector<double>{1, 2});
}

TEST_CASE("numeric complete column") {
  auto ds = parse_csv("a\n1\n2\n3\n");
  CHECK_FALSE(ds.column("a").categorical);
  CHECK(ds.column("a").n_missing() == 0);
}

TEST_CASE("custom NA token and quoted fields") {
  auto ds = parse_csv("a,b\n\"x, y\",.\n\"q\"\"r\",3\n", ".");
  CHECK(ds.column("a").categories == std::vector<std::string>{"x, y", "q\"r"});
  CHECK(ds.column("b").missing == std::vector<bool>{true, false});
}

TEST_CASE("malformed csv") {
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
  CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("two labels are an unordered binary factor") {
  auto ds = parse_csv("lvl\nlow\nhigh\nlow\n");
  auto meta = infer_variable_meta(ds, nullptr);
  CHECK(meta[0].vtype == VType::Binary);
  CHECK(meta[0].n_categories == 2);
  auto three = infer_variable_meta(parse_csv("g\na\nb\nc\n"), nullptr);
  CHECK(three[0].vtype == VType::Unordered);
}

TEST_CASE("numeric 0/1 column becomes binary") {
  auto ds = apply_types(parse_csv("x\n0\n1\n1\n0\n"), {});
  CHECK(ds.column("x").categorical);
  auto meta = infer_variable_meta(ds, nullptr);
  CHECK(meta[0].vtype == VType::Binary);
  CHECK(meta[0].categories == std::vector<std::string>{"0", "1"});
}

TEST_CASE("ordered override with explicit levels") {
  std::map<std::string, TypeOverride> ov;
  ov["s"].vtype = VType::Ordered;
  ov["s"].levels = {"never", "former", "current"};
  auto ds = apply_types(parse_csv("s\ncurrent\nnever\nformer\n"), ov);
  CHECK(ds.column("s").ordered);
  CHECK(ds.column("s").codes == std::vector<int>{2, 0, 1});
  ov["s"].levels = {"never", "former"};
  CHECK_THROWS_AS(apply_types(parse_csv("s\ncurrent\nnever\n"), ov), DataError);
}

TEST_CASE("level-2 variable counts missing per group") {
  // 200 groups of 3 rows, HEIGHT_M constant within ID, missing in 4 groups
  std::vector<double> id, h, t;
  for (int g = 0; g < 200; ++g)
    for (int r = 0; r < 3; ++r) {
      id.push_back(g + 1);
      h.push_back(g % 50 == 7 ? testsupport::NA : 150.0 + g % 37);
      t.push_back(r + 0.1 * g);
    }
  auto ds = testsupport::Table().num("ID", id).num("HEIGHT_M", h).num("time", t).dataset();
  auto grp = make_grouping(ds, "ID");
  CHECK(grp.n_groups() == 200);
  auto meta = infer_variable_meta(ds, &grp);
  CHECK(meta[1].level == "ID");
  CHECK(meta[1].n_missing == 4);
  CHECK(meta[2].level == "lvlone");
  CHECK(meta[2].n_missing == 0);
}

TEST_CASE("missing-data pattern") {
  SUBCASE("complete") {
    auto p = md_pattern(parse_csv("a,b\n1,2\n3,4\n5,6\n"));
    REQUIRE(p.patterns.size() == 1);
    CHECK(p.patterns[0] == std::vector<int>{1, 1});
    CHECK(p.counts[0] == 3);
  }
  SUBCASE("one incomplete column") {
    auto p = md_pattern(parse_csv("a,b\n1,NA\n2,3\n3,NA\n4,1\n5,2\n"));
    CHECK(p.columns == std::vector<std::string>{"a", "b"});
    REQUIRE(p.patterns.size() == 2);
    CHECK(p.patterns[0] == std::vector<int>{1, 1});
    CHECK(p.counts[0] == 3);
    CHECK(p.patterns[1] == std::vector<int>{1, 0});
    CHECK(p.counts[1] == 2);
    CHECK(p.missing_per_column == std::vector<std::size_t>{0, 2});
    CHECK(md_pattern_csv(p) == "a,b,count\n1,1,3\n1,0,2\n0,2,2\n");
  }
  SUBCASE("variables missing together share zero columns") {
    auto p = md_pattern(parse_csv("c,a,u\n1,NA,NA\n2,3,4\n3,NA,NA\n"));
    for (const auto& pat : p.patterns) CHECK(pat[1] == pat[2]);
  }
}

TEST_CASE("scaling statistics") {
  auto s = scaling_stats({2, 4, 6});
  CHECK(s.mean == doctest::Approx(4));
  CHECK(s.sd == doctest::Approx(2));
  auto z = apply_scaling({2, 4, 6}, s);
  CHECK(z[0] == doctest::Approx(-1));
  CHECK(z[1] == doctest::Approx(0));
  CHECK(z[2] == doctest::Approx(1));
  auto back = unapply_scaling(z, s);
  CHECK(back[2] == doctest::Approx(6));
  CHECK_THROWS_AS(scaling_stats({5, 5, testsupport::NA, 5}), DataError);
  auto o = scaling_stats({1, 3, testsupport::NA});
  CHECK(o.mean == doctest::Approx(2));
  CHECK(o.sd == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("reference categories") {
  std::vector<std::string> v(30, "B");
  for (int i = 0; i < 10; ++i) v[i] = "A";
  auto ds = testsupport::Table().str("g", v).dataset();
  CHECK(resolve_refcat("largest", ds.column("g")) == "B");
  CHECK(resolve_refcat("first", ds.column("g")) == "A");
  CHECK(resolve_refcat("2", ds.column("g")) == "B");
  auto sex = parse_csv("gender\nmale\nfemale\n");
  CHECK(resolve_refcat("", sex.column("gender")) == "male");
  auto occ = parse_csv("occup\nworking\nnot working\nlooking for work\n");
  CHECK(resolve_refcat("not working", occ.column("occup")) == "not working");
  CHECK_THROWS_AS(resolve_refcat("retired", occ.column("occup")), ConfigError);
}

TEST_CASE("contrast coding") {
  auto sex = parse_csv("gender\nmale\nfemale\nNA\n");
  auto cc = encode_contrasts(sex.column("gender"), "male", Coding::Dummy);
  REQUIRE(cc.names.size() == 1);
  CHECK(cc.names[0] == "genderfemale");
  CHECK(cc.values[0][0] == 0.0);
  CHECK(cc.values[0][1] == 1.0);
  CHECK(std::isnan(cc.values[0][2]));

  auto three = parse_csv("c\ncat1\ncat2\ncat3\ncat1\n");
  auto ec = encode_contrasts(three.column("c"), "cat1", Coding::Effect);
  REQUIRE(ec.values.size() == 2);
  CHECK(ec.values[0][0] == -1.0);
  CHECK(ec.values[1][0] == -1.0);
  CHECK(ec.values[0][1] == 1.0);
  CHECK(ec.values[1][1] == 0.0);
  CHECK(parse_coding("contr.sum") == Coding::Effect);
  CHECK_THROWS_AS(parse_coding("helmert"), ConfigError);
}
