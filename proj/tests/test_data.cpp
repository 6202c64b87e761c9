#include <doctest.h>

#include "nextcat/data.hpp"

using namespace nextcat;

TEST_SUITE("data") {

TEST_CASE("dates round trip through ISO strings") {
  for (const char* iso : {"1970-01-01", "2013-06-01", "2015-03-28",
                          "2016-02-29", "2000-02-29", "2099-12-31"}) {
    CHECK(Date::parse(iso).to_string() == iso);
  }
  CHECK(Date::parse("1970-01-01").days() == 0);
  CHECK(Date::parse("1970-01-02").days() == 1);
  // 2015 is not a leap year
  CHECK(Date::parse("2015-03-01").days() - Date::parse("2015-02-28").days() == 1);
  CHECK_THROWS_AS(Date::parse("2015-13-01"), ParseError);
  CHECK_THROWS_AS(Date::parse("2015-02-30"), ParseError);
  CHECK_THROWS_AS(Date::parse("not-a-date"), ParseError);
}

TEST_CASE("money is exact in cents") {
  CHECK(money_parse("39.82") == 3982);
  CHECK(money_parse("0.01") == 1);
  CHECK(money_parse("560.61") == 56061);
  CHECK(money_to_string(56061) == "560.61");
  CHECK(money_to_string(5) == "0.05");
  CHECK(money_to_string(100) == "1.00");
  CHECK(money_from_dollars(560.61) == 56061);
  CHECK(money_from_dollars(0.005) == 1);  // half rounds up

  // the nine Table-style amounts sum exactly
  Money total = 0;
  for (const char* a : {"39.82", "47.25", "27.81", "124.97", "105.97", "24.95",
                        "49.99", "99.95", "39.90"})
    total += money_parse(a);
  CHECK(total == 56061);
  CHECK(money_to_string(total) == "560.61");
}

TEST_CASE("category names and output sentences round trip") {
  CHECK(category_name(Category::GasStations) == "Gas stations");
  CHECK(category_output_sentence(Category::GasStations) == "Gas stations.");
  for (int c = 0; c < kNumCategories; ++c) {
    Category cat = static_cast<Category>(c);
    CHECK(category_from_name(category_name(cat)) == cat);
    CHECK(category_from_output_sentence(category_output_sentence(cat)) == cat);
  }
  CHECK(!category_from_name("Restaurants").has_value());
  CHECK(!category_from_output_sentence("Grocery").has_value());  // no period
}

TEST_CASE("income group names round trip") {
  for (int g = 0; g < 3; ++g) {
    IncomeGroup ig = static_cast<IncomeGroup>(g);
    CHECK(income_group_from_name(income_group_name(ig)) == ig);
  }
}

TEST_CASE("profile completeness requires all four narrative fields") {
  CustomerProfile p;
  p.gender = "male";
  p.marital_status = "married";
  p.education = "secondary school";
  CHECK(!p.complete());
  p.job = "private employee";
  CHECK(p.complete());
}

}  // TEST_SUITE
