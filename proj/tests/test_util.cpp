#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "edge360/util.hpp"

using namespace edge360;

TEST_CASE("split_seed is deterministic and tag-sensitive") {
  CHECK(util::split_seed(42, "episode", 3) == util::split_seed(42, "episode", 3));
  CHECK(util::split_seed(42, "episode", 3) != util::split_seed(42, "episode", 4));
  CHECK(util::split_seed(42, "episode", 3) != util::split_seed(42, "rollout", 3));
  CHECK(util::split_seed(42, "episode", 3) != util::split_seed(43, "episode", 3));
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, 1.0, -1.5, 0.1, 1e-300, 3.3333333333333335e9, 65025.0, 1.0 / 3.0}) {
    CHECK(util::parse_double(util::format_double(v)) == v);
  }
}

TEST_CASE("parse_double rejects junk") {
  CHECK_THROWS_AS(util::parse_double("abc"), std::invalid_argument);
  CHECK_THROWS_AS(util::parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(util::parse_double(""), std::invalid_argument);
}

TEST_CASE("split_csv_line") {
  CHECK(util::split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(util::split_csv_line("a,,c\r") == std::vector<std::string>{"a", "", "c"});
  CHECK(util::split_csv_line("one") == std::vector<std::string>{"one"});
}

TEST_CASE("mean_std") {
  auto ms = util::mean_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  CHECK(ms.mean == doctest::Approx(5.0));
  CHECK(ms.std == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(util::mean_std({3.0}).std == 0.0);
  CHECK(util::mean_std({}).n == 0);
}

TEST_CASE("paired t statistic sign and magnitude") {
  std::vector<double> a{1.1, 1.2, 1.3, 1.15, 1.25};
  std::vector<double> b{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(util::paired_t_statistic(a, b) > 0.0);
  CHECK(util::paired_t_statistic(b, a) < 0.0);
  // all differences equal: degenerate, sign only
  CHECK(util::paired_t_statistic({2, 2, 2}, {1, 1, 1}) > 1e8);
}
