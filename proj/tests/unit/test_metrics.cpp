#include <doctest.h>

#include <cmath>
#include <vector>

#include "sfclust/errors.hpp"
#include "sfclust/metrics.hpp"
#include "sfclust/rng.hpp"

using namespace sfclust;

TEST_CASE("identical partitions score one") {
    const LabelField a = {0, 0, 1, 2, 2, 1, 0};
    CHECK(adjusted_rand_index(a, a) == 1.0);
}

TEST_CASE("relabeling does not change the score") {
    const LabelField a = {0, 0, 1, 1, 2, 2};
    const LabelField b = {2, 2, 0, 0, 1, 1};
    CHECK(adjusted_rand_index(a, b) == 1.0);
}

TEST_CASE("degenerate partitions with no distinguishable pairs score one") {
    CHECK(adjusted_rand_index({0, 0, 0, 0}, {1, 1, 1, 1}) == 1.0);
    CHECK(adjusted_rand_index({0, 1, 2, 3}, {3, 1, 0, 2}) == 1.0);
    CHECK(adjusted_rand_index({0}, {5}) == 1.0);
}

TEST_CASE("singletons against one block score zero") {
    CHECK(adjusted_rand_index({0, 1, 2, 3, 4}, {0, 0, 0, 0, 0}) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("independent labelings score near zero") {
    Rng rng(130);
    LabelField a(10000), b(10000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.uniform_int(3);
        b[i] = rng.uniform_int(4);
    }
    CHECK(std::abs(adjusted_rand_index(a, b)) <= 0.02);
}

TEST_CASE("cross-tabulation counts are exact") {
    const LabelField a = {0, 0, 1, 1, 2};
    const LabelField b = {0, 0, 1, 2, 1};
    const Eigen::MatrixXi table = contingency_table(a, b);
    REQUIRE(table.rows() == 3);
    REQUIRE(table.cols() == 3);
    CHECK(table(0, 0) == 2);
    CHECK(table(1, 1) == 1);
    CHECK(table(1, 2) == 1);
    CHECK(table(2, 1) == 1);
    CHECK(table.sum() == 5);
    CHECK(table(0, 1) == 0);
}

TEST_CASE("the adjusted index matches a hand computation") {
    // a = {0,0,0,1,1,1}, b = {0,0,1,1,1,1}: sum_cells = C(2,2)+C(1,2)+C(3,2)
    // = 1 + 0 + 3 = 4, rows = 2 C(3,2) = 6, cols = C(2,2) + C(4,2) = 7,
    // expected = 42/15, max = 6.5.
    const LabelField a = {0, 0, 0, 1, 1, 1};
    const LabelField b = {0, 0, 1, 1, 1, 1};
    const double expected = 42.0 / 15.0;
    const double want = (4.0 - expected) / (6.5 - expected);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("invalid comparisons are rejected") {
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0, 1, 1}), ValidationError);
    CHECK_THROWS_AS(adjusted_rand_index({}, {}), ValidationError);
    CHECK_THROWS_AS(adjusted_rand_index({0, -1}, {0, 1}), ValidationError);
    CHECK_THROWS_AS(contingency_table({0, 1}, {0, -2}), ValidationError);
}
