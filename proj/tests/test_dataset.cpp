#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>

#include "gpal/dataset.hpp"

using namespace gpal;

namespace {

std::string write_temp(const std::string& content) {
    static int counter = 0;
    std::string path = "test_dataset_tmp_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_csv without label column") {
    const auto path = write_temp("a,b\n0,0\n1,1\n2,4\n");
    const auto data = load_csv(path);
    REQUIRE(data.features.rows() == 3);
    REQUIRE(data.features.cols() == 2);
    REQUIRE_FALSE(data.labels.has_value());
    CHECK(data.features(2, 1) == 4.0);
    std::remove(path.c_str());
}

TEST_CASE("load_csv splits out the label column") {
    const auto path = write_temp("a,b\n0,0\n1,1\n2,4\n");
    const auto data = load_csv(path, "b");
    REQUIRE(data.features.rows() == 3);
    REQUIRE(data.features.cols() == 1);
    REQUIRE(data.labels.has_value());
    CHECK(data.features(0, 0) == 0.0);
    CHECK(data.features(1, 0) == 1.0);
    CHECK(data.features(2, 0) == 2.0);
    CHECK((*data.labels)(0) == 0.0);
    CHECK((*data.labels)(1) == 1.0);
    CHECK((*data.labels)(2) == 4.0);
    std::remove(path.c_str());
}

TEST_CASE("load_csv reports row and column of a bad cell") {
    const auto path = write_temp("a,b\n0,0\n1,abc\n");
    REQUIRE_THROWS_WITH(load_csv(path),
                        Catch::Matchers::ContainsSubstring("row 2") &&
                            Catch::Matchers::ContainsSubstring("\"b\""));
    std::remove(path.c_str());
}

TEST_CASE("load_csv error paths") {
    CHECK_THROWS(load_csv("does_not_exist.csv"));
    const auto ragged = write_temp("a,b\n1,2\n3\n");
    CHECK_THROWS_WITH(load_csv(ragged), Catch::Matchers::ContainsSubstring("row 2"));
    std::remove(ragged.c_str());
    const auto path = write_temp("a,b\n1,2\n");
    CHECK_THROWS_WITH(load_csv(path, "c"), Catch::Matchers::ContainsSubstring("'c'"));
    std::remove(path.c_str());
}

TEST_CASE("load_csv accepts CRLF and scientific notation") {
    const auto path = write_temp("a,b\r\n1e-3,2.5E2\r\n");
    const auto data = load_csv(path);
    CHECK(data.features(0, 0) == 1e-3);
    CHECK(data.features(0, 1) == 2.5e2);
    std::remove(path.c_str());
}

TEST_CASE("draw_initial_set bounds") {
    std::mt19937_64 rng(7);
    CHECK_THROWS(draw_initial_set(5, 5, rng));
    CHECK_THROWS(draw_initial_set(5, 0, rng));
}

TEST_CASE("draw_initial_set cardinality and disjointness") {
    std::mt19937_64 rng(7);
    const auto sets = draw_initial_set(5, 1, rng);
    REQUIRE(sets.labeled.size() == 1);
    REQUIRE(sets.unlabeled.size() == 4);
    CHECK(sets.unlabeled.count(sets.labeled[0]) == 0);
}

TEST_CASE("draw_initial_set is deterministic for a fixed seed") {
    std::mt19937_64 a(12345), b(12345);
    const auto s1 = draw_initial_set(1000, 40, a);
    const auto s2 = draw_initial_set(1000, 40, b);
    CHECK(s1.labeled == s2.labeled);
    CHECK(s1.unlabeled == s2.unlabeled);
}

TEST_CASE("index sets stay disjoint with constant total under moves") {
    std::mt19937_64 rng(99);
    auto sets = draw_initial_set(50, 10, rng);
    const auto total = sets.labeled.size() + sets.unlabeled.size();
    for (int k = 0; k < 20; ++k) {
        const int idx = *sets.unlabeled.begin();
        sets.move_to_labeled(idx);
        REQUIRE(sets.labeled.size() + sets.unlabeled.size() == total);
        for (int i : sets.labeled) REQUIRE(sets.unlabeled.count(i) == 0);
    }
    CHECK_THROWS(sets.move_to_labeled(sets.labeled.front()));
}
