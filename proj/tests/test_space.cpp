#include "mmpt/io.hpp"
#include "mmpt/space.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

using namespace mmpt;

TEST_CASE("two points from coordinates") {
    auto s = MetricMeasureSpace::from_coords({{0, 0}, {1, 0}}, {1, 1});
    CHECK(s.dist(0, 1) == 1.0);
    CHECK(s.dist(1, 0) == 1.0);
    CHECK(s.dist(0, 0) == 0.0);
}

TEST_CASE("single point space") {
    auto s = MetricMeasureSpace::from_matrix({{0.0}}, {1.0});
    CHECK(s.size() == 1);
    CHECK(s.dist(0, 0) == 0.0);
    CHECK(s.diameter() == 0.0);
}

TEST_CASE("triangle violation names the triple") {
    std::vector<std::vector<double>> d{{0, 1, 5}, {1, 0, 1}, {5, 1, 0}};
    try {
        MetricMeasureSpace::from_matrix(d, {1, 1, 1});
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("(0,1,2)") != std::string::npos);
    }
}

TEST_CASE("matrix validation errors") {
    CHECK_THROWS_AS(MetricMeasureSpace::from_matrix({{0, 1}, {2, 0}}, {1, 1}), Error);
    CHECK_THROWS_AS(MetricMeasureSpace::from_matrix({{0, 1}, {1, 0}}, {1, 0}), Error);
    CHECK_THROWS_AS(MetricMeasureSpace::from_matrix({{0, 0}, {0, 0}}, {1, 1}), Error);
    CHECK_THROWS_AS(MetricMeasureSpace::from_coords({{0, 0}, {0, 0}}, {1, 1}), Error);
}

TEST_CASE("dist_to_set") {
    auto s = testsupport::line(3);
    CHECK(dist_to_set(s, 1, PointSet({1, 2})) == 0.0);
    CHECK(dist_to_set(s, 2, PointSet({0})) == 2.0);
    CHECK(std::isinf(dist_to_set(s, 0, PointSet{})));
}

TEST_CASE("dist_to_set vanishes exactly on members") {
    auto s = testsupport::random_cloud(30, 4);
    PointSet a({3, 7, 11, 20});
    for (PointId x = 0; x < s.size(); ++x) CHECK((dist_to_set(s, x, a) == 0.0) == a.contains(x));
}

TEST_CASE("balls") {
    auto g = testsupport::grid(3, 3);
    // Diagonal neighbours sit at sqrt(2) < 1.5, so r = 1.5 already holds the whole grid.
    CHECK(ball(g, 4, 1.5).size() == 9);
    CHECK(ball(g, 4, 1.2).members() == std::vector<PointId>{1, 3, 4, 5, 7});
    CHECK(ball(g, 4, 1.0).members() == std::vector<PointId>{4});
    CHECK(ball(g, 4, 1.0, true).size() == 5);
    CHECK(ball(g, 0, std::numeric_limits<double>::infinity()).size() == 9);

    auto s = testsupport::random_cloud(40, 9);
    for (double r1 = 0.05; r1 < 1.5; r1 += 0.1) {
        CHECK(is_subset(ball(s, 0, r1), ball(s, 0, r1 + 0.07)));
    }
}

TEST_CASE("exhaustion") {
    auto one = MetricMeasureSpace::from_matrix({{0.0}}, {1.0});
    auto e1 = exhaustion(one, 0, 0.3, 2.0);
    REQUIRE(e1.size() == 1);
    CHECK(e1[0].size() == 1);

    auto s = testsupport::line(10);
    auto levels = exhaustion(s, 0, 1e6, 2.0);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        CHECK(is_subset(ball(s, 0, static_cast<double>(i) + 2.0), levels[i]));
        if (i > 0) CHECK(is_subset(levels[i - 1], levels[i]));
    }
    CHECK(levels.back().size() == 10);

    // Budget 0.5 < unit mass: every point of B(x0, 2) must be kept.
    const double eps = std::pow(0.5, 0.5) * std::pow(2.0, 4.0);
    CHECK(exhaustion_budget(eps, 2.0, 1) == doctest::Approx(0.5));
    auto tight = exhaustion(s, 0, eps, 2.0);
    CHECK(is_subset(ball(s, 0, 2.0), tight[0]));

    PointSet k0({7, 9});
    auto with_k = exhaustion(s, 0, 0.1, 2.0, k0);
    for (const auto& lvl : with_k) {
        CHECK(is_subset(k0, lvl));
        double deficit = 0.0;
        for (PointId y : ball(s, 0, 2.0)) {
            if (!lvl.contains(y)) deficit += s.mass(y);
        }
        CHECK(deficit == 0.0);
    }
}

TEST_CASE("json round trip is exact") {
    auto s = testsupport::random_cloud(25, 3);
    SpaceDocument doc{s, {{"E", PointSet({0, 1})}, {"F", PointSet({5})}}};
    const std::string path = "space_roundtrip_test.json";
    save_space(path, doc);
    auto back = load_space(path);
    std::remove(path.c_str());
    REQUIRE(back.space.size() == s.size());
    for (PointId x = 0; x < s.size(); ++x) {
        CHECK(back.space.mass(x) == s.mass(x));
        for (PointId y = 0; y < s.size(); ++y) CHECK(back.space.dist(x, y) == s.dist(x, y));
    }
    CHECK(back.set("E") == doc.set("E"));
    CHECK(back.set("F").role() == SetRole::F);

    auto m = MetricMeasureSpace::from_matrix({{0, 0.1 + 0.2}, {0.1 + 0.2, 0}}, {1.0 / 3.0, 2.0});
    auto j = space_to_json({m, {}});
    auto mb = parse_space(Json::parse(j.dump()));
    CHECK(mb.space.dist(0, 1) == m.dist(0, 1));
    CHECK(mb.space.mass(0) == m.mass(0));
}

TEST_CASE("schema errors") {
    CHECK_THROWS_AS(parse_space(Json::parse(R"({"points":1,"coords":[[0]]})")), Error);
    CHECK_THROWS_AS(parse_space(Json::parse(R"({"points":1,"coords":[[0]],"dist":[[0]],"mass":[1]})")), Error);
    CHECK_THROWS_AS(parse_space(Json::parse(R"({"points":2,"coords":[[0]],"mass":[1]})")), Error);
    CHECK_THROWS_AS(parse_space(Json::parse(R"({"coords":[[0],[1]],"mass":[1,1],"sets":{"E":[4]}})")), Error);
}

TEST_CASE("connectivity radius") {
    auto s = MetricMeasureSpace::from_coords({{0}, {1}, {3}, {3.5}}, {1, 1, 1, 1});
    CHECK(connectivity_radius(s) == 2.0);
    CHECK(connectivity_radius(testsupport::line(1)) == 0.0);
}

TEST_CASE("large coordinate spaces evaluate on demand") {
    auto s = testsupport::grid(40, 40, 0.1);
    CHECK_FALSE(s.dense());
    CHECK(s.dist(0, 1) == doctest::Approx(0.1));
    auto small = testsupport::grid(10, 10);
    CHECK(small.dense());
}

TEST_CASE("spatial neighbour lists match a direct scan") {
    auto s = testsupport::random_cloud(900, 13);
    for (double delta : {0.02, 0.05, 0.3}) {
        auto fast = neighbor_lists(s, delta);
        for (PointId x = 0; x < s.size(); x += 37) {
            std::vector<std::pair<PointId, double>> slow;
            for (PointId y = 0; y < s.size(); ++y)
                if (y != x && s.dist(x, y) <= delta) slow.emplace_back(y, s.dist(x, y));
            CHECK(fast[x] == slow);
        }
    }
}
