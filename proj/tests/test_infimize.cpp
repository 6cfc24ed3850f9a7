#include "mmpt/infimize.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

using namespace mmpt;

namespace {

// Exhaustive enumeration of simple paths; calls visit(path) for every path
// starting at `start` whose steps satisfy step_ok(from, to, position).
void enumerate_paths(const MetricMeasureSpace& s, PointId start,
                     const std::function<bool(PointId, PointId, std::size_t)>& step_ok,
                     const std::function<void(const std::vector<PointId>&)>& visit) {
    std::vector<PointId> path{start};
    std::vector<char> used(s.size(), 0);
    used[start] = 1;
    std::function<void()> rec = [&]() {
        visit(path);
        for (PointId y = 0; y < s.size(); ++y) {
            if (used[y] || !step_ok(path.back(), y, path.size() - 1)) continue;
            used[y] = 1;
            path.push_back(y);
            rec();
            path.pop_back();
            used[y] = 0;
        }
    };
    rec();
}

ScalarField brute_infimal(const MetricMeasureSpace& s, const PointSet& e, const ScalarField& g, const ScalarField& h,
                          double delta, double m) {
    ScalarField best(s.size(), m);
    for (PointId p0 : e) {
        enumerate_paths(
            s, p0, [&](PointId a, PointId b, std::size_t) { return s.dist(a, b) <= delta; },
            [&](const std::vector<PointId>& p) {
                double cost = h[p0];
                for (std::size_t k = 0; k + 1 < p.size(); ++k) cost += g[p[k]] * s.dist(p[k], p[k + 1]);
                best[p.back()] = std::min(best[p.back()], cost);
            });
    }
    return best;
}

} // namespace

TEST_CASE("infimal path value examples") {
    auto s = testsupport::line(3);
    PointSet e({0});
    ScalarField ones(3, 1.0), zeros(3, 0.0);
    CHECK(infimal_path_value(s, e, ones, zeros, 1.0, 10.0) == ScalarField{0, 1, 2});
    CHECK(infimal_path_value(s, e, ones, zeros, 1.0, 1.5) == ScalarField{0, 1, 1.5});
    CHECK(infimal_path_value(s, PointSet({0, 1}), ones, zeros, 1.0, 10.0)[1] == 0.0);

    auto clusters = MetricMeasureSpace::from_coords({{0}, {0.5}, {5}, {5.5}}, {1, 1, 1, 1});
    auto f = infimal_path_value(clusters, e, ScalarField(4, 1.0), ScalarField(4, 0.0), 1.0, 7.0);
    CHECK(f[2] == 7.0);
    CHECK(f[3] == 7.0);

    auto c = infimal_path_value(clusters, PointSet({0, 1}), ScalarField(4, 2.0), ScalarField(4, 0.25), 1.0, 7.0);
    CHECK(c[0] == 0.25);
    CHECK(c[1] == 0.25);
}

TEST_CASE("infimal path value agrees with enumeration on tiny spaces") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        auto s = testsupport::random_cloud(7, seed);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 3.0);
        ScalarField g(7), h(7);
        for (auto& v : g) v = u(rng);
        for (auto& v : h) v = u(rng) * 0.2;
        PointSet e({0, 3});
        const double delta = 0.35 + 0.02 * static_cast<double>(seed);
        auto fast = infimal_path_value(s, e, g, h, delta, 5.0);
        auto slow = brute_infimal(s, e, g, h, delta, 5.0);
        for (PointId x = 0; x < 7; ++x) CHECK(std::abs(fast[x] - slow[x]) <= 1e-12);
    }
}

TEST_CASE("infimal path value: operator bound and monotonicity") {
    auto s = testsupport::random_cloud(60, 31);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    ScalarField g(60), g2(60), h(60, 0.0);
    for (std::size_t i = 0; i < 60; ++i) {
        g[i] = u(rng);
        g2[i] = g[i] + u(rng);
    }
    PointSet e({0, 1, 2});
    const double delta = 0.25;
    auto f = infimal_path_value(s, e, g, h, delta, 1e9);
    for (PointId x = 0; x < 60; ++x)
        for (PointId y = 0; y < 60; ++y)
            if (s.dist(x, y) <= delta) CHECK(std::abs(f[x] - f[y]) <= std::max(g[x], g[y]) * s.dist(x, y) + 1e-9);
    auto f2 = infimal_path_value(s, e, g2, h, delta, 1e9);
    auto f3 = infimal_path_value(s, e, g, h, 0.4, 1e9);
    for (PointId x = 0; x < 60; ++x) {
        CHECK(f[x] <= f2[x]);
        CHECK(f3[x] <= f[x]);
    }
}

TEST_CASE("shortest path witnesses and ties") {
    auto s = testsupport::grid(3, 3);
    ScalarField w(9, 1.0);
    auto sp = shortest_paths(neighbor_lists(s, 1.01), w, {{0, 0.0, 0}});
    CHECK(sp.label[8] == 4.0);
    auto walk = sp.walk_to(8);
    CHECK(walk.front() == 0);
    CHECK(walk.back() == 8);
    CHECK(walk.size() == 5);
    auto again = shortest_paths(neighbor_lists(s, 1.01), w, {{0, 0.0, 0}});
    CHECK(again.walk_to(8) == walk);
}

TEST_CASE("discrete upper gradient checker") {
    auto s = testsupport::line(6, 0.2);
    PointSet all = PointSet::all(6);
    ScalarField f{0, 0.1, 0.2, 0.3, 0.4, 0.5};

    auto big = discrete_ug_check(s, f, ScalarField(6, 100.0), 0.21, 0.1, all, all);
    CHECK(big.pass);

    // 1-Lipschitz data with g = 1: path cost is at least the distance.
    auto lip = discrete_ug_check(s, f, ScalarField(6, 1.0), 0.21, 0.1, all, all);
    CHECK(lip.pass);
    CHECK(lip.worst_slack >= -1e-12);

    ScalarField jump{0, 0, 0, 1, 1, 1};
    auto bad = discrete_ug_check(s, jump, ScalarField(6, 0.0), 0.21, 0.1, all, all);
    REQUIRE_FALSE(bad.pass);
    REQUIRE(bad.witness);
    const auto& p = *bad.witness;
    // Re-evaluate the witness independently.
    CHECK(mesh(s, p) <= 0.21);
    CHECK(diameter(s, p) > 0.1);
    CHECK(discrete_integral(s, p, ScalarField(6, 0.0)) < std::abs(jump[p.back()] - jump[p.front()]));

    auto two = testsupport::line(2, 0.5);
    auto w2 = discrete_ug_check(two, {0, 1}, {0, 0}, 0.6, 0.1, PointSet::all(2), PointSet::all(2));
    REQUIRE(w2.witness);
    CHECK(w2.witness->size() == 2);
}

TEST_CASE("index selection") {
    auto s = testsupport::line(12, 0.25);
    PointSet all = PointSet::all(12);
    SUBCASE("constant f takes consecutive indices") {
        GoodSequence seq(s, ScalarField(12, 0.0), 0.1, 2.0, 0);
        auto sel = select_indices(s, ScalarField(12, 3.0), seq, all, all, 4);
        CHECK(sel.indices == std::vector<int>{1, 2, 3, 4});
    }
    SUBCASE("step across a gap with an admissible density") {
        // f jumps by 1 between x = 1.25 and 1.5; g = 4 on the left node of the jump
        // is an upper gradient for the discrete data.
        ScalarField f(12, 0.0), g(12, 0.0);
        for (std::size_t i = 6; i < 12; ++i) f[i] = 1.0;
        g[5] = 4.0;
        GoodSequence seq(s, g, 0.1, 2.0, 0);
        auto sel = select_indices(s, f, seq, all, all, 3);
        CHECK(sel.indices.size() == 3);
        for (std::size_t n = 0; n < sel.indices.size(); ++n) {
            auto check = discrete_ug_check(s, f, seq.level(sel.indices[n]), 1.0 / sel.indices[n],
                                           std::ldexp(1.0, -static_cast<int>(n) - 1), all, all);
            CHECK(check.pass);
        }
    }
    SUBCASE("impossible request exhausts the cap") {
        auto dense = testsupport::line(12, 0.1);
        ScalarField f(12, 0.0);
        f[11] = 5.0;
        GoodSequence seq(dense, ScalarField(12, 0.0), 0.1, 2.0, 0);
        try {
            select_indices(dense, f, seq, all, all, 2, 3);
            FAIL("expected cap exhaustion");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::CapExhausted);
            CHECK(std::string(e.what()).find("n = 1") != std::string::npos);
        }
    }
}

namespace {

// Brute-force minimum of Phi over all (x,D)-admissible simple paths.
ScalarField brute_extension(const MetricMeasureSpace& s, const PointSet& c, const PointSet& v, const ScalarField& f0,
                            const AuxTriple& aux, double m) {
    ScalarField best(s.size(), m);
    for (PointId p0 : c) {
        best[p0] = std::min(best[p0], f0[p0]);
        enumerate_paths(
            s, p0,
            [&](PointId a, PointId b, std::size_t pos) {
                if (!v.contains(b)) return false;
                return pos == 0 || s.dist(a, b) <= aux.D[a];
            },
            [&](const std::vector<PointId>& p) {
                if (p.size() < 2) return;
                double phi = aux.penalty(s.dist(p[0], p[1])) + f0[p0];
                for (std::size_t k = 0; k + 1 < p.size(); ++k) phi += aux.G[p[k]] * s.dist(p[k], p[k + 1]);
                best[p.back()] = std::min(best[p.back()], phi);
            });
    }
    ScalarField out(s.size(), 0.0);
    for (PointId x : v) out[x] = best[x];
    return out;
}

} // namespace

TEST_CASE("admissible extension agrees with enumeration") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        // K near the origin, an annulus far away, free points in between.
        std::vector<std::vector<double>> coords{{0.0}, {0.05}, {0.3}, {0.4}, {0.45}, {1.3}, {1.4}, {2.5}};
        for (auto& c : coords) c[0] += 0.01 * u(rng);
        auto s = MetricMeasureSpace::from_coords(coords, std::vector<double>(8, 1.0));
        PointSet k({0, 1});
        PointSet c({0, 1, 5, 6});
        PointSet v({0, 1, 2, 3, 4, 5, 6});
        ScalarField f0(8, 0.0);
        f0[0] = u(rng);
        f0[1] = u(rng);
        ScalarField g(8);
        for (auto& x : g) x = 0.5 + u(rng);
        GoodSequence seq(s, g, 0.1, 2.0, 0, k);
        std::vector<int> idx;
        for (int n = 1; n <= required_index_depth(s, k, v); ++n) idx.push_back(n + 1);
        auto aux = build_aux_triple(s, f0, seq, k, idx);
        // Loosen the gaps so paths of several steps exist in this small cloud.
        for (PointId x = 2; x < 8; ++x) aux.D[x] = 0.12;
        const double m = std::max(f0[0], f0[1]);
        auto fast = admissible_extension_value(s, c, v, k, f0, aux, m);
        auto slow = brute_extension(s, c, v, f0, aux, m);
        for (PointId x = 0; x < 8; ++x) CHECK(std::abs(fast[x] - slow[x]) <= 1e-12);
        CHECK(fast[7] == 0.0);
        for (PointId x : k) CHECK(fast[x] <= f0[x]);
        for (PointId x : c)
            for (PointId y : v) {
                if (x == y) continue;
                CHECK(fast[y] <= f0[x] + aux.penalty(s.dist(x, y)) + aux.G[x] * s.dist(x, y) + 1e-12);
            }
    }
}

TEST_CASE("constant data extends to a constant floor") {
    auto s = testsupport::line(10, 0.1);
    PointSet k({0, 1, 2});
    PointSet all = PointSet::all(10);
    ScalarField f0(10, 0.0);
    for (PointId x : k) f0[x] = 0.7;
    GoodSequence seq(s, ScalarField(10, 1.0), 0.1, 2.0, 0, k);
    std::vector<int> idx;
    for (int n = 1; n <= required_index_depth(s, k, all); ++n) idx.push_back(n);
    auto aux = build_aux_triple(s, f0, seq, k, idx);
    auto ft = admissible_extension_value(s, k, all, k, f0, aux, 0.7);
    for (PointId x : k) CHECK(ft[x] == 0.7);
    for (PointId x = 0; x < 10; ++x) CHECK(ft[x] >= 0.7);
    for (PointId x = 0; x < 10; ++x) CHECK(ft[x] <= 0.7);
}
