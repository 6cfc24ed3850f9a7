#include "mmpt/fields.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace mmpt;

TEST_CASE("lp norm") {
    auto s = testsupport::line(2);
    CHECK(lp_norm(s, {0, 0}, 2) == 0.0);
    CHECK(lp_norm(s, {1, 1}, 1) == 2.0);
    auto one = MetricMeasureSpace::from_matrix({{0.0}}, {3.0});
    CHECK(lp_norm(one, {2.0}, 2) == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("modulus of continuity") {
    auto s = testsupport::line(3);
    PointSet k({0, 1, 2});
    ModulusOfContinuity flat(s, {4, 4, 4}, k);
    CHECK(flat(10.0) == 0.0);

    auto two = testsupport::line(2);
    ModulusOfContinuity w2(two, {0, 3}, PointSet({0, 1}));
    CHECK(w2(0.999) == 0.0);
    CHECK(w2(1.0) == 3.0);

    ModulusOfContinuity w(s, {0, 1, 5}, k);
    CHECK(w(1.0) == 4.0);
    CHECK(w(2.0) == 5.0);
    CHECK(w(0.5) == 0.0);

    auto cloud = testsupport::random_cloud(25, 2);
    ScalarField f(25);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (auto& v : f) v = nd(rng);
    PointSet kk({0, 2, 4, 6, 8, 10, 12, 14, 16});
    ModulusOfContinuity wc(cloud, f, kk);
    for (PointId x : kk)
        for (PointId y : kk) CHECK(wc(cloud.dist(x, y)) >= std::abs(f[x] - f[y]));
    double prev = 0.0;
    for (double d = 0.0; d < 2.0; d += 0.01) {
        CHECK(wc(d) >= prev);
        prev = wc(d);
    }
}

TEST_CASE("lipschitz regularization matches definition") {
    auto s = testsupport::random_cloud(15, 8);
    ScalarField g(15);
    for (std::size_t i = 0; i < 15; ++i) g[i] = static_cast<double>((i * 7) % 5);
    for (double i : {1.0, 3.0, 10.0}) {
        auto gi = lipschitz_regularization(s, g, i);
        for (PointId x = 0; x < 15; ++x) {
            double best = 1e300;
            for (PointId y = 0; y < 15; ++y) best = std::min(best, g[y] + i * s.dist(x, y));
            CHECK(gi[x] == best);
            for (PointId y = 0; y < 15; ++y) CHECK(std::abs(gi[x] - gi[y]) <= i * s.dist(x, y) + 1e-12);
        }
    }
}

namespace {

// Direct evaluation of the good-sequence formula, independent of the cached class.
ScalarField reference_level(const MetricMeasureSpace& s, const ScalarField& g, double eps, double p, PointId x0, int i) {
    double norm = 0.0;
    for (PointId x = 0; x < s.size(); ++x) norm += std::pow(g[x], p) * s.mass(x);
    norm = std::pow(norm, 1.0 / p);
    const double ep = eps / (p * std::pow(norm + 1.0, p - 1.0));
    ScalarField out(s.size());
    for (PointId x = 0; x < s.size(); ++x) {
        double gi = 1e300;
        for (PointId y = 0; y < s.size(); ++y) gi = std::min(gi, g[y] + i * s.dist(x, y));
        double add = 0.0;
        for (int n = 1; n <= i; ++n) {
            double ball_mass = 0.0;
            for (PointId y = 0; y < s.size(); ++y)
                if (s.dist(x0, y) < n + 1.0) ball_mass += s.mass(y);
            const double psi = std::max(0.0, std::min(n + 1.0 - s.dist(x0, x), 1.0));
            // Exhaustion levels hold the whole ball B(x0, n+1), so d(x, E_n) = 0 on supp psi_n.
            add += ep * std::pow(8.0, -n) / (ball_mass + 1.0) * psi;
        }
        out[x] = gi + add;
    }
    return out;
}

} // namespace

TEST_CASE("good sequence contract") {
    SUBCASE("single point") {
        auto one = MetricMeasureSpace::from_matrix({{0.0}}, {1.0});
        GoodSequence seq(one, {0.0}, 0.2, 2.0, 0);
        CHECK(seq.limit()[0] <= 0.2);
        CHECK(lp_norm(one, seq.limit(), 2.0) <= 0.2);
        CHECK(seq.limit()[0] > 0.0);
    }
    SUBCASE("zero density becomes positive") {
        auto s = testsupport::random_cloud(20, 1);
        GoodSequence seq(s, ScalarField(20, 0.0), 0.5, 2.0, 3);
        for (int i = 1; i <= 6; ++i)
            for (double v : seq.level(i)) CHECK(v > 0.0);
    }
    SUBCASE("16-point line") {
        auto s = testsupport::line(16);
        ScalarField g(16, 1.0);
        GoodSequence seq(s, g, 0.5, 2.0, 0);
        CHECK(lp_norm(s, seq.limit(), 2.0) <= lp_norm(s, g, 2.0) + 0.5 + 1e-12);
        CHECK(lp_energy(s, seq.limit(), 2.0) <= lp_energy(s, g, 2.0) + 0.5 + 1e-12);
        for (int i = 1; i <= 20; ++i) {
            auto ref = reference_level(s, g, 0.5, 2.0, 0, i);
            const auto& lvl = seq.level(i);
            for (PointId x = 0; x < 16; ++x) CHECK(lvl[x] == doctest::Approx(ref[x]).epsilon(1e-13));
        }
    }
    SUBCASE("monotone, bounded by the limit") {
        auto s = testsupport::random_cloud(24, 17, 3.0);
        ScalarField g(24);
        for (std::size_t i = 0; i < 24; ++i) g[i] = 1.0 + std::sin(static_cast<double>(i));
        PointSet k({1, 2, 3});
        GoodSequence seq(s, g, 0.3, 3.0, 0, k);
        ScalarField prev(24, 0.0);
        for (int i = 1; i <= 40; ++i) {
            const auto& lvl = seq.level(i);
            for (PointId x = 0; x < 24; ++x) {
                CHECK(lvl[x] >= prev[x]);
                CHECK(lvl[x] <= seq.limit()[x]);
            }
            prev = lvl;
        }
        for (PointId x : k) CHECK(seq.limit()[x] <= g[x] + 0.3);
        CHECK(seq.positivity_margin(PointSet::all(24)) > 0.0);
        CHECK(seq.positivity_margin(ball(s, 0, 1.0)) >= seq.eta(1) * 0.0);
    }
}

TEST_CASE("dyadic shells") {
    CHECK(dyadic_shell(0.7) == 0);
    CHECK(dyadic_shell(0.5) == 0);
    CHECK(dyadic_shell(0.25) == 1);
    CHECK(dyadic_shell(0.49) == 1);
    CHECK(dyadic_shell(0.2) == 2);
    CHECK(dyadic_shell(0.125) == 2);
    CHECK(dyadic_shell(0.1) == 3);
}

TEST_CASE("auxiliary triple") {
    // Points at distances 0, 0.3, 0.7, 0.1, 0.05 from K = {0}.
    auto s = MetricMeasureSpace::from_coords({{0}, {0.3}, {0.7}, {-0.1}, {-0.05}, {2.0}}, std::vector<double>(6, 1.0));
    PointSet k({0});
    ScalarField f{0.4, 0, 0, 0, 0, 0};
    ScalarField g(6, 1.0);
    GoodSequence seq(s, g, 0.1, 2.0, 0, k);
    std::vector<int> idx;
    for (int n = 1; n <= required_index_depth(s, k, PointSet::all(6)); ++n) idx.push_back(4 * n);
    auto aux = build_aux_triple(s, f, seq, k, idx);

    CHECK(aux.D[0] == 0.0);
    CHECK(aux.G[0] == seq.limit()[0]);
    CHECK(aux.D[2] == std::min(1.0 / idx[2], 0.125));
    CHECK(aux.D[1] == std::min(1.0 / idx[2], 0.0625));  // shell 1
    CHECK(aux.G[4] == seq.level(idx[4])[4]);            // d = 0.05, shell 4
    CHECK(aux.penalty(0.0) == 0.0);
    CHECK(aux.penalty(1.0) == 2.0 * 0.4);
    CHECK(aux.M == 0.4);

    for (const auto& c : validate_aux_triple(s, aux, seq, k)) {
        INFO(c.name << " " << c.detail);
        CHECK(c.pass);
    }
    CHECK_THROWS_AS(build_aux_triple(s, f, seq, k, {1, 2}), Error);
    CHECK_THROWS_AS(build_aux_triple(s, f, seq, PointSet{}, idx), Error);
    CHECK_THROWS_AS(build_aux_triple(s, f, seq, k, {3, 2, 5, 6, 7, 8}), Error);
}

TEST_CASE("partition of unity") {
    auto s = testsupport::grid(17, 17, 1.0 / 16.0);
    SUBCASE("empty boundary") {
        auto pu = partition_of_unity(s, PointSet{}, 4);
        for (double v : pu.psi[0]) CHECK(v == 1.0);
        for (double v : pu.psi[3]) CHECK(v == 0.0);
    }
    SUBCASE("left edge as boundary") {
        std::vector<PointId> edge;
        for (std::size_t j = 0; j < 17; ++j) edge.push_back(j * 17);
        PointSet b(edge);
        const int levels = 6;
        auto pu = partition_of_unity(s, b, levels);
        for (PointId x = 0; x < s.size(); ++x) {
            const double db = dist_to_set(s, x, b);
            if (b.contains(x)) continue;
            REQUIRE(pu.covered[x]);
            double sum = 0.0;
            int active = 0;
            for (int n = 0; n <= levels; ++n) {
                const double v = pu.psi[static_cast<std::size_t>(n)][x];
                sum += v;
                if (v != 0.0) {
                    ++active;
                    CHECK(db >= std::ldexp(1.0, -(n + 1)));
                    if (n >= 1) CHECK(db < std::ldexp(1.0, -(n - 1)));
                }
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(active <= 3);
            if (db >= 1.0) CHECK(pu.psi[0][x] == 1.0);
        }
        for (int n = 0; n <= levels; ++n) {
            double lip = 0.0;
            const auto& psi = pu.psi[static_cast<std::size_t>(n)];
            for (PointId x = 0; x < s.size(); ++x)
                for (PointId y = x + 1; y < s.size(); ++y)
                    lip = std::max(lip, std::abs(psi[x] - psi[y]) / s.dist(x, y));
            CHECK(lip <= std::max(2.0, std::pow(4.0, n)) + 1e-9);
        }
    }
}

TEST_CASE("truncation") {
    auto s = testsupport::line(10, 0.5);
    CHECK(truncate_cutoff(s, ScalarField(10, 0.0), 1.0, 0) == ScalarField(10, 0.0));
    ScalarField f{0.2, -0.7, 10, 3, -4, 0.5, 0.1, 8, 1, 0.3};
    auto fm = truncate_cutoff(s, f, 1.0, 0);
    CHECK(fm[0] == 0.2);
    CHECK(fm[1] == -0.7);
    CHECK(fm[2] == 1.0);
    for (PointId x = 0; x < 10; ++x) CHECK(std::abs(fm[x]) <= std::min(std::abs(f[x]), 1.0));
    CHECK(fm[9] == 0.0);
}

TEST_CASE("local lipschitz gradient") {
    auto s = testsupport::line(3);
    CHECK(local_lip_gradient(s, {2, 2, 2}, 1.0) == ScalarField{0, 0, 0});
    CHECK(local_lip_gradient(testsupport::line(2), {0, 1}, 1.0) == ScalarField{1, 1});
    CHECK(local_lip_gradient(s, {0, 1, 1}, 1.0) == ScalarField{1, 1, 0});
    CHECK(local_lip_gradient(s, {0, 1, 1}, 0.5) == ScalarField{0, 0, 0});

    auto cloud = testsupport::random_cloud(40, 21);
    ScalarField u(40);
    for (std::size_t i = 0; i < 40; ++i) u[i] = std::sin(3.0 * static_cast<double>(i));
    const double delta = 0.3;
    auto gu = local_lip_gradient(cloud, u, delta);
    for (PointId x = 0; x < 40; ++x)
        for (PointId y = 0; y < 40; ++y)
            if (x != y && cloud.dist(x, y) <= delta)
                CHECK(std::abs(u[x] - u[y]) <= std::max(gu[x], gu[y]) * cloud.dist(x, y) * (1 + 1e-12));
}

TEST_CASE("lipschitz regularization on a large cloud matches the direct scan") {
    auto s = testsupport::random_cloud(700, 19);
    ScalarField g(700);
    for (std::size_t i = 0; i < 700; ++i) g[i] = std::abs(std::sin(static_cast<double>(i) * 0.37)) * 5.0;
    for (double i : {2.0, 40.0, 400.0}) {
        auto gi = lipschitz_regularization(s, g, i);
        for (PointId x = 0; x < 700; x += 23) {
            double best = g[x];
            for (PointId y = 0; y < 700; ++y) best = std::min(best, g[y] + i * s.dist(x, y));
            CHECK(gi[x] == best);
        }
    }
}
