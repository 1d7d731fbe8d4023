#include <doctest.h>

#include "oselab/base_system.hpp"
#include "oselab/quasirandom.hpp"

using namespace oselab;

namespace {

Eigen::MatrixXi cat_matrix() {
    Eigen::MatrixXi m(2, 2);
    m << 2, 1, 1, 1;
    return m;
}

BasePoint pt(const BaseSystem& s, std::initializer_list<double> coords) {
    Eigen::VectorXd c(static_cast<long>(coords.size()));
    int i = 0;
    for (double v : coords) c[i++] = v;
    return s.make_point(c);
}

// Exact rational orbit of x -> 2x (mod 1) for fractions p/q.
long rational_doubling(long p, long q, int steps) {
    for (int i = 0; i < steps; ++i) p = (2 * p) % q;
    return p;
}

}  // namespace

TEST_CASE("identity rotation fixes every point") {
    BaseSystem rot = BaseSystem::circle_rotation(0.0);
    BasePoint x = pt(rot, {0.3725});
    BasePoint y = rot.evaluate_map(x, 5);
    CHECK(rot.metric(x, y) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("origin is fixed by the toral automorphism") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    BasePoint x = pt(cat, {0.0, 0.0});
    BasePoint y = cat.evaluate_map(x, 3);
    CHECK(y.coords.norm() == doctest::Approx(0.0));
}

TEST_CASE("doubling map matches the exact rational orbit") {
    BaseSystem dbl = BaseSystem::doubling_map();
    BasePoint x = pt(dbl, {0.3});
    BasePoint y = dbl.evaluate_map(x, 2);
    double expected = static_cast<double>(rational_doubling(3, 10, 2)) / 10.0;  // 0.2
    CHECK(y.coords[0] == doctest::Approx(expected).epsilon(1e-12));
    BasePoint z = dbl.evaluate_map(x, 11);
    double expected11 = static_cast<double>(rational_doubling(3, 10, 11)) / 10.0;
    CHECK(z.coords[0] == doctest::Approx(expected11).epsilon(1e-9));
}

TEST_CASE("negative iterate of the doubling map is rejected") {
    BaseSystem dbl = BaseSystem::doubling_map();
    CHECK_THROWS_AS(dbl.evaluate_map(pt(dbl, {0.25}), -1), NegativeIterateOfNonInvertible);
}

TEST_CASE("torus metric wraps around") {
    BaseSystem rot = BaseSystem::circle_rotation(0.1);
    CHECK(rot.metric(pt(rot, {0.1}), pt(rot, {0.9})) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(rot.metric(pt(rot, {0.25}), pt(rot, {0.25})) == 0.0);
}

TEST_CASE("metric axioms on random triples") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        BasePoint x = pt(cat, {rng.next_unit(), rng.next_unit()});
        BasePoint y = pt(cat, {rng.next_unit(), rng.next_unit()});
        BasePoint z = pt(cat, {rng.next_unit(), rng.next_unit()});
        CHECK(cat.metric(x, y) == cat.metric(y, x));
        CHECK(cat.metric(x, x) == 0.0);
        CHECK(cat.metric(x, z) <= cat.metric(x, y) + cat.metric(y, z) + 1e-12);
    }
}

TEST_CASE("iterates satisfy the semigroup law") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    BaseSystem dbl = BaseSystem::doubling_map();
    SplitMix64 rng(11);
    for (int i = 0; i < 50; ++i) {
        BasePoint x = pt(cat, {rng.next_unit(), rng.next_unit()});
        long n = static_cast<long>(rng.next_u64() % 129) - 64;
        long k = static_cast<long>(rng.next_u64() % 129) - 64;
        BasePoint a = cat.evaluate_map(x, n + k);
        BasePoint b = cat.evaluate_map(cat.evaluate_map(x, k), n);
        CHECK(cat.metric(a, b) <= 1e-12);

        BasePoint xd = pt(dbl, {rng.next_unit()});
        long nn = static_cast<long>(rng.next_u64() % 65);
        long kk = static_cast<long>(rng.next_u64() % 65);
        BasePoint ad = dbl.evaluate_map(xd, nn + kk);
        BasePoint bd = dbl.evaluate_map(dbl.evaluate_map(xd, kk), nn);
        CHECK(dbl.metric(ad, bd) <= 1e-12);
    }
}

TEST_CASE("inverse composes to the identity on sampled points") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    SplitMix64 rng(13);
    for (int i = 0; i < 100; ++i) {
        BasePoint x = pt(cat, {rng.next_unit(), rng.next_unit()});
        BasePoint y = cat.evaluate_map(cat.evaluate_map(x, 1), -1);
        CHECK(cat.metric(x, y) <= 1e-12);
    }
}

TEST_CASE("sampling is reproducible from the seed") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    auto a = sample_points(cat, SampleScheme::IidUniform, 3, 0);
    auto b = sample_points(cat, SampleScheme::IidUniform, 3, 0);
    REQUIRE(a.points.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(a.points[i].coords == b.points[i].coords);
}

TEST_CASE("orbit sampling returns an orbit prefix") {
    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    auto s = sample_points(cat, SampleScheme::OrbitBirkhoff, 4, 99);
    for (int i = 0; i + 1 < 4; ++i) {
        BasePoint next = cat.step(s.points[i]);
        CHECK(cat.metric(next, s.points[i + 1]) <= 1e-12);
    }
}

TEST_CASE("irrational rotation orbit equidistributes") {
    BaseSystem rot = BaseSystem::circle_rotation(0.6180339887498949);
    auto s = sample_points(rot, SampleScheme::OrbitBirkhoff, 100000, 5);
    std::vector<int> bins(10, 0);
    for (const auto& p : s.points) {
        int b = std::min(9, static_cast<int>(p.coords[0] * 10.0));
        ++bins[b];
    }
    for (int b = 0; b < 10; ++b) {
        CHECK(bins[b] > 9000);
        CHECK(bins[b] < 11000);
    }
}

TEST_CASE("lipschitz estimates") {
    BaseSystem rot = BaseSystem::circle_rotation(0.37);
    SplitMix64 rng(17);
    std::vector<std::pair<BasePoint, BasePoint>> pairs;
    for (int i = 0; i < 64; ++i) {
        double a = rng.next_unit();
        pairs.emplace_back(pt(rot, {a}), pt(rot, {a + 0.01 * rng.next_unit()}));
    }
    auto est = lipschitz_estimate(rot, pairs);
    CHECK(est.forward == doctest::Approx(1.0));
    CHECK(est.backward_or_throw() == doctest::Approx(1.0));

    BaseSystem cat = BaseSystem::toral_automorphism(cat_matrix());
    // Pairs separated along the expanding eigenvector reach the spectral radius.
    double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    Eigen::Vector2d dir(phi, 1.0);
    dir.normalize();
    std::vector<std::pair<BasePoint, BasePoint>> aligned;
    for (int i = 0; i < 32; ++i) {
        Eigen::VectorXd a(2);
        a << rng.next_unit(), rng.next_unit();
        Eigen::VectorXd b = a + 1e-4 * dir;
        aligned.emplace_back(cat.make_point(a), cat.make_point(b));
    }
    auto est_cat = lipschitz_estimate(cat, aligned);
    double golden = (3.0 + std::sqrt(5.0)) / 2.0;
    CHECK(est_cat.forward >= golden - 1e-6);
    CHECK(est_cat.forward <= cat.lipschitz_forward() + 1e-9);

    BaseSystem dbl = BaseSystem::doubling_map();
    std::vector<std::pair<BasePoint, BasePoint>> close;
    for (int i = 0; i < 32; ++i) {
        double a = rng.next_unit() * 0.4;
        close.emplace_back(pt(dbl, {a}), pt(dbl, {a + 1e-5}));
    }
    auto est_dbl = lipschitz_estimate(dbl, close);
    CHECK(est_dbl.forward >= 2.0 - 1e-6);
    CHECK_THROWS_AS(est_dbl.backward_or_throw(), NegativeIterateOfNonInvertible);
}

TEST_CASE("metric rejects points from another space") {
    BaseSystem rot = BaseSystem::circle_rotation(0.1);
    BaseSystem dbl = BaseSystem::doubling_map();
    CHECK_THROWS_AS(rot.metric(pt(rot, {0.1}), pt(dbl, {0.1})), SpaceMismatch);
}

TEST_CASE("full shift stretches by the symbol count") {
    BaseSystem shift = BaseSystem::full_shift(3);
    CHECK(shift.lipschitz_forward() == doctest::Approx(3.0));
    BasePoint x = pt(shift, {0.1});
    CHECK(shift.step(x).coords[0] == doctest::Approx(0.3));
}
