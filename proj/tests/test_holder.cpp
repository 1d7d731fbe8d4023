#include <doctest.h>

#include <cmath>

#include "oselab/drivers.hpp"
#include "oselab/holder.hpp"
#include "oselab/quasirandom.hpp"

using namespace oselab;

namespace {

LyapunovSpectrum three_level_spectrum() {
    LyapunovSpectrum s;
    s.dimension = 3;
    s.exponents = {std::log(4.0), 0.0, std::log(0.25)};
    s.multiplicities = {1, 1, 1};
    s.raw = s.exponents;
    s.horizon = 1024;
    s.grouping_tol = 1e-2;
    return s;
}

struct VerifyFixture {
    Scenario scenario;
    Lab lab;
    LyapunovNormParams params;
    RegularSet rs;
    VerifierContext ctx;

    explicit VerifyFixture(int count = 48) {
        std::string cfg =
            "[base]\n"
            "kind = toral_automorphism\n"
            "matrix = 2 1 ; 1 1\n"
            "[generator]\n"
            "kind = coboundary\n"
            "diagonal = 4.0 1.0 0.25\n"
            "conjugator = givens\n"
            "angle_kind = cosine\n"
            "angle_amplitude = 0.35\n"
            "norm = l2\n"
            "[sampling]\n"
            "count = " +
            std::to_string(count) +
            "\n"
            "seed = 11\n"
            "[verify]\n"
            "flag_margin = 1024\n";
        scenario = Scenario::from_config(ConfigFile::parse_text(cfg), "fixture");
        lab = build_lab(scenario, LabUse::Regularity, 1);
        params = LyapunovNormParams{lab.epsilon, lab.truncation, lab.spectrum,
                                    lab.scenario.f_levels};
        rs = build_regular_set(*lab.cache, lab.samples, {0, 1}, lab.epsilon, scenario.ck_horizon,
                               std::nullopt, 0.1);
        ctx.cache = lab.cache.get();
        ctx.params = params;
        ctx.regular = rs;
        ctx.ell = std::max(1.0, rs.ell);
        ctx.a = lab.a;
        ctx.nu = 1.0;
        ctx.k_levels = lab.k_levels;
    }
};

}  // namespace

TEST_CASE("closed-form constants") {
    LyapunovSpectrum spec;
    spec.dimension = 2;
    spec.exponents = {std::log(2.0), -std::log(2.0)};
    spec.multiplicities = {1, 1};
    spec.grouping_tol = 1e-2;
    double eps = 0.01, ell = 2.0, a = 40.0, nu = 1.0;
    auto c = theoretical_constants(1, spec, 1, eps, ell, a, nu);
    CHECK(c.c_minus ==
          doctest::Approx(8.0 * 4.0 * std::exp(2.0 * std::log(2.0) - 0.02)).epsilon(1e-12));
    CHECK(c.nu_minus == doctest::Approx((2.0 * std::log(2.0) - 0.02) /
                                        (std::log(40.0) + std::log(2.0) - 0.01))
                            .epsilon(1e-12));
    CHECK(c.degenerate_first);
    CHECK(c.c_main == c.c_plus);
    CHECK(c.nu_main == c.nu_plus);
}

TEST_CASE("constants reproduce their formulas on random draws") {
    SplitMix64 rng(7);
    for (int i = 0; i < 3; ++i) {
        LyapunovSpectrum spec = three_level_spectrum();
        double eps = rng.next_in(1e-4, spec.min_gap() / 120.0);
        double ell = rng.next_in(1.0, 4.0);
        double a = rng.next_in(30.0, 80.0);
        double nu = rng.next_in(0.4, 1.0);
        for (int level : {1, 2}) {
            auto c = theoretical_constants(level, spec, 2, eps, ell, a, nu);
            double li = spec.exponents[level - 1], ln = spec.exponents[level];
            double expect_minus = (4.0 + 2.0 * ell) * ell * ell * std::exp(li - ln - 2.0 * eps);
            CHECK(c.c_minus == doctest::Approx(expect_minus).epsilon(1e-12));
            CHECK(c.nu_minus ==
                  doctest::Approx(nu * (li - ln - 2.0 * eps) / (std::log(a) - ln - eps))
                      .epsilon(1e-12));
            double expect_plus = (4.0 + 2.0 * ell) * ell * ell * std::exp(li - ln - 4.0 * eps);
            CHECK(c.c_plus == doctest::Approx(expect_plus).epsilon(1e-12));
            CHECK(c.nu_plus ==
                  doctest::Approx(nu * (li - ln - 4.0 * eps) / (std::log(a) + li - 2.0 * eps))
                      .epsilon(1e-12));
            if (level >= 2) {
                double lp = spec.exponents[level - 2];
                double expect_hat =
                    (4.0 + 6.0 * ell) * 9.0 * ell * ell * std::exp(lp - li - 2.0 * eps);
                CHECK(c.c_hat == doctest::Approx(expect_hat).epsilon(1e-12));
                CHECK(c.nu_hat ==
                      doctest::Approx((lp - li - 2.0 * eps) / (std::log(a) - li - eps))
                          .epsilon(1e-12));
                CHECK(c.c_main == doctest::Approx(6.0 * ell * c.c_plus +
                                                  2.0 * c.c_hat * (ell * c.c_plus + 1.0))
                                      .epsilon(1e-12));
                CHECK(c.nu_main == doctest::Approx(c.nu_plus * c.nu_hat).epsilon(1e-12));
            }
            // Exponent ordering and range.
            CHECK(c.nu_minus > 0.0);
            CHECK(c.nu_minus < nu);
            CHECK(c.nu_plus > 0.0);
            CHECK(c.nu_plus < nu);
            CHECK(c.nu_main <= c.nu_plus + 1e-15);
            CHECK(c.omega < 1.0);
        }
    }
}

TEST_CASE("constants are monotone in ell and decay in a") {
    LyapunovSpectrum spec = three_level_spectrum();
    double prev_minus = 0.0, prev_main = 0.0;
    for (double ell : {1.0, 2.0, 4.0, 8.0}) {
        auto c = theoretical_constants(2, spec, 2, 1e-3, ell, 50.0, 1.0);
        CHECK(c.c_minus >= prev_minus);
        CHECK(c.c_main >= prev_main);
        prev_minus = c.c_minus;
        prev_main = c.c_main;
    }
    double prev_exp = 1.0;
    for (double a : {20.0, 40.0, 80.0, 160.0}) {
        auto c = theoretical_constants(2, spec, 2, 1e-3, 2.0, a, 1.0);
        CHECK(c.nu_minus < prev_exp);
        prev_exp = c.nu_minus;
    }
    CHECK_THROWS_AS(theoretical_constants(2, spec, 2, 1.0, 2.0, 50.0, 1.0), ConstraintViolation);
    CHECK_THROWS_AS(theoretical_constants(2, spec, 2, 1e-3, 2.0, 1.0, 1.0), ConstraintViolation);
}

TEST_CASE("synthetic perturbation instances") {
    // Zero perturbation: the two splittings coincide.
    L5Instance same = synthesize_l5_instance(5, 3, 1, 2.0, 0.5, 1.0, 0.0);
    L5Report same_rep = check_lemma_l5(same);
    CHECK(same_rep.measured <= 1e-12);
    CHECK(same_rep.pass);
    CHECK(same_rep.cone_ok);

    // Rotated two-dimensional family.
    for (double pert : {1e-4, 1e-3, 1e-2}) {
        L5Instance inst = synthesize_l5_instance(42, 2, 1, 2.0, 0.5, 1.0, pert);
        CHECK(inst.hyp_contraction);
        CHECK(inst.hyp_splitting);
        CHECK(inst.delta_bracket);
        CHECK(inst.diff_bound);
        CHECK(inst.delta < 1.0);
        L5Report rep = check_lemma_l5(inst);
        CHECK(rep.pass);
        CHECK(rep.cone_ok);
        CHECK(rep.measured > 0.0);
    }

    // 100 seeds across dimensions.
    int pass = 0;
    SplitMix64 rng(77);
    for (int i = 0; i < 100; ++i) {
        int dim = 2 + static_cast<int>(rng.next_u64() % 5);
        int dim_e = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(dim - 1));
        double alpha2 = rng.next_in(0.3, 0.8);
        double alpha1 = rng.next_in(1.5, 4.0);
        double ell = rng.next_in(1.0, 3.0);
        double pert = std::pow(10.0, rng.next_in(-5.0, -1.5));
        L5Instance inst = synthesize_l5_instance(1000 + i, dim, dim_e, alpha1, alpha2, ell, pert);
        L5Report rep = check_lemma_l5(inst);
        pass += (rep.pass && rep.cone_ok) ? 1 : 0;
    }
    CHECK(pass == 100);

    CHECK_THROWS_AS(synthesize_l5_instance(1, 2, 1, 2.0, 0.5, 1.0, 10.0),
                    HypothesisSynthesisFailure);
}

TEST_CASE("pairwise bounds on the coboundary scenario") {
    VerifyFixture fx;
    const auto& members = fx.rs.members;
    REQUIRE(members.size() >= 8);

    // Locate a usably close member pair.
    long ix = -1, iy = -1;
    double best = 2.0;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            double d = fx.ctx.cache->system().metric(fx.ctx.cache->point(members[i]),
                                                     fx.ctx.cache->point(members[j]));
            if (d > 0.0 && d < best) {
                best = d;
                ix = members[i];
                iy = members[j];
            }
        }
    REQUIRE(ix >= 0);
    REQUIRE(best < 0.25);

    for (int level : {1, 2}) {
        auto minus = verify_minus(fx.ctx, ix, iy, level);
        CHECK(minus.pass);
        CHECK(minus.measured <= minus.bound);
        auto plus = verify_plus(fx.ctx, ix, iy, level);
        CHECK(plus.pass);
        auto graph = verify_graph_bounds(fx.ctx, ix, iy, level);
        CHECK(graph.graph_ok);
        auto main = verify_main(fx.ctx, ix, iy, level);
        CHECK(main.pass);
        CHECK(main.triangle_ok);
        if (level >= 2) {
            CHECK(main.term1_measured <= main.term1_bound);
            CHECK(main.term2_measured <= main.term2_bound);
            CHECK(main.l_norm < 0.5);
        }
        // The bound is monotone in the distance for fixed constants.
        CHECK(main.bound >= 0.0);
    }

    // Pairs outside the regular set are rejected.
    long outside = -1;
    for (long j : fx.lab.samples)
        if (!fx.ctx.is_member(j)) outside = j;
    if (outside >= 0)
        CHECK_THROWS_AS(verify_minus(fx.ctx, members.front(), outside, 1), PairOutsideRegularSet);
    CHECK_THROWS_AS(verify_minus(fx.ctx, ix, ix, 1), DegeneratePair);

    // Pairs beyond the graph-inverse regime are rejected by the pipeline op.
    long fx1 = -1, fy1 = -1;
    double far = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            double d = fx.ctx.cache->system().metric(fx.ctx.cache->point(members[i]),
                                                     fx.ctx.cache->point(members[j]));
            if (d > far) {
                far = d;
                fx1 = members[i];
                fy1 = members[j];
            }
        }
    if (std::pow(far, fx.ctx.nu) >= 0.25)
        CHECK_THROWS_AS(verify_main(fx.ctx, fx1, fy1, 2), PairTooFar);
}

TEST_CASE("filtration certificates and pair bound over the doubling map") {
    std::string cfg =
        "[base]\n"
        "kind = doubling_map\n"
        "[generator]\n"
        "kind = coboundary\n"
        "diagonal = 4.0 1.0 0.25\n"
        "conjugator = givens\n"
        "angle_kind = cosine\n"
        "angle_amplitude = 0.35\n"
        "norm = l2\n"
        "[sampling]\n"
        "count = 48\n"
        "seed = 21\n";
    Scenario scenario = Scenario::from_config(ConfigFile::parse_text(cfg), "filtration-fixture");
    Lab lab = build_lab(scenario, LabUse::Filtration, 1);
    const OrbitCache& cache = *lab.cache;

    FiltrationContext fctx;
    fctx.cache = &cache;
    fctx.eps = lab.epsilon;
    fctx.a = lab.a;
    fctx.nu = 1.0;
    fctx.ell = 1.0;
    fctx.cert_horizon = 16;

    for (int level : {2, 3}) {
        std::vector<long> onsets;
        for (long j : lab.samples)
            onsets.push_back(filtration_certificate_onset(cache, j, level, lab.epsilon, 16));
        long n0 = *std::max_element(onsets.begin(), onsets.end());
        CHECK(n0 <= 16);
        fctx.n0 = n0;
        fctx.members = lab.samples;

        long ix = -1, iy = -1;
        double best = 2.0;
        for (std::size_t i = 0; i < lab.samples.size(); ++i)
            for (std::size_t j = i + 1; j < lab.samples.size(); ++j) {
                double d = cache.system().metric(cache.point(lab.samples[i]),
                                                 cache.point(lab.samples[j]));
                if (d > 0.0 && d < best) {
                    best = d;
                    ix = lab.samples[i];
                    iy = lab.samples[j];
                }
            }
        REQUIRE(ix >= 0);
        double ratio = std::exp(lab.spectrum.exponents[level - 1] + lab.epsilon) / lab.a;
        if (std::pow(best, fctx.nu) < std::pow(ratio, static_cast<double>(n0))) {
            auto rep = verify_filtration_holder(fctx, ix, iy, level);
            CHECK(rep.pass);
            CHECK(rep.n_prime >= n0);
        }
    }
    // The top space is trivially shared.
    fctx.n0 = 0;
    fctx.members = lab.samples;
    auto trivial = verify_filtration_holder(fctx, lab.samples[0], lab.samples[1], 1);
    CHECK(trivial.pass);
    CHECK(trivial.measured == 0.0);
}

TEST_CASE("log-log exponent fits") {
    // Exact power law is recovered exactly.
    std::vector<std::pair<double, double>> pts;
    for (int i = 1; i <= 20; ++i) {
        double d = 0.001 * i;
        pts.emplace_back(d, 3.0 * std::pow(d, 0.75));
    }
    auto fit = fit_holder_exponent(pts);
    CHECK(fit.exponent == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.pair_count == 20);

    // Residual orthogonality of the least-squares fit.
    double sum_r = 0.0, sum_rx = 0.0;
    for (const auto& [d, m] : pts) {
        double r = std::log(m) - (fit.intercept + fit.exponent * std::log(d));
        sum_r += r;
        sum_rx += r * std::log(d);
    }
    CHECK(std::abs(sum_r) <= 1e-9);
    CHECK(std::abs(sum_rx) <= 1e-9);

    std::vector<std::pair<double, double>> zeros(10, {0.01, 0.0});
    CHECK_THROWS_AS(fit_holder_exponent(zeros), DegenerateDesign);
    std::vector<std::pair<double, double>> flat(10, {0.01, 0.5});
    CHECK_THROWS_AS(fit_holder_exponent(flat), DegenerateDesign);
    std::vector<std::pair<double, double>> few = {{0.1, 0.2}, {0.2, 0.3}};
    CHECK_THROWS_AS(fit_holder_exponent(few), DegenerateDesign);
}
