#include "oselab/holder.hpp"

#include <algorithm>
#include <cmath>

#include "oselab/quasirandom.hpp"

namespace oselab {

namespace {

double metric_between(const OrbitCache& cache, long ix, long iy) {
    return cache.system().metric(cache.point(ix), cache.point(iy));
}

long bracket_index(double delta, double ratio) {
    // Largest n with delta < ratio^n, i.e. (ratio)^{n+1} <= delta < ratio^n.
    if (delta <= 0.0 || delta >= 1.0 || ratio <= 0.0 || ratio >= 1.0)
        throw ConstraintViolation("bracketing needs delta and ratio in (0,1)");
    return static_cast<long>(std::floor(std::log(delta) / std::log(ratio)));
}

// Subspaces entering the level-i bounds (1-based level).
Subspace fast_sum(const OrbitCache& cache, long j, int level) {
    return cache.fast_sum_flag(j, level - 1);
}
Subspace slow_sum(const OrbitCache& cache, long j, int level) {
    return cache.slow_flag(j, level);
}

}  // namespace

HolderConstants theoretical_constants(int level, const LyapunovSpectrum& spectrum, int k_levels,
                                      double eps, double ell, double a, double nu) {
    if (level < 1 || level > k_levels) throw ConfigError("constants level out of range");
    if (k_levels >= spectrum.groups())
        throw ConfigError("constants need a spectral rate below the last kept level");
    if (ell < 1.0) throw ConstraintViolation("ell must be at least 1");
    if (nu <= 0.0 || nu > 1.0) throw ConstraintViolation("nu must lie in (0,1]");
    if (eps <= 0.0 || eps >= spectrum.min_gap() / 100.0)
        throw ConstraintViolation("eps must sit strictly inside min gap / 100");
    HolderConstants c;
    c.level = level;
    c.eps = eps;
    c.ell = ell;
    c.a = a;
    c.nu = nu;
    c.lambda_i = spectrum.exponents[level - 1];
    c.lambda_next = spectrum.exponents[level];
    c.lambda_prev = level >= 2 ? spectrum.exponents[level - 2] : 0.0;
    const double log_a = std::log(a);
    const double gap = c.lambda_i - c.lambda_next;

    if (log_a <= c.lambda_next + eps || log_a <= -c.lambda_i + 2.0 * eps ||
        a < std::exp(-c.lambda_next - 2.0 * eps))
        throw ConstraintViolation("a is too small for the level's rate window");

    c.c_minus = (4.0 + 2.0 * ell) * ell * ell * std::exp(gap - 2.0 * eps);
    c.nu_minus = nu * (gap - 2.0 * eps) / (log_a - c.lambda_next - eps);

    c.c_plus = (4.0 + 2.0 * ell) * ell * ell * std::exp(gap - 4.0 * eps);
    c.nu_plus = nu * (gap - 4.0 * eps) / (log_a + c.lambda_i - 2.0 * eps);

    if (level == 1) {
        c.degenerate_first = true;
        c.c_main = c.c_plus;
        c.nu_main = c.nu_plus;
    } else {
        const double gap_up = c.lambda_prev - c.lambda_i;
        if (log_a <= c.lambda_i + eps)
            throw ConstraintViolation("a is too small for the upper rate window");
        c.c_hat = (4.0 + 6.0 * ell) * (3.0 * ell) * (3.0 * ell) * std::exp(gap_up - 2.0 * eps);
        c.nu_hat = (gap_up - 2.0 * eps) / (log_a - c.lambda_i - eps);
        c.c_main = 6.0 * ell * c.c_plus + 2.0 * c.c_hat * (ell * c.c_plus + 1.0);
        c.nu_main = c.nu_plus * c.nu_hat;
    }
    c.omega = c.nu_main / nu;
    if (c.nu_minus <= 0.0 || c.nu_minus >= nu || c.nu_plus <= 0.0 || c.nu_plus >= nu)
        throw ConstraintViolation("closed-form exponents left (0, nu)");
    if (!c.degenerate_first && (c.nu_hat <= 0.0 || c.nu_hat >= 1.0))
        throw ConstraintViolation("graph-term exponent left (0, 1)");
    return c;
}

L5Instance synthesize_l5_instance(std::uint64_t seed, int dim, int dim_e, double alpha1,
                                  double alpha2, double ell, double perturbation) {
    if (dim < 2 || dim_e < 1 || dim_e >= dim) throw ConfigError("bad instance dimensions");
    if (!(0.0 < alpha2 && alpha2 < alpha1)) throw ConfigError("rates must satisfy 0 < alpha2 < alpha1");
    if (ell < 1.0) throw ConfigError("ell must be at least 1");
    L5Instance inst;
    inst.dim = dim;
    inst.dim_e = dim_e;
    inst.alpha1 = alpha1;
    inst.alpha2 = alpha2;
    inst.ell = ell;
    inst.a = 1.5 * alpha1;
    inst.rates.resize(dim);
    for (int j = 0; j < dim; ++j) inst.rates[j] = (j < dim_e) ? alpha2 : alpha1;

    SplitMix64 rng(seed);
    int p1 = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(dim_e));
    int p2 = dim_e + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(dim - dim_e));
    double phi = perturbation * (0.5 + rng.next_unit());
    Matrix rot = Matrix::Identity(dim, dim);
    rot(p1, p1) = std::cos(phi);
    rot(p2, p2) = std::cos(phi);
    rot(p1, p2) = -std::sin(phi);
    rot(p2, p1) = std::sin(phi);
    inst.rot = rot;

    std::vector<int> head(dim_e), tail(dim - dim_e);
    for (int j = 0; j < dim_e; ++j) head[j] = j;
    for (int j = dim_e; j < dim; ++j) tail[j - dim_e] = j;
    inst.e = Subspace::coordinate_span(dim, head, NormKind::L2);
    inst.e_prime = Subspace::coordinate_span(dim, tail, NormKind::L2);
    inst.f = Subspace(rot * inst.e.onb(), NormKind::L2);
    inst.f_prime = Subspace(rot * inst.e_prime.onb(), NormKind::L2);

    // Feasible certificate window: the dense operators span a dynamic range
    // of (alpha1/alpha2)^n, and doubles carry ~16 digits.
    inst.n_max = std::clamp(
        static_cast<int>(std::floor(24.0 * std::log(10.0) / std::log(alpha1 / alpha2))), 4, 40);

    auto diag_pow = [&](int n) {
        Vector d(dim);
        for (int j = 0; j < dim; ++j) d[j] = std::pow(inst.rates[j], n);
        return Matrix(d.asDiagonal());
    };
    // (i) on the diagonal sequence by restricted extremal stretches; (ii)
    // follows structurally: B_n (rot E) = rot (A_n E) and rot preserves
    // Euclidean norms, certified by its orthogonality residual.
    inst.hyp_contraction = (rot.transpose() * rot - Matrix::Identity(dim, dim)).norm() <= 1e-12;
    for (int n = 1; n <= inst.n_max && inst.hyp_contraction; ++n) {
        Matrix an = diag_pow(n);
        double a2n = std::pow(alpha2, n), a1n = std::pow(alpha1, n);
        auto restricted = [&](const Matrix& m, const Subspace& s, bool want_max) {
            Eigen::JacobiSVD<Matrix> svd(m * s.onb());
            const auto& sv = svd.singularValues();
            return want_max ? sv[0] : sv[sv.size() - 1];
        };
        bool ok = restricted(an, inst.e, true) <= ell * a2n * (1.0 + 1e-9) &&
                  restricted(an, inst.e_prime, false) >= a1n / ell * (1.0 - 1e-9);
        inst.hyp_contraction = inst.hyp_contraction && ok;
    }
    {
        DirectSum se({inst.e, inst.e_prime}, NormKind::L2);
        DirectSum sf({inst.f, inst.f_prime}, NormKind::L2);
        double pn = std::max({operator_norm_l2(se.projection(0)), operator_norm_l2(se.projection(1)),
                              operator_norm_l2(sf.projection(0)), operator_norm_l2(sf.projection(1))});
        inst.hyp_splitting = pn <= ell * (1.0 + 1e-9);
    }
    if (!inst.hyp_contraction || !inst.hyp_splitting)
        throw HypothesisSynthesisFailure("synthesized instance failed its own certificates");

    // delta window: smallest admissible delta at the largest workable n_star.
    // n_star = 0 is excluded: its window makes the conclusion bound exceed 2
    // and certifies nothing.
    const double r = alpha2 / inst.a;
    for (int n = inst.n_max - 1; n >= 1; --n) {
        Matrix diff = diag_pow(n) - inst.rot * diag_pow(n) * inst.rot.transpose();
        double need = operator_norm_l2(diff) / std::pow(inst.a, n);
        double lower = std::pow(r, n + 1);
        double upper = std::min(std::pow(r, n), 1.0 - 1e-12);
        double cand = std::max(lower * (1.0 + 1e-15), need * (1.0 + 1e-12));
        if (cand < upper) {
            inst.n_star = n;
            inst.delta = std::sqrt(cand * upper);
            inst.delta_bracket = true;
            inst.diff_bound = operator_norm_l2(diff) <= inst.delta * std::pow(inst.a, n);
            break;
        }
    }
    if (!inst.delta_bracket || !inst.diff_bound)
        throw HypothesisSynthesisFailure("perturbation too large for any delta window");
    return inst;
}

L5Report check_lemma_l5(const L5Instance& inst) {
    L5Report rep;
    rep.measured = hausdorff_distance(inst.e, inst.f).value;
    double kappa = std::log(inst.alpha2 / inst.alpha1) / std::log(inst.alpha2 / inst.a);
    rep.bound = (4.0 + 2.0 * inst.ell) * inst.ell * inst.ell * (inst.alpha1 / inst.alpha2) *
                std::pow(inst.delta, kappa);
    rep.slack = rep.bound - rep.measured;
    rep.pass = rep.measured <= rep.bound * (1.0 + 1e-9);

    // Cone audit at n_star: every probe of F obeys ||A_n u|| <= 2 ell alpha2^n ||u||.
    Matrix an(inst.dim, inst.dim);
    an.setZero();
    for (int j = 0; j < inst.dim; ++j) an(j, j) = std::pow(inst.rates[j], inst.n_star);
    double rhs = 2.0 * inst.ell * std::pow(inst.alpha2, inst.n_star);
    rep.cone_ok = true;
    rep.cone_worst = 0.0;
    std::vector<Vector> probes;
    for (int c = 0; c < inst.f.dim(); ++c) probes.push_back(inst.f.onb().col(c));
    for (const auto& dir : sphere_directions(inst.f.dim(), 64)) probes.push_back(inst.f.onb() * dir);
    for (const auto& u : probes) {
        double ratio = (an * u).norm() / (rhs * u.norm());
        rep.cone_worst = std::max(rep.cone_worst, ratio);
        rep.cone_ok = rep.cone_ok && ratio <= 1.0 + 1e-9;
    }
    return rep;
}

bool VerifierContext::is_member(long idx) const {
    return std::binary_search(regular.members.begin(), regular.members.end(), idx);
}

void VerifierContext::require_pair(long ix, long iy) const {
    if (!is_member(ix) || !is_member(iy))
        throw PairOutsideRegularSet("pair endpoints must lie in the regular set");
    double d = metric_between(*cache, ix, iy);
    if (d <= 0.0) throw DegeneratePair("pair points coincide");
    if (d >= 1.0) throw PairTooFar("pair distance must be below 1");
}

HolderPairReport verify_minus(const VerifierContext& ctx, long ix, long iy, int level) {
    ctx.require_pair(ix, iy);
    auto c = theoretical_constants(level, ctx.params.spectrum, ctx.k_levels, ctx.params.epsilon,
                                   ctx.ell, ctx.a, ctx.nu);
    HolderPairReport rep;
    rep.ix = ix;
    rep.iy = iy;
    rep.level = level;
    rep.base_distance = metric_between(*ctx.cache, ix, iy);
    GapValue g = hausdorff_distance(slow_sum(*ctx.cache, ix, level), slow_sum(*ctx.cache, iy, level));
    rep.measured = g.value;
    rep.resolution = g.resolution;
    rep.bound = c.c_minus * std::pow(rep.base_distance, c.nu_minus);
    double delta = std::pow(rep.base_distance, ctx.nu);
    rep.n_prime = bracket_index(delta, std::exp(c.lambda_next + c.eps) / c.a);
    rep.pass = rep.measured + rep.resolution <= rep.bound * (1.0 + 1e-6);
    return rep;
}

HolderPairReport verify_plus(const VerifierContext& ctx, long ix, long iy, int level) {
    ctx.require_pair(ix, iy);
    auto c = theoretical_constants(level, ctx.params.spectrum, ctx.k_levels, ctx.params.epsilon,
                                   ctx.ell, ctx.a, ctx.nu);
    HolderPairReport rep;
    rep.ix = ix;
    rep.iy = iy;
    rep.level = level;
    rep.base_distance = metric_between(*ctx.cache, ix, iy);
    GapValue g = hausdorff_distance(fast_sum(*ctx.cache, ix, level), fast_sum(*ctx.cache, iy, level));
    rep.measured = g.value;
    rep.resolution = g.resolution;
    rep.bound = c.c_plus * std::pow(rep.base_distance, c.nu_plus);
    double delta = std::pow(rep.base_distance, ctx.nu);
    rep.n_prime = bracket_index(delta, std::exp(-c.lambda_i + 2.0 * c.eps) / c.a);
    rep.pass = rep.measured + rep.resolution <= rep.bound * (1.0 + 1e-6);
    return rep;
}

HolderPairReport verify_graph_bounds(const VerifierContext& ctx, long ix, long iy, int level) {
    ctx.require_pair(ix, iy);
    HolderPairReport rep;
    rep.ix = ix;
    rep.iy = iy;
    rep.level = level;
    rep.base_distance = metric_between(*ctx.cache, ix, iy);
    Subspace eplus_x = fast_sum(*ctx.cache, ix, level);
    Subspace eminus_x = slow_sum(*ctx.cache, ix, level);
    Subspace eplus_y = fast_sum(*ctx.cache, iy, level);
    GapValue g = hausdorff_distance(eplus_x, eplus_y);
    rep.fast_sum_distance = g.value;
    rep.resolution = g.resolution;
    if (g.value > 1.0 / ctx.ell)
        throw PairTooFar("pair outside the graph regime: fast-sum distance above 1/ell");
    GraphOperator l = graph_operator(eplus_x, eminus_x, eplus_y);
    rep.l_norm = l.norm_value;
    rep.graph_lower = l.norm_value / (ctx.ell * (1.0 + l.norm_value));
    rep.graph_upper = 2.0 * ctx.ell * l.norm_value;
    double slack = 1e-9 + g.resolution;
    rep.graph_ok = rep.graph_lower <= g.value + slack && g.value <= rep.graph_upper + slack;
    rep.measured = g.value;
    rep.bound = rep.graph_upper;
    rep.pass = rep.graph_ok;
    return rep;
}

HolderPairReport verify_main(const VerifierContext& ctx, long ix, long iy, int level) {
    ctx.require_pair(ix, iy);
    auto c = theoretical_constants(level, ctx.params.spectrum, ctx.k_levels, ctx.params.epsilon,
                                   ctx.ell, ctx.a, ctx.nu);
    HolderPairReport rep;
    rep.ix = ix;
    rep.iy = iy;
    rep.level = level;
    rep.base_distance = metric_between(*ctx.cache, ix, iy);
    const Subspace& ei_x = ctx.cache->group(ix, level - 1);
    const Subspace& ei_y = ctx.cache->group(iy, level - 1);
    GapValue main_gap = hausdorff_distance(ei_x, ei_y);
    rep.measured = main_gap.value;
    rep.resolution = main_gap.resolution;
    rep.bound = c.c_main * std::pow(rep.base_distance, c.nu_main);

    if (c.degenerate_first) {
        // Level 1: the group equals its fast sum; the fast-sum bound applies directly.
        double delta = std::pow(rep.base_distance, ctx.nu);
        rep.n_prime = bracket_index(delta, std::exp(-c.lambda_i + 2.0 * c.eps) / c.a);
        rep.pass = rep.measured + rep.resolution <= rep.bound * (1.0 + 1e-6);
        rep.triangle_ok = true;
        rep.graph_ok = true;
        return rep;
    }

    const double d_nu = std::pow(rep.base_distance, ctx.nu);
    if (d_nu >= 0.25) throw PairTooFar("pair outside the graph-inverse regime: d^nu above 1/4");

    Subspace eplus_x = fast_sum(*ctx.cache, ix, level);
    Subspace eminus_x = slow_sum(*ctx.cache, ix, level);
    Subspace eplus_y = fast_sum(*ctx.cache, iy, level);
    GapValue fg = hausdorff_distance(eplus_x, eplus_y);
    rep.fast_sum_distance = fg.value;
    if (fg.value > 1.0 / ctx.ell)
        throw PairTooFar("pair outside the graph regime: fast-sum distance above 1/ell");
    GraphOperator l = graph_operator(eplus_x, eminus_x, eplus_y);
    rep.l_norm = l.norm_value;
    if (l.norm_value >= 0.5) throw PairTooFar("graph operator norm above 1/2");
    rep.graph_lower = l.norm_value / (ctx.ell * (1.0 + l.norm_value));
    rep.graph_upper = 2.0 * ctx.ell * l.norm_value;
    double gslack = 1e-9 + fg.resolution;
    rep.graph_ok = rep.graph_lower <= fg.value + gslack && fg.value <= rep.graph_upper + gslack;

    // Pull E_i(y) back through the graph map.
    GraphOperator lhat = neumann_inverse(l);
    Matrix gm = eplus_x.onb();
    if (eminus_x.dim() > 0) gm += eminus_x.onb() * l.matrix;
    Matrix pulled_coords = gm.colPivHouseholderQr().solve(ei_y.onb());
    Subspace pulled(eplus_x.onb() * pulled_coords, ei_x.norm());

    GapValue t2 = hausdorff_distance(pulled, ei_y);
    rep.term2_measured = t2.value;
    rep.term2_bound = 6.0 * ctx.ell * c.c_plus * std::pow(rep.base_distance, c.nu_plus);

    GapValue t1 = hausdorff_distance(ei_x, pulled);
    rep.term1_measured = t1.value;
    rep.delta_tilde = l.norm_value + 2.0 * d_nu;
    rep.n_prime = bracket_index(rep.delta_tilde, std::exp(c.lambda_i + c.eps) / c.a);
    rep.term1_bound = 2.0 * c.c_hat * (ctx.ell * c.c_plus + 1.0) *
                      std::pow(rep.base_distance, c.nu_plus * c.nu_hat);

    double max_res = std::max({main_gap.resolution, t1.resolution, t2.resolution});
    rep.triangle_ok =
        rep.measured <= rep.term1_measured + rep.term2_measured + 1e-9 + 3.0 * max_res;
    rep.pass = rep.measured + rep.resolution <= rep.bound * (1.0 + 1e-6) &&
               rep.term1_measured + t1.resolution <= rep.term1_bound * (1.0 + 1e-6) &&
               rep.term2_measured + t2.resolution <= rep.term2_bound * (1.0 + 1e-6) &&
               rep.graph_ok && rep.triangle_ok;
    return rep;
}

bool FiltrationContext::is_member(long idx) const {
    return std::binary_search(members.begin(), members.end(), idx);
}

long filtration_certificate_onset(const OrbitCache& cache, long j, int level, double eps,
                                  long horizon) {
    const auto& spec = cache.spectrum();
    if (level < 2 || level > spec.groups()) throw ConfigError("certificate level out of range");
    const double lam_i = spec.exponents[level - 1];
    const double lam_prev = spec.exponents[level - 2];
    Subspace v = cache.slow_flag(j, level - 1);
    // The slow block is invariant, so the push re-projects onto the cached
    // flag each step; the complement block is not invariant and its smallest
    // stretch is measured raw (its conditioning stays within the certificate
    // window for the gaps in play).
    Matrix mv = v.onb();
    Matrix mu = v.orthogonal_complement();
    double log_v = 0.0, log_u = 0.0;
    std::vector<bool> ok(horizon + 1, true);  // m = 0 trivially holds
    for (long m = 1; m <= horizon; ++m) {
        const Matrix& a = cache.matrix(j + m - 1);
        Subspace target = cache.slow_flag(j + m, level - 1);
        mv = target.onb() * (target.onb().transpose() * (a * mv));
        mu = a * mu;
        double sv = mv.cwiseAbs().maxCoeff();
        double su = mu.cwiseAbs().maxCoeff();
        mv /= sv;
        mu /= su;
        log_v += std::log(sv);
        log_u += std::log(su);
        Eigen::JacobiSVD<Matrix> svd_v(mv);
        Eigen::JacobiSVD<Matrix> svd_u(mu);
        double log_vmax = std::log(svd_v.singularValues()[0]) + log_v;
        double log_umin =
            std::log(std::max(svd_u.singularValues()[svd_u.singularValues().size() - 1], 1e-300)) +
            log_u;
        double mm = static_cast<double>(m);
        ok[m] = log_vmax <= mm * (lam_i + eps) + 1e-12 && log_umin >= mm * (lam_prev - eps) - 1e-12;
    }
    long onset = horizon + 1;
    for (long m = horizon; m >= 0; --m) {
        if (!ok[m]) break;
        onset = m;
    }
    return onset;
}

HolderPairReport verify_filtration_holder(const FiltrationContext& ctx, long ix, long iy,
                                          int level) {
    const auto& spec = ctx.cache->spectrum();
    if (!ctx.is_member(ix) || !ctx.is_member(iy))
        throw PairOutsideRegularSet("pair endpoints must carry the certificates");
    HolderPairReport rep;
    rep.ix = ix;
    rep.iy = iy;
    rep.level = level;
    rep.base_distance = ctx.cache->system().metric(ctx.cache->point(ix), ctx.cache->point(iy));
    if (rep.base_distance <= 0.0) throw DegeneratePair("pair points coincide");
    if (level == 1) {  // the top space is the whole ambient space at every point
        rep.pass = true;
        return rep;
    }
    const double lam_i = spec.exponents[level - 1];
    const double lam_prev = spec.exponents[level - 2];
    const double delta = std::pow(rep.base_distance, ctx.nu);
    const double ratio = std::exp(lam_i + ctx.eps) / ctx.a;
    const double threshold = std::pow(ratio, static_cast<double>(ctx.n0));
    if (!(delta < threshold)) throw PairTooFar("pair distance above the certificate window");
    GapValue g = hausdorff_distance(ctx.cache->slow_flag(ix, level - 1),
                                    ctx.cache->slow_flag(iy, level - 1));
    rep.measured = g.value;
    rep.resolution = g.resolution;
    rep.n_prime = bracket_index(delta, ratio);
    const double gap_up = lam_prev - lam_i;
    double c_i = (4.0 + 2.0 * ctx.ell) * ctx.ell * ctx.ell * std::exp(gap_up - 2.0 * ctx.eps);
    double nu_i = ctx.nu * (gap_up - 2.0 * ctx.eps) / (std::log(ctx.a) - lam_i - ctx.eps);
    rep.bound = c_i * std::pow(rep.base_distance, nu_i);
    rep.pass = rep.measured + rep.resolution <= rep.bound * (1.0 + 1e-6);
    return rep;
}

HolderFit fit_holder_exponent(const std::vector<std::pair<double, double>>& dist_and_measure) {
    std::vector<std::pair<double, double>> logs;
    int nonzero_responses = 0;
    for (const auto& [d, m] : dist_and_measure) {
        if (d <= 0.0) continue;
        if (m > 0.0) {
            ++nonzero_responses;
            logs.emplace_back(std::log(d), std::log(m));
        }
    }
    if (nonzero_responses == 0) throw DegenerateDesign("all measured distances vanish");
    if (logs.size() < 8) throw DegenerateDesign("need at least 8 usable pairs");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : logs) {
        mx += x;
        my += y;
    }
    mx /= logs.size();
    my /= logs.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : logs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 1e-18) throw DegenerateDesign("all base distances equal");
    HolderFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.pair_count = static_cast<int>(logs.size());
    return fit;
}

}  // namespace oselab
