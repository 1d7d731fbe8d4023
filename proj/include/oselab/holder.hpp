#pragma once

#include "oselab/lyapunov_norm.hpp"

namespace oselab {

/// Closed-form constants of the quantitative Hölder bounds at one level
/// (1-based). Exponents are reported both for the slow-sum and fast-sum
/// bounds and for the combined per-group bound.
struct HolderConstants {
    int level = 1;
    double lambda_prev = 0.0, lambda_i = 0.0, lambda_next = 0.0;
    double eps = 0.0, ell = 1.0, a = 1.0, nu = 1.0;
    double c_minus = 0.0, nu_minus = 0.0;
    double c_plus = 0.0, nu_plus = 0.0;
    double c_hat = 0.0, nu_hat = 0.0;   // zero at the degenerate first level
    double c_main = 0.0, nu_main = 0.0;
    double omega = 0.0;                 // nu_main / nu
    bool degenerate_first = false;      // level 1: E_1 equals its fast sum
};

/// Evaluates the closed forms. Preconditions: eps below min-gap/100, a above
/// both e^{lambda_1 - eps} and the backward rate e^{-lambda_last + 2 eps}.
HolderConstants theoretical_constants(int level, const LyapunovSpectrum& spectrum, int k_levels,
                                      double eps, double ell, double a, double nu);

/// Synthetic two-splitting instance for the subspace perturbation bound:
/// A_n = diag(alpha2^n on E, alpha1^n on E'), B_n its rotation by the
/// perturbation angle, with all hypothesis certificates attached.
struct L5Instance {
    int dim = 2;
    int dim_e = 1;
    double alpha1 = 2.0, alpha2 = 0.5, ell = 1.0, a = 3.0;
    double delta = 0.0;
    int n_star = 0;
    int n_max = 40;
    Vector rates;  // per-coordinate rates of A_n
    Matrix rot;    // B_n = rot A_n rot^T
    Subspace e, e_prime, f, f_prime;
    bool hyp_contraction = false;  // (i)/(ii) certificates
    bool hyp_splitting = false;    // (iii) certificate
    bool delta_bracket = false;
    bool diff_bound = false;

    L5Instance() : e(Subspace::zero(2, NormKind::L2)), e_prime(e), f(e), f_prime(e) {}
};

L5Instance synthesize_l5_instance(std::uint64_t seed, int dim, int dim_e, double alpha1,
                                  double alpha2, double ell, double perturbation);

struct L5Report {
    double measured = 0.0;   // d-hat(E, F)
    double bound = 0.0;
    double slack = 0.0;      // bound - measured
    bool pass = false;
    bool cone_ok = false;    // probe vectors of F satisfy the cone inequality
    double cone_worst = 0.0;
};

L5Report check_lemma_l5(const L5Instance& inst);

/// Everything the pairwise verifiers need: the orbit cache, series
/// parameters, the regular set and its ell, and the propagated constant a.
struct VerifierContext {
    const OrbitCache* cache = nullptr;
    LyapunovNormParams params;
    RegularSet regular;
    double ell = 1.0;
    double a = 1.0;
    double nu = 1.0;
    int k_levels = 1;  // exponent groups kept as separate E_i

    bool is_member(long idx) const;
    void require_pair(long ix, long iy) const;
};

struct HolderPairReport {
    long ix = 0, iy = 0;
    int level = 1;
    double base_distance = 0.0;
    double measured = 0.0;
    double bound = 0.0;
    double resolution = 0.0;
    bool pass = false;
    long n_prime = 0;        // bracketing index of the delta window
    // main-pipeline intermediates
    double fast_sum_distance = 0.0;  // d-hat(E_i^+(x), E_i^+(y))
    double l_norm = 0.0;
    double graph_lower = 0.0, graph_upper = 0.0;
    bool graph_ok = true;
    double term1_measured = 0.0, term1_bound = 0.0;
    double term2_measured = 0.0, term2_bound = 0.0;
    double delta_tilde = 0.0;
    bool triangle_ok = true;
};

/// d-hat(E_i^-(x), E_i^-(y)) against its closed-form bound.
HolderPairReport verify_minus(const VerifierContext& ctx, long ix, long iy, int level);
/// d-hat(E_i^+(x), E_i^+(y)) against its closed-form bound (backward route).
HolderPairReport verify_plus(const VerifierContext& ctx, long ix, long iy, int level);

/// Two-sided comparability of the graph-operator norm with the fast-sum
/// distance; requires the pair inside the close regime d-hat <= 1/ell.
HolderPairReport verify_graph_bounds(const VerifierContext& ctx, long ix, long iy, int level);

/// Per-group bound d-hat(E_i(x), E_i(y)) <= C_i d^{nu_i} assembled through the
/// graph map: both decomposition terms are measured and checked against their
/// own bounds. Level 1 reduces to the fast-sum bound.
HolderPairReport verify_main(const VerifierContext& ctx, long ix, long iy, int level);

/// Certificates and pair bound for the forward filtration.
struct FiltrationContext {
    const OrbitCache* cache = nullptr;
    double eps = 0.0, a = 1.0, nu = 1.0, ell = 1.0;
    long n0 = 0;
    long cert_horizon = 16;
    std::vector<long> members;

    bool is_member(long idx) const;
};

/// Smallest n such that the slow-growth and complement-expansion certificates
/// hold for all m in [n, horizon] at this index (horizon+1 when none).
long filtration_certificate_onset(const OrbitCache& cache, long j, int level, double eps,
                                  long horizon);

HolderPairReport verify_filtration_holder(const FiltrationContext& ctx, long ix, long iy,
                                          int level);

struct HolderFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int pair_count = 0;
};

/// Log-log least squares of measured distances against base distances.
HolderFit fit_holder_exponent(const std::vector<std::pair<double, double>>& dist_and_measure);

}  // namespace oselab
