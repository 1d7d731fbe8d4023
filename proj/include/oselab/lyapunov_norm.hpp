#pragma once

#include <optional>

#include "oselab/oseledets.hpp"

namespace oselab {

/// Parameters of the exponentially weighted series norm. epsilon must sit
/// strictly inside gap/100; the truncation is chosen so the dropped tail is
/// below the target relative size.
struct LyapunovNormParams {
    double epsilon = 0.0;
    long truncation = 0;
    LyapunovSpectrum spectrum;
    int f_levels = 0;  // trailing exponent groups treated with the one-sided series

    static long truncation_for(double epsilon, double tail_target = 1e-9);
    void validate() const;
    /// Relative size bound of the dropped tail.
    double tail_bound() const;
};

struct LyapunovNormResult {
    double value = 0.0;
    double tail_bound = 0.0;
    bool decay_warning = false;           // series stopped decaying: wrong rate or epsilon
    std::vector<double> component_values;  // one per splitting part
};

/// Series norm ||u||_x at orbit index j. Components are extracted with the
/// splitting projections; each component is pushed along the orbit with
/// re-projection onto the cached invariant subspace (the exact-arithmetic
/// identity that keeps finite precision from leaking growth across groups).
LyapunovNormResult lyapunov_norm(const OrbitCache& cache, long j, const LyapunovNormParams& params,
                                 const Vector& u);

struct SandwichRow {
    int level = 0;
    long n = 0;
    double lower_ratio = 0.0;  // lhs / lower bound (>= 1 wanted), two-sided groups only
    double upper_ratio = 0.0;  // lhs / upper bound (<= 1 wanted)
    bool ok = false;
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    double worst_violation = 0.0;  // relative
    bool pass = false;
};

/// Push-forward norm laws: e^{n(lambda_i - eps)} ||u||_x <= ||A(x,n)u||_{f^n x}
/// <= e^{n(lambda_i + eps)} ||u||_x for two-sided groups, and the one-sided
/// upper bound on the folded tail groups. Verified for basis probes of every
/// group and 1 <= n <= n_max with the stated relative slack.
SandwichReport lyapunov_sandwich_check(const OrbitCache& cache, long j,
                                       const LyapunovNormParams& params, long n_max,
                                       double rel_slack = 1e-8);

struct DEpsilonResult {
    double value = 1.0;
    int probe_count = 0;
};

/// D_eps(x) = max over the deterministic probe set of ||u||_x / ||u||.
DEpsilonResult d_epsilon(const OrbitCache& cache, long j, const LyapunovNormParams& params,
                         int probe_count);

/// Smallest C >= 1 with  ||A(x,n)u|| <= C e^{(lambda_{i+1}+eps) n} ||u||  on
/// E_i^- and  ||A(x,n)v|| >= C^{-1} e^{(lambda_i-eps) n} ||v||  on E_i^+,
/// over 1 <= n <= horizon. Exact restricted extremal singular values under l2.
double c_function(const OrbitCache& cache, long j, int level, double epsilon, long horizon);

/// K(x) = sup over |n| <= horizon of max projection norm of the level-i
/// splitting at f^n x, discounted by e^{|n| eps}. Clamped to the cache window.
double k_function(const OrbitCache& cache, long j, int level, double epsilon, long horizon);

struct RegularityRecord {
    long index = 0;
    double c_val = 1.0;
    double k_val = 1.0;
    double max_val = 1.0;
    std::vector<double> c_per_level, k_per_level;
};

struct RegularSet {
    double ell = 1.0;
    double gamma_target = 0.0;
    std::vector<long> members;      // orbit indices
    double measure_estimate = 0.0;  // member fraction of the samples
    std::vector<RegularityRecord> records;
};

/// Filters sample indices by C(x) <= ell and K(x) <= ell (max over the given
/// levels). With `gamma` set, picks the smallest integer ell achieving
/// fraction > 1 - gamma (UnreachableGamma beyond the cap).
RegularSet build_regular_set(const OrbitCache& cache, const std::vector<long>& samples,
                             const std::vector<int>& levels, double epsilon, long horizon,
                             std::optional<double> ell, std::optional<double> gamma,
                             double ell_cap = 1 << 20);

}  // namespace oselab
