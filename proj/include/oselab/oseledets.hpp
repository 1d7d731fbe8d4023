#pragma once

#include <map>
#include <memory>

#include "oselab/cocycle.hpp"
#include "oselab/subspace.hpp"

namespace oselab {

struct LyapunovSpectrum {
    std::vector<double> exponents;       // grouped, strictly decreasing
    std::vector<int> multiplicities;
    std::vector<double> raw;             // per-direction finite-horizon rates, descending
    double alpha_floor = kAlphaFloor;
    long horizon = 0;
    double grouping_tol = 0.0;
    int dimension = 0;

    int groups() const { return static_cast<int>(exponents.size()); }
    /// Directions faster than group i (0-based).
    int offset(int i) const;
    /// Directions down to and including group i.
    int cumulative(int i) const { return offset(i) + multiplicities.at(i); }
    double min_gap() const;
};

/// Finite-horizon Lyapunov spectrum by QR re-orthonormalized frame pushing.
/// Exponents closer than grouping_tol merge, multiplicities add. Throws
/// HorizonTooShort when the half-horizon estimate disagrees by more than
/// 10 x grouping_tol.
LyapunovSpectrum lyapunov_spectrum(const CocycleGenerator& gen, const BaseSystem& system,
                                   const BasePoint& x, long horizon, double grouping_tol);

/// Read-only orbit cache: points, generator values, and the two flag frames
/// (forward slow flags, backward fast sums) at every orbit index of a window,
/// each with at least `margin` steps of horizon. Oseledets groups are the
/// intersections of the two flags; everything is precomputed so concurrent
/// readers need no locks.
class OrbitCache {
public:
    OrbitCache(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& anchor,
               long lo, long hi, long margin, const LyapunovSpectrum& spectrum,
               bool backward_flags);

    const CocycleGenerator& generator() const { return *gen_; }
    const BaseSystem& system() const { return *system_; }
    const LyapunovSpectrum& spectrum() const { return spectrum_; }
    long lo() const { return lo_; }
    long hi() const { return hi_; }
    long margin() const { return margin_; }
    bool has_backward_flags() const { return backward_flags_; }

    const BasePoint& point(long j) const;
    const Matrix& matrix(long j) const;          // A at f^j(anchor)
    const Matrix& matrix_inverse(long j) const;  // A^{-1}, invertible generators only

    /// V_i at index j: directions growing no faster than group i (0-based);
    /// slow_flag(j, 0) is the ambient space.
    Subspace slow_flag(long j, int level) const;
    /// E_i^+ at index j: sum of groups 0..level (0-based). Needs backward flags.
    Subspace fast_sum_flag(long j, int level) const;
    /// Oseledets group E_i (0-based), precomputed intersection.
    const Subspace& group(long j, int i) const;

    /// Norm of the projection onto E_i^+ / E_i^- along the complement.
    double fast_projection_norm(long j, int level) const;
    double slow_projection_norm(long j, int level) const;

private:
    const CocycleGenerator* gen_;
    const BaseSystem* system_;
    LyapunovSpectrum spectrum_;
    long lo_, hi_, margin_;
    long pts_lo_, pts_hi_;  // inclusive index range of points_/mats_
    bool backward_flags_;
    std::vector<BasePoint> points_;
    std::vector<Matrix> mats_, mats_inv_;
    std::vector<Matrix> v_frames_, eplus_frames_;            // for j in [lo, hi]
    std::vector<std::vector<Subspace>> groups_;              // per index, per group
    std::vector<std::vector<double>> proj_fast_, proj_slow_; // per index, per level
};

struct OseledetsSplitting {
    BasePoint at;
    long orbit_index = 0;
    std::vector<Subspace> groups;  // E_1..E_k, then F when f_levels > 0
    int k = 0;                     // number of exponent levels kept as E_i
    bool has_f = false;
    long horizon = 0;

    DirectSum direct_sum(NormKind norm) const;
};

/// Splitting at orbit index j: E_i = (forward slow flag i) meet (backward fast
/// sum i); the trailing f_levels groups fold into F.
OseledetsSplitting oseledets_splitting(const OrbitCache& cache, long j, int f_levels = 0);

/// Standalone form: grows a single-point cache with the given horizon.
OseledetsSplitting oseledets_splitting(const CocycleGenerator& gen, const BaseSystem& system,
                                       const BasePoint& x, long horizon, double grouping_tol,
                                       int f_levels = 0);

/// Fast/slow sums at index j read directly from the flag frames:
/// E_i^+ = groups 0..i, E_i^- = the rest (0-based level i).
std::pair<Subspace, Subspace> fast_slow(const OrbitCache& cache, long j, int level);

/// Fast/slow sums assembled from a splitting's stored groups (0-based level).
std::pair<Subspace, Subspace> fast_slow(const OseledetsSplitting& splitting, int level);

struct Filtration {
    BasePoint at;
    long orbit_index = 0;
    std::vector<Subspace> spaces;      // V_0 = ambient, ..., V_g; V_{g} zero-dim only implicitly
    std::vector<int> codims;           // codim of spaces[i]
    std::vector<Subspace> u_tilde;     // complements: V_{i+1} (+) u_tilde[i] = V_i
    std::vector<Subspace> u;           // U_i = sum of u_tilde below i (orthogonal complement of V_i)
    std::vector<double> proj_norm_u, proj_norm_v;
    long horizon = 0;
    bool complements_ready = false;
};

/// Forward filtration at index j from the slow flags (forward-only cocycles
/// allowed). spaces[i] has codimension offset(i).
Filtration filtration(const OrbitCache& cache, long j);

/// Standalone form over a single point.
Filtration filtration(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x,
                      long horizon, double grouping_tol);

/// Fills orthogonal complements (under the reference inner product) and their
/// projection norms.
void choose_complements(const OrbitCache& cache, Filtration& f);

struct BlockDecomposition {
    Matrix b, c, d;            // one-step blocks at the anchor index
    Matrix b_n, c_n, d_n;      // n-step blocks; c_n from the convolution recursion
    Matrix c_n_direct;         // pi_v A(x,n) pi_u, the direct cross-check
    Matrix cocycle_n;
    double sum_defect_rel = 0.0;        // || A(x,n) - (B_n + C_n + D_n) || / || A(x,n) ||
    double invariance_defect_rel = 0.0; // max one-step || pi_u A pi_v || / || A ||
    double recursion_defect_rel = 0.0;  // || C_n - pi_v A(x,n) pi_u || / || A(x,n) ||
    double min_b_gain = 0.0;            // min singular value of B restricted to U along the window
};

/// Two-block decomposition A = B + C + D at filtration level i (0-based,
/// i >= 1) over the window [j, j+n). Throws BlockSingular when B restricted to
/// the complement is numerically singular.
BlockDecomposition block_cocycle(const OrbitCache& cache, long j, int level, int n);

struct CoboundaryOracle {
    std::vector<Subspace> groups;   // exact E_i at x
    std::vector<Subspace> spaces;   // exact V_i at x (V_0 ambient)
    std::vector<double> exponents;  // log |d| per group, decreasing
    std::vector<int> multiplicities;
};

/// Closed-form ground truth for coboundary generators:
/// E_i(x) = C(x) (eigenspace of D), V_i(x) = C(x) (slow span).
CoboundaryOracle coboundary_oracle(const CocycleGenerator& gen, const BasePoint& x);

/// d-hat between A(x) E_i(x) and E_i(f x), both read from the cache.
double equivariance_defect(const OrbitCache& cache, long j, int i);

}  // namespace oselab
