#pragma once

#include <optional>
#include <vector>

#include "oselab/operator_norm.hpp"

namespace oselab {

inline constexpr double kRankTol = 1e-10;       // singular-value cutoff, relative
inline constexpr double kSubspaceEqTol = 1e-9;  // d-hat tolerance for subspace equality

/// A linear subspace given by a basis, carrying the ambient norm used for
/// gap computations. A Euclidean-orthonormal basis is kept internally as the
/// computational representation regardless of the ambient norm.
class Subspace {
public:
    Subspace(const Matrix& basis, NormKind norm);
    static Subspace zero(int ambient_dim, NormKind norm);
    static Subspace full(int ambient_dim, NormKind norm);
    static Subspace coordinate_span(int ambient_dim, const std::vector<int>& coords, NormKind norm);

    int ambient_dim() const { return ambient_; }
    int dim() const { return static_cast<int>(onb_.cols()); }
    NormKind norm() const { return norm_; }
    const Matrix& onb() const { return onb_; }
    const Matrix& raw_basis() const { return raw_; }

    /// Euclidean-orthonormal basis of the orthogonal complement.
    Matrix orthogonal_complement() const;

    bool contains(const Vector& v, double tol = kSubspaceEqTol) const;

private:
    Subspace() = default;
    int ambient_ = 0;
    NormKind norm_ = NormKind::L2;
    Matrix raw_, onb_;
};

/// Gap-type quantity together with the declared sampling resolution
/// (0 under l2, where the computation is exact).
struct GapValue {
    double value = 0.0;
    double resolution = 0.0;
};

struct GapOptions {
    int outer_samples = 4096;  // directions on the unit sphere of the sup side
    int inner_samples = 256;   // extra candidates on the unit sphere of the min side
};

/// One-sided deviation delta(E,F) = sup_{v in S_E} dist(v, F).
GapValue deviation(const Subspace& e, const Subspace& f, const GapOptions& opt = {});

/// Symmetric gap: max of the two one-sided deviations.
GapValue gap(const Subspace& e, const Subspace& f, const GapOptions& opt = {});

/// Hausdorff distance between unit spheres.
GapValue hausdorff_distance(const Subspace& e, const Subspace& f, const GapOptions& opt = {});

/// Principal angles (radians, decreasing) between equal-norm l2 subspaces.
Vector principal_angles(const Subspace& e, const Subspace& f);

/// Exact lp distance from a point to span(columns of b). Under l1/linf this
/// solves the corresponding small linear program by vertex enumeration.
double distance_to_subspace(const Vector& v, const Matrix& b, NormKind k);

/// Deterministic points on the lp unit sphere of a subspace.
std::vector<Vector> lp_unit_samples(const Subspace& s, int count);

/// Direct sum decomposition of the ambient space with a condition certificate
/// for the concatenated basis.
class DirectSum {
public:
    DirectSum(std::vector<Subspace> parts, NormKind norm);

    int ambient_dim() const { return ambient_; }
    NormKind norm() const { return norm_; }
    int count() const { return static_cast<int>(parts_.size()); }
    const Subspace& part(int i) const { return parts_.at(i); }
    double condition() const { return condition_; }

    /// Projection onto part i along the others. Throws IllConditionedSplitting
    /// when the splitting condition number exceeds 1e12.
    Matrix projection(int i) const;

private:
    std::vector<Subspace> parts_;
    int ambient_ = 0;
    NormKind norm_ = NormKind::L2;
    double condition_ = 1.0;
    Matrix stacked_;        // concatenated orthonormal part bases
    Matrix stacked_inv_;
    std::vector<int> offsets_;
};

struct ComplementationReport {
    double dhat = 0.0;            // computed distance between E and E'
    double threshold = 0.0;       // 1 / ||projection||
    bool hypothesis_holds = false;
    bool conclusion_holds = false;  // E' + F spans with full rank
    bool falsified = false;         // hypothesis held but conclusion failed
};

/// Persistence of complementation: if E (+) F is the ambient space and E' is
/// close to E (d-hat below the inverse projection norm), then E' (+) F still
/// spans. Reports both sides so a violation is visible.
ComplementationReport complementation_persists(const Subspace& e, const Subspace& e_prime,
                                               const Subspace& f, double proj_norm);

/// Linear map L : domain -> codomain whose graph {u + Lu} realizes a target
/// subspace transversal to the codomain.
struct GraphOperator {
    Subspace domain;     // E^+(x)
    Subspace codomain;   // E^-(x)
    Subspace graph_target;  // E^+(y), the subspace realized by the graph
    Matrix matrix;       // codomain-coords x domain-coords, w.r.t. the ONBs
    double norm_value = 0.0;
    double graph_defect = 0.0;  // d-hat between the reconstructed graph and the target
};

/// Extracts L from the splitting E^+(x) (+) E^-(x) so that
/// {u + Lu : u in E^+(x)} = E^+(y). Throws TransversalityFailure when the
/// projection of the target onto the domain is singular.
GraphOperator graph_operator(const Subspace& eplus_x, const Subspace& eminus_x,
                             const Subspace& eplus_y, const GapOptions& opt = {});

/// Geometric series (I + M)^-1 - I for a square operator with ||M|| < 1.
Matrix neumann_series(const Matrix& m, NormKind k);

/// Inverse graph map: returns Lhat : graph_target -> codomain with
/// (Id + L)(Id + Lhat) = Id on the graph target and
/// ||Lhat|| <= ||L|| / (1 - ||L||). Requires ||L|| < 1.
GraphOperator neumann_inverse(const GraphOperator& l, const GapOptions& opt = {});

/// Numerical intersection via the null space of stacked annihilators.
/// When expected_dim >= 0 a mismatch throws IntersectionRankDeficit.
Subspace intersect_subspaces(const Subspace& a, const Subspace& b, int expected_dim = -1);

}  // namespace oselab
