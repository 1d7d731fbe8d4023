#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "oselab/errors.hpp"

namespace oselab {

/// A point of the base space. Coordinates live in the fundamental domain
/// [0,1)^m of a torus (circle = 1-d torus).
///
/// Expanding circle maps carry an exact lattice state p with x = p/Q for a
/// fixed odd prime Q: plain doubles lose one mantissa bit per doubling and
/// collapse onto 0 within ~53 steps, while the modular orbit is exact and has
/// an astronomically long period. coords holds the rounded double view.
struct BasePoint {
    Eigen::VectorXd coords;
    std::uint64_t space_tag = 0;
    std::int64_t lattice = -1;  // exact state of expanding maps; -1 when unused
};

enum class MapKind { ToralAutomorphism, CircleRotation, DoublingMap, FullShift };

/// Compact base system (X, d, f): a torus or circle with one of the built-in
/// maps, its quotient Euclidean metric, and Lipschitz data for f (and f^-1
/// when the map is invertible).
class BaseSystem {
public:
    static BaseSystem toral_automorphism(const Eigen::MatrixXi& m);
    static BaseSystem circle_rotation(double angle);
    static BaseSystem doubling_map();
    // Full shift on `symbols` letters, realized as x -> symbols*x (mod 1).
    static BaseSystem full_shift(int symbols);

    MapKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    bool invertible() const { return invertible_; }
    double lipschitz_forward() const { return lip_fwd_; }
    double lipschitz_backward() const;
    std::uint64_t space_tag() const { return tag_; }
    std::string describe() const;

    BasePoint make_point(const Eigen::VectorXd& coords) const;

    /// f^n(x); n < 0 requires an invertible map.
    BasePoint evaluate_map(const BasePoint& x, long n) const;
    BasePoint step(const BasePoint& x) const { return evaluate_map(x, 1); }

    /// Quotient (wraparound) Euclidean metric on the torus.
    double metric(const BasePoint& x, const BasePoint& y) const;

private:
    BasePoint step_once(const BasePoint& x, bool backward) const;

    MapKind kind_;
    int dim_ = 1;
    bool invertible_ = false;
    double lip_fwd_ = 1.0;
    double lip_bwd_ = 1.0;
    Eigen::MatrixXd mat_, mat_inv_;
    double angle_ = 0.0;
    int symbols_ = 2;
    std::uint64_t tag_ = 0;
};

enum class SampleScheme { OrbitBirkhoff, IidUniform };

struct SampledMeasure {
    std::vector<BasePoint> points;
    std::uint64_t seed = 0;
    SampleScheme scheme = SampleScheme::IidUniform;
};

/// Deterministic sample draws standing in for the invariant measure.
/// OrbitBirkhoff starts from a seeded random point and discards a 1000-step
/// transient before recording `count` consecutive orbit points.
SampledMeasure sample_points(const BaseSystem& system, SampleScheme scheme, int count,
                             std::uint64_t seed);

struct LipschitzEstimate {
    double forward = 1.0;
    double backward = 1.0;  // meaningful only when the system is invertible
    bool has_backward = false;

    double backward_or_throw() const {
        if (!has_backward)
            throw NegativeIterateOfNonInvertible("backward Lipschitz ratio on a non-invertible system");
        return backward;
    }
};

/// Empirical Lipschitz certificate: max observed ratio d(f x, f y)/d(x, y)
/// over the given pairs (and the backward analog for invertible systems),
/// floored at 1.
LipschitzEstimate lipschitz_estimate(const BaseSystem& system,
                                     const std::vector<std::pair<BasePoint, BasePoint>>& pairs);

}  // namespace oselab
