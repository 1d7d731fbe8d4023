#pragma once

#include "oselab/generator.hpp"

namespace oselab {

/// Operator carried as mat * exp(log_scale). Long products renormalize every
/// few factors so horizons of several thousand steps with order-one exponents
/// stay inside double range.
struct ScaledOperator {
    Matrix mat;
    double log_scale = 0.0;

    static ScaledOperator identity(int dim) { return {Matrix::Identity(dim, dim), 0.0}; }

    void apply_left(const Matrix& a, int& counter);
    void renormalize();
    double log_norm(NormKind k) const;
    /// Dense matrix; throws SeriesDivergence if the scale cannot be represented.
    Matrix dense() const;
};

/// A(x, n): the n-step cocycle operator. Negative n needs an invertible
/// generator over an invertible base.
Matrix cocycle(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x, long n);
ScaledOperator cocycle_scaled(const CocycleGenerator& gen, const BaseSystem& system,
                              const BasePoint& x, long n);

struct GrowthRates {
    double lambda_hat = 0.0;
    double alpha_hat = 0.0;
    long horizon = 0;
    bool alpha_is_floor = false;
};

inline constexpr double kAlphaFloor = -1e6;  // stands in for -infinity

/// Finite-horizon growth rate of ||A(x,N)|| and of the tail-block surrogate
/// for the measure of non-compactness.
GrowthRates growth_rates(const CocycleGenerator& gen, const BaseSystem& system, const BasePoint& x,
                         long horizon, int block_size);

/// a = max(supA * L^nu, a1 + supA): a constant dominating the n-step Hölder
/// recursion a^(n+1) >= supA * a^n + a1 * (supA * L^nu)^n for all n >= 0.
double propagated_holder_constant(double a1, double sup_a, double lipschitz, double nu);

struct HolderPropagationReport {
    std::vector<long> steps;
    std::vector<double> ratios;  // ||A(x,n)-A(y,n)|| / (a^|n| d(x,y)^nu)
    double max_ratio = 0.0;
    bool pass = false;
};

/// Checks ||A(x,n) - A(y,n)|| <= a^|n| d(x,y)^nu for all |n| <= n_max
/// (negative n only for invertible cocycles).
HolderPropagationReport verify_cocycle_holder(const CocycleGenerator& gen, const BaseSystem& system,
                                              const BasePoint& x, const BasePoint& y, long n_max,
                                              double a);

}  // namespace oselab
