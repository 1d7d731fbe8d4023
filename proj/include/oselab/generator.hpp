#pragma once

#include <optional>
#include <vector>

#include "oselab/base_system.hpp"
#include "oselab/operator_norm.hpp"

namespace oselab {

/// Scalar field on the base space with declared Hölder data.
struct ScalarField {
    enum class Kind { Zero, Constant, Cosine, Power };
    Kind kind = Kind::Zero;
    double amplitude = 0.0;
    double phase = 0.0;
    double exponent = 1.0;  // Hölder exponent of the Power kind

    double eval(const BasePoint& x) const;
    /// c with |field(x) - field(y)| <= c * d(x,y)^nu for the ambient diameter.
    double holder_constant(double nu, int base_dim) const;
    double sup_abs() const;

    static ScalarField zero() { return {}; }
    static ScalarField constant(double v) { return {Kind::Constant, v, 0.0, 1.0}; }
    static ScalarField cosine(double amplitude, double phase = 0.0) {
        return {Kind::Cosine, amplitude, phase, 1.0};
    }
    static ScalarField power(double amplitude, double exponent, double anchor = 0.0) {
        return {Kind::Power, amplitude, anchor, exponent};
    }
};

/// Invertible conjugator field C(x): a chain of Givens rotations (orthogonal)
/// or a single elementary shear I + s(x) E_{01}.
struct ConjugatorField {
    enum class Kind { GivensChain, Shear };
    Kind kind = Kind::GivensChain;
    std::vector<ScalarField> angles;  // one per plane (j, j+1) for GivensChain
    ScalarField strength;             // Shear

    Matrix eval(int dim, const BasePoint& x) const;
    Matrix eval_inverse(int dim, const BasePoint& x) const;
    double holder_constant(double nu, int base_dim) const;
    double sup_norm(int dim, NormKind k) const;
    double sup_norm_inverse(int dim, NormKind k) const;
};

enum class GeneratorKind { Constant, Coboundary, RotationConjugated, TruncatedDiagonalCompact };

/// The operator field A(x) of the cocycle. Coboundary kinds take the form
/// A(x) = C(f x) D C(x)^{-1} with invertible conjugator C and diagonal D,
/// which pins the asymptotic data in closed form.
class CocycleGenerator {
public:
    static CocycleGenerator constant(const Matrix& m, NormKind norm, double nu = 1.0);
    static CocycleGenerator coboundary(const Vector& diagonal, const ConjugatorField& conj,
                                       NormKind norm, double nu = 1.0);
    static CocycleGenerator rotation_conjugated(const Vector& diagonal, const ScalarField& angle,
                                                NormKind norm, double nu = 1.0);
    /// Constant diagonal top * rate^j with a declared head/tail block split.
    static CocycleGenerator truncated_diagonal_compact(int dim, double top, double rate,
                                                       int head_block, NormKind norm);

    GeneratorKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    NormKind norm() const { return norm_; }
    bool invertible() const { return invertible_; }
    double holder_exponent() const { return nu_; }
    int declared_head_block() const { return head_block_; }
    bool has_conjugator() const {
        return kind_ == GeneratorKind::Coboundary || kind_ == GeneratorKind::RotationConjugated;
    }
    const Vector& diagonal() const { return diag_; }
    const Matrix& constant_matrix() const { return constant_; }
    const ConjugatorField& conjugator() const { return conj_; }

    /// A(x). Throws SingularGenerator when invertibility is required but the
    /// materialized operator is numerically singular.
    Matrix evaluate(const BaseSystem& system, const BasePoint& x) const;
    /// A(x)^{-1}, analytic for coboundary kinds.
    Matrix evaluate_inverse(const BaseSystem& system, const BasePoint& x) const;
    Matrix conjugator_at(const BasePoint& x) const;

private:
    GeneratorKind kind_ = GeneratorKind::Constant;
    int dim_ = 2;
    NormKind norm_ = NormKind::L2;
    bool invertible_ = true;
    double nu_ = 1.0;
    int head_block_ = 0;
    Matrix constant_;
    Vector diag_;
    ConjugatorField conj_;
};

/// Hölder and sup-norm data for the generator: analytic where the family has
/// a closed form, otherwise audited as 1.05 x the max sampled ratio.
struct GeneratorAnalysis {
    double sup_a = 1.0;
    double sup_a_inv = 1.0;
    double a1 = 0.0;      // Hölder constant of x -> A(x)
    double a1_inv = 0.0;  // Hölder constant of x -> A(x)^{-1}
    bool analytic = true;
};

GeneratorAnalysis analyze_generator(const CocycleGenerator& gen, const BaseSystem& system,
                                    int audit_samples = 256);

}  // namespace oselab
