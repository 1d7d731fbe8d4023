#pragma once

#include <Eigen/Dense>
#include <string>

#include "oselab/errors.hpp"

namespace oselab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Norm on the ambient space; operator norms are the induced ones.
enum class NormKind { L1, L2, Linf };

NormKind norm_from_string(const std::string& s);
std::string norm_to_string(NormKind k);

double vector_norm(const Vector& v, NormKind k);

/// Induced operator norm: largest singular value (l2), max column sum (l1),
/// max row sum (linf).
double operator_norm(const Matrix& m, NormKind k);

inline double operator_norm_l2(const Matrix& m) { return operator_norm(m, NormKind::L2); }

/// rho(A,B) = ||A - B|| + ||A^-1 - B^-1|| under the configured norm.
/// Both operators must be invertible.
double operator_metric(const Matrix& a, const Matrix& b, NormKind k);

/// Norm of T restricted to the coordinates past `block_size`, i.e. ||T P||
/// with P killing the first block_size coordinates. An upper surrogate for
/// the measure of non-compactness of a truncated sequence-space operator;
/// 0 once the block covers the whole matrix.
double kuratowski_estimate(const Matrix& t, int block_size, NormKind k);

}  // namespace oselab
