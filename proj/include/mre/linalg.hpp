#pragma once

#include "mre/core_model.hpp"

#include <Eigen/Cholesky>

#include <optional>

namespace mre::linalg {

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// |a - a'| <= rtol * max(1, max|a|) entrywise.
bool is_symmetric(const Matrix& a, double rtol = 1e-12);

/// Cholesky factor of (a + a')/2, or nullopt when a pivot is not positive.
std::optional<Eigen::LLT<Matrix>> cholesky(const Matrix& a);

bool is_positive_definite(const Matrix& a);

/// Smallest singular value > rel * largest. Zero-row matrices count as full rank.
bool has_full_row_rank(const Matrix& a, double rel = 1e-10);

/// ln det of the factored matrix.
double log_det(const Eigen::LLT<Matrix>& llt);

/// Row space membership: every row of b is a combination of rows of a (to tol).
bool rows_in_span(const Matrix& b, const Matrix& a, double tol = 1e-10);

}  // namespace mre::linalg
