#pragma once

#include "gaitcont/core.hpp"

namespace gaitcont {

// Default cutoff for treating singular values as zero, relative to sigma_max.
inline constexpr double kPinvCutoff = 1e-10;
inline constexpr double kNullCutoff = 1e-8;

// Minimum-norm least-squares solution A^+ b through an SVD; singular values
// below rel_cutoff * sigma_max are dropped.
Vec pinv_solve(const Mat& A, const Vec& b, double rel_cutoff = kPinvCutoff);
Mat pseudo_inverse(const Mat& A, double rel_cutoff = kPinvCutoff);

int numerical_rank(const Mat& A, double rel_cutoff = kPinvCutoff);

// Orthonormal basis of the numerical null space. Columns of V whose singular
// value is below rel_cutoff * sigma_max, plus the directions A cannot see
// when it has fewer rows than columns.
Mat null_space(const Mat& A, double rel_cutoff = kNullCutoff);

// Singular values sorted descending.
Vec singular_values(const Mat& A);

}  // namespace gaitcont
