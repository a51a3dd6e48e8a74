#pragma once

#include "qmark/algebra.hpp"

namespace qmark {

// Hermitian matrix functions via eigendecomposition. `expm_h` accepts any
// Hermitian input; `logm_h`, `sqrtm_h` and `invm_h` require eigenvalues above
// `floor` and throw FaithfulnessError otherwise (no clamping).

Matrix expm_h(const Matrix& a);
Matrix logm_h(const Matrix& a, double floor = tol::faithful_floor);
Matrix sqrtm_h(const Matrix& a, double floor = -tol::faithful_floor);
Matrix invm_h(const Matrix& a, double floor = tol::faithful_floor);

// Hermiticity residual guard used before the solvers.
double hermiticity_residual(const Matrix& a);

// Condition number (ratio of extreme eigenvalue magnitudes) of a Hermitian matrix.
double hermitian_condition(const Matrix& a);

}  // namespace qmark
