#pragma once

#include "cfm/block_ops.hpp"

namespace cfm {

/// -logdet(theta) + trace(theta * sample_cov). Throws on non-PD theta.
double neg_log_likelihood(const Matrix& theta, const Matrix& sample_cov);

/// argmin_Z  -logdet Z + <sample_cov, Z> + (rho/2) ||Z - m||_F^2.
/// Eigenvalues d of (rho m - sample_cov) map to (d + sqrt(d^2 + 4 rho)) / (2 rho).
Matrix prox_logdet(const Matrix& m, const Matrix& sample_cov, double rho);

/// Singular value soft-thresholding at level t.
Matrix prox_nuclear(const Matrix& k, double t);

/// argmin_{L >= 0}  t tr(L) + (1/2) ||L - l||_F^2: eigenvalue shrink + clamp.
Matrix prox_trace_psd(const Matrix& l, double t);

}  // namespace cfm
