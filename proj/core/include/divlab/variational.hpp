#pragma once

#include <cstdint>
#include <optional>

#include "divlab/linalg.hpp"

namespace divlab {

/// Concave program over omega > 0 whose optimum is a measured divergence:
///
///   alpha = 1        sup  tr[A log w] + 1 - tr[B w]                 (nats)
///   alpha in [1/2,1) inf  alpha tr[A w^b] + (1 - alpha) tr[B w]      (Q)
///   alpha > 1        sup  alpha tr[A w^b] - (alpha - 1) tr[B w]      (Q)
///
/// with b = (alpha - 1) / alpha. Solved by damped Newton with
/// Levenberg-Marquardt regularization.
struct VariationalOptions {
  int max_iter = 100;
  double tol = 1e-13;
};

struct VariationalResult {
  /// Optimal objective: nats for alpha = 1, otherwise the Q-value.
  double value = 0.0;
  Matrix omega;
  EigenSystem omega_eig;
  /// Derivatives of the optimal value with respect to A and B.
  Matrix grad_a;
  Matrix grad_b;
  /// Newton decrement at the last iterate.
  double decrement = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Requires B positive definite when alpha >= 1.
VariationalResult solve_variational(const Matrix& a, const Matrix& b, double alpha,
                                    const Matrix* warm_start = nullptr,
                                    const VariationalOptions& options = {});

/// Objective value at a fixed omega, on the same scale as VariationalResult::value.
double variational_objective(const Matrix& a, const Matrix& b, double alpha, const EigenSystem& omega);

/// Classical divergence of the outcome distributions of measuring rho and
/// sigma in the orthonormal basis given by the columns of u (bits).
double basis_divergence(const Matrix& rho, const Matrix& sigma, double alpha, const Matrix& u);

struct BasisAscentResult {
  double value = 0.0;  // bits
  Matrix basis;
  int iterations = 0;
};

/// Riemannian ascent of basis_divergence over the unitary group.
BasisAscentResult basis_ascent(const Matrix& rho, const Matrix& sigma, double alpha, const Matrix& start,
                               int max_iter = 400);

/// Classical Renyi divergence (alpha != 1) or KL divergence (alpha == 1), bits.
double classical_divergence(const RVector& p, const RVector& q, double alpha);

}  // namespace divlab
