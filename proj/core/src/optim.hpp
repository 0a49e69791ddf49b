#pragma once

// Small internal optimization helpers shared by the solvers.

#include <functional>

#include "divlab/linalg.hpp"

namespace divlab::optim {

/// f(x, grad) returns the value and, when grad is non-null, fills it.
using Objective = std::function<double(const RVector&, RVector*)>;

struct LbfgsResult {
  RVector x;
  double value = 0.0;
  int iterations = 0;
};

/// Limited-memory BFGS with Armijo backtracking.
LbfgsResult lbfgs_minimize(const Objective& f, RVector x0, int max_iter = 300, int memory = 10,
                           double grad_tol = 1e-12);

/// Golden-section minimization of a unimodal function on [lo, hi].
double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                      double* f_min = nullptr);

/// Packs a complex matrix into a real vector (real parts then imaginary parts).
RVector pack(const Matrix& m);
Matrix unpack(const RVector& v, Eigen::Index rows, Eigen::Index cols, Eigen::Index offset = 0);

}  // namespace divlab::optim
