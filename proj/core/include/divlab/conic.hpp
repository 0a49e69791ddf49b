#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "divlab/linalg.hpp"

namespace divlab::conic {

/// A Hermitian matrix variable expressed through real scalar variables:
/// X = offset + sum_k y[first + k] * basis[k].
struct HermitianVar {
  std::size_t first = 0;
  std::size_t dim = 0;
  Matrix offset;
  std::vector<Matrix> basis;

  Matrix value(const RVector& y) const;
};

/// minimize c^T y  subject to  F0_b + sum_i y_i F_{i,b} >= 0 for every block b,
/// with Hermitian coefficient blocks.
class LmiProblem {
 public:
  std::size_t add_scalars(std::size_t count);
  /// Hermitian variable; with trace_one the trace is fixed to 1.
  HermitianVar add_hermitian(std::size_t dim, bool trace_one);
  /// Unconstrained complex dim x dim matrix, returned as two Hermitian-free
  /// coordinate lists: value = sum_k y_k basis[k] with complex basis entries.
  HermitianVar add_complex(std::size_t dim);

  std::size_t add_block(std::size_t dim);
  void add_coefficient(std::size_t block, std::size_t var, const Matrix& coeff);
  void add_constant(std::size_t block, const Matrix& coeff);
  /// block += L(X) for a linear map L and Hermitian (or complex) variable X.
  void add_linear(std::size_t block, const HermitianVar& x,
                  const std::function<Matrix(const Matrix&)>& map);
  void set_cost(std::size_t var, double c);
  void add_cost(const HermitianVar& x, const Matrix& weight);

  std::size_t num_variables() const { return cost_.size(); }
  std::size_t num_blocks() const { return block_dims_.size(); }
  std::size_t block_dim(std::size_t b) const { return block_dims_[b]; }

  struct Term {
    std::size_t block;
    Matrix coeff;
  };
  const std::vector<std::vector<Term>>& terms() const { return terms_; }
  const std::vector<Matrix>& constants() const { return constants_; }
  const std::vector<double>& cost() const { return cost_; }
  double cost_offset() const { return cost_offset_; }

 private:
  std::vector<double> cost_;
  double cost_offset_ = 0.0;
  std::vector<std::size_t> block_dims_;
  std::vector<Matrix> constants_;
  std::vector<std::vector<Term>> terms_;
};

struct Options {
  int max_iter = 120;
  double tol = 1e-10;
  /// Mehrotra predictor-corrector; when false a fixed centering sigma is used.
  bool mehrotra = true;
  double fixed_sigma = 0.2;
};

struct Solution {
  RVector y;
  /// Slack blocks S_b = F0_b + sum y_i F_{i,b}.
  std::vector<Matrix> slack;
  /// Dual blocks W_b >= 0 with sum_b tr(F_{i,b} W_b) = c_i.
  std::vector<Matrix> dual;
  double primal_objective = 0.0;  // c^T y (+ offset)
  double dual_objective = 0.0;    // -sum_b tr(F0_b W_b) (+ offset), a lower bound
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  bool converged = false;
};

Solution solve(const LmiProblem& problem, const Options& options = {});

}  // namespace divlab::conic
