#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "divlab/adversary.hpp"
#include "divlab/channel_div.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"

namespace divlab {

/// Second-order penalty of the accumulation bound for n rounds, output
/// dimension d, threshold eps and condition constant C. Logarithms are base 2.
struct CorrectionTerms {
  double m = 0.0;
  double alpha = 0.0;      // 1 - alpha = 8 d^2 log m / ((2 + C)^2 m^2)
  double correction = 0.0; // n 16 d^2 log m / m + ((2 + C)^2 m^2 / (8 d^2 log m)) log(1/eps)
  /// correction / (n^{2/3} log n log^{1/3}(1/eps)); defined for n >= 2.
  double c_prime = 0.0;
  bool c_prime_defined = false;
};

CorrectionTerms reat_correction(std::size_t n, std::size_t d, double epsilon, double c);

struct ConditionReport {
  bool holds = true;
  /// Empty when both clauses hold; otherwise names the first violated clause.
  std::string violation;
  /// log2 lambda_max(M^dagger(I)) against C/4.
  double log_trace = 0.0;
  /// Largest D_P,3/2 / m over the (m, alpha) grid, against C/4.
  double worst_rate = 0.0;
};

/// Both clauses of the accumulation condition at m in m_list, alpha in
/// {1/2, 3/4, 1}. The optimizers are approximated by the Petz min_output solver.
ConditionReport check_condition(const QuantumMap& n_map, const QuantumMap& m_map,
                                const std::vector<std::size_t>& m_list, double c,
                                const SolverOptions& options = {});

struct AccumulationOptions {
  /// n_max used for each per-step regularization bracket.
  std::size_t bracket_n = 1;
  /// Evaluate the condition; when false the report is flagged as overridden.
  bool check_condition = true;
  std::vector<std::size_t> condition_m = {2};
  SolverOptions solver;
};

struct AccumulationReport {
  std::size_t n = 0;
  double lhs = 0.0;
  bool lhs_available = true;
  double rhs_sum = 0.0;
  std::vector<double> step_lower;
  double correction = 0.0;
  double m_choice = 0.0;
  double alpha_choice = 0.0;
  double c = 0.0;
  double c_prime = 0.0;
  bool c_prime_defined = false;
  bool condition_ok = true;
  bool condition_overridden = false;
  std::string condition_violation;
  bool holds = false;
};

/// Relative entropy accumulation. u[i], v[i] are the round maps A_i -> E_i B_i
/// (CPTP and CP), p and q the strategies producing rho_n and sigma_n.
AccumulationReport reat_bound(const std::vector<Dilation>& u, const std::vector<Dilation>& v, const Strategy& p,
                              const Strategy& q, double epsilon, double c,
                              const AccumulationOptions& options = {});

/// Sequential form: n_i, m_i : A_i -> A_{i+1} (x) B_i applied to rho and sigma
/// on A_1, with out_dims[i] = |B_i|.
AccumulationReport reat_sequential(const std::vector<QuantumMap>& n_maps, const std::vector<QuantumMap>& m_maps,
                                   const std::vector<std::size_t>& out_dims, const Matrix& rho_a1,
                                   const Matrix& sigma_a1, double epsilon, double c,
                                   const AccumulationOptions& options = {});

struct SigmaAlphaWitness {
  double alpha = 1.0;
  Matrix sigma_b;
  double z = 1.0;
};

/// sigma_B = (tr_A rho_AB^alpha)^{1/alpha} / Z; dims = {d_A, d_B}.
SigmaAlphaWitness sigma_alpha(const Matrix& rho_ab, double alpha, const std::vector<std::size_t>& dims);

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// D_P,3/2(rho_AB || I_A (x) sigma_B^(alpha)) against 4 log2 d_A.
BoundCheck check_petz32_bound(const Matrix& rho_ab, double alpha, const std::vector<std::size_t>& dims);

/// || (sqrt(M) rho sqrt(M))^{1/2} sigma^{1/2} ||_1^2 against tr(M sigma).
BoundCheck check_fidelity_bound(const Matrix& rho, const Matrix& sigma, const Matrix& m);

struct HmaxWitness {
  /// log2 sup_sigma F^2(rho~, I (x) sigma) with rho~ = sqrt(M) rho sqrt(M).
  double hmax_upper = 0.0;
  /// inf_sigma D_H,eps(rho_BC || I_B (x) sigma_C).
  double dh_value = 0.0;
  Matrix test;
  Matrix sigma_c;
  bool holds = false;
};

/// dims = {d_B, d_C}; eps in [0, 1/2).
HmaxWitness hmax_witness(const Matrix& rho_bc, double epsilon, const std::vector<std::size_t>& dims);

/// H(SC) - H(C) in bits; dims = {d_S, d_C}.
double conditional_entropy(const Matrix& rho_sc, const std::vector<std::size_t>& dims);

/// -inf_sigma D(rho_SC || I_S (x) sigma_C) by Frank-Wolfe; value and certified bound.
struct VariationalEntropy {
  double value = 0.0;        // from the witness sigma (a lower estimate of H)
  double upper_bound = 0.0;  // certified
};
VariationalEntropy conditional_entropy_variational(const Matrix& rho_sc, const std::vector<std::size_t>& dims,
                                                   const SolverOptions& options = {});

/// One step Y_{i-1} -> S_i C_i Y_i of the entropy accumulation setting, output
/// ordered S (x) C (x) Y.
struct EatStep {
  QuantumMap map;
  std::size_t s_dim = 1;
  std::size_t c_dim = 1;
  std::size_t y_dim = 1;
};

struct EatReport {
  std::size_t n = 0;
  double hmax_upper = 0.0;
  double dh_value = 0.0;
  std::vector<double> step_entropy;  // sup_omega H(S_i|C_i)
  double entropy_sum = 0.0;
  double correction = 0.0;
  double c = 0.0;
  bool holds = false;
};

/// sup over omega on Y_{i-1} of H(S_i|C_i) for the traced step channel.
VariationalEntropy max_step_entropy(const EatStep& step, const SolverOptions& options = {});

EatReport eat_corollary_check(const std::vector<EatStep>& steps, const Matrix& rho_y0, double epsilon,
                              const SolverOptions& options = {});

}  // namespace divlab
