#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "divlab/divergences.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"

namespace divlab {

struct SolverOptions {
  /// Frank-Wolfe gap target, on the objective's own scale.
  double tol = 1e-6;
  int max_iter = 5000;
  /// Random restarts tried (after the maximally mixed start) when the first
  /// run does not reach tol.
  int restarts = 4;
  std::uint64_t seed = 0x636861726e656cULL;
  double smoothing = 1e-8;
  /// Interleave quasi-Newton refinement of a factorized parameterization
  /// between Frank-Wolfe rounds.
  bool polish = true;
};

struct MinOutputResult {
  /// Divergence recomputed at the witnesses (bits): an upper bound on the infimum.
  double value = 0.0;
  /// Certified lower bound on the infimum from the Frank-Wolfe (or SDP) dual.
  double lower_bound = 0.0;
  Matrix rho_star;
  Matrix sigma_star;
  /// Final gap on the objective scale (Frank-Wolfe) or upper - lower in bits (SDP).
  double fw_gap = 0.0;
  std::size_t n_copies = 1;
  int iterations = 0;
  bool converged = false;
};

/// inf over input densities of D(N^{(x)n}(rho) || M^{(x)n}(sigma)) for
/// umegaki, sandwiched (alpha >= 1/2), petz (alpha in (0,1) or (1,2]).
MinOutputResult min_output(const QuantumMap& n_map, const QuantumMap& m_map, const DivergenceSpec& spec,
                           std::size_t n = 1, const SolverOptions& options = {});

/// Same infimum for the measured Renyi divergence, alpha in [1/2, 1].
MinOutputResult min_output_measured(const QuantumMap& n_map, const QuantumMap& m_map, double alpha,
                                    std::size_t n = 1, const SolverOptions& options = {});

/// inf over rho of D(N(rho) || M(rho)); families umegaki, sandwiched, petz, measured.
MinOutputResult min_output_same_input(const QuantumMap& n_map, const QuantumMap& m_map,
                                      const DivergenceSpec& spec, std::size_t n = 1,
                                      const SolverOptions& options = {});

/// Max-relative entropy version, solved as a semidefinite program.
MinOutputResult dmax_min_output(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n = 1);

/// alpha = 1/2: value = -2 log2 of the maximal output fidelity.
MinOutputResult fidelity_min_output(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n = 1,
                                    const SolverOptions& options = {});

struct RegularizationBracket {
  double lower = 0.0;
  double upper = 0.0;
  /// (n, (1/n) D^inf upper value) and (n, (1/n) certified measured lower value).
  std::vector<std::pair<std::size_t, double>> per_n_upper;
  std::vector<std::pair<std::size_t, double>> per_n_lower;
  Family family = Family::umegaki;
  double alpha = 1.0;
};

/// Bracket on the regularized minimum output divergence from n = 1..n_max.
/// alpha = 1 uses umegaki above and measured below; alpha in [1/2, 1)
/// uses sandwiched above and measured Renyi below.
RegularizationBracket regularization_bracket(const QuantumMap& n_map, const QuantumMap& m_map, double alpha,
                                             std::size_t n_max, const SolverOptions& options = {});

enum class BoundMode { sound, optimistic };

struct ChainRuleTerms {
  double output = 0.0;     // D(N(rho_RA) || M(sigma_RA))
  double reference = 0.0;  // D(rho_R || sigma_R)
  double bound = 0.0;      // channel term
  double margin = 0.0;     // output - reference - bound
};

/// Channel term used by chain_rule_margin for a given family. For measured
/// it is the single-copy measured minimum output divergence (certified lower
/// end); for sandwiched, the bracket's lower (sound) or upper (optimistic) end.
double chain_rule_bound(const QuantumMap& n_map, const QuantumMap& m_map, const DivergenceSpec& spec,
                        BoundMode mode = BoundMode::sound, const SolverOptions& options = {});

/// rho_RA, sigma_RA live on R (x) A with A = input of N; dim R is inferred.
ChainRuleTerms chain_rule_terms(const QuantumMap& n_map, const QuantumMap& m_map, const Matrix& rho_ra,
                                const Matrix& sigma_ra, const DivergenceSpec& spec, double bound);
double chain_rule_margin(const QuantumMap& n_map, const QuantumMap& m_map, const Matrix& rho_ra,
                         const Matrix& sigma_ra, const DivergenceSpec& spec, BoundMode mode = BoundMode::sound,
                         const SolverOptions& options = {});

/// lambda_max((N^{(x)n})^dagger(X)).
double image_support_function(const QuantumMap& n_map, std::size_t n, const Matrix& x);

struct AmortizedResult {
  double best_gap = 0.0;  // bits
  std::size_t ref_dim = 1;
  Matrix rho_ra;
  Matrix sigma_ra;
};

/// Local search for inf over rho_RA, sigma_RA with dim R <= max_ref_dim of
/// D_S,alpha(N(rho_RA) || M(sigma_RA)) - D_S,alpha(rho_R || sigma_R). Heuristic:
/// the result is an upper bound on that infimum, with no convergence claim.
AmortizedResult amortized_search(const QuantumMap& n_map, const QuantumMap& m_map, double alpha,
                                 std::size_t max_ref_dim = 4, int restarts = 4, std::uint64_t seed = 7);

}  // namespace divlab
