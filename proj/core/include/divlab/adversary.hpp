#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "divlab/channel_div.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"

namespace divlab {

/// One channel use seen by the adversary: a map A -> E (x) B whose E factor
/// is handed to the adversary. For a Stinespring dilation of a CPTP map the
/// map is isometric; for a CP hypothesis it need not be trace preserving.
struct Dilation {
  QuantumMap map;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t env_dim = 0;
};

/// Stinespring dilation of the compressed Kraus form of `channel`.
Dilation dilation_of(const QuantumMap& channel);
/// Wraps a map A -> E (x) B whose output is already ordered environment first.
Dilation dilation_from_map(const QuantumMap& map, std::size_t env_dim, std::size_t out_dim);

/// Adversary maps P^i : R_{i-1} E_{i-1} -> A_i R_i with R_0 = E_0 = 1.
/// Inputs are ordered memory (x) environment, outputs channel input (x) memory.
struct Strategy {
  std::vector<QuantumMap> maps;
  std::vector<std::size_t> memory_dims;  // |R_1| .. |R_n|

  std::size_t n_rounds() const { return maps.size(); }
};

/// Throws ValidationError unless the strategy is CPTP and its dimensions chain
/// with the dilations (one per round; a single dilation is reused).
void validate_strategy(const Strategy& s, const std::vector<Dilation>& rounds);

/// State on B_1 .. B_n after alternating strategy maps and channel uses and
/// discarding R_n E_n.
Matrix rollout(const Dilation& dilation, const Strategy& strategy);
Matrix rollout(const std::vector<Dilation>& rounds, const Strategy& strategy);

/// N^{(x)n}(rho_in) for an input on A^n.
Matrix nonadaptive_rollout(const QuantumMap& channel, std::size_t n, const Matrix& rho_in);

/// Adaptive strategy that reproduces nonadaptive_rollout: P^1 prepares rho_in
/// and keeps A_2 .. A_n as memory; later rounds discard the environment.
Strategy embedding_strategy(const Matrix& rho_in, std::size_t in_dim, std::size_t n, std::size_t env_dim);

/// Flagged mixture: rollout(mixture) = lambda rollout(s1) + (1 - lambda) rollout(s2).
/// Memory is padded to the larger of the two and extended by a classical bit.
Strategy mixture_strategy(const Strategy& s1, const Strategy& s2, double lambda);

struct GameResult {
  double beta = 0.0;
  double epsilon = 0.0;
  Matrix test_operator;
  Matrix rho_n;
  Matrix sigma_n;
  /// -(1/n) log2 beta.
  double exponent = 0.0;
};

/// Neyman-Pearson game between two fixed rolled-out states.
GameResult beta_fixed(const Matrix& rho_n, const Matrix& sigma_n, double epsilon, std::size_t n = 1);

enum class AdversaryModel { nonadaptive, adaptive };

struct GameOptions {
  AdversaryModel model = AdversaryModel::nonadaptive;
  std::size_t mem_cap = 4;
  /// Riemannian ascent iterations per restart (adaptive model).
  int ascent_iter = 60;
  /// Random restarts after the embedded start (adaptive model).
  int restarts = 2;
  std::size_t kraus_limit = 8;
  std::uint64_t seed = 0x616476ULL;
};

/// Bracket on beta_{n,eps}(N || M) for the chosen adversary model.
///
/// lower: beta_eps of a concrete adversary pair, valid for the model.
/// upper: for the nonadaptive model, sup over inputs of the type-II error of a
/// test that is feasible for every nonadaptive input (certified). For the
/// adaptive model the same test is attacked by strategy ascent, so `upper` is
/// an estimate of its worst-case error from below and is not certified.
struct GameBracket {
  double lower = 0.0;
  double upper = 1.0;
  bool upper_certified = false;
  double epsilon = 0.0;
  std::size_t n = 1;
  AdversaryModel model = AdversaryModel::nonadaptive;
  /// Worst type-I error of the upper-bound test found over the model.
  double type1_worst = 0.0;
  bool type1_violation = false;
  /// lower > upper beyond tolerance (the saddle estimation did not settle).
  bool oscillation = false;
  /// Pair achieving `lower`.
  GameResult witness;
  Strategy strategy_n;
  Strategy strategy_m;
  int iterations = 0;
};

GameBracket beta_game(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n, double epsilon,
                      const GameOptions& options = {});

struct ExponentPoint {
  std::size_t n = 1;
  /// -(1/n) log2 of the bracket ends: from_upper <= exponent <= from_lower.
  double from_upper = 0.0;
  double from_lower = 0.0;
};

struct ExponentTrend {
  std::vector<ExponentPoint> points;
  RegularizationBracket bracket;
};

ExponentTrend exponent_trend(const QuantumMap& n_map, const QuantumMap& m_map, double epsilon,
                             const std::vector<std::size_t>& n_list, const GameOptions& options = {},
                             const SolverOptions& solver = {});

struct ConverseCheck {
  double dh = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  double alpha = 0.0;
};

/// D_H,eps(rho_n || sigma_n) against max over (alpha, L_alpha) of
/// n L_alpha + alpha/(alpha-1) log2(1/eps).
ConverseCheck converse_check(const Matrix& rho_n, const Matrix& sigma_n, std::size_t n, double epsilon,
                             const std::vector<std::pair<double, double>>& alpha_lower);

/// Uniformly random CPTP map with the given Kraus count.
QuantumMap random_channel(std::size_t in_dim, std::size_t out_dim, std::size_t kraus, std::uint64_t seed);

/// Random strategy with memory dims `memory_dims` against the given rounds.
Strategy random_strategy(const std::vector<Dilation>& rounds, const std::vector<std::size_t>& memory_dims,
                         std::size_t kraus, std::uint64_t seed);

}  // namespace divlab
