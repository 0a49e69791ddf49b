#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "divlab/linalg.hpp"

namespace divlab {

/// Divergences are reported in bits; +infinity is a legal value.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline bool is_infinite(double v) { return v == kInfinity; }

enum class Family { umegaki, sandwiched, petz, max, measured, measured_renyi, hypothesis };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct DivergenceSpec {
  Family family = Family::umegaki;
  double alpha = 1.0;
  double epsilon = 0.0;

  /// Throws ValidationError if alpha or epsilon is out of range for the family.
  void validate() const;
  std::string describe() const;
};

struct CertifiedValue {
  double value = 0.0;
  /// Test operator (hypothesis) or measurement basis columns (measured families).
  Matrix witness;
  /// Neyman-Pearson multiplier for the hypothesis family.
  double threshold = 0.0;
  /// Primal-dual gap, or the inner solver's Newton decrement for measured.
  double gap = 0.0;
  bool gap_known = true;
  bool converged = true;
  /// Type-II error for the hypothesis family.
  double beta = 0.0;
};

/// supp(rho) within supp(sigma), decided with tol::rank_rel.
bool support_contained(const Matrix& rho, const Matrix& sigma);

double umegaki(const Matrix& rho, const Matrix& sigma);
double sandwiched(const Matrix& rho, const Matrix& sigma, double alpha);
double petz(const Matrix& rho, const Matrix& sigma, double alpha);
double dmax(const Matrix& rho, const Matrix& sigma);

/// -log2 beta_eps with a Neyman-Pearson witness. sigma may be unnormalized.
CertifiedValue hypothesis_testing(const Matrix& rho, const Matrix& sigma, double epsilon);

struct MeasuredOptions {
  int restarts = 8;
  std::uint64_t seed = 0x6d65617375726564ULL;
  int ascent_iter = 400;
};

CertifiedValue measured_relative(const Matrix& rho, const Matrix& sigma, const MeasuredOptions& options = {});
CertifiedValue measured_renyi(const Matrix& rho, const Matrix& sigma, double alpha,
                              const MeasuredOptions& options = {});

/// Dispatches on spec.family; the witness is filled where the family has one.
CertifiedValue evaluate(const DivergenceSpec& spec, const Matrix& rho, const Matrix& sigma);
double divergence(const DivergenceSpec& spec, const Matrix& rho, const Matrix& sigma);

}  // namespace divlab
