#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "divlab/linalg.hpp"

namespace divlab {

/// Throws unless rho is Hermitian PSD with unit trace (or trace <= 1 when
/// subnormalized is set).
void require_density(const Matrix& rho, std::string_view what, bool subnormalized = false);
bool is_density(const Matrix& rho);

/// Maximum number of Kraus operators a map may carry; tracks dim_cap().
std::size_t kraus_cap();

/// Completely positive map in Kraus form, A_k of shape out_dim x in_dim.
class QuantumMap {
 public:
  QuantumMap() = default;
  QuantumMap(std::size_t in_dim, std::size_t out_dim, std::vector<Matrix> kraus,
             bool trace_preserving);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  const std::vector<Matrix>& kraus() const { return kraus_; }
  std::size_t kraus_count() const { return kraus_.size(); }
  bool trace_preserving() const { return trace_preserving_; }

  /// Sum_k A_k rho A_k^dagger.
  Matrix apply(const Matrix& rho) const;
  /// Sum_k A_k^dagger X A_k.
  Matrix adjoint(const Matrix& x) const;
  /// log2 lambda_max(M^dagger(I)).
  double log_boundedness() const;
  /// Same map with a minimal Kraus set obtained from the Choi matrix.
  QuantumMap compressed() const;

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::vector<Matrix> kraus_;
  bool trace_preserving_ = false;
};

/// Where a map acts inside a composite system.
struct Subsystems {
  std::vector<std::size_t> dims;
  std::size_t target = 0;
};

/// Applies map to factor `target` of rho; the other factors are untouched.
Matrix apply(const QuantumMap& map, const Matrix& rho, const Subsystems& where);
Matrix apply(const QuantumMap& map, const Matrix& rho);
/// Adjoint action on factor `target` of X, whose target factor has dimension out_dim.
Matrix adjoint_apply(const QuantumMap& map, const Matrix& x, const Subsystems& where);
Matrix adjoint_apply(const QuantumMap& map, const Matrix& x);

/// Choi operator sum_ij |i><j| (x) map(|i><j|), ordered input (x) output.
Matrix choi(const QuantumMap& map);
/// Kraus decomposition of a Choi operator; eigenvalues at or below
/// tol::rank_rel * lambda_max are dropped.
QuantumMap kraus_from_choi(const Matrix& c, std::size_t in_dim, std::size_t out_dim,
                           bool trace_preserving);
/// Throws ValidationError unless choi(map) is PSD within tol::psd.
void validate_cp(const QuantumMap& map);

struct StinespringIsometry {
  /// Shape (env_dim * out_dim) x in_dim, rows ordered environment (x) output.
  Matrix v;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t env_dim = 0;

  /// The isometric channel rho -> V rho V^dagger onto E (x) B.
  QuantumMap as_map() const;
};

/// V = sum_k |k>_E (x) A_k.
StinespringIsometry stinespring(const QuantumMap& map);

QuantumMap identity_channel(std::size_t dim);
QuantumMap unitary_channel(const Matrix& u);
/// Generalized amplitude damping with damping gamma and thermal population N.
QuantumMap gad_channel(double gamma, double n_th);
/// rho -> tr(rho) sigma0.
QuantumMap replacer_channel(const Matrix& sigma0, std::size_t in_dim);
/// Trivial-input map (in_dim 1) preparing the PSD operator rho.
QuantumMap preparation_channel(const Matrix& rho);
/// Trace over all factors except `keep`.
QuantumMap partial_trace_channel(const std::vector<std::size_t>& dims,
                                 const std::vector<std::size_t>& keep);
QuantumMap tensor_map(const QuantumMap& a, const QuantumMap& b);
QuantumMap tensor_power_map(const QuantumMap& m, std::size_t n);
/// second o first.
QuantumMap compose(const QuantumMap& second, const QuantumMap& first);

}  // namespace divlab
