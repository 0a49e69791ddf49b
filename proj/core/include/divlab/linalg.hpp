#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace divlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

namespace tol {
/// Hermiticity tolerance, relative to the max-norm of the operator.
inline constexpr double herm_rel = 1e-10;
/// Eigenvalues above -psd count as nonnegative.
inline constexpr double psd = 1e-9;
/// Eigenvalues at or below rank * lambda_max are treated as zero.
inline constexpr double rank_rel = 1e-9;
/// Trace-one tolerance for density operators.
inline constexpr double trace = 1e-9;
}  // namespace tol

/// Maximum dimension of any operator the library will build. Defaults to
/// 256; the environment variable DIVLAB_DIM_CAP overrides it.
std::size_t dim_cap();
void set_dim_cap(std::size_t cap);
void check_dim(std::size_t dim, std::string_view what);

double max_abs(const Matrix& a);
bool is_hermitian(const Matrix& h, double rel_tol = tol::herm_rel);
void require_square(const Matrix& a, std::string_view what);
void require_hermitian(const Matrix& h, std::string_view what);
void require_finite(const Matrix& a, std::string_view what);
Matrix hermitian_part(const Matrix& a);

struct EigenSystem {
  RVector values;   // descending
  Matrix vectors;   // columns are eigenvectors

  Matrix reconstruct() const;
  double max() const { return values.size() ? values(0) : 0.0; }
  double min() const { return values.size() ? values(values.size() - 1) : 0.0; }
};

/// Cyclic Jacobi eigensolver for Hermitian matrices.
EigenSystem herm_eig(const Matrix& h);

/// Scalar function together with the derivatives needed for Frechet
/// derivatives of the induced matrix function.
struct ScalarFunction {
  enum class Domain { all, nonnegative, positive };

  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  /// Optional numerically stable first divided difference f[a,b], a != b.
  std::function<double(double, double)> divided;
  Domain domain = Domain::all;
  std::string_view name = "f";

  double first_divided(double a, double b) const;
  double second_divided(double a, double b, double c) const;

  static ScalarFunction exp();
  static ScalarFunction log();
  static ScalarFunction power(double p);
  static ScalarFunction square();
};

/// V diag(f(lambda)) V^dagger. With support_only, eigenvalues at or below
/// tol::rank_rel * lambda_max are mapped to 0 instead of f(lambda).
Matrix mat_func(const Matrix& h, const ScalarFunction& f, bool support_only = false);
Matrix mat_func(const EigenSystem& es, const ScalarFunction& f, bool support_only = false);

Matrix mat_log(const Matrix& h, bool support_only = false);
Matrix mat_exp(const Matrix& h);
Matrix mat_pow(const Matrix& h, double p, bool support_only = false);
Matrix mat_sqrt(const Matrix& h);

/// Daleckii-Krein first Frechet derivative Df(H)[D].
Matrix frechet_matfunc(const Matrix& h, const ScalarFunction& f, const Matrix& direction);
Matrix frechet_matfunc(const EigenSystem& es, const ScalarFunction& f, const Matrix& direction);

/// Second Frechet derivative D^2 f(H)[D1, D2] (symmetric in D1, D2).
Matrix frechet2_matfunc(const EigenSystem& es, const ScalarFunction& f, const Matrix& d1,
                        const Matrix& d2);

/// Support projector of a PSD operator (eigenvalues above tol::rank_rel * lambda_max).
Matrix support_projector(const Matrix& h);
Matrix support_projector(const EigenSystem& es);
std::size_t numerical_rank(const EigenSystem& es);

Matrix identity(std::size_t dim);
Matrix tensor(const Matrix& a, const Matrix& b);
Matrix tensor_power(const Matrix& a, std::size_t n);

/// Traces out every subsystem not listed in keep. Kept subsystems appear in
/// their original order.
Matrix partial_trace(const Matrix& a, const std::vector<std::size_t>& dims,
                     const std::vector<std::size_t>& keep);

/// Reorders tensor factors: output factor k is input factor perm[k].
Matrix permute_subsystems(const Matrix& a, const std::vector<std::size_t>& dims,
                          const std::vector<std::size_t>& perm);
/// Row/column index permutation used by permute_subsystems.
std::vector<std::size_t> subsystem_permutation(const std::vector<std::size_t>& dims,
                                               const std::vector<std::size_t>& perm);

double trace_norm(const Matrix& a);
double max_eig(const Matrix& h);
double min_eig(const Matrix& h);
double real_trace(const Matrix& a);
/// Re tr(A^dagger B), the real Hilbert-Schmidt inner product.
double hs_inner(const Matrix& a, const Matrix& b);

/// Throws ValidationError if an eigenvalue is below -tol::psd.
void require_psd(const Matrix& h, std::string_view what);
bool is_psd(const Matrix& h);

/// ||sqrt(rho) sqrt(sigma)||_1, plus sqrt((1 - tr rho)(1 - tr sigma)) when
/// both traces are at most one.
double fidelity(const Matrix& rho, const Matrix& sigma);

Matrix random_density(std::size_t dim, std::uint64_t seed, bool real_entries = false);
Matrix random_unitary(std::size_t dim, std::uint64_t seed);
Matrix random_hermitian(std::size_t dim, std::uint64_t seed);
/// Haar-like isometry with the given shape (rows >= cols).
Matrix random_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// A (A^dagger A)^{-1/2}: nearest isometry in Frobenius norm.
Matrix polar_isometry(const Matrix& a);

/// Natural log to bits.
inline constexpr double kLn2 = 0.69314718055994530942;
inline double to_bits(double nats) { return nats / kLn2; }

}  // namespace divlab
