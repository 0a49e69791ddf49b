#include "divlab/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "divlab/errors.hpp"

namespace divlab {

namespace {

std::size_t initial_dim_cap() {
  if (const char* env = std::getenv("DIVLAB_DIM_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 256;
}

std::atomic<std::size_t>& cap_storage() {
  static std::atomic<std::size_t> cap{initial_dim_cap()};
  return cap;
}

std::string name_of(std::string_view what) { return std::string(what); }

}  // namespace

std::size_t dim_cap() { return cap_storage().load(); }
void set_dim_cap(std::size_t cap) { cap_storage().store(cap); }

void check_dim(std::size_t dim, std::string_view what) {
  if (dim > dim_cap()) {
    std::ostringstream os;
    os << name_of(what) << ": dimension " << dim << " exceeds dim_cap " << dim_cap();
    throw ResourceError(os.str());
  }
}

double max_abs(const Matrix& a) {
  return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
}

bool is_hermitian(const Matrix& h, double rel_tol) {
  if (h.rows() != h.cols()) return false;
  const double scale = std::max(1.0, max_abs(h));
  return max_abs(h - h.adjoint()) <= rel_tol * scale;
}

void require_square(const Matrix& a, std::string_view what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << name_of(what) << ": expected a nonempty square matrix, got " << a.rows() << "x"
       << a.cols();
    throw ValidationError(os.str());
  }
}

void require_finite(const Matrix& a, std::string_view what) {
  if (!a.allFinite()) throw ValidationError(name_of(what) + ": non-finite entry");
}

void require_hermitian(const Matrix& h, std::string_view what) {
  require_square(h, what);
  require_finite(h, what);
  if (!is_hermitian(h)) {
    std::ostringstream os;
    os << name_of(what) << ": not Hermitian (max deviation " << max_abs(h - h.adjoint()) << ")";
    throw ValidationError(os.str());
  }
}

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

Matrix EigenSystem::reconstruct() const {
  return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
}

EigenSystem herm_eig(const Matrix& h) {
  require_hermitian(h, "herm_eig");
  const Eigen::Index n = h.rows();
  Matrix a = hermitian_part(h);
  Matrix v = Matrix::Identity(n, n);

  auto off_norm2 = [&]() {
    double s = 0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) s += std::norm(a(p, q));
    return s;
  };
  const double total = a.squaredNorm();
  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    const double off = off_norm2();
    if (off <= 1e-32 * total || off == 0.0) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        if (sweep > 3 && mag <= 1e-18 * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        // D = diag(1, e^{-i phi}) makes the pivot real, then a real rotation.
        const Complex phase = apq / mag;
        const double theta = (aqq - app) / (2.0 * mag);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex ph_conj = std::conj(phase);
        // columns: A <- A J with J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = c * akp - s * ph_conj * akq;
          a(k, q) = s * akp + c * ph_conj * akq;
        }
        // rows: A <- J^dagger A
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * apk + c * phase * aqk;
        }
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = c * vkp - s * ph_conj * vkq;
          v(k, q) = s * vkp + c * ph_conj * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps) throw SolverError("herm_eig: Jacobi sweeps did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i).real() > a(j, j).real();
  });
  EigenSystem es;
  es.values.resize(n);
  es.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    es.values(k) = a(order[k], order[k]).real();
    es.vectors.col(k) = v.col(order[k]);
  }
  return es;
}

// ---------------------------------------------------------------------------
// Scalar functions

double ScalarFunction::first_divided(double a, double b) const {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a - b) <= 1e-9 * scale) return d1(0.5 * (a + b));
  if (divided) return divided(a, b);
  return (value(a) - value(b)) / (a - b);
}

double ScalarFunction::second_divided(double a, double b, double c) const {
  const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
  const double thr = 1e-6 * scale;
  if (std::abs(a - c) > thr) return (first_divided(a, b) - first_divided(b, c)) / (a - c);
  if (std::abs(a - b) > thr) return (first_divided(a, b) - d1(0.5 * (a + c))) / (b - 0.5 * (a + c));
  return 0.5 * d2((a + b + c) / 3.0);
}

ScalarFunction ScalarFunction::exp() {
  ScalarFunction f;
  f.value = [](double x) { return std::exp(x); };
  f.d1 = f.value;
  f.d2 = f.value;
  f.divided = [](double a, double b) { return std::exp(b) * std::expm1(a - b) / (a - b); };
  f.name = "exp";
  return f;
}

ScalarFunction ScalarFunction::log() {
  ScalarFunction f;
  f.value = [](double x) { return std::log(x); };
  f.d1 = [](double x) { return 1.0 / x; };
  f.d2 = [](double x) { return -1.0 / (x * x); };
  f.divided = [](double a, double b) {
    const double u = (a - b) / b;
    return std::log1p(u) / (a - b);
  };
  f.domain = Domain::positive;
  f.name = "log";
  return f;
}

ScalarFunction ScalarFunction::power(double p) {
  ScalarFunction f;
  f.value = [p](double x) { return x == 0.0 ? (p == 0.0 ? 1.0 : 0.0) : std::pow(x, p); };
  f.d1 = [p](double x) { return p * std::pow(x, p - 1.0); };
  f.d2 = [p](double x) { return p * (p - 1.0) * std::pow(x, p - 2.0); };
  f.divided = [p](double a, double b) {
    if (a > 0 && b > 0) {
      const double lr = std::log(a / b);
      return std::pow(b, p - 1.0) * std::expm1(p * lr) / std::expm1(lr);
    }
    return (std::pow(a, p) - std::pow(b, p)) / (a - b);
  };
  f.domain = (p > 0 && std::floor(p) == p) ? Domain::all : (p > 0 ? Domain::nonnegative : Domain::positive);
  if (p == 1.0 || p == 2.0) f.domain = Domain::all;
  f.name = "pow";
  return f;
}

ScalarFunction ScalarFunction::square() {
  ScalarFunction f;
  f.value = [](double x) { return x * x; };
  f.d1 = [](double x) { return 2 * x; };
  f.d2 = [](double) { return 2.0; };
  f.divided = [](double a, double b) { return a + b; };
  f.name = "square";
  return f;
}

// ---------------------------------------------------------------------------
// Matrix functions

namespace {

double apply_scalar(const ScalarFunction& f, double lambda, double lmax, bool support_only) {
  const double thr = tol::rank_rel * std::max(lmax, 0.0);
  if (support_only && lambda <= thr) return 0.0;
  switch (f.domain) {
    case ScalarFunction::Domain::all:
      return f.value(lambda);
    case ScalarFunction::Domain::nonnegative:
      if (lambda < -tol::psd * std::max(1.0, std::abs(lmax))) {
        std::ostringstream os;
        os << "mat_func(" << f.name << "): eigenvalue " << lambda << " is negative";
        throw DomainError(os.str());
      }
      return f.value(std::max(lambda, 0.0));
    case ScalarFunction::Domain::positive:
      if (!(lambda > 0.0)) {
        std::ostringstream os;
        os << "mat_func(" << f.name << "): eigenvalue " << lambda
           << " outside domain (set support_only)";
        throw DomainError(os.str());
      }
      return f.value(lambda);
  }
  return 0.0;
}

}  // namespace

Matrix mat_func(const EigenSystem& es, const ScalarFunction& f, bool support_only) {
  const Eigen::Index n = es.values.size();
  RVector fv(n);
  const double lmax = es.max();
  for (Eigen::Index k = 0; k < n; ++k) fv(k) = apply_scalar(f, es.values(k), lmax, support_only);
  return es.vectors * fv.cast<Complex>().asDiagonal() * es.vectors.adjoint();
}

Matrix mat_func(const Matrix& h, const ScalarFunction& f, bool support_only) {
  return mat_func(herm_eig(h), f, support_only);
}

Matrix mat_log(const Matrix& h, bool support_only) {
  return mat_func(h, ScalarFunction::log(), support_only);
}
Matrix mat_exp(const Matrix& h) { return mat_func(h, ScalarFunction::exp()); }
Matrix mat_pow(const Matrix& h, double p, bool support_only) {
  return mat_func(h, ScalarFunction::power(p), support_only);
}
Matrix mat_sqrt(const Matrix& h) { return mat_func(h, ScalarFunction::power(0.5)); }

Matrix frechet_matfunc(const EigenSystem& es, const ScalarFunction& f, const Matrix& direction) {
  const Eigen::Index n = es.values.size();
  if (direction.rows() != n || direction.cols() != n)
    throw ValidationError("frechet_matfunc: direction shape mismatch");
  Matrix d = es.vectors.adjoint() * direction * es.vectors;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) *= f.first_divided(es.values(i), es.values(j));
  return es.vectors * d * es.vectors.adjoint();
}

Matrix frechet_matfunc(const Matrix& h, const ScalarFunction& f, const Matrix& direction) {
  return frechet_matfunc(herm_eig(h), f, direction);
}

Matrix frechet2_matfunc(const EigenSystem& es, const ScalarFunction& f, const Matrix& d1,
                        const Matrix& d2) {
  const Eigen::Index n = es.values.size();
  const Matrix a = es.vectors.adjoint() * d1 * es.vectors;
  const Matrix b = es.vectors.adjoint() * d2 * es.vectors;
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex s = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        s += f.second_divided(es.values(i), es.values(k), es.values(j)) *
             (a(i, k) * b(k, j) + b(i, k) * a(k, j));
      }
      out(i, j) = s;
    }
  }
  return es.vectors * out * es.vectors.adjoint();
}

std::size_t numerical_rank(const EigenSystem& es) {
  const double thr = tol::rank_rel * std::max(es.max(), 0.0);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < es.values.size(); ++k)
    if (es.values(k) > thr) ++r;
  return r;
}

Matrix support_projector(const EigenSystem& es) {
  const std::size_t r = numerical_rank(es);
  const auto v = es.vectors.leftCols(static_cast<Eigen::Index>(r));
  return v * v.adjoint();
}

Matrix support_projector(const Matrix& h) { return support_projector(herm_eig(h)); }

// ---------------------------------------------------------------------------
// Tensor structure

Matrix identity(std::size_t dim) {
  return Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

Matrix tensor(const Matrix& a, const Matrix& b) {
  const std::size_t rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  const std::size_t cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
  check_dim(std::max(rows, cols), "tensor");
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix tensor_power(const Matrix& a, std::size_t n) {
  Matrix out = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < n; ++k) out = tensor(out, a);
  return out;
}

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (std::size_t d : dims) p *= d;
  return p;
}

void check_dims(const Matrix& a, const std::vector<std::size_t>& dims, std::string_view what) {
  require_square(a, what);
  for (std::size_t d : dims)
    if (d == 0) throw ValidationError(name_of(what) + ": zero subsystem dimension");
  if (product(dims) != static_cast<std::size_t>(a.rows())) {
    std::ostringstream os;
    os << name_of(what) << ": subsystem dims multiply to " << product(dims) << " but matrix is "
       << a.rows() << "x" << a.cols();
    throw ValidationError(os.str());
  }
}

}  // namespace

Matrix partial_trace(const Matrix& a, const std::vector<std::size_t>& dims,
                     const std::vector<std::size_t>& keep) {
  check_dims(a, dims, "partial_trace");
  const std::size_t m = dims.size();
  std::vector<bool> kept(m, false);
  for (std::size_t k : keep) {
    if (k >= m) throw ValidationError("partial_trace: keep index out of range");
    if (kept[k]) throw ValidationError("partial_trace: duplicate keep index");
    kept[k] = true;
  }
  const std::size_t n = product(dims);
  std::vector<std::size_t> kidx(n), tidx(n);
  std::size_t kdim = 1;
  for (std::size_t s = 0; s < m; ++s)
    if (kept[s]) kdim *= dims[s];
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx, kk = 0, tt = 0, kstride = 1, tstride = 1;
    for (std::size_t s = m; s-- > 0;) {
      const std::size_t digit = rem % dims[s];
      rem /= dims[s];
      if (kept[s]) {
        kk += digit * kstride;
        kstride *= dims[s];
      } else {
        tt += digit * tstride;
        tstride *= dims[s];
      }
    }
    kidx[idx] = kk;
    tidx[idx] = tt;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(kdim), static_cast<Eigen::Index>(kdim));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r)
      if (tidx[r] == tidx[c])
        out(static_cast<Eigen::Index>(kidx[r]), static_cast<Eigen::Index>(kidx[c])) +=
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

std::vector<std::size_t> subsystem_permutation(const std::vector<std::size_t>& dims,
                                               const std::vector<std::size_t>& perm) {
  const std::size_t m = dims.size();
  if (perm.size() != m) throw ValidationError("permute_subsystems: permutation size mismatch");
  std::vector<bool> seen(m, false);
  for (std::size_t p : perm) {
    if (p >= m || seen[p]) throw ValidationError("permute_subsystems: invalid permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> new_dims(m);
  for (std::size_t k = 0; k < m; ++k) new_dims[k] = dims[perm[k]];
  const std::size_t n = product(dims);
  // map[new_index] = old_index
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> digits(m);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (std::size_t k = m; k-- > 0;) {
      digits[k] = rem % new_dims[k];
      rem /= new_dims[k];
    }
    std::vector<std::size_t> old_digits(m);
    for (std::size_t k = 0; k < m; ++k) old_digits[perm[k]] = digits[k];
    std::size_t old = 0;
    for (std::size_t s = 0; s < m; ++s) old = old * dims[s] + old_digits[s];
    map[idx] = old;
  }
  return map;
}

Matrix permute_subsystems(const Matrix& a, const std::vector<std::size_t>& dims,
                          const std::vector<std::size_t>& perm) {
  check_dims(a, dims, "permute_subsystems");
  const auto map = subsystem_permutation(dims, perm);
  const Eigen::Index n = a.rows();
  Matrix out(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r)
      out(r, c) = a(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c]));
  return out;
}

// ---------------------------------------------------------------------------
// Norms and fidelity

double trace_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

double max_eig(const Matrix& h) { return herm_eig(h).max(); }
double min_eig(const Matrix& h) { return herm_eig(h).min(); }
double real_trace(const Matrix& a) { return a.trace().real(); }

double hs_inner(const Matrix& a, const Matrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

void require_psd(const Matrix& h, std::string_view what) {
  require_hermitian(h, what);
  const double lmin = herm_eig(h).min();
  if (lmin < -tol::psd) {
    std::ostringstream os;
    os << name_of(what) << ": not positive semidefinite (min eigenvalue " << lmin << ")";
    throw ValidationError(os.str());
  }
}

bool is_psd(const Matrix& h) {
  if (!is_hermitian(h)) return false;
  return herm_eig(h).min() >= -tol::psd;
}

double fidelity(const Matrix& rho, const Matrix& sigma) {
  require_psd(rho, "fidelity(rho)");
  require_psd(sigma, "fidelity(sigma)");
  if (rho.rows() != sigma.rows()) throw ValidationError("fidelity: dimension mismatch");
  const Matrix sr = mat_sqrt(rho);
  const Matrix ss = mat_sqrt(sigma);
  double f = trace_norm(sr * ss);
  const double tr_r = real_trace(rho);
  const double tr_s = real_trace(sigma);
  if (tr_r <= 1.0 && tr_s <= 1.0) f += std::sqrt((1.0 - tr_r) * (1.0 - tr_s));
  return f;
}

// ---------------------------------------------------------------------------
// Random objects

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool real_entries) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double re = normal(rng);
      const double im = real_entries ? 0.0 : normal(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

}  // namespace

Matrix random_density(std::size_t dim, std::uint64_t seed, bool real_entries) {
  check_dim(dim, "random_density");
  std::mt19937_64 rng(seed);
  const Matrix g = gaussian(dim, dim, rng, real_entries);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = hermitian_part(rho);
  if (real_entries) rho = rho.real().cast<Complex>();
  return rho;
}

Matrix random_hermitian(std::size_t dim, std::uint64_t seed) {
  check_dim(dim, "random_hermitian");
  std::mt19937_64 rng(seed);
  return hermitian_part(gaussian(dim, dim, rng, false));
}

Matrix random_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < cols) throw ValidationError("random_isometry: rows < cols");
  check_dim(rows, "random_isometry");
  std::mt19937_64 rng(seed);
  const Matrix g = gaussian(rows, cols, rng, false);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q_full = qr.householderQ();
  Matrix q = q_full.leftCols(static_cast<Eigen::Index>(cols));
  const Matrix r = qr.matrixQR().topRows(static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0) q.col(k) *= d / mag;
  }
  return q;
}

Matrix random_unitary(std::size_t dim, std::uint64_t seed) { return random_isometry(dim, dim, seed); }

Matrix polar_isometry(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace divlab
