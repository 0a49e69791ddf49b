#include "divlab/qobjects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "divlab/errors.hpp"

namespace divlab {

void require_density(const Matrix& rho, std::string_view what, bool subnormalized) {
  require_psd(rho, what);
  const double tr = real_trace(rho);
  const bool ok = subnormalized ? (tr <= 1.0 + tol::trace && tr > 0.0) : std::abs(tr - 1.0) <= tol::trace;
  if (!ok) {
    std::ostringstream os;
    os << what << ": trace " << tr << " is not " << (subnormalized ? "in (0, 1]" : "1");
    throw ValidationError(os.str());
  }
}

bool is_density(const Matrix& rho) {
  try {
    require_density(rho, "state");
  } catch (const ValidationError&) {
    return false;
  }
  return true;
}

std::size_t kraus_cap() { return dim_cap(); }

QuantumMap::QuantumMap(std::size_t in_dim, std::size_t out_dim, std::vector<Matrix> kraus,
                       bool trace_preserving)
    : in_dim_(in_dim), out_dim_(out_dim), kraus_(std::move(kraus)), trace_preserving_(trace_preserving) {
  if (in_dim == 0 || out_dim == 0) throw ValidationError("QuantumMap: zero dimension");
  check_dim(in_dim, "QuantumMap input");
  check_dim(out_dim, "QuantumMap output");
  if (kraus_.empty()) throw ValidationError("QuantumMap: empty Kraus list");
  if (kraus_.size() > kraus_cap()) {
    std::ostringstream os;
    os << "QuantumMap: " << kraus_.size() << " Kraus operators exceed cap " << kraus_cap();
    throw ResourceError(os.str());
  }
  for (std::size_t k = 0; k < kraus_.size(); ++k) {
    const auto& a = kraus_[k];
    if (static_cast<std::size_t>(a.rows()) != out_dim || static_cast<std::size_t>(a.cols()) != in_dim) {
      std::ostringstream os;
      os << "QuantumMap: Kraus operator " << k << " has shape " << a.rows() << "x" << a.cols()
         << ", expected " << out_dim << "x" << in_dim;
      throw ValidationError(os.str());
    }
    require_finite(a, "QuantumMap Kraus operator");
  }
  if (trace_preserving_) {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(in_dim));
    for (const auto& a : kraus_) s += a.adjoint() * a;
    const double dev = max_abs(s - identity(in_dim));
    if (dev > 1e-9) {
      std::ostringstream os;
      os << "QuantumMap: flagged trace-preserving but sum A^dagger A deviates from I by " << dev;
      throw ValidationError(os.str());
    }
  }
}

Matrix QuantumMap::apply(const Matrix& rho) const {
  if (static_cast<std::size_t>(rho.rows()) != in_dim_ || rho.rows() != rho.cols())
    throw ValidationError("QuantumMap::apply: input dimension mismatch");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_dim_), static_cast<Eigen::Index>(out_dim_));
  for (const auto& a : kraus_) out.noalias() += a * rho * a.adjoint();
  return out;
}

Matrix QuantumMap::adjoint(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != out_dim_ || x.rows() != x.cols())
    throw ValidationError("QuantumMap::adjoint: input dimension mismatch");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(in_dim_), static_cast<Eigen::Index>(in_dim_));
  for (const auto& a : kraus_) out.noalias() += a.adjoint() * x * a;
  return out;
}

double QuantumMap::log_boundedness() const {
  return std::log2(max_eig(hermitian_part(adjoint(identity(out_dim_)))));
}

QuantumMap QuantumMap::compressed() const {
  return kraus_from_choi(choi(*this), in_dim_, out_dim_, trace_preserving_);
}

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (std::size_t d : dims) p *= d;
  return p;
}

void check_where(const Subsystems& where, std::size_t actual_dim, std::size_t target_dim,
                 std::string_view what) {
  if (where.target >= where.dims.size())
    throw ValidationError(std::string(what) + ": target subsystem out of range");
  if (where.dims[where.target] != target_dim) {
    std::ostringstream os;
    os << what << ": target subsystem has dimension " << where.dims[where.target] << ", map expects "
       << target_dim;
    throw ValidationError(os.str());
  }
  if (product(where.dims) != actual_dim) {
    std::ostringstream os;
    os << what << ": subsystem dims multiply to " << product(where.dims) << " but operator has dimension "
       << actual_dim;
    throw ValidationError(os.str());
  }
}

// Applies sum_k L_k X R_k^dagger-style sandwich on the target factor; the
// target is moved last so the action is block-diagonal.
Matrix sandwich_on(const std::vector<Matrix>& left, const Matrix& x, const Subsystems& where,
                   std::size_t from_dim, std::size_t to_dim, bool adjoint_action) {
  const std::size_t m = where.dims.size();
  std::vector<std::size_t> perm;
  for (std::size_t s = 0; s < m; ++s)
    if (s != where.target) perm.push_back(s);
  perm.push_back(where.target);
  const bool identity_perm = where.target + 1 == m;
  const Matrix xp = identity_perm ? x : permute_subsystems(x, where.dims, perm);
  const std::size_t rest = product(where.dims) / from_dim;
  check_dim(rest * to_dim, "apply");
  const auto fd = static_cast<Eigen::Index>(from_dim);
  const auto td = static_cast<Eigen::Index>(to_dim);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rest) * td, static_cast<Eigen::Index>(rest) * td);
  for (std::size_t l = 0; l < rest; ++l) {
    for (std::size_t lp = 0; lp < rest; ++lp) {
      const auto blk = xp.block(static_cast<Eigen::Index>(l) * fd, static_cast<Eigen::Index>(lp) * fd, fd, fd);
      auto ob = out.block(static_cast<Eigen::Index>(l) * td, static_cast<Eigen::Index>(lp) * td, td, td);
      for (const auto& a : left) {
        if (adjoint_action)
          ob.noalias() += a.adjoint() * blk * a;
        else
          ob.noalias() += a * blk * a.adjoint();
      }
    }
  }
  if (identity_perm) return out;
  std::vector<std::size_t> new_dims;
  for (std::size_t s = 0; s < m; ++s)
    if (s != where.target) new_dims.push_back(where.dims[s]);
  new_dims.push_back(to_dim);
  std::vector<std::size_t> inv(m);
  // output factor s sits at position pos(s) of the permuted layout
  for (std::size_t k = 0; k < m; ++k) inv[perm[k]] = k;
  return permute_subsystems(out, new_dims, inv);
}

}  // namespace

Matrix apply(const QuantumMap& map, const Matrix& rho, const Subsystems& where) {
  require_square(rho, "apply");
  check_where(where, static_cast<std::size_t>(rho.rows()), map.in_dim(), "apply");
  if (where.dims.size() == 1) return map.apply(rho);
  return sandwich_on(map.kraus(), rho, where, map.in_dim(), map.out_dim(), false);
}

Matrix apply(const QuantumMap& map, const Matrix& rho) { return map.apply(rho); }

Matrix adjoint_apply(const QuantumMap& map, const Matrix& x, const Subsystems& where) {
  require_square(x, "adjoint_apply");
  check_where(where, static_cast<std::size_t>(x.rows()), map.out_dim(), "adjoint_apply");
  if (where.dims.size() == 1) return map.adjoint(x);
  return sandwich_on(map.kraus(), x, where, map.out_dim(), map.in_dim(), true);
}

Matrix adjoint_apply(const QuantumMap& map, const Matrix& x) { return map.adjoint(x); }

Matrix choi(const QuantumMap& map) {
  const std::size_t in = map.in_dim();
  const std::size_t out = map.out_dim();
  check_dim(in * out, "choi");
  const auto n = static_cast<Eigen::Index>(in * out);
  Matrix c = Matrix::Zero(n, n);
  for (const auto& a : map.kraus()) {
    CVector v(n);
    for (std::size_t i = 0; i < in; ++i)
      for (std::size_t o = 0; o < out; ++o)
        v(static_cast<Eigen::Index>(i * out + o)) = a(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
    c.noalias() += v * v.adjoint();
  }
  return c;
}

QuantumMap kraus_from_choi(const Matrix& c, std::size_t in_dim, std::size_t out_dim,
                           bool trace_preserving) {
  require_hermitian(c, "kraus_from_choi");
  if (static_cast<std::size_t>(c.rows()) != in_dim * out_dim)
    throw ValidationError("kraus_from_choi: Choi dimension does not match in_dim * out_dim");
  const EigenSystem es = herm_eig(c);
  if (es.min() < -tol::psd * std::max(1.0, es.max()))
    throw ValidationError("kraus_from_choi: Choi operator not PSD (map is not completely positive)");
  const std::size_t r = std::max<std::size_t>(1, numerical_rank(es));
  std::vector<Matrix> kraus;
  for (std::size_t k = 0; k < r; ++k) {
    const double lam = std::max(es.values(static_cast<Eigen::Index>(k)), 0.0);
    Matrix a(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
    for (std::size_t i = 0; i < in_dim; ++i)
      for (std::size_t o = 0; o < out_dim; ++o)
        a(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)) =
            std::sqrt(lam) * es.vectors(static_cast<Eigen::Index>(i * out_dim + o), static_cast<Eigen::Index>(k));
    kraus.push_back(a);
  }
  if (trace_preserving) {
    // Re-check against the looser reconstruction error of the eigensolver.
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(in_dim));
    for (const auto& a : kraus) s += a.adjoint() * a;
    if (max_abs(s - identity(in_dim)) > 1e-9)
      throw ValidationError("kraus_from_choi: Choi operator is not trace preserving");
  }
  return QuantumMap(in_dim, out_dim, std::move(kraus), trace_preserving);
}

void validate_cp(const QuantumMap& map) { require_psd(choi(map), "choi"); }

StinespringIsometry stinespring(const QuantumMap& map) {
  StinespringIsometry s;
  s.in_dim = map.in_dim();
  s.out_dim = map.out_dim();
  s.env_dim = map.kraus_count();
  check_dim(s.env_dim * s.out_dim, "stinespring");
  const auto od = static_cast<Eigen::Index>(s.out_dim);
  s.v = Matrix::Zero(static_cast<Eigen::Index>(s.env_dim) * od, static_cast<Eigen::Index>(s.in_dim));
  for (std::size_t k = 0; k < s.env_dim; ++k) s.v.middleRows(static_cast<Eigen::Index>(k) * od, od) = map.kraus()[k];
  return s;
}

QuantumMap StinespringIsometry::as_map() const {
  return QuantumMap(in_dim, env_dim * out_dim, {v}, false);
}

QuantumMap identity_channel(std::size_t dim) { return QuantumMap(dim, dim, {identity(dim)}, true); }

QuantumMap unitary_channel(const Matrix& u) {
  require_square(u, "unitary_channel");
  const auto d = static_cast<std::size_t>(u.rows());
  return QuantumMap(d, d, {u}, max_abs(u.adjoint() * u - identity(d)) <= 1e-9);
}

QuantumMap gad_channel(double gamma, double n_th) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gad_channel: gamma must lie in [0, 1]");
  if (!(n_th >= 0.0 && n_th <= 1.0)) throw ValidationError("gad_channel: N must lie in [0, 1]");
  Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2), a3 = Matrix::Zero(2, 2), a4 = Matrix::Zero(2, 2);
  a1(0, 0) = std::sqrt(1 - n_th);
  a1(1, 1) = std::sqrt(1 - n_th) * std::sqrt(1 - gamma);
  a2(0, 1) = std::sqrt(gamma * (1 - n_th));
  a3(0, 0) = std::sqrt(n_th) * std::sqrt(1 - gamma);
  a3(1, 1) = std::sqrt(n_th);
  a4(1, 0) = std::sqrt(gamma * n_th);
  return QuantumMap(2, 2, {a1, a2, a3, a4}, true);
}

QuantumMap replacer_channel(const Matrix& sigma0, std::size_t in_dim) {
  require_psd(sigma0, "replacer_channel(sigma0)");
  const auto out = static_cast<std::size_t>(sigma0.rows());
  const EigenSystem es = herm_eig(sigma0);
  std::vector<Matrix> kraus;
  const std::size_t r = std::max<std::size_t>(1, numerical_rank(es));
  for (std::size_t k = 0; k < r; ++k) {
    const double lam = std::max(es.values(static_cast<Eigen::Index>(k)), 0.0);
    const CVector v = es.vectors.col(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < in_dim; ++i) {
      Matrix a = Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in_dim));
      a.col(static_cast<Eigen::Index>(i)) = std::sqrt(lam) * v;
      kraus.push_back(a);
    }
  }
  const bool tp = std::abs(real_trace(sigma0) - 1.0) <= tol::trace;
  return QuantumMap(in_dim, out, std::move(kraus), tp);
}

QuantumMap preparation_channel(const Matrix& rho) {
  require_psd(rho, "preparation_channel");
  const EigenSystem es = herm_eig(rho);
  const std::size_t r = std::max<std::size_t>(1, numerical_rank(es));
  std::vector<Matrix> kraus;
  for (std::size_t k = 0; k < r; ++k)
    kraus.push_back(std::sqrt(std::max(es.values(static_cast<Eigen::Index>(k)), 0.0)) *
                    es.vectors.col(static_cast<Eigen::Index>(k)));
  const bool tp = std::abs(real_trace(rho) - 1.0) <= tol::trace;
  return QuantumMap(1, static_cast<std::size_t>(rho.rows()), std::move(kraus), tp);
}

QuantumMap partial_trace_channel(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& keep) {
  const std::size_t n = product(dims);
  std::vector<bool> kept(dims.size(), false);
  for (std::size_t k : keep) {
    if (k >= dims.size()) throw ValidationError("partial_trace_channel: keep index out of range");
    kept[k] = true;
  }
  std::size_t kdim = 1, tdim = 1;
  for (std::size_t s = 0; s < dims.size(); ++s) (kept[s] ? kdim : tdim) *= dims[s];
  std::vector<Matrix> kraus;
  for (std::size_t t = 0; t < tdim; ++t) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(kdim), static_cast<Eigen::Index>(n));
    kraus.push_back(a);
  }
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx, kk = 0, tt = 0, ks = 1, ts = 1;
    for (std::size_t s = dims.size(); s-- > 0;) {
      const std::size_t digit = rem % dims[s];
      rem /= dims[s];
      if (kept[s]) {
        kk += digit * ks;
        ks *= dims[s];
      } else {
        tt += digit * ts;
        ts *= dims[s];
      }
    }
    kraus[tt](static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(idx)) = 1.0;
  }
  return QuantumMap(n, kdim, std::move(kraus), true);
}

QuantumMap tensor_map(const QuantumMap& a, const QuantumMap& b) {
  if (a.kraus_count() * b.kraus_count() > kraus_cap()) {
    std::ostringstream os;
    os << "tensor_map: " << a.kraus_count() * b.kraus_count() << " Kraus operators exceed cap "
       << kraus_cap();
    throw ResourceError(os.str());
  }
  std::vector<Matrix> kraus;
  kraus.reserve(a.kraus_count() * b.kraus_count());
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) kraus.push_back(tensor(ka, kb));
  return QuantumMap(a.in_dim() * b.in_dim(), a.out_dim() * b.out_dim(), std::move(kraus),
                    a.trace_preserving() && b.trace_preserving());
}

QuantumMap tensor_power_map(const QuantumMap& m, std::size_t n) {
  if (n == 0) return identity_channel(1);
  QuantumMap out = m;
  for (std::size_t k = 1; k < n; ++k) out = tensor_map(out, m);
  return out;
}

QuantumMap compose(const QuantumMap& second, const QuantumMap& first) {
  if (second.in_dim() != first.out_dim()) throw ValidationError("compose: dimension mismatch");
  if (second.kraus_count() * first.kraus_count() > kraus_cap())
    throw ResourceError("compose: Kraus count exceeds cap");
  std::vector<Matrix> kraus;
  for (const auto& b : second.kraus())
    for (const auto& a : first.kraus()) kraus.push_back(b * a);
  return QuantumMap(first.in_dim(), second.out_dim(), std::move(kraus),
                    first.trace_preserving() && second.trace_preserving());
}

}  // namespace divlab
