#include "divlab/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "divlab/errors.hpp"
#include "divlab/qobjects.hpp"
#include "divlab/variational.hpp"

namespace divlab {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::umegaki: return "umegaki";
    case Family::sandwiched: return "sandwiched";
    case Family::petz: return "petz";
    case Family::max: return "max";
    case Family::measured: return "measured";
    case Family::measured_renyi: return "measured_renyi";
    case Family::hypothesis: return "hypothesis";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::umegaki, Family::sandwiched, Family::petz, Family::max, Family::measured,
                   Family::measured_renyi, Family::hypothesis})
    if (family_name(f) == name) return f;
  if (name == "dmax") return Family::max;
  throw ValidationError("unknown divergence family '" + std::string(name) + "'");
}

void DivergenceSpec::validate() const {
  auto bad_alpha = [&](const char* range) {
    std::ostringstream os;
    os << family_name(family) << ": alpha " << alpha << " outside " << range;
    throw ValidationError(os.str());
  };
  switch (family) {
    case Family::sandwiched:
      if (!(alpha >= 0.5) || alpha == 1.0 || !std::isfinite(alpha)) bad_alpha("[1/2, inf) minus {1}");
      break;
    case Family::petz:
    case Family::measured_renyi:
      if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha)) bad_alpha("(0, 1) or (1, inf)");
      break;
    case Family::hypothesis:
      if (!(epsilon > 0.0 && epsilon < 1.0)) {
        std::ostringstream os;
        os << "hypothesis: epsilon " << epsilon << " outside (0, 1)";
        throw ValidationError(os.str());
      }
      break;
    default:
      break;
  }
}

std::string DivergenceSpec::describe() const {
  std::ostringstream os;
  os << family_name(family);
  if (family == Family::sandwiched || family == Family::petz || family == Family::measured_renyi)
    os << "(alpha=" << alpha << ")";
  if (family == Family::hypothesis) os << "(eps=" << epsilon << ")";
  return os.str();
}

namespace {

void check_pair(const Matrix& rho, const Matrix& sigma, const char* what, bool subnormalized = false) {
  require_density(rho, std::string(what) + "(rho)", subnormalized);
  require_psd(sigma, std::string(what) + "(sigma)");
  if (rho.rows() != sigma.rows()) throw ValidationError(std::string(what) + ": dimension mismatch");
}

// Mass of rho outside supp(sigma).
double outside_mass(const Matrix& rho, const EigenSystem& sigma_es) {
  const Matrix p = support_projector(sigma_es);
  return real_trace(rho) - real_trace(p * rho);
}

constexpr double kSupportTol = 1e-9;

}  // namespace

bool support_contained(const Matrix& rho, const Matrix& sigma) {
  return outside_mass(rho, herm_eig(sigma)) <= kSupportTol * std::max(1.0, real_trace(rho));
}

double umegaki(const Matrix& rho, const Matrix& sigma) {
  check_pair(rho, sigma, "umegaki");
  const EigenSystem se = herm_eig(sigma);
  if (outside_mass(rho, se) > kSupportTol) return kInfinity;
  const EigenSystem re = herm_eig(rho);
  double s = 0;
  for (Eigen::Index k = 0; k < re.values.size(); ++k) {
    const double l = re.values(k);
    if (l > tol::rank_rel * re.max()) s += l * std::log(l);
  }
  s -= real_trace(rho * mat_func(se, ScalarFunction::log(), true));
  return to_bits(s);
}

double sandwiched(const Matrix& rho, const Matrix& sigma, double alpha) {
  DivergenceSpec{Family::sandwiched, alpha, 0.0}.validate();
  check_pair(rho, sigma, "sandwiched");
  const EigenSystem se = herm_eig(sigma);
  if (alpha > 1.0 && outside_mass(rho, se) > kSupportTol) return kInfinity;
  const double gamma = (1.0 - alpha) / (2.0 * alpha);
  const Matrix sg = mat_func(se, ScalarFunction::power(gamma), true);
  const Matrix inner = hermitian_part(sg * rho * sg);
  const EigenSystem ie = herm_eig(inner);
  double q = 0;
  for (Eigen::Index k = 0; k < ie.values.size(); ++k)
    if (ie.values(k) > 0) q += std::pow(ie.values(k), alpha);
  if (q <= 0.0) return kInfinity;
  return std::log2(q) / (alpha - 1.0);
}

double petz(const Matrix& rho, const Matrix& sigma, double alpha) {
  DivergenceSpec{Family::petz, alpha, 0.0}.validate();
  check_pair(rho, sigma, "petz");
  const EigenSystem se = herm_eig(sigma);
  if (alpha > 1.0 && outside_mass(rho, se) > kSupportTol) return kInfinity;
  const Matrix ra = mat_func(herm_eig(rho), ScalarFunction::power(alpha), true);
  const Matrix sb = mat_func(se, ScalarFunction::power(1.0 - alpha), true);
  const double q = real_trace(ra * sb);
  if (q <= 0.0) return kInfinity;
  return std::log2(q) / (alpha - 1.0);
}

double dmax(const Matrix& rho, const Matrix& sigma) {
  check_pair(rho, sigma, "dmax", true);
  const EigenSystem se = herm_eig(sigma);
  if (outside_mass(rho, se) > kSupportTol) return kInfinity;
  const Matrix sh = mat_func(se, ScalarFunction::power(-0.5), true);
  const double lmax = max_eig(hermitian_part(sh * rho * sh));
  if (lmax <= 0.0) return -kInfinity;
  return std::log2(lmax);
}

// ---------------------------------------------------------------------------
// Hypothesis testing

namespace {

struct NpPoint {
  EigenSystem es;
  double mass_pos = 0;   // tr[rho P_+]
  double mass_zero = 0;  // tr[rho P_0]
  double pos_part = 0;   // tr(mu rho - sigma)_+
};

NpPoint np_point(const Matrix& rho, const Matrix& sigma, double mu, double zero_tol) {
  NpPoint pt;
  pt.es = herm_eig(hermitian_part(mu * rho - sigma));
  for (Eigen::Index k = 0; k < pt.es.values.size(); ++k) {
    const double l = pt.es.values(k);
    const CVector v = pt.es.vectors.col(k);
    const double w = (v.adjoint() * rho * v)(0, 0).real();
    if (l > zero_tol) {
      pt.mass_pos += w;
      pt.pos_part += l;
    } else if (l >= -zero_tol) {
      pt.mass_zero += w;
    }
  }
  return pt;
}

}  // namespace

CertifiedValue hypothesis_testing(const Matrix& rho, const Matrix& sigma, double epsilon) {
  DivergenceSpec{Family::hypothesis, 1.0, epsilon}.validate();
  check_pair(rho, sigma, "hypothesis_testing", true);
  const double target = 1.0 - epsilon;
  const double trr = real_trace(rho);
  if (trr < target) throw ValidationError("hypothesis_testing: tr(rho) below 1 - epsilon");
  const double snorm = std::max(max_eig(sigma), 1e-300);
  const double rnorm = std::max(max_eig(rho), 1e-300);
  auto zero_tol = [&](double mu) { return 1e-10 * std::max(mu * rnorm, snorm); };
  auto g = [&](double mu) {
    const NpPoint p = np_point(rho, sigma, mu, zero_tol(mu));
    return p.mass_pos;
  };

  double hi = snorm / rnorm;
  int guard = 0;
  while (g(hi) < target) {
    hi *= 2.0;
    if (++guard > 400) throw SolverError("hypothesis_testing: could not bracket the multiplier");
  }
  double lo = 0.0;
  int iter = 0;
  for (; iter < 300 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  if (hi - lo > 1e-12 * hi) {
    std::ostringstream os;
    os << "hypothesis_testing: bisection stalled with bracket [" << lo << ", " << hi << "]";
    throw SolverError(os.str());
  }

  const double mu = hi;
  // Eigenvalues that crossed zero inside the final bracket sit within a few
  // zero_tol of zero at mu = hi; they form the kernel block.
  const double ztol = 10.0 * zero_tol(mu) + 2.0 * (hi - lo) * rnorm;
  const NpPoint pt = np_point(rho, sigma, mu, ztol);
  const Eigen::Index d = rho.rows();
  Matrix pos = Matrix::Zero(d, d), zero = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < pt.es.values.size(); ++k) {
    const double l = pt.es.values(k);
    const CVector v = pt.es.vectors.col(k);
    if (l > ztol)
      pos += v * v.adjoint();
    else if (l >= -ztol)
      zero += v * v.adjoint();
  }
  double c = 0.0;
  if (pt.mass_pos < target) {
    c = pt.mass_zero > 0 ? (target - pt.mass_pos) / pt.mass_zero : 1.0;
    c = std::clamp(c, 0.0, 1.0);
  }
  CertifiedValue out;
  out.witness = hermitian_part(pos + c * zero);
  out.threshold = mu;
  const double beta = std::max(real_trace(sigma * out.witness), 0.0);
  // Dual value at the multiplier; any mu >= 0 gives a lower bound on beta.
  double dual = mu * target - pt.pos_part;
  for (double m2 : {lo, 0.5 * (lo + hi)}) {
    const NpPoint q = np_point(rho, sigma, m2, 0.0);
    dual = std::max(dual, m2 * target - q.pos_part);
  }
  out.beta = beta;
  out.gap = std::abs(beta - dual);
  out.value = beta <= 1e-15 * std::max(1.0, real_trace(sigma)) ? kInfinity : -std::log2(beta);
  return out;
}

// ---------------------------------------------------------------------------
// Measured divergences

namespace {

// Isometry onto supp(sigma).
Matrix support_basis(const EigenSystem& es) {
  return es.vectors.leftCols(static_cast<Eigen::Index>(numerical_rank(es)));
}

// Completes the columns of w (orthonormal) to a full basis of the ambient space.
Matrix complete_basis(const Matrix& w, const Matrix& kernel) {
  Matrix u(w.rows(), w.rows());
  u.leftCols(w.cols()) = w;
  u.rightCols(w.rows() - w.cols()) = kernel;
  return u;
}

}  // namespace

CertifiedValue measured_relative(const Matrix& rho, const Matrix& sigma, const MeasuredOptions& options) {
  check_pair(rho, sigma, "measured_relative");
  const EigenSystem se = herm_eig(sigma);
  CertifiedValue out;
  out.gap_known = false;
  if (outside_mass(rho, se) > kSupportTol) {
    out.value = kInfinity;
    out.witness = se.vectors;
    return out;
  }
  const Matrix s = support_basis(se);
  const Matrix kernel = se.vectors.rightCols(se.vectors.cols() - s.cols());
  const Matrix a = hermitian_part(s.adjoint() * rho * s);
  const Matrix b = hermitian_part(s.adjoint() * sigma * s);
  const VariationalResult vr = solve_variational(a, b, 1.0);
  Matrix basis = complete_basis(s * vr.omega_eig.vectors, kernel);
  double best = basis_divergence(rho, sigma, 1.0, basis);
  const BasisAscentResult br = basis_ascent(rho, sigma, 1.0, basis, options.ascent_iter);
  if (br.value > best) {
    best = br.value;
    basis = br.basis;
  }
  out.value = std::max(best, 0.0);
  out.witness = basis;
  out.gap = std::max(vr.decrement, 0.0);
  out.converged = vr.converged;
  return out;
}

CertifiedValue measured_renyi(const Matrix& rho, const Matrix& sigma, double alpha, const MeasuredOptions& options) {
  DivergenceSpec{Family::measured_renyi, alpha, 0.0}.validate();
  check_pair(rho, sigma, "measured_renyi");
  const EigenSystem se = herm_eig(sigma);
  CertifiedValue out;
  out.gap_known = false;
  if (alpha > 1.0 && outside_mass(rho, se) > kSupportTol) {
    out.value = kInfinity;
    out.witness = se.vectors;
    return out;
  }
  const Eigen::Index d = rho.rows();
  std::vector<Matrix> starts;
  if (alpha >= 0.5) {
    Matrix a = rho, b = sigma, lift = Matrix::Identity(d, d), kernel(d, 0);
    if (alpha > 1.0) {
      lift = support_basis(se);
      kernel = se.vectors.rightCols(d - lift.cols());
      a = hermitian_part(lift.adjoint() * rho * lift);
      b = hermitian_part(lift.adjoint() * sigma * lift);
    }
    try {
      const VariationalResult vr = solve_variational(a, b, alpha);
      starts.push_back(complete_basis(lift * vr.omega_eig.vectors, kernel));
      out.converged = vr.converged;
    } catch (const SolverError&) {
      out.converged = false;
    }
  }
  starts.push_back(herm_eig(rho).vectors);
  starts.push_back(se.vectors);
  for (int r = 0; r < options.restarts; ++r)
    starts.push_back(random_unitary(static_cast<std::size_t>(d), options.seed + static_cast<std::uint64_t>(r)));

  double best = -kInfinity;
  Matrix best_basis = starts.front();
  for (const auto& st : starts) {
    const double v0 = basis_divergence(rho, sigma, alpha, st);
    if (v0 > best) {
      best = v0;
      best_basis = st;
    }
    if (is_infinite(v0)) break;
    const BasisAscentResult br = basis_ascent(rho, sigma, alpha, st, options.ascent_iter);
    if (br.value > best) {
      best = br.value;
      best_basis = br.basis;
    }
  }
  out.value = best;
  out.witness = best_basis;
  return out;
}

CertifiedValue evaluate(const DivergenceSpec& spec, const Matrix& rho, const Matrix& sigma) {
  spec.validate();
  CertifiedValue out;
  switch (spec.family) {
    case Family::umegaki: out.value = umegaki(rho, sigma); return out;
    case Family::sandwiched: out.value = sandwiched(rho, sigma, spec.alpha); return out;
    case Family::petz: out.value = petz(rho, sigma, spec.alpha); return out;
    case Family::max: out.value = dmax(rho, sigma); return out;
    case Family::measured: return measured_relative(rho, sigma);
    case Family::measured_renyi: return measured_renyi(rho, sigma, spec.alpha);
    case Family::hypothesis: return hypothesis_testing(rho, sigma, spec.epsilon);
  }
  return out;
}

double divergence(const DivergenceSpec& spec, const Matrix& rho, const Matrix& sigma) {
  return evaluate(spec, rho, sigma).value;
}

}  // namespace divlab
