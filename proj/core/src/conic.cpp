#include "divlab/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divlab/errors.hpp"

namespace divlab::conic {

namespace {

using RMatrix = Eigen::MatrixXd;

RMatrix embed(const Matrix& h) {
  const Eigen::Index n = h.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  out.bottomRightCorner(n, n) = h.real();
  return out;
}

Matrix unembed_dual(const RMatrix& x) {
  const Eigen::Index n = x.rows() / 2;
  const RMatrix p = x.topLeftCorner(n, n);
  const RMatrix q = x.topRightCorner(n, n);
  const RMatrix r = x.bottomRightCorner(n, n);
  Matrix out(n, n);
  out.real() = p + r;
  out.imag() = q.transpose() - q;
  return out;
}

double max_step(const RMatrix& x, const RMatrix& dx) {
  Eigen::LLT<RMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const RMatrix l = llt.matrixL();
  const RMatrix linv_dx = l.triangularView<Eigen::Lower>().solve(dx);
  const RMatrix m = l.triangularView<Eigen::Lower>().solve(linv_dx.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

Matrix HermitianVar::value(const RVector& y) const {
  Matrix x = offset;
  for (std::size_t k = 0; k < basis.size(); ++k) x += y(static_cast<Eigen::Index>(first + k)) * basis[k];
  return x;
}

std::size_t LmiProblem::add_scalars(std::size_t count) {
  const std::size_t first = cost_.size();
  cost_.resize(first + count, 0.0);
  terms_.resize(first + count);
  return first;
}

HermitianVar LmiProblem::add_hermitian(std::size_t dim, bool trace_one) {
  HermitianVar v;
  v.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  v.offset = Matrix::Zero(d, d);
  if (trace_one) {
    v.offset = Matrix::Identity(d, d) / static_cast<double>(dim);
    for (Eigen::Index j = 0; j + 1 < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(j, j) = 1.0;
      e(d - 1, d - 1) = -1.0;
      v.basis.push_back(e);
    }
  } else {
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(j, j) = 1.0;
      v.basis.push_back(e);
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j + 1; k < d; ++k) {
      Matrix e = Matrix::Zero(d, d);
      e(j, k) = e(k, j) = 1.0;
      v.basis.push_back(e);
      Matrix f = Matrix::Zero(d, d);
      f(j, k) = Complex(0, -1);
      f(k, j) = Complex(0, 1);
      v.basis.push_back(f);
    }
  }
  v.first = add_scalars(v.basis.size());
  return v;
}

HermitianVar LmiProblem::add_complex(std::size_t dim) {
  HermitianVar v;
  v.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  v.offset = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      Matrix e = Matrix::Zero(d, d);
      e(j, k) = 1.0;
      v.basis.push_back(e);
      e(j, k) = Complex(0, 1);
      v.basis.push_back(e);
    }
  }
  v.first = add_scalars(v.basis.size());
  return v;
}

std::size_t LmiProblem::add_block(std::size_t dim) {
  block_dims_.push_back(dim);
  const auto d = static_cast<Eigen::Index>(dim);
  constants_.push_back(Matrix::Zero(d, d));
  return block_dims_.size() - 1;
}

void LmiProblem::add_coefficient(std::size_t block, std::size_t var, const Matrix& coeff) {
  if (block >= block_dims_.size() || var >= cost_.size())
    throw ValidationError("LmiProblem: block or variable index out of range");
  if (static_cast<std::size_t>(coeff.rows()) != block_dims_[block] || !is_hermitian(coeff, 1e-12))
    throw ValidationError("LmiProblem: coefficient must be Hermitian with the block's shape");
  if (max_abs(coeff) == 0.0) return;
  for (auto& t : terms_[var]) {
    if (t.block == block) {
      t.coeff += hermitian_part(coeff);
      return;
    }
  }
  terms_[var].push_back({block, hermitian_part(coeff)});
}

void LmiProblem::add_constant(std::size_t block, const Matrix& coeff) {
  if (block >= block_dims_.size()) throw ValidationError("LmiProblem: block index out of range");
  if (static_cast<std::size_t>(coeff.rows()) != block_dims_[block] || !is_hermitian(coeff, 1e-12))
    throw ValidationError("LmiProblem: constant must be Hermitian with the block's shape");
  constants_[block] += hermitian_part(coeff);
}

void LmiProblem::add_linear(std::size_t block, const HermitianVar& x,
                            const std::function<Matrix(const Matrix&)>& map) {
  for (std::size_t k = 0; k < x.basis.size(); ++k) add_coefficient(block, x.first + k, map(x.basis[k]));
  if (max_abs(x.offset) > 0) add_constant(block, map(x.offset));
}

void LmiProblem::set_cost(std::size_t var, double c) {
  if (var >= cost_.size()) throw ValidationError("LmiProblem: variable index out of range");
  cost_[var] = c;
}

void LmiProblem::add_cost(const HermitianVar& x, const Matrix& weight) {
  for (std::size_t k = 0; k < x.basis.size(); ++k)
    cost_[x.first + k] += (weight * x.basis[k]).trace().real();
  cost_offset_ += (weight * x.offset).trace().real();
}

Solution solve(const LmiProblem& problem, const Options& options) {
  const std::size_t m = problem.num_variables();
  const std::size_t nb = problem.num_blocks();
  if (m == 0 || nb == 0) throw ValidationError("conic::solve: empty problem");

  struct RTerm {
    std::size_t block;
    RMatrix a;
  };
  std::vector<std::vector<RTerm>> terms(m);
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& t : problem.terms()[i]) terms[i].push_back({t.block, embed(t.coeff)});
  std::vector<RMatrix> cmat(nb);  // Z = A^T y - C
  double total_n = 0;
  double c_norm = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    cmat[b] = -embed(problem.constants()[b]);
    total_n += static_cast<double>(cmat[b].rows());
    c_norm += cmat[b].squaredNorm();
  }
  c_norm = std::sqrt(c_norm);
  RVector bvec(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) bvec(static_cast<Eigen::Index>(i)) = problem.cost()[i];
  const double b_norm = bvec.norm();

  double a_norm = 0;
  for (const auto& ts : terms)
    for (const auto& t : ts) a_norm = std::max(a_norm, t.a.norm());

  const double kx = std::max({10.0, std::sqrt(total_n), (1.0 + b_norm) / (1.0 + a_norm)});
  const double kz = std::max({10.0, std::sqrt(total_n), c_norm, a_norm});
  std::vector<RMatrix> x(nb), z(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto n = cmat[b].rows();
    x[b] = kx * RMatrix::Identity(n, n);
    z[b] = kz * RMatrix::Identity(n, n);
  }
  RVector y = RVector::Zero(static_cast<Eigen::Index>(m));

  auto apply_a = [&](const std::vector<RMatrix>& mats) {
    RVector out = RVector::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& t : terms[i]) out(static_cast<Eigen::Index>(i)) += (t.a.cwiseProduct(mats[t.block])).sum();
    return out;
  };
  auto apply_at = [&](const RVector& v) {
    std::vector<RMatrix> out(nb);
    for (std::size_t b = 0; b < nb; ++b) out[b] = RMatrix::Zero(cmat[b].rows(), cmat[b].cols());
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& t : terms[i]) out[t.block] += v(static_cast<Eigen::Index>(i)) * t.a;
    return out;
  };

  Solution sol;
  int stalls = 0;
  std::vector<RMatrix> prev_x, prev_z;
  RVector prev_y;
  double prev_pinf = 0, prev_dinf = 0, prev_gap = 0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    sol.iterations = iter;
    const RVector rp = bvec - apply_a(x);
    std::vector<RMatrix> dres = apply_at(y);
    double d_norm = 0, mu = 0, pobj = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      dres[b] -= cmat[b] + z[b];
      d_norm += dres[b].squaredNorm();
      mu += (x[b].cwiseProduct(z[b])).sum();
      pobj += (cmat[b].cwiseProduct(x[b])).sum();
    }
    d_norm = std::sqrt(d_norm);
    mu /= total_n;
    const double dobj = bvec.dot(y);
    const double gap = std::abs(dobj - pobj) / (1.0 + std::abs(dobj) + std::abs(pobj));
    sol.primal_infeasibility = rp.norm() / (1.0 + b_norm);
    sol.dual_infeasibility = d_norm / (1.0 + c_norm);
    if (sol.primal_infeasibility <= options.tol && sol.dual_infeasibility <= options.tol &&
        gap <= options.tol) {
      sol.converged = true;
      break;
    }

    std::vector<RMatrix> zinv(nb);
    bool lost = false;
    for (std::size_t b = 0; b < nb && !lost; ++b) {
      Eigen::LLT<RMatrix> llt(z[b]);
      if (llt.info() != Eigen::Success) {
        lost = true;
        break;
      }
      zinv[b] = llt.solve(RMatrix::Identity(z[b].rows(), z[b].cols()));
    }
    if (lost) {
      // Return the last iterate with a positive definite slack.
      if (iter == 0) throw SolverError("conic::solve: initial slack is not positive definite");
      x = std::move(prev_x);
      z = std::move(prev_z);
      y = std::move(prev_y);
      sol.iterations = iter - 1;
      sol.primal_infeasibility = prev_pinf;
      sol.dual_infeasibility = prev_dinf;
      const double loose = 1e3 * options.tol;
      sol.converged = prev_pinf <= loose && prev_dinf <= loose && prev_gap <= loose;
      break;
    }
    prev_x = x;
    prev_z = z;
    prev_y = y;
    prev_pinf = sol.primal_infeasibility;
    prev_dinf = sol.dual_infeasibility;
    prev_gap = gap;
    // Schur complement O_ij = tr(A_i Z^{-1} A_j X).
    std::vector<std::vector<RMatrix>> g(m);
    for (std::size_t j = 0; j < m; ++j)
      for (const auto& t : terms[j]) g[j].push_back(zinv[t.block] * t.a * x[t.block]);
    RMatrix schur = RMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        double s = 0;
        for (const auto& ti : terms[i])
          for (std::size_t k = 0; k < terms[j].size(); ++k)
            if (terms[j][k].block == ti.block) s += (ti.a.transpose().cwiseProduct(g[j][k])).sum();
        schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
        schur(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
      }
    }
    const double reg = 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
    schur.diagonal().array() += reg;
    Eigen::LDLT<RMatrix> ldlt(schur);
    if (ldlt.info() != Eigen::Success) throw SolverError("conic::solve: Schur complement factorization failed");

    auto direction = [&](double sigma, const std::vector<RMatrix>* dz_a,
                         const std::vector<RMatrix>* dx_a, RVector& dy,
                         std::vector<RMatrix>& dz, std::vector<RMatrix>& dx) {
      std::vector<RMatrix> base(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        base[b] = sigma * mu * zinv[b] - x[b] - zinv[b] * dres[b] * x[b];
        if (dz_a) base[b] -= zinv[b] * (*dz_a)[b] * (*dx_a)[b];
      }
      dy = ldlt.solve(apply_a(base) - rp);
      dz = apply_at(dy);
      dx.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dz[b] += dres[b];
        RMatrix t = sigma * mu * zinv[b] - x[b] - zinv[b] * dz[b] * x[b];
        if (dz_a) t -= zinv[b] * (*dz_a)[b] * (*dx_a)[b];
        dx[b] = sym(t);
      }
    };
    auto steps = [&](const std::vector<RMatrix>& dx, const std::vector<RMatrix>& dz) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(x[b], dx[b]));
        ad = std::min(ad, max_step(z[b], dz[b]));
      }
      return std::pair<double, double>{ap, ad};
    };

    RVector dy;
    std::vector<RMatrix> dz, dx;
    if (options.mehrotra) {
      direction(0.0, nullptr, nullptr, dy, dz, dx);
      auto [ap, ad] = steps(dx, dz);
      ap = std::min(1.0, ap);
      ad = std::min(1.0, ad);
      double mu_a = 0;
      for (std::size_t b = 0; b < nb; ++b)
        mu_a += ((x[b] + ap * dx[b]).cwiseProduct(z[b] + ad * dz[b])).sum();
      mu_a /= total_n;
      const double sigma = std::clamp(std::pow(mu_a / mu, 3.0), 0.0, 1.0);
      const auto dx_a = dx;
      const auto dz_a = dz;
      direction(sigma, &dz_a, &dx_a, dy, dz, dx);
    } else {
      direction(options.fixed_sigma, nullptr, nullptr, dy, dz, dx);
    }
    auto [ap, ad] = steps(dx, dz);
    ap = std::min(1.0, 0.98 * ap);
    ad = std::min(1.0, 0.98 * ad);
    if (ap < 1e-10 && ad < 1e-10) {
      if (++stalls > 3) break;
    } else {
      stalls = 0;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      x[b] = sym(x[b] + ap * dx[b]);
      z[b] = sym(z[b] + ad * dz[b]);
    }
    y += ad * dy;
  }

  sol.y = y;
  sol.primal_objective = bvec.dot(y) + problem.cost_offset();
  sol.dual_objective = problem.cost_offset();
  sol.slack.resize(nb);
  sol.dual.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    Matrix s = problem.constants()[b];
    sol.slack[b] = s;
    sol.dual[b] = unembed_dual(x[b]);
    sol.dual_objective -= (problem.constants()[b] * sol.dual[b]).trace().real();
  }
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& t : problem.terms()[i]) sol.slack[t.block] += y(static_cast<Eigen::Index>(i)) * t.coeff;
  return sol;
}

}  // namespace divlab::conic
