#include "divlab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divlab/errors.hpp"

namespace divlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Program {
  ScalarFunction f;
  double ca = 1.0;
  double cb = -1.0;
  double c0 = 1.0;
  double sign = 1.0;  // value = sign * phi
};

Program make_program(double alpha) {
  Program p;
  if (alpha == 1.0) {
    p.f = ScalarFunction::log();
    p.ca = 1.0;
    p.cb = -1.0;
    p.c0 = 1.0;
    p.sign = 1.0;
  } else if (alpha >= 0.5 && alpha < 1.0) {
    p.f = ScalarFunction::power((alpha - 1.0) / alpha);
    p.ca = -alpha;
    p.cb = -(1.0 - alpha);
    p.c0 = 0.0;
    p.sign = -1.0;
  } else if (alpha > 1.0) {
    p.f = ScalarFunction::power((alpha - 1.0) / alpha);
    p.ca = alpha;
    p.cb = -(alpha - 1.0);
    p.c0 = 0.0;
    p.sign = 1.0;
  } else {
    throw ValidationError("solve_variational: alpha must be >= 1/2");
  }
  return p;
}

// phi(omega), the maximized objective; -inf outside the domain.
double phi(const Program& p, const Matrix& at, const Matrix& bt, const EigenSystem& es) {
  if (es.min() <= 0.0) return -kInf;
  double s = 0;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) s += p.f.value(es.values(k)) * at(k, k).real();
  double tb = 0;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) tb += es.values(k) * bt(k, k).real();
  return p.ca * s + p.cb * tb + p.c0;
}

}  // namespace

double variational_objective(const Matrix& a, const Matrix& b, double alpha, const EigenSystem& omega) {
  const Program p = make_program(alpha);
  const Matrix at = omega.vectors.adjoint() * a * omega.vectors;
  const Matrix bt = omega.vectors.adjoint() * b * omega.vectors;
  return p.sign * phi(p, at, bt, omega);
}

VariationalResult solve_variational(const Matrix& a, const Matrix& b, double alpha, const Matrix* warm_start,
                                    const VariationalOptions& options) {
  const Program prog = make_program(alpha);
  const Eigen::Index d = a.rows();
  if (b.rows() != d || a.cols() != d || b.cols() != d)
    throw ValidationError("solve_variational: dimension mismatch");

  Matrix omega = warm_start ? *warm_start : Matrix(Matrix::Identity(d, d));
  EigenSystem es = herm_eig(hermitian_part(omega));
  if (es.min() <= 0.0) {
    omega = Matrix::Identity(d, d);
    es = herm_eig(omega);
  }
  VariationalResult res;
  double lm = 0.0;
  std::vector<double> table(static_cast<std::size_t>(d * d * d));
  const auto n2 = d * d;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    res.iterations = iter + 1;
    const Matrix& v = es.vectors;
    const Matrix at = v.adjoint() * a * v;
    const Matrix bt = v.adjoint() * b * v;
    const double cur = phi(prog, at, bt, es);

    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        g(i, j) = prog.ca * prog.f.first_divided(es.values(i), es.values(j)) * at(i, j) + prog.cb * bt(i, j);

    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index j = 0; j < d; ++j)
          table[static_cast<std::size_t>((i * d + k) * d + j)] =
              prog.f.second_divided(es.values(i), es.values(k), es.values(j));

    // Negative Hessian, acting on vec(Delta) with index i * d + j.
    Matrix hess = Matrix::Zero(n2, n2);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index row = i * d + j;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double t = table[static_cast<std::size_t>((i * d + k) * d + j)];
          hess(row, k * d + j) -= prog.ca * t * at(i, k);
          hess(row, i * d + k) -= prog.ca * t * at(k, j);
        }
      }
    }
    const double hscale = std::max(hess.cwiseAbs().maxCoeff(), 1e-300);
    CVector gvec(n2);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) gvec(i * d + j) = g(i, j);

    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Matrix m = hess;
      m.diagonal().array() += std::max(lm, 1e-14) * hscale;
      const CVector step = m.partialPivLu().solve(gvec);
      Matrix delta(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) delta(i, j) = step(i * d + j);
      delta = hermitian_part(delta);
      const double dec = hs_inner(g, delta);
      res.decrement = dec;
      if (!(dec > 0.0) || !std::isfinite(dec)) {
        lm = std::max(10.0 * lm, 1e-10);
        continue;
      }
      if (dec <= options.tol * std::max(1.0, std::abs(cur))) {
        res.converged = true;
        accepted = true;
        break;
      }
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        const Matrix trial = hermitian_part(omega + t * (v * delta * v.adjoint()));
        EigenSystem tes = herm_eig(trial);
        if (tes.min() <= 0.0) continue;
        const Matrix tat = tes.vectors.adjoint() * a * tes.vectors;
        const Matrix tbt = tes.vectors.adjoint() * b * tes.vectors;
        const double val = phi(prog, tat, tbt, tes);
        if (val >= cur + 1e-4 * t * dec) {
          omega = trial;
          es = std::move(tes);
          accepted = true;
          break;
        }
      }
      if (accepted) {
        lm = (t == 1.0) ? lm * 0.1 : lm;
      } else {
        lm = std::max(10.0 * lm, 1e-10);
      }
    }
    if (res.converged || !accepted) break;
  }

  const Matrix at = es.vectors.adjoint() * a * es.vectors;
  const Matrix bt = es.vectors.adjoint() * b * es.vectors;
  res.value = prog.sign * phi(prog, at, bt, es);
  res.omega = omega;
  const Matrix fw = mat_func(es, prog.f);
  if (alpha == 1.0) {
    res.grad_a = fw;
    res.grad_b = -omega;
  } else if (alpha < 1.0) {
    res.grad_a = alpha * fw;
    res.grad_b = (1.0 - alpha) * omega;
  } else {
    res.grad_a = alpha * fw;
    res.grad_b = -(alpha - 1.0) * omega;
  }
  res.omega_eig = std::move(es);
  return res;
}

double classical_divergence(const RVector& p, const RVector& q, double alpha) {
  if (p.size() != q.size()) throw ValidationError("classical_divergence: size mismatch");
  if (alpha == 1.0) {
    double s = 0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double pk = std::max(p(k), 0.0);
      const double qk = std::max(q(k), 0.0);
      if (pk == 0.0) continue;
      if (qk == 0.0) return kInf;
      s += pk * std::log(pk / qk);
    }
    return to_bits(s);
  }
  double sum = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double pk = std::max(p(k), 0.0);
    const double qk = std::max(q(k), 0.0);
    if (pk == 0.0) continue;
    if (qk == 0.0) {
      if (alpha > 1.0) return kInf;
      continue;
    }
    sum += std::pow(pk, alpha) * std::pow(qk, 1.0 - alpha);
  }
  if (sum <= 0.0) return kInf;
  return std::log2(sum) / (alpha - 1.0);
}

namespace {

void outcome_distributions(const Matrix& rho, const Matrix& sigma, const Matrix& u, RVector& p, RVector& q) {
  const Eigen::Index d = u.cols();
  p.resize(d);
  q.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    p(k) = std::max((u.col(k).adjoint() * rho * u.col(k))(0, 0).real(), 0.0);
    q(k) = std::max((u.col(k).adjoint() * sigma * u.col(k))(0, 0).real(), 0.0);
  }
  // Outcomes below the rank tolerance count as zero.
  const double pc = tol::rank_rel * p.maxCoeff(), qc = tol::rank_rel * q.maxCoeff();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (p(k) <= pc) p(k) = 0.0;
    if (q(k) <= qc) q(k) = 0.0;
  }
}

}  // namespace

double basis_divergence(const Matrix& rho, const Matrix& sigma, double alpha, const Matrix& u) {
  RVector p, q;
  outcome_distributions(rho, sigma, u, p, q);
  return classical_divergence(p, q, alpha);
}

BasisAscentResult basis_ascent(const Matrix& rho, const Matrix& sigma, double alpha, const Matrix& start,
                               int max_iter) {
  BasisAscentResult res;
  Matrix u = polar_isometry(start);
  double cur = basis_divergence(rho, sigma, alpha, u);
  res.value = cur;
  res.basis = u;
  if (!std::isfinite(cur)) return res;
  const Eigen::Index d = u.cols();
  double step = 0.5;
  constexpr double kFloor = 1e-300;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    RVector p, q;
    outcome_distributions(rho, sigma, u, p, q);
    RVector dp(d), dq(d);
    if (alpha == 1.0) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double pk = std::max(p(k), kFloor), qk = std::max(q(k), kFloor);
        dp(k) = std::log(pk / qk) + 1.0;
        dq(k) = -pk / qk;
      }
    } else {
      double qsum = 0;
      for (Eigen::Index k = 0; k < d; ++k)
        qsum += std::pow(std::max(p(k), kFloor), alpha) * std::pow(std::max(q(k), kFloor), 1.0 - alpha);
      for (Eigen::Index k = 0; k < d; ++k) {
        const double pk = std::max(p(k), kFloor), qk = std::max(q(k), kFloor);
        dp(k) = alpha * std::pow(pk, alpha - 1.0) * std::pow(qk, 1.0 - alpha) / (qsum * (alpha - 1.0));
        dq(k) = -std::pow(pk, alpha) * std::pow(qk, -alpha) / qsum;
      }
    }
    Matrix g(d, d);
    for (Eigen::Index k = 0; k < d; ++k) g.col(k) = 2.0 * (dp(k) * (rho * u.col(k)) + dq(k) * (sigma * u.col(k)));
    const Matrix uhg = u.adjoint() * g;
    const Matrix omega = 0.5 * (uhg - uhg.adjoint());
    const double slope = omega.squaredNorm();
    if (!std::isfinite(slope) || std::sqrt(slope) <= 1e-10) break;
    bool improved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Matrix trial = u * polar_isometry(Matrix::Identity(d, d) + step * omega);
      const double val = basis_divergence(rho, sigma, alpha, trial);
      if (std::isfinite(val) && val >= cur + 1e-4 * step * to_bits(slope) * 0.5) {
        u = trial;
        cur = val;
        improved = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  res.value = cur;
  res.basis = u;
  return res;
}

}  // namespace divlab
