#pragma once

// Independent reference computations used by the tests. Everything here is
// written against Eigen directly so that it shares no code path with the
// library routines it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline Eigen::SelfAdjointEigenSolver<Matrix> eig(const Matrix& h) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (h + h.adjoint()));
}

template <class F>
Matrix func(const Matrix& h, F f, double cut = 0.0) {
  const auto es = eig(h);
  RVector v = es.eigenvalues();
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = (v(k) > cut * top) ? f(v(k)) : 0.0;
  return es.eigenvectors() * v.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix powm(const Matrix& h, double p) {
  return func(h, [p](double x) { return std::pow(x, p); }, 1e-12);
}

inline Matrix logm(const Matrix& h) {
  return func(h, [](double x) { return std::log(x); }, 1e-12);
}

inline double rtrace(const Matrix& a) { return a.trace().real(); }

inline double entropy_bits(const Matrix& rho) {
  const RVector v = eig(rho).eigenvalues();
  double h = 0;
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (v(k) > 1e-15) h -= v(k) * std::log2(v(k));
  return h;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Trace over the second factor of a (d1 d2) x (d1 d2) matrix.
inline Matrix trace_second(const Matrix& a, Eigen::Index d1, Eigen::Index d2) {
  Matrix out = Matrix::Zero(d1, d1);
  for (Eigen::Index i = 0; i < d1; ++i)
    for (Eigen::Index j = 0; j < d1; ++j)
      for (Eigen::Index k = 0; k < d2; ++k) out(i, j) += a(i * d2 + k, j * d2 + k);
  return out;
}

/// Trace over the first factor.
inline Matrix trace_first(const Matrix& a, Eigen::Index d1, Eigen::Index d2) {
  Matrix out = Matrix::Zero(d2, d2);
  for (Eigen::Index i = 0; i < d2; ++i)
    for (Eigen::Index j = 0; j < d2; ++j)
      for (Eigen::Index k = 0; k < d1; ++k) out(i, j) += a(k * d2 + i, k * d2 + j);
  return out;
}

inline Matrix random_density(int d, std::mt19937_64& rng, bool real_only = false) {
  std::normal_distribution<double> g;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), real_only ? 0.0 : g(rng));
  Matrix r = a * a.adjoint();
  return r / rtrace(r);
}

inline Matrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(d, d);
}

inline double umegaki_bits(const Matrix& rho, const Matrix& sigma) {
  const auto es = eig(sigma);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()(k) <= 1e-12 * top) {
      const auto v = es.eigenvectors().col(k);
      if ((v.adjoint() * rho * v)(0, 0).real() > 1e-12) return std::numeric_limits<double>::infinity();
    }
  return rtrace(rho * (logm(rho) - logm(sigma))) / std::log(2.0);
}

inline double sandwiched_bits(const Matrix& rho, const Matrix& sigma, double a) {
  const Matrix s = powm(sigma, (1 - a) / (2 * a));
  return std::log2(rtrace(powm(s * rho * s, a))) / (a - 1);
}

inline double petz_bits(const Matrix& rho, const Matrix& sigma, double a) {
  return std::log2(rtrace(powm(rho, a) * powm(sigma, 1 - a))) / (a - 1);
}

/// Classical Neyman-Pearson: minimal type-II error with type-I <= eps,
/// randomized on the boundary outcome.
inline double classical_beta(const std::vector<double>& p, const std::vector<double>& q, double eps) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    // descending likelihood ratio p/q, outcomes with q = 0 first
    return p[a] * q[b] > p[b] * q[a];
  });
  double need = 1.0 - eps, beta = 0.0;
  for (std::size_t k : order) {
    if (need <= 0) break;
    if (p[k] <= 0) continue;
    const double take = std::min(1.0, need / p[k]);
    beta += take * q[k];
    need -= take * p[k];
  }
  return beta;
}

/// Classical divergence in bits (alpha == 1: KL).
inline double classical_div(const std::vector<double>& p, const std::vector<double>& q, double a) {
  if (a == 1.0) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0) s += p[i] * std::log2(p[i] / q[i]);
    return s;
  }
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0 || a < 1) s += std::pow(p[i], a) * std::pow(q[i], 1 - a);
  return std::log2(s) / (a - 1);
}

/// Qubit measured divergence by brute force over projective measurements on a
/// Bloch-sphere grid.
inline double qubit_measured(const Matrix& rho, const Matrix& sigma, double a, int grid = 200) {
  double best = -1e300;
  const double pi = std::acos(-1.0);
  for (int i = 0; i <= grid; ++i) {
    const double th = pi * i / grid;
    for (int j = 0; j < 2 * grid; ++j) {
      const double ph = pi * j / grid;
      Eigen::Vector2cd v(std::cos(th / 2), std::polar(std::sin(th / 2), ph));
      const Matrix p0 = v * v.adjoint();
      const double r0 = rtrace(rho * p0), s0 = rtrace(sigma * p0);
      const double r1 = rtrace(rho) - r0, s1 = rtrace(sigma) - s0;
      best = std::max(best, classical_div({r0, r1}, {s0, s1}, a));
    }
  }
  return best;
}

/// Same brute force on a coarse grid followed by a compass refinement of the
/// measurement direction.
inline double qubit_measured_refined(const Matrix& rho, const Matrix& sigma, double a, int grid = 24) {
  const double pi = std::acos(-1.0);
  auto value = [&](double th, double ph) {
    Eigen::Vector2cd v(std::cos(th / 2), std::polar(std::sin(th / 2), ph));
    const Matrix p0 = v * v.adjoint();
    const double r0 = rtrace(rho * p0), s0 = rtrace(sigma * p0);
    return classical_div({r0, rtrace(rho) - r0}, {s0, rtrace(sigma) - s0}, a);
  };
  double best = -1e300, bt = 0, bp = 0;
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; j < 2 * grid; ++j) {
      const double th = pi * i / grid, ph = pi * j / grid, v = value(th, ph);
      if (v > best) {
        best = v;
        bt = th;
        bp = ph;
      }
    }
  for (double step = pi / grid; step > 1e-7; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [dt, dp] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
        const double v = value(bt + dt * step, bp + dp * step);
        if (v > best + 1e-15) {
          best = v;
          bt += dt * step;
          bp += dp * step;
          moved = true;
        }
      }
    }
  }
  return best;
}

/// Dual lower bound on the hypothesis-testing type-II error, maximized over a
/// fine grid of multipliers.
inline double np_dual(const Matrix& rho, const Matrix& sigma, double eps, double mu_max, int grid = 20000) {
  double best = 0;
  for (int k = 0; k <= grid; ++k) {
    const double mu = mu_max * k / grid;
    const RVector v = eig(mu * rho - sigma).eigenvalues();
    double pos = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) pos += std::max(v(i), 0.0);
    best = std::max(best, mu * (1 - eps) - pos);
  }
  return best;
}

/// Optimal type-II error by golden-section search on the concave dual
/// t (1 - eps) - tr(t rho - sigma)_+ over t in [0, 1/eps].
inline double np_beta(const Matrix& rho, const Matrix& sigma, double eps) {
  auto dual = [&](double t) {
    const RVector v = eig(t * rho - sigma).eigenvalues();
    double pos = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) pos += std::max(v(i), 0.0);
    return t * (1 - eps) - pos;
  };
  const double g = (std::sqrt(5.0) - 1) / 2;
  double lo = 0, hi = 1 / eps;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = dual(x1), f2 = dual(x2);
  for (int k = 0; k < 200 && hi - lo > 1e-13; ++k) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = dual(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = dual(x1);
    }
  }
  return std::max(f1, f2);
}

/// Kraus operators of the generalized amplitude damping channel, written out
/// from the textbook form.
inline std::vector<Matrix> gad_kraus(double g, double n) {
  std::vector<Matrix> k(4, Matrix::Zero(2, 2));
  k[0](0, 0) = std::sqrt(1 - n);
  k[0](1, 1) = std::sqrt(1 - n) * std::sqrt(1 - g);
  k[1](0, 1) = std::sqrt(g * (1 - n));
  k[2](0, 0) = std::sqrt(n) * std::sqrt(1 - g);
  k[2](1, 1) = std::sqrt(n);
  k[3](1, 0) = std::sqrt(g * n);
  return k;
}

inline Matrix apply_kraus(const std::vector<Matrix>& ks, const Matrix& rho) {
  Matrix out = Matrix::Zero(ks[0].rows(), ks[0].rows());
  for (const Matrix& k : ks) out += k * rho * k.adjoint();
  return out;
}

inline Matrix bloch_state(double x, double y, double z) {
  Matrix r(2, 2);
  r << Complex(1 + z, 0), Complex(x, -y), Complex(x, y), Complex(1 - z, 0);
  return 0.5 * r;
}

}  // namespace oracle
