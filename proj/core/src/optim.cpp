#include "optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace divlab::optim {

RVector pack(const Matrix& m) {
  RVector v(2 * m.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i, ++k) {
      v(k) = m(i, j).real();
      v(k + m.size()) = m(i, j).imag();
    }
  return v;
}

Matrix unpack(const RVector& v, Eigen::Index rows, Eigen::Index cols, Eigen::Index offset) {
  Matrix m(rows, cols);
  const Eigen::Index n = rows * cols;
  Eigen::Index k = offset;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i, ++k) m(i, j) = Complex(v(k), v(k + n));
  return m;
}

LbfgsResult lbfgs_minimize(const Objective& f, RVector x0, int max_iter, int memory, double grad_tol) {
  LbfgsResult res;
  RVector x = std::move(x0);
  RVector g(x.size());
  double fx = f(x, &g);
  std::deque<RVector> ss, ys;
  std::deque<double> rhos;
  int stall = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    if (!std::isfinite(fx) || g.norm() <= grad_tol) break;
    RVector q = g;
    std::vector<double> alphas(ss.size());
    for (int k = static_cast<int>(ss.size()) - 1; k >= 0; --k) {
      alphas[static_cast<std::size_t>(k)] = rhos[static_cast<std::size_t>(k)] * ss[static_cast<std::size_t>(k)].dot(q);
      q -= alphas[static_cast<std::size_t>(k)] * ys[static_cast<std::size_t>(k)];
    }
    double h0 = 1.0;
    if (!ss.empty()) h0 = ss.back().dot(ys.back()) / ys.back().squaredNorm();
    else h0 = 1.0 / std::max(g.norm(), 1e-300);
    RVector r = h0 * q;
    for (std::size_t k = 0; k < ss.size(); ++k) {
      const double beta = rhos[k] * ys[k].dot(r);
      r += (alphas[k] - beta) * ss[k];
    }
    RVector dir = -r;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      dir = -g;
      slope = -g.squaredNorm();
      ss.clear();
      ys.clear();
      rhos.clear();
    }
    double t = 1.0;
    RVector xn, gn(x.size());
    double fn = 0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      xn = x + t * dir;
      fn = f(xn, &gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
        ok = true;
        break;
      }
    }
    if (!ok) break;
    const RVector s = xn - x;
    const RVector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      ss.push_back(s);
      ys.push_back(y);
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > memory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
    const double improvement = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (improvement <= 1e-16 * std::max(1.0, std::abs(fx))) {
      if (++stall >= 3) break;
    } else {
      stall = 0;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol, double* f_min) {
  constexpr double kInvPhi = 0.61803398874989484820;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  double best_t = fc <= fd ? c : d;
  double best_f = std::min(fc, fd);
  for (double t : {lo, hi}) {
    const double ft = f(t);
    if (ft < best_f) {
      best_f = ft;
      best_t = t;
    }
  }
  if (f_min) *f_min = best_f;
  return best_t;
}

}  // namespace divlab::optim
