#include "divlab/channel_div.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "divlab/conic.hpp"
#include "divlab/errors.hpp"
#include "divlab/variational.hpp"
#include "optim.hpp"

namespace divlab {

namespace {

Matrix smooth(const Matrix& x, double delta) {
  const EigenSystem es = herm_eig(x);
  if (es.min() > tol::rank_rel * std::max(es.max(), 0.0) * 1e3) return x;
  const auto d = x.rows();
  return (1.0 - delta) * x + delta * (real_trace(x) / static_cast<double>(d)) * Matrix::Identity(d, d);
}

// ---------------------------------------------------------------------------
// Objectives on output pairs, always minimized.

class PairObjective {
 public:
  virtual ~PairObjective() = default;
  virtual double value(const Matrix& x, const Matrix& y) = 0;
  /// Gradient at (x, y); callers pass smoothed operators.
  virtual void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) = 0;
  /// Divergence in bits corresponding to objective value f (monotone in f).
  virtual double to_bits(double f) const = 0;
  /// Divergence at an output pair, evaluated by the state-level routine.
  virtual double exact(const Matrix& x, const Matrix& y) const = 0;
};

class UmegakiObjective final : public PairObjective {
 public:
  double value(const Matrix& x, const Matrix& y) override {
    const EigenSystem ye = herm_eig(y);
    if (real_trace(x) - real_trace(support_projector(ye) * x) > 1e-9) return kInfinity;
    const EigenSystem xe = herm_eig(x);
    double s = 0;
    for (Eigen::Index k = 0; k < xe.values.size(); ++k)
      if (xe.values(k) > tol::rank_rel * xe.max()) s += xe.values(k) * std::log(xe.values(k));
    return s - real_trace(x * mat_func(ye, ScalarFunction::log(), true));
  }
  void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) override {
    const EigenSystem ye = herm_eig(y);
    const EigenSystem xe = herm_eig(x);
    const auto d = x.rows();
    gx = mat_func(xe, ScalarFunction::log()) - mat_func(ye, ScalarFunction::log()) + Matrix::Identity(d, d);
    gy = -frechet_matfunc(ye, ScalarFunction::log(), x);
  }
  double to_bits(double f) const override { return divlab::to_bits(f); }
  double exact(const Matrix& x, const Matrix& y) const override { return umegaki(x, y); }
};

double sandwiched_q(const Matrix& x, const Matrix& y, double alpha) {
  const EigenSystem ye = herm_eig(y);
  const Matrix p = mat_func(ye, ScalarFunction::power((1.0 - alpha) / (2.0 * alpha)), true);
  const EigenSystem ze = herm_eig(hermitian_part(p * x * p));
  double q = 0;
  for (Eigen::Index k = 0; k < ze.values.size(); ++k)
    if (ze.values(k) > 0) q += std::pow(ze.values(k), alpha);
  return q;
}

class SandwichedObjective final : public PairObjective {
 public:
  explicit SandwichedObjective(double alpha) : alpha_(alpha) {}
  double value(const Matrix& x, const Matrix& y) override {
    if (alpha_ > 1.0 && !support_contained(x, y)) return kInfinity;
    const double q = sandwiched_q(x, y, alpha_);
    return alpha_ > 1.0 ? q : -q;
  }
  void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) override {
    const double gamma = (1.0 - alpha_) / (2.0 * alpha_);
    const EigenSystem ye = herm_eig(y);
    const ScalarFunction pg = ScalarFunction::power(gamma);
    const Matrix p = mat_func(ye, pg);
    const EigenSystem ze = herm_eig(hermitian_part(p * x * p));
    const Matrix zp = mat_func(ze, ScalarFunction::power(alpha_ - 1.0));
    gx = alpha_ * p * zp * p;
    const Matrix k = x * p * zp + zp * p * x;
    gy = alpha_ * frechet_matfunc(ye, pg, hermitian_part(k));
    if (alpha_ < 1.0) {
      gx = -gx;
      gy = -gy;
    }
  }
  double to_bits(double f) const override {
    const double q = alpha_ > 1.0 ? f : -f;
    if (q <= 0.0) return alpha_ > 1.0 ? -kInfinity : kInfinity;
    return std::log2(q) / (alpha_ - 1.0);
  }
  double exact(const Matrix& x, const Matrix& y) const override { return sandwiched(x, y, alpha_); }

 private:
  double alpha_;
};

class PetzObjective final : public PairObjective {
 public:
  explicit PetzObjective(double alpha) : alpha_(alpha) {}
  double value(const Matrix& x, const Matrix& y) override {
    if (alpha_ > 1.0 && !support_contained(x, y)) return kInfinity;
    const double q = real_trace(mat_pow(x, alpha_, true) * mat_pow(y, 1.0 - alpha_, true));
    return alpha_ > 1.0 ? q : -q;
  }
  void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) override {
    const EigenSystem xe = herm_eig(x);
    const EigenSystem ye = herm_eig(y);
    const ScalarFunction fa = ScalarFunction::power(alpha_);
    const ScalarFunction fb = ScalarFunction::power(1.0 - alpha_);
    gx = frechet_matfunc(xe, fa, mat_func(ye, fb));
    gy = frechet_matfunc(ye, fb, mat_func(xe, fa));
    if (alpha_ < 1.0) {
      gx = -gx;
      gy = -gy;
    }
  }
  double to_bits(double f) const override {
    const double q = alpha_ > 1.0 ? f : -f;
    if (q <= 0.0) return alpha_ > 1.0 ? -kInfinity : kInfinity;
    return std::log2(q) / (alpha_ - 1.0);
  }
  double exact(const Matrix& x, const Matrix& y) const override { return petz(x, y, alpha_); }

 private:
  double alpha_;
};

class MeasuredObjective final : public PairObjective {
 public:
  MeasuredObjective(double alpha, double delta) : alpha_(alpha), delta_(delta) {}
  double value(const Matrix& x, const Matrix& y) override {
    const VariationalResult r = solve(x, y);
    return alpha_ == 1.0 ? r.value : -r.value;
  }
  void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) override {
    const VariationalResult r = solve(x, y);
    gx = alpha_ == 1.0 ? r.grad_a : Matrix(-r.grad_a);
    gy = alpha_ == 1.0 ? r.grad_b : Matrix(-r.grad_b);
  }
  double to_bits(double f) const override {
    if (alpha_ == 1.0) return divlab::to_bits(f);
    const double q = -f;
    if (q <= 0.0) return kInfinity;
    return std::log2(q) / (alpha_ - 1.0);
  }
  double exact(const Matrix& x, const Matrix& y) const override {
    return alpha_ == 1.0 ? measured_relative(x, y).value : measured_renyi(x, y, alpha_).value;
  }

 private:
  VariationalResult solve(const Matrix& x, const Matrix& y) {
    // Inner program on smoothed arguments.
    const Matrix xs = smooth(x, delta_);
    const Matrix ys = smooth(y, delta_);
    const Matrix* warm = (warm_.rows() == x.rows()) ? &warm_ : nullptr;
    VariationalResult r = solve_variational(xs, ys, alpha_, warm);
    if (!r.converged && warm) r = solve_variational(xs, ys, alpha_, nullptr);
    if (r.omega_eig.min() > 0 && std::isfinite(r.value)) warm_ = r.omega;
    return r;
  }
  double alpha_;
  double delta_;
  Matrix warm_;
};

class FidelityObjective final : public PairObjective {
 public:
  double value(const Matrix& x, const Matrix& y) override { return -sandwiched_q(x, y, 0.5); }
  void gradient(const Matrix& x, const Matrix& y, Matrix& gx, Matrix& gy) override {
    gx = -0.5 * half_gradient(y, x);
    gy = -0.5 * half_gradient(x, y);
  }
  double to_bits(double f) const override {
    if (-f <= 0.0) return kInfinity;
    return -2.0 * std::log2(-f);
  }
  double exact(const Matrix& x, const Matrix& y) const override { return sandwiched(x, y, 0.5); }

 private:
  // sqrt(a) (sqrt(a) b sqrt(a))^{-1/2} sqrt(a): derivative of tr sqrt(sqrt(a) b sqrt(a)) in b, times 2.
  static Matrix half_gradient(const Matrix& a, const Matrix& b) {
    const Matrix sa = mat_sqrt(a);
    const Matrix inner = mat_pow(hermitian_part(sa * b * sa), -0.5, true);
    return hermitian_part(sa * inner * sa);
  }
};

// ---------------------------------------------------------------------------
// Frank-Wolfe over (rho, sigma) in D(A) x D(A), or over rho alone when tied.

struct FwPoint {
  Matrix rho;
  Matrix sigma;
};

struct FwRun {
  FwPoint x;
  double f = kInfinity;
  double gap = kInfinity;
  int iterations = 0;
};

class FrankWolfe {
 public:
  FrankWolfe(const QuantumMap& n_map, const QuantumMap& m_map, bool tied, PairObjective& obj,
             const SolverOptions& opt)
      : n_(n_map), m_(m_map), tied_(tied), obj_(obj), opt_(opt), d_(static_cast<Eigen::Index>(n_map.in_dim())) {}

  FwRun run(FwPoint x) {
    FwRun r;
    if (tied_) x.sigma = x.rho;
    Matrix xo = n_.apply(x.rho), yo = m_.apply(x.sigma);
    double f = obj_.value(xo, yo);
    int since_polish = 0;
    int iter = 0;
    for (;; ++iter) {
      Matrix gr, gs;
      grad_inputs(xo, yo, gr, gs);
      const EigenSystem er = herm_eig(gr);
      const CVector vr = er.vectors.col(er.values.size() - 1);
      double gap = hs_inner(gr, x.rho) - er.min();
      CVector vs;
      if (!tied_) {
        const EigenSystem es = herm_eig(gs);
        vs = es.vectors.col(es.values.size() - 1);
        gap += hs_inner(gs, x.sigma) - es.min();
      }
      gap = std::max(gap, 0.0);
      r.gap = gap;
      r.f = f;
      r.x = x;
      r.iterations = iter;
      if (gap <= opt_.tol || iter >= opt_.max_iter || !std::isfinite(f)) break;

      if (opt_.polish && since_polish >= kPolishEvery) {
        since_polish = 0;
        FwPoint p = polish(x, f);
        const Matrix px = n_.apply(p.rho), py = m_.apply(p.sigma);
        const double pf = obj_.value(px, py);
        if (pf < f) {
          x = p;
          xo = px;
          yo = py;
          f = pf;
          continue;
        }
      }
      ++since_polish;

      const Matrix sr = vr * vr.adjoint();
      const Matrix ss = tied_ ? sr : Matrix(vs * vs.adjoint());
      const Matrix sxo = n_.apply(sr), syo = m_.apply(ss);
      auto phi = [&](double t) {
        return obj_.value(hermitian_part(xo + t * (sxo - xo)), hermitian_part(yo + t * (syo - yo)));
      };
      double ft = 0;
      const double t = optim::golden_section(phi, 0.0, 1.0, 1e-10, &ft);
      if (!(ft < f) || t <= 0.0) {
        if (opt_.polish && since_polish > 1) {
          since_polish = kPolishEvery;
          continue;
        }
        break;
      }
      x.rho = hermitian_part(x.rho + t * (sr - x.rho));
      x.sigma = tied_ ? x.rho : Matrix(hermitian_part(x.sigma + t * (ss - x.sigma)));
      xo = hermitian_part(xo + t * (sxo - xo));
      yo = hermitian_part(yo + t * (syo - yo));
      f = ft;
    }
    return r;
  }

  FwPoint start(std::uint64_t seed, bool mixed) const {
    FwPoint p;
    if (mixed) {
      p.rho = Matrix::Identity(d_, d_) / static_cast<double>(d_);
      p.sigma = p.rho;
    } else {
      p.rho = random_density(static_cast<std::size_t>(d_), seed);
      p.sigma = random_density(static_cast<std::size_t>(d_), seed ^ 0x9e3779b97f4a7c15ULL);
    }
    return p;
  }

 private:
  static constexpr int kPolishEvery = 25;

  void grad_inputs(const Matrix& xo, const Matrix& yo, Matrix& gr, Matrix& gs) {
    Matrix gx, gy;
    obj_.gradient(smooth(xo, opt_.smoothing), smooth(yo, opt_.smoothing), gx, gy);
    gr = hermitian_part(n_.adjoint(hermitian_part(gx)));
    gs = hermitian_part(m_.adjoint(hermitian_part(gy)));
    if (tied_) {
      gr = gr + gs;
      gs = gr;
    }
  }

  // Quasi-Newton refinement in rho = W W^dagger / tr(W W^dagger).
  FwPoint polish(const FwPoint& x0, double f0) {
    const Eigen::Index d = d_;
    const Eigen::Index block = 2 * d * d;
    auto w_of = [&](const Matrix& rho) {
      return mat_sqrt(hermitian_part(rho + 1e-10 * Matrix::Identity(d, d)));
    };
    RVector v0(tied_ ? block : 2 * block);
    v0.head(block) = optim::pack(w_of(x0.rho));
    if (!tied_) v0.tail(block) = optim::pack(w_of(x0.sigma));
    auto decode = [&](const RVector& v, Matrix& wr, Matrix& ws, FwPoint& p) {
      wr = optim::unpack(v, d, d, 0);
      ws = tied_ ? wr : optim::unpack(v, d, d, block);
      p.rho = hermitian_part(wr * wr.adjoint());
      p.rho /= real_trace(p.rho);
      p.sigma = tied_ ? p.rho : Matrix(hermitian_part(ws * ws.adjoint()));
      if (!tied_) p.sigma /= real_trace(p.sigma);
    };
    optim::Objective fun = [&](const RVector& v, RVector* g) {
      Matrix wr, ws;
      FwPoint p;
      decode(v, wr, ws, p);
      if (!p.rho.allFinite() || !p.sigma.allFinite()) return kInfinity;
      const Matrix xo = n_.apply(p.rho), yo = m_.apply(p.sigma);
      const double val = obj_.value(xo, yo);
      if (g && std::isfinite(val)) {
        Matrix gr, gs;
        grad_inputs(xo, yo, gr, gs);
        if (tied_) gr = gr;  // already summed
        const double tr_r = (wr.adjoint() * wr).trace().real();
        const Matrix dw_r = (2.0 / tr_r) * (gr * wr - hs_inner(gr, p.rho) * wr);
        g->resize(v.size());
        g->head(block) = optim::pack(dw_r);
        if (!tied_) {
          const double tr_s = (ws.adjoint() * ws).trace().real();
          const Matrix dw_s = (2.0 / tr_s) * (gs * ws - hs_inner(gs, p.sigma) * ws);
          g->tail(block) = optim::pack(dw_s);
        }
      }
      return val;
    };
    const optim::LbfgsResult lr = optim::lbfgs_minimize(fun, v0, 200);
    FwPoint p;
    if (!(lr.value < f0)) return x0;
    Matrix wr, ws;
    decode(lr.x, wr, ws, p);
    return p;
  }

  const QuantumMap& n_;
  const QuantumMap& m_;
  bool tied_;
  PairObjective& obj_;
  SolverOptions opt_;
  Eigen::Index d_;
};

MinOutputResult solve_min_output(const QuantumMap& n1, const QuantumMap& m1, std::size_t n, bool tied,
                                 PairObjective& obj, const SolverOptions& opt) {
  if (n == 0) throw ValidationError("min_output: n must be positive");
  if (n1.in_dim() != m1.in_dim() || n1.out_dim() != m1.out_dim())
    throw ValidationError("min_output: channels must share input and output dimensions");
  if (!n1.trace_preserving()) throw ValidationError("min_output: first channel must be trace preserving");
  const QuantumMap nn = tensor_power_map(n1.compressed(), n);
  const QuantumMap mm = tensor_power_map(m1.compressed(), n);
  FrankWolfe fw(nn, mm, tied, obj, opt);

  FwRun best = fw.run(fw.start(0, true));
  double best_lower = obj.to_bits(best.f - best.gap);
  int total = best.iterations;
  if (best.gap > opt.tol) {
    for (int r = 0; r < opt.restarts; ++r) {
      FwRun run = fw.run(fw.start(opt.seed + static_cast<std::uint64_t>(r), false));
      total += run.iterations;
      best_lower = std::max(best_lower, obj.to_bits(run.f - run.gap));
      if (run.f < best.f || (run.f == best.f && run.gap < best.gap)) best = run;
      if (best.gap <= opt.tol) break;
    }
  }
  MinOutputResult res;
  res.n_copies = n;
  res.rho_star = best.x.rho;
  res.sigma_star = tied ? best.x.rho : best.x.sigma;
  res.value = obj.exact(nn.apply(res.rho_star), mm.apply(res.sigma_star));
  res.lower_bound = std::min(best_lower, res.value);
  res.fw_gap = best.gap;
  res.iterations = total;
  res.converged = best.gap <= opt.tol;
  return res;
}

std::unique_ptr<PairObjective> make_objective(const DivergenceSpec& spec, double smoothing) {
  spec.validate();
  switch (spec.family) {
    case Family::umegaki:
      return std::make_unique<UmegakiObjective>();
    case Family::sandwiched:
      return std::make_unique<SandwichedObjective>(spec.alpha);
    case Family::petz:
      if (spec.alpha > 2.0) throw ValidationError("min_output: petz requires alpha in (0, 1) or (1, 2]");
      return std::make_unique<PetzObjective>(spec.alpha);
    case Family::measured:
      return std::make_unique<MeasuredObjective>(1.0, smoothing);
    case Family::measured_renyi:
      if (!(spec.alpha >= 0.5 && spec.alpha < 1.0))
        throw ValidationError("min_output: measured_renyi requires alpha in [1/2, 1)");
      return std::make_unique<MeasuredObjective>(spec.alpha, smoothing);
    default:
      throw ValidationError("min_output: family " + std::string(family_name(spec.family)) +
                            " is not supported by the Frank-Wolfe solver");
  }
}

}  // namespace

MinOutputResult min_output(const QuantumMap& n_map, const QuantumMap& m_map, const DivergenceSpec& spec,
                           std::size_t n, const SolverOptions& options) {
  if (spec.family != Family::umegaki && spec.family != Family::sandwiched && spec.family != Family::petz)
    throw ValidationError("min_output: family must be umegaki, sandwiched or petz");
  auto obj = make_objective(spec, options.smoothing);
  return solve_min_output(n_map, m_map, n, false, *obj, options);
}

MinOutputResult min_output_measured(const QuantumMap& n_map, const QuantumMap& m_map, double alpha, std::size_t n,
                                    const SolverOptions& options) {
  if (!(alpha >= 0.5 && alpha <= 1.0))
    throw ValidationError("min_output_measured: alpha must lie in [1/2, 1]");
  MeasuredObjective obj(alpha, options.smoothing);
  return solve_min_output(n_map, m_map, n, false, obj, options);
}

MinOutputResult min_output_same_input(const QuantumMap& n_map, const QuantumMap& m_map,
                                      const DivergenceSpec& spec, std::size_t n, const SolverOptions& options) {
  auto obj = make_objective(spec, options.smoothing);
  return solve_min_output(n_map, m_map, n, true, *obj, options);
}

MinOutputResult fidelity_min_output(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n,
                                    const SolverOptions& options) {
  FidelityObjective obj;
  return solve_min_output(n_map, m_map, n, false, obj, options);
}

MinOutputResult dmax_min_output(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n) {
  if (n_map.in_dim() != m_map.in_dim() || n_map.out_dim() != m_map.out_dim())
    throw ValidationError("dmax_min_output: channels must share input and output dimensions");
  const QuantumMap nn = tensor_power_map(n_map.compressed(), n);
  const QuantumMap mm = tensor_power_map(m_map.compressed(), n);
  const std::size_t din = nn.in_dim();
  const std::size_t dout = nn.out_dim();

  // minimize tr S  s.t.  rho >= 0, tr rho = 1, S >= 0, M(S) - N(rho) >= 0.
  conic::LmiProblem lp;
  const conic::HermitianVar rho = lp.add_hermitian(din, true);
  const conic::HermitianVar s = lp.add_hermitian(din, false);
  const std::size_t b_rho = lp.add_block(din);
  const std::size_t b_s = lp.add_block(din);
  const std::size_t b_out = lp.add_block(dout);
  lp.add_linear(b_rho, rho, [](const Matrix& h) { return h; });
  lp.add_linear(b_s, s, [](const Matrix& h) { return h; });
  lp.add_linear(b_out, rho, [&](const Matrix& h) { return Matrix(-nn.apply(h)); });
  lp.add_linear(b_out, s, [&](const Matrix& h) { return mm.apply(h); });
  lp.add_cost(s, identity(din));
  const conic::Solution sol = conic::solve(lp);

  MinOutputResult res;
  res.n_copies = n;
  res.iterations = sol.iterations;
  Matrix r = hermitian_part(rho.value(sol.y));
  Matrix sv = hermitian_part(s.value(sol.y));
  // Project the witnesses onto valid densities.
  auto to_density = [](Matrix m) {
    EigenSystem es = herm_eig(m);
    for (Eigen::Index k = 0; k < es.values.size(); ++k) es.values(k) = std::max(es.values(k), 0.0);
    Matrix out = es.reconstruct();
    return Matrix(hermitian_part(out / real_trace(out)));
  };
  res.rho_star = to_density(r);
  res.sigma_star = to_density(sv);
  res.value = dmax(nn.apply(res.rho_star), mm.apply(res.sigma_star));
  // Certificate: for W >= 0, t* >= lambda_min(N^dag W) / lambda_max(M^dag W).
  const Matrix w = hermitian_part(sol.dual[b_out]);
  const double num = min_eig(hermitian_part(nn.adjoint(w)));
  const double den = max_eig(hermitian_part(mm.adjoint(w)));
  res.lower_bound = (num > 0 && den > 0) ? std::log2(num / den) : -kInfinity;
  res.lower_bound = std::min(res.lower_bound, res.value);
  res.fw_gap = res.value - res.lower_bound;
  res.converged = sol.converged && res.fw_gap <= 1e-7;
  return res;
}

// ---------------------------------------------------------------------------

RegularizationBracket regularization_bracket(const QuantumMap& n_map, const QuantumMap& m_map, double alpha,
                                             std::size_t n_max, const SolverOptions& options) {
  if (!(alpha >= 0.5 && alpha <= 1.0))
    throw ValidationError("regularization_bracket: alpha must lie in [1/2, 1]");
  if (n_max == 0) throw ValidationError("regularization_bracket: n_max must be positive");
  RegularizationBracket br;
  br.alpha = alpha;
  br.family = alpha == 1.0 ? Family::umegaki : Family::sandwiched;
  const DivergenceSpec upper_spec{br.family, alpha, 0.0};
  br.upper = kInfinity;
  br.lower = -kInfinity;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const MinOutputResult up = min_output(n_map, m_map, upper_spec, n, options);
    const double u = up.value / static_cast<double>(n);
    br.per_n_upper.emplace_back(n, u);
    br.upper = std::min(br.upper, u);
    const MinOutputResult lo = min_output_measured(n_map, m_map, alpha, n, options);
    const double l = lo.lower_bound / static_cast<double>(n);
    br.per_n_lower.emplace_back(n, l);
    br.lower = std::max(br.lower, l);
  }
  return br;
}

double chain_rule_bound(const QuantumMap& n_map, const QuantumMap& m_map, const DivergenceSpec& spec,
                        BoundMode mode, const SolverOptions& options) {
  spec.validate();
  switch (spec.family) {
    case Family::measured: {
      const MinOutputResult r = min_output_measured(n_map, m_map, 1.0, 1, options);
      return mode == BoundMode::sound ? r.lower_bound : r.value;
    }
    case Family::measured_renyi: {
      const MinOutputResult r = min_output_measured(n_map, m_map, spec.alpha, 1, options);
      return mode == BoundMode::sound ? r.lower_bound : r.value;
    }
    case Family::sandwiched:
    case Family::umegaki: {
      const double alpha = spec.family == Family::umegaki ? 1.0 : spec.alpha;
      if (!(alpha >= 0.5 && alpha <= 1.0))
        throw ValidationError("chain_rule_bound: sandwiched requires alpha in [1/2, 1)");
      const RegularizationBracket br = regularization_bracket(n_map, m_map, alpha, 2, options);
      return mode == BoundMode::sound ? br.lower : br.upper;
    }
    default:
      throw ValidationError("chain_rule_bound: unsupported family");
  }
}

ChainRuleTerms chain_rule_terms(const QuantumMap& n_map, const QuantumMap& m_map, const Matrix& rho_ra,
                                const Matrix& sigma_ra, const DivergenceSpec& spec, double bound) {
  const std::size_t da = n_map.in_dim();
  if (rho_ra.rows() != sigma_ra.rows() || static_cast<std::size_t>(rho_ra.rows()) % da != 0)
    throw ValidationError("chain_rule_terms: states must live on R (x) A");
  const std::size_t dr = static_cast<std::size_t>(rho_ra.rows()) / da;
  const Subsystems where{{dr, da}, 1};
  const Matrix out_r = apply(n_map, rho_ra, where);
  const Matrix out_s = apply(m_map, sigma_ra, where);
  const Matrix ref_r = partial_trace(rho_ra, {dr, da}, {0});
  const Matrix ref_s = partial_trace(sigma_ra, {dr, da}, {0});
  ChainRuleTerms t;
  t.output = divergence(spec, hermitian_part(out_r), hermitian_part(out_s));
  t.reference = divergence(spec, hermitian_part(ref_r), hermitian_part(ref_s));
  t.bound = bound;
  t.margin = t.output - t.reference - t.bound;
  return t;
}

double chain_rule_margin(const QuantumMap& n_map, const QuantumMap& m_map, const Matrix& rho_ra,
                         const Matrix& sigma_ra, const DivergenceSpec& spec, BoundMode mode,
                         const SolverOptions& options) {
  const double b = chain_rule_bound(n_map, m_map, spec, mode, options);
  return chain_rule_terms(n_map, m_map, rho_ra, sigma_ra, spec, b).margin;
}

double image_support_function(const QuantumMap& n_map, std::size_t n, const Matrix& x) {
  const QuantumMap nn = tensor_power_map(n_map, n);
  require_hermitian(x, "image_support_function");
  if (static_cast<std::size_t>(x.rows()) != nn.out_dim())
    throw ValidationError("image_support_function: X has the wrong dimension");
  return max_eig(hermitian_part(nn.adjoint(x)));
}

// ---------------------------------------------------------------------------

namespace {

// D (bits) and its gradients for the sandwiched family (umegaki at alpha = 1).
double divergence_with_gradient(const Matrix& x, const Matrix& y, double alpha, Matrix& gx, Matrix& gy) {
  if (alpha == 1.0) {
    UmegakiObjective u;
    const double f = u.value(x, y);
    u.gradient(x, y, gx, gy);
    gx /= kLn2;
    gy /= kLn2;
    return to_bits(f);
  }
  SandwichedObjective s(alpha);
  const double f = s.value(x, y);
  s.gradient(x, y, gx, gy);
  const double q = alpha > 1.0 ? f : -f;
  const double scale = (alpha > 1.0 ? 1.0 : -1.0) / (q * (alpha - 1.0) * kLn2);
  gx *= scale;
  gy *= scale;
  return std::log2(q) / (alpha - 1.0);
}

}  // namespace

AmortizedResult amortized_search(const QuantumMap& n_map, const QuantumMap& m_map, double alpha,
                                 std::size_t max_ref_dim, int restarts, std::uint64_t seed) {
  DivergenceSpec{alpha == 1.0 ? Family::umegaki : Family::sandwiched, alpha, 0.0}.validate();
  const std::size_t da = n_map.in_dim();
  AmortizedResult best;
  best.best_gap = kInfinity;
  constexpr double kDelta = 1e-9;
  for (std::size_t dr = 1; dr <= max_ref_dim; ++dr) {
    const auto d = static_cast<Eigen::Index>(dr * da);
    const Eigen::Index block = 2 * d * d;
    const Subsystems where{{dr, da}, 1};
    auto decode = [&](const RVector& v, Matrix& wr, Matrix& ws, Matrix& r, Matrix& s) {
      wr = optim::unpack(v, d, d, 0);
      ws = optim::unpack(v, d, d, block);
      r = hermitian_part(wr * wr.adjoint());
      r = (1 - kDelta) * r / real_trace(r) + kDelta * Matrix::Identity(d, d) / static_cast<double>(d);
      s = hermitian_part(ws * ws.adjoint());
      s = (1 - kDelta) * s / real_trace(s) + kDelta * Matrix::Identity(d, d) / static_cast<double>(d);
    };
    optim::Objective fun = [&](const RVector& v, RVector* g) {
      Matrix wr, ws, r, s;
      decode(v, wr, ws, r, s);
      const Matrix xo = hermitian_part(apply(n_map, r, where));
      const Matrix yo = hermitian_part(apply(m_map, s, where));
      const Matrix xr = hermitian_part(partial_trace(r, {dr, da}, {0}));
      const Matrix yr = hermitian_part(partial_trace(s, {dr, da}, {0}));
      Matrix g1x, g1y, g2x, g2y;
      const double d1 = divergence_with_gradient(xo, yo, alpha, g1x, g1y);
      const double d2 = divergence_with_gradient(xr, yr, alpha, g2x, g2y);
      if (g) {
        const Matrix gr = hermitian_part(adjoint_apply(n_map, hermitian_part(g1x), where) -
                                         tensor(hermitian_part(g2x), identity(da)));
        const Matrix gs = hermitian_part(adjoint_apply(m_map, hermitian_part(g1y), where) -
                                         tensor(hermitian_part(g2y), identity(da)));
        const double trr = (wr.adjoint() * wr).trace().real();
        const double trs = (ws.adjoint() * ws).trace().real();
        const Matrix rn = hermitian_part(wr * wr.adjoint()) / trr;
        const Matrix sn = hermitian_part(ws * ws.adjoint()) / trs;
        g->resize(v.size());
        g->head(block) = optim::pack((1 - kDelta) * (2.0 / trr) * (gr * wr - hs_inner(gr, rn) * wr));
        g->tail(block) = optim::pack((1 - kDelta) * (2.0 / trs) * (gs * ws - hs_inner(gs, sn) * ws));
      }
      return d1 - d2;
    };
    for (int k = 0; k < restarts; ++k) {
      const std::uint64_t sd = seed + 1000 * dr + static_cast<std::uint64_t>(k);
      RVector v0(2 * block);
      v0.head(block) = optim::pack(random_isometry(static_cast<std::size_t>(d), static_cast<std::size_t>(d), sd));
      v0.tail(block) =
          optim::pack(random_isometry(static_cast<std::size_t>(d), static_cast<std::size_t>(d), sd ^ 0xabcdefULL));
      optim::LbfgsResult lr = optim::lbfgs_minimize(fun, v0, 300);
      if (lr.value < best.best_gap) {
        Matrix wr, ws, r, s;
        decode(lr.x, wr, ws, r, s);
        best.best_gap = lr.value;
        best.ref_dim = dr;
        best.rho_ra = r;
        best.sigma_ra = s;
      }
    }
  }
  return best;
}

}  // namespace divlab
