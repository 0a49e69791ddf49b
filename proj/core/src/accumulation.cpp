#include "divlab/accumulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "divlab/conic.hpp"
#include "divlab/divergences.hpp"
#include "divlab/errors.hpp"

namespace divlab {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, Complex(v, 0.0)); }

Matrix clip_unit(const Matrix& t) {
  EigenSystem es = herm_eig(hermitian_part(t));
  for (Eigen::Index k = 0; k < es.values.size(); ++k) es.values(k) = std::clamp(es.values(k), 0.0, 1.0);
  return hermitian_part(es.reconstruct());
}

Matrix density_from(const Matrix& w) {
  EigenSystem es = herm_eig(hermitian_part(w));
  for (Eigen::Index k = 0; k < es.values.size(); ++k) es.values(k) = std::max(es.values(k), 0.0);
  Matrix p = es.reconstruct();
  const double t = real_trace(p);
  if (!(t > 1e-14)) return Matrix::Identity(w.rows(), w.cols()) / static_cast<double>(w.rows());
  return hermitian_part(p / t);
}

void check_bipartite(const Matrix& rho, const std::vector<std::size_t>& dims, const char* what) {
  if (dims.size() != 2 || dims[0] == 0 || dims[1] == 0)
    throw ValidationError(std::string(what) + ": dims must be {d_1, d_2} with positive entries");
  if (static_cast<std::size_t>(rho.rows()) != dims[0] * dims[1])
    throw ValidationError(std::string(what) + ": state dimension does not match dims");
}

// X_C -> I_S (x) X_C.
QuantumMap identity_extension(std::size_t s_dim, std::size_t c_dim) {
  std::vector<Matrix> ks;
  for (std::size_t s = 0; s < s_dim; ++s) {
    Matrix k = Matrix::Zero(idx(s_dim * c_dim), idx(c_dim));
    for (std::size_t c = 0; c < c_dim; ++c) k(idx(s * c_dim + c), idx(c)) = 1.0;
    ks.push_back(std::move(k));
  }
  return QuantumMap(c_dim, s_dim * c_dim, std::move(ks), s_dim == 1);
}

double von_neumann(const Matrix& rho) {
  const EigenSystem es = herm_eig(hermitian_part(rho));
  double h = 0.0;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    const double l = es.values(k);
    if (l > 1e-300) h -= l * std::log2(l);
  }
  return h;
}

}  // namespace

CorrectionTerms reat_correction(std::size_t n, std::size_t d, double epsilon, double c) {
  if (n == 0 || d == 0) throw ValidationError("reat_correction: n and d must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("reat_correction: epsilon must lie in (0, 1)");
  if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("reat_correction: C must be finite and nonnegative");
  const double dd = static_cast<double>(d);
  const double dn = static_cast<double>(n);
  const double le = std::log2(1.0 / epsilon);
  const double c2 = (2.0 + c) * (2.0 + c);
  CorrectionTerms t;
  const double floor_m = std::max({dd, std::pow(16.0 * dd * dd / (2.0 + c), 2.0), 2.0});
  t.m = std::max(std::cbrt(64.0 * std::pow(dd, 4) * dn / (c2 * le)), floor_m);
  const double lm = std::log2(t.m);
  t.alpha = 1.0 - 8.0 * dd * dd * lm / (c2 * t.m * t.m);
  t.correction = dn * 16.0 * dd * dd * lm / t.m + (c2 * t.m * t.m / (8.0 * dd * dd * lm)) * le;
  if (n >= 2) {
    t.c_prime = t.correction / (std::pow(dn, 2.0 / 3.0) * std::log2(dn) * std::cbrt(le));
    t.c_prime_defined = true;
  }
  return t;
}

ConditionReport check_condition(const QuantumMap& n_map, const QuantumMap& m_map,
                                const std::vector<std::size_t>& m_list, double c, const SolverOptions& options) {
  if (m_list.empty()) throw ValidationError("check_condition: m_list must be non-empty");
  ConditionReport rep;
  rep.log_trace = std::log2(std::max(max_eig(hermitian_part(m_map.adjoint(identity(m_map.out_dim())))), 1e-300));
  if (rep.log_trace > c / 4.0 + 1e-12) {
    rep.holds = false;
    std::ostringstream os;
    os << "trace clause: log2 lambda_max(M^dagger(I)) = " << rep.log_trace << " > C/4 = " << c / 4.0;
    rep.violation = os.str();
  }
  for (std::size_t m : m_list) {
    if (m == 0) throw ValidationError("check_condition: m must be positive");
    const QuantumMap nn = tensor_power_map(n_map, m);
    const QuantumMap mm = tensor_power_map(m_map, m);
    for (double alpha : {0.5, 0.75, 1.0}) {
      const DivergenceSpec spec{alpha == 1.0 ? Family::umegaki : Family::petz, alpha, 0.0};
      const MinOutputResult r = min_output(n_map, m_map, spec, m, options);
      const double v = petz(hermitian_part(nn.apply(r.rho_star)), hermitian_part(mm.apply(r.sigma_star)), 1.5);
      const double rate = v / static_cast<double>(m);
      rep.worst_rate = std::max(rep.worst_rate, rate);
      if (rate > c / 4.0 + 1e-9 && rep.holds) {
        rep.holds = false;
        std::ostringstream os;
        os << "Petz clause: D_P,3/2 / m = " << rate << " > C/4 = " << c / 4.0 << " at m = " << m
           << ", alpha = " << alpha;
        rep.violation = os.str();
      }
    }
  }
  return rep;
}

AccumulationReport reat_bound(const std::vector<Dilation>& u, const std::vector<Dilation>& v, const Strategy& p,
                              const Strategy& q, double epsilon, double c, const AccumulationOptions& options) {
  const std::size_t n = p.n_rounds();
  if (n == 0 || q.n_rounds() != n) throw ValidationError("reat_bound: strategies must have the same positive length");
  if (u.size() != n || v.size() != n) throw ValidationError("reat_bound: need one map pair per round");
  AccumulationReport rep;
  rep.n = n;
  rep.c = c;
  try {
    const Matrix rho_n = rollout(u, p);
    const Matrix sigma_n = rollout(v, q);
    rep.lhs = hypothesis_testing(rho_n, sigma_n, epsilon).value;
  } catch (const ResourceError&) {
    rep.lhs_available = false;
  }
  std::size_t d = 1;
  rep.rhs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const QuantumMap tn = compose(partial_trace_channel({u[i].env_dim, u[i].out_dim}, {1}), u[i].map);
    const QuantumMap tm = compose(partial_trace_channel({v[i].env_dim, v[i].out_dim}, {1}), v[i].map);
    const RegularizationBracket br = regularization_bracket(tn, tm, 1.0, options.bracket_n, options.solver);
    rep.step_lower.push_back(br.lower);
    rep.rhs_sum += br.lower;
    d = std::max(d, u[i].out_dim);
    if (options.check_condition) {
      const ConditionReport cr = check_condition(tn, tm, options.condition_m, c, options.solver);
      if (!cr.holds && rep.condition_ok) {
        rep.condition_ok = false;
        rep.condition_violation = "round " + std::to_string(i + 1) + ": " + cr.violation;
      }
    }
  }
  rep.condition_overridden = !options.check_condition;
  const CorrectionTerms ct = reat_correction(n, d, epsilon, c);
  rep.correction = ct.correction;
  rep.m_choice = ct.m;
  rep.alpha_choice = ct.alpha;
  rep.c_prime = ct.c_prime;
  rep.c_prime_defined = ct.c_prime_defined;
  rep.holds = rep.lhs_available && rep.lhs >= rep.rhs_sum - rep.correction - 1e-6;
  return rep;
}

AccumulationReport reat_sequential(const std::vector<QuantumMap>& n_maps, const std::vector<QuantumMap>& m_maps,
                                   const std::vector<std::size_t>& out_dims, const Matrix& rho_a1,
                                   const Matrix& sigma_a1, double epsilon, double c,
                                   const AccumulationOptions& options) {
  const std::size_t n = n_maps.size();
  if (n == 0 || m_maps.size() != n || out_dims.size() != n)
    throw ValidationError("reat_sequential: need matching non-empty lists of maps and output dimensions");
  std::vector<Dilation> u, v;
  for (std::size_t i = 0; i < n; ++i) {
    if (out_dims[i] == 0 || n_maps[i].out_dim() % out_dims[i] != 0)
      throw ValidationError("reat_sequential: output dimension does not divide the map output");
    if (n_maps[i].in_dim() != m_maps[i].in_dim() || n_maps[i].out_dim() != m_maps[i].out_dim())
      throw ValidationError("reat_sequential: paired maps must have the same shape");
    const std::size_t env = n_maps[i].out_dim() / out_dims[i];
    if (i + 1 < n && env != n_maps[i + 1].in_dim())
      throw ValidationError("reat_sequential: memory output of one step must feed the next");
    u.push_back(dilation_from_map(n_maps[i], env, out_dims[i]));
    v.push_back(dilation_from_map(m_maps[i], env, out_dims[i]));
  }
  // P^1 prepares the initial state; later rounds pass the memory through.
  auto strategy = [&](const Matrix& state) {
    Strategy s;
    s.maps.push_back(preparation_channel(state));
    s.memory_dims.push_back(1);
    for (std::size_t i = 1; i < n; ++i) {
      s.maps.push_back(identity_channel(u[i - 1].env_dim));
      s.memory_dims.push_back(1);
    }
    return s;
  };
  require_density(rho_a1, "reat_sequential(rho)");
  require_density(sigma_a1, "reat_sequential(sigma)");
  return reat_bound(u, v, strategy(rho_a1), strategy(sigma_a1), epsilon, c, options);
}

SigmaAlphaWitness sigma_alpha(const Matrix& rho_ab, double alpha, const std::vector<std::size_t>& dims) {
  if (!(alpha >= 0.5 && alpha <= 1.0)) throw ValidationError("sigma_alpha: alpha must lie in [1/2, 1]");
  check_bipartite(rho_ab, dims, "sigma_alpha");
  require_density(rho_ab, "sigma_alpha(rho)");
  const Matrix x = hermitian_part(partial_trace(mat_pow(rho_ab, alpha, true), dims, {1}));
  const Matrix y = hermitian_part(mat_pow(x, 1.0 / alpha, true));
  SigmaAlphaWitness w;
  w.alpha = alpha;
  w.z = real_trace(y);
  w.sigma_b = hermitian_part(y / w.z);
  return w;
}

BoundCheck check_petz32_bound(const Matrix& rho_ab, double alpha, const std::vector<std::size_t>& dims) {
  const SigmaAlphaWitness w = sigma_alpha(rho_ab, alpha, dims);
  BoundCheck b;
  b.value = petz(rho_ab, tensor(identity(dims[0]), w.sigma_b), 1.5);
  b.bound = 4.0 * std::log2(static_cast<double>(dims[0]));
  b.holds = b.value <= b.bound + 1e-8;
  return b;
}

BoundCheck check_fidelity_bound(const Matrix& rho, const Matrix& sigma, const Matrix& m) {
  require_psd(rho, "check_fidelity_bound(rho)");
  require_psd(sigma, "check_fidelity_bound(sigma)");
  require_hermitian(m, "check_fidelity_bound(M)");
  if (rho.rows() != sigma.rows() || rho.rows() != m.rows())
    throw ValidationError("check_fidelity_bound: dimension mismatch");
  const EigenSystem me = herm_eig(m);
  if (me.min() < -tol::psd || me.max() > 1.0 + tol::psd)
    throw ValidationError("check_fidelity_bound: M must satisfy 0 <= M <= I");
  const Matrix sm = mat_sqrt(m);
  const Matrix inner = hermitian_part(sm * rho * sm);
  BoundCheck b;
  const double f = trace_norm(mat_sqrt(inner) * mat_sqrt(sigma));
  b.value = f * f;
  b.bound = real_trace(m * sigma);
  b.holds = b.value <= b.bound + 1e-9;
  return b;
}

HmaxWitness hmax_witness(const Matrix& rho_bc, double epsilon, const std::vector<std::size_t>& dims) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ValidationError("hmax_witness: epsilon must lie in [0, 1/2)");
  check_bipartite(rho_bc, dims, "hmax_witness");
  require_density(rho_bc, "hmax_witness(rho)");
  const std::size_t db = dims[0], dc = dims[1], d = db * dc;

  // min t  s.t.  t I_C >= tr_B M,  0 <= M <= I,  tr(rho M) >= 1 - eps.
  conic::LmiProblem lp;
  const std::size_t t = lp.add_scalars(1);
  const conic::HermitianVar mv = lp.add_hermitian(d, false);
  const std::size_t b_c = lp.add_block(dc);
  const std::size_t b_m = lp.add_block(d);
  const std::size_t b_im = lp.add_block(d);
  const std::size_t b_tr = lp.add_block(1);
  lp.add_coefficient(b_c, t, identity(dc));
  lp.add_linear(b_c, mv, [&](const Matrix& h) { return Matrix(-partial_trace(h, dims, {1})); });
  lp.add_linear(b_m, mv, [](const Matrix& h) { return h; });
  lp.add_constant(b_im, identity(d));
  lp.add_linear(b_im, mv, [](const Matrix& h) { return Matrix(-h); });
  lp.add_constant(b_tr, scalar_matrix(-(1.0 - epsilon)));
  lp.add_linear(b_tr, mv, [&](const Matrix& h) { return scalar_matrix(real_trace(rho_bc * h)); });
  lp.set_cost(t, 1.0);
  const conic::Solution sol = conic::solve(lp);

  HmaxWitness w;
  Matrix test = clip_unit(mv.value(sol.y));
  const Matrix id = identity(d);
  const double acc = real_trace(rho_bc * test);
  if (acc < 1.0 - epsilon) {
    const double rej = 1.0 - acc;
    const double kappa = rej > 0 ? std::clamp(1.0 - epsilon / rej, 0.0, 1.0) : 0.0;
    test = hermitian_part(test + kappa * (id - test));
  }
  w.test = test;
  w.sigma_c = density_from(sol.dual[b_c]);
  const double tval = max_eig(hermitian_part(partial_trace(test, dims, {1})));
  w.dh_value = -std::log2(tval);

  // With rho~ = W W^dagger, F(rho~, I (x) sigma) = F(I_r, W^dagger (I (x) sigma) W); the sup is
  // max Re tr X s.t. [[I_r, X], [X^dag, W^dag (I (x) sigma) W]] >= 0.
  const Matrix sm = mat_sqrt(test);
  const Matrix rt = hermitian_part(sm * rho_bc * sm);
  const EigenSystem re = herm_eig(rt);
  // Eigenvalues below the cut are dropped; tr sqrt is subadditive, so they add at most
  // sqrt(discarded * d_B) to the fidelity.
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(re.values.size()) && re.values(idx(r)) > 1e-10 * std::max(re.max(), 1e-300)) ++r;
  double discarded = 0.0;
  for (Eigen::Index k = idx(r); k < re.values.size(); ++k) discarded += std::max(re.values(k), 0.0);
  const double f_tail = std::sqrt(discarded * static_cast<double>(db));
  if (r == 0) {
    w.hmax_upper = -kInfinity;
    w.holds = true;
    return w;
  }
  Matrix wm = re.vectors.leftCols(idx(r));
  for (std::size_t k = 0; k < r; ++k) wm.col(idx(k)) *= std::sqrt(re.values(idx(k)));
  conic::LmiProblem fp;
  const conic::HermitianVar x = fp.add_complex(r);
  const conic::HermitianVar sg = fp.add_hermitian(dc, true);
  const std::size_t b_big = fp.add_block(2 * r);
  const std::size_t b_s = fp.add_block(dc);
  Matrix c0 = Matrix::Zero(idx(2 * r), idx(2 * r));
  c0.topLeftCorner(idx(r), idx(r)) = identity(r);
  fp.add_constant(b_big, c0);
  fp.add_linear(b_big, x, [&](const Matrix& h) {
    Matrix z = Matrix::Zero(idx(2 * r), idx(2 * r));
    z.topRightCorner(idx(r), idx(r)) = h;
    z.bottomLeftCorner(idx(r), idx(r)) = h.adjoint();
    return z;
  });
  fp.add_linear(b_big, sg, [&](const Matrix& h) {
    Matrix z = Matrix::Zero(idx(2 * r), idx(2 * r));
    z.bottomRightCorner(idx(r), idx(r)) = hermitian_part(wm.adjoint() * tensor(identity(db), h) * wm);
    return z;
  });
  fp.add_linear(b_s, sg, [](const Matrix& h) { return h; });
  fp.add_cost(x, Matrix(-identity(r)));
  const conic::Solution fs = conic::solve(fp);
  const Matrix sigma_f = density_from(sg.value(fs.y));
  const double f_at = trace_norm(mat_sqrt(rt) * mat_sqrt(tensor(identity(db), sigma_f)));
  // Alberti: F(I_r, G) <= (tr Y + tr G Y^{-1}) / 2 for every Y > 0, hence for all sigma
  // sup F <= sqrt(tr Y * lambda_max(tr_B W Y^{-1} W^dag)) after rescaling Y.
  const Matrix g = hermitian_part(wm.adjoint() * tensor(identity(db), sigma_f) * wm);
  const Matrix y = mat_sqrt(hermitian_part(g + 1e-12 * std::max(1.0, real_trace(g)) * identity(r)));
  const Matrix yinv = hermitian_part(y.inverse());
  const double lam = max_eig(hermitian_part(partial_trace(wm * yinv * wm.adjoint(), dims, {1})));
  double f_cert = std::sqrt(std::max(real_trace(y), 0.0) * std::max(lam, 0.0));
  if (fs.converged) f_cert = std::min(f_cert, -fs.dual_objective);
  const double f_up = std::max(f_at, f_cert + f_tail);
  w.hmax_upper = f_up > 0 ? 2.0 * std::log2(f_up) : -kInfinity;
  w.holds = w.hmax_upper <= -w.dh_value + 1e-6;
  return w;
}

double conditional_entropy(const Matrix& rho_sc, const std::vector<std::size_t>& dims) {
  check_bipartite(rho_sc, dims, "conditional_entropy");
  require_density(rho_sc, "conditional_entropy(rho)");
  return von_neumann(rho_sc) - von_neumann(partial_trace(rho_sc, dims, {1}));
}

VariationalEntropy conditional_entropy_variational(const Matrix& rho_sc, const std::vector<std::size_t>& dims,
                                                   const SolverOptions& options) {
  check_bipartite(rho_sc, dims, "conditional_entropy_variational");
  require_density(rho_sc, "conditional_entropy_variational(rho)");
  const QuantumMap n_map = replacer_channel(hermitian_part(rho_sc), dims[1]);
  const QuantumMap m_map = identity_extension(dims[0], dims[1]);
  const MinOutputResult r = min_output(n_map, m_map, DivergenceSpec{Family::umegaki, 1.0, 0.0}, 1, options);
  return VariationalEntropy{-r.value, -r.lower_bound};
}

VariationalEntropy max_step_entropy(const EatStep& step, const SolverOptions& options) {
  const std::size_t yin = step.map.in_dim();
  if (step.map.out_dim() != step.s_dim * step.c_dim * step.y_dim)
    throw ValidationError("eat step: output dimension must equal s_dim * c_dim * y_dim");
  // Inputs on Y_{i-1} (x) C: the first argument sees omega, the second a free sigma_C.
  const QuantumMap traced =
      compose(partial_trace_channel({step.s_dim, step.c_dim, step.y_dim}, {0, 1}), step.map);
  const QuantumMap n_map = compose(traced, partial_trace_channel({yin, step.c_dim}, {0}));
  const QuantumMap m_map =
      compose(identity_extension(step.s_dim, step.c_dim), partial_trace_channel({yin, step.c_dim}, {1}));
  const MinOutputResult r = min_output(n_map, m_map, DivergenceSpec{Family::umegaki, 1.0, 0.0}, 1, options);
  return VariationalEntropy{-r.value, -r.lower_bound};
}

EatReport eat_corollary_check(const std::vector<EatStep>& steps, const Matrix& rho_y0, double epsilon,
                              const SolverOptions& options) {
  const std::size_t n = steps.size();
  if (n == 0) throw ValidationError("eat_corollary_check: at least one step is required");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ValidationError("eat_corollary_check: epsilon must lie in (0, 1/2)");
  require_density(rho_y0, "eat_corollary_check(rho_y0)");
  std::vector<Dilation> rounds;
  std::size_t prev_y = static_cast<std::size_t>(rho_y0.rows());
  std::size_t s_total = 1, c_total = 1, d = 1, s_max = 1;
  std::vector<std::size_t> sc_dims;
  for (const EatStep& st : steps) {
    if (st.map.in_dim() != prev_y) throw ValidationError("eat_corollary_check: Y dimensions do not chain");
    if (st.map.out_dim() != st.s_dim * st.c_dim * st.y_dim)
      throw ValidationError("eat_corollary_check: output dimension must equal s_dim * c_dim * y_dim");
    // Reorder outputs S C Y -> Y S C so that Y plays the environment.
    const std::size_t sc = st.s_dim * st.c_dim;
    std::vector<Matrix> ks;
    for (const Matrix& k : st.map.kraus()) {
      Matrix r(k.rows(), k.cols());
      for (std::size_t a = 0; a < sc; ++a)
        for (std::size_t y = 0; y < st.y_dim; ++y) r.row(idx(y * sc + a)) = k.row(idx(a * st.y_dim + y));
      ks.push_back(std::move(r));
    }
    rounds.push_back(
        dilation_from_map(QuantumMap(st.map.in_dim(), st.map.out_dim(), std::move(ks), st.map.trace_preserving()),
                          st.y_dim, sc));
    prev_y = st.y_dim;
    s_total *= st.s_dim;
    c_total *= st.c_dim;
    d = std::max(d, sc);
    s_max = std::max(s_max, st.s_dim);
    sc_dims.push_back(st.s_dim);
    sc_dims.push_back(st.c_dim);
  }
  check_dim(s_total * c_total, "eat_corollary_check");
  Strategy p;
  p.maps.push_back(preparation_channel(hermitian_part(rho_y0)));
  p.memory_dims.push_back(1);
  for (std::size_t i = 1; i < n; ++i) {
    p.maps.push_back(identity_channel(steps[i - 1].y_dim));
    p.memory_dims.push_back(1);
  }
  const Matrix out = rollout(rounds, p);
  std::vector<std::size_t> perm;
  for (std::size_t i = 0; i < n; ++i) perm.push_back(2 * i);
  for (std::size_t i = 0; i < n; ++i) perm.push_back(2 * i + 1);
  const Matrix rho_sc = hermitian_part(permute_subsystems(out, sc_dims, perm));

  EatReport rep;
  rep.n = n;
  const HmaxWitness hw = hmax_witness(rho_sc, epsilon, {s_total, c_total});
  rep.hmax_upper = hw.hmax_upper;
  rep.dh_value = hw.dh_value;
  for (const EatStep& st : steps) {
    const VariationalEntropy ve = max_step_entropy(st, options);
    rep.step_entropy.push_back(ve.value);
    rep.entropy_sum += ve.value;
  }
  rep.c = 16.0 * std::log2(static_cast<double>(s_max));
  rep.correction = reat_correction(n, d, epsilon, rep.c).correction;
  rep.holds = rep.hmax_upper <= rep.entropy_sum + rep.correction + 1e-6;
  return rep;
}

}  // namespace divlab
