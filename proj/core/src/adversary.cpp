#include "divlab/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "divlab/conic.hpp"
#include "divlab/divergences.hpp"
#include "divlab/errors.hpp"

namespace divlab {

namespace {

const Dilation& round_at(const std::vector<Dilation>& rounds, std::size_t i) {
  return rounds.size() == 1 ? rounds.front() : rounds[i];
}

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Output ordering after a channel use: prev B's, new B, memory, environment.
const std::vector<std::size_t> kAfterDilation = {0, 2, 3, 1};
const std::vector<std::size_t> kBeforeDilation = {0, 3, 1, 2};

struct RoundRecord {
  std::size_t btot = 1;  // dimension of B_1 .. B_{i-1}
  Matrix before;         // on B_<i (x) R_{i-1} E_{i-1}
  Matrix after;          // on B_<i (x) A_i R_i
};

struct ForwardPass {
  std::vector<RoundRecord> rounds;
  Matrix state;  // B_1..B_n (x) R_n (x) E_n
  std::size_t btot = 1;
  std::size_t mem = 1;
  std::size_t env = 1;
  Matrix output;
};

ForwardPass forward(const std::vector<Dilation>& rounds, const Strategy& s, bool keep) {
  ForwardPass fp;
  fp.state = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < s.n_rounds(); ++i) {
    const Dilation& dil = round_at(rounds, i);
    const QuantumMap& p = s.maps[i];
    const std::size_t r_new = s.memory_dims[i];
    check_dim(fp.btot * p.out_dim(), "rollout");
    check_dim(fp.btot * dil.env_dim * dil.out_dim * r_new, "rollout");
    RoundRecord rec;
    rec.btot = fp.btot;
    if (keep) rec.before = fp.state;
    Matrix y = apply(p, fp.state, Subsystems{{fp.btot, p.in_dim()}, 1});
    if (keep) rec.after = y;
    Matrix z = apply(dil.map, y, Subsystems{{fp.btot, dil.in_dim, r_new}, 1});
    fp.state = permute_subsystems(z, {fp.btot, dil.env_dim, dil.out_dim, r_new}, kAfterDilation);
    fp.btot *= dil.out_dim;
    fp.mem = r_new;
    fp.env = dil.env_dim;
    if (keep) fp.rounds.push_back(std::move(rec));
  }
  fp.output = hermitian_part(partial_trace(fp.state, {fp.btot, fp.mem * fp.env}, {0}));
  return fp;
}

// Euclidean gradients of Re tr(G rollout) with respect to every Kraus operator.
std::vector<std::vector<Matrix>> backward(const std::vector<Dilation>& rounds, const Strategy& s,
                                          const ForwardPass& fp, const Matrix& g) {
  const std::size_t n = s.n_rounds();
  std::vector<std::vector<Matrix>> grads(n);
  Matrix lam = tensor(g, identity(fp.mem * fp.env));
  for (std::size_t ii = n; ii-- > 0;) {
    const Dilation& dil = round_at(rounds, ii);
    const QuantumMap& p = s.maps[ii];
    const RoundRecord& rec = fp.rounds[ii];
    const std::size_t r_new = s.memory_dims[ii];
    const Matrix pre = permute_subsystems(lam, {rec.btot, dil.out_dim, r_new, dil.env_dim}, kBeforeDilation);
    const Matrix lam_y =
        adjoint_apply(dil.map, pre, Subsystems{{rec.btot, dil.env_dim * dil.out_dim, r_new}, 1});
    const auto in = idx(p.in_dim()), out = idx(p.out_dim());
    const auto b = idx(rec.btot);
    grads[ii].reserve(p.kraus_count());
    for (const Matrix& a : p.kraus()) {
      Matrix gk = Matrix::Zero(out, in);
      // sum_{b1,b2} Lam[b1,b2] A X[b2,b1]
      for (Eigen::Index b1 = 0; b1 < b; ++b1)
        for (Eigen::Index b2 = 0; b2 < b; ++b2)
          gk.noalias() += lam_y.block(b1 * out, b2 * out, out, out) * a * rec.before.block(b2 * in, b1 * in, in, in);
      grads[ii].push_back(2.0 * gk);
    }
    lam = adjoint_apply(p, lam_y, Subsystems{{rec.btot, p.out_dim()}, 1});
  }
  return grads;
}

// Strategy maps in Stinespring form: V stacks K Kraus operators, row k * out + o.
struct Param {
  std::vector<Matrix> v;
  std::vector<std::size_t> in, out, kraus;
  std::vector<std::size_t> memory;
};

Param to_param(const Strategy& s, std::size_t kraus_limit) {
  Param par;
  par.memory = s.memory_dims;
  for (const QuantumMap& p : s.maps) {
    const std::size_t k = std::max(p.kraus_count(), std::min(p.in_dim() * p.out_dim(), kraus_limit));
    Matrix v = Matrix::Zero(idx(k * p.out_dim()), idx(p.in_dim()));
    for (std::size_t j = 0; j < p.kraus_count(); ++j)
      v.middleRows(idx(j * p.out_dim()), idx(p.out_dim())) = p.kraus()[j];
    par.v.push_back(v);
    par.in.push_back(p.in_dim());
    par.out.push_back(p.out_dim());
    par.kraus.push_back(k);
  }
  return par;
}

Strategy to_strategy(const Param& par) {
  Strategy s;
  s.memory_dims = par.memory;
  for (std::size_t i = 0; i < par.v.size(); ++i) {
    std::vector<Matrix> ks;
    for (std::size_t j = 0; j < par.kraus[i]; ++j) ks.push_back(par.v[i].middleRows(idx(j * par.out[i]), idx(par.out[i])));
    s.maps.emplace_back(par.in[i], par.out[i], std::move(ks), true);
  }
  return s;
}

Matrix stack(const std::vector<Matrix>& ks, std::size_t kraus, std::size_t out, std::size_t in) {
  Matrix g = Matrix::Zero(idx(kraus * out), idx(in));
  for (std::size_t j = 0; j < ks.size(); ++j) g.middleRows(idx(j * out), idx(out)) = ks[j];
  return g;
}

struct Player {
  const std::vector<Dilation>* rounds = nullptr;
  Param par;
};

// f(final states, gradient outputs) -> value to maximize.
using GameObjective = std::function<double(const std::vector<Matrix>&, std::vector<Matrix>*)>;

struct AscentOutcome {
  double value = 0.0;
  int iterations = 0;
};

// Riemannian gradient ascent on a product of Stiefel manifolds with polar retraction.
AscentOutcome ascend(std::vector<Player>& players, const GameObjective& f, int max_iter) {
  auto evaluate = [&](const std::vector<Player>& ps, std::vector<Matrix>* g, std::vector<ForwardPass>* fps) {
    std::vector<Matrix> outs;
    for (const Player& p : ps) {
      ForwardPass fp = forward(*p.rounds, to_strategy(p.par), fps != nullptr);
      outs.push_back(fp.output);
      if (fps) fps->push_back(std::move(fp));
    }
    return f(outs, g);
  };
  std::vector<Matrix> g;
  std::vector<ForwardPass> fps;
  double val = evaluate(players, &g, &fps);
  double step = 1.0;
  AscentOutcome res;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    std::vector<std::vector<Matrix>> dirs(players.size());
    double norm2 = 0;
    for (std::size_t q = 0; q < players.size(); ++q) {
      const Strategy s = to_strategy(players[q].par);
      const auto eg = backward(*players[q].rounds, s, fps[q], g[q]);
      const Param& par = players[q].par;
      for (std::size_t i = 0; i < par.v.size(); ++i) {
        const Matrix ge = stack(eg[i], par.kraus[i], par.out[i], par.in[i]);
        const Matrix& v = par.v[i];
        const Matrix vg = v.adjoint() * ge;
        const Matrix rg = ge - v * (0.5 * (vg + vg.adjoint()));
        norm2 += rg.squaredNorm();
        dirs[q].push_back(rg);
      }
    }
    if (norm2 < 1e-24) break;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      std::vector<Player> trial = players;
      for (std::size_t q = 0; q < trial.size(); ++q)
        for (std::size_t i = 0; i < trial[q].par.v.size(); ++i)
          trial[q].par.v[i] = polar_isometry(trial[q].par.v[i] + step * dirs[q][i]);
      std::vector<Matrix> tg;
      std::vector<ForwardPass> tf;
      const double tv = evaluate(trial, &tg, &tf);
      if (std::isfinite(tv) && tv >= val + 1e-4 * step * norm2) {
        players = std::move(trial);
        g = std::move(tg);
        fps = std::move(tf);
        const double gain = tv - val;
        val = tv;
        improved = true;
        step *= 2.0;
        if (gain <= 1e-14 * std::max(1.0, std::abs(val))) it = max_iter;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  res.value = val;
  return res;
}

void perturb_zero_blocks(Param& par, std::uint64_t seed) {
  // Break the symmetry of padded blocks so their gradients are nonzero.
  for (std::size_t i = 0; i < par.v.size(); ++i) {
    const Matrix r = random_isometry(static_cast<std::size_t>(par.v[i].rows()), par.in[i], seed + i);
    par.v[i] = polar_isometry(par.v[i] + 1e-3 * r);
  }
}

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

}  // namespace

Dilation dilation_of(const QuantumMap& channel) {
  const QuantumMap c = channel.compressed();
  const StinespringIsometry s = stinespring(c);
  Dilation d;
  d.map = QuantumMap(s.in_dim, s.env_dim * s.out_dim, {s.v}, channel.trace_preserving());
  d.in_dim = s.in_dim;
  d.out_dim = s.out_dim;
  d.env_dim = s.env_dim;
  return d;
}

Dilation dilation_from_map(const QuantumMap& map, std::size_t env_dim, std::size_t out_dim) {
  if (env_dim == 0 || out_dim == 0 || env_dim * out_dim != map.out_dim())
    throw ValidationError("dilation_from_map: env_dim * out_dim must equal the map's output dimension");
  Dilation d;
  d.map = map;
  d.in_dim = map.in_dim();
  d.out_dim = out_dim;
  d.env_dim = env_dim;
  return d;
}

void validate_strategy(const Strategy& s, const std::vector<Dilation>& rounds) {
  if (s.maps.empty()) throw ValidationError("strategy: at least one round is required");
  if (s.memory_dims.size() != s.maps.size())
    throw ValidationError("strategy: memory_dims must have one entry per round");
  if (rounds.empty() || (rounds.size() != 1 && rounds.size() != s.maps.size()))
    throw ValidationError("strategy: need one dilation or one per round");
  std::size_t prev_in = 1;
  for (std::size_t i = 0; i < s.maps.size(); ++i) {
    const QuantumMap& p = s.maps[i];
    const Dilation& dil = round_at(rounds, i);
    std::ostringstream where;
    where << "strategy: round " << (i + 1) << ": ";
    if (s.memory_dims[i] == 0) throw ValidationError(where.str() + "memory dimension must be positive");
    if (p.in_dim() != prev_in) {
      std::ostringstream os;
      os << where.str() << "map input dimension " << p.in_dim() << " != |R_{i-1}||E_{i-1}| = " << prev_in;
      throw ValidationError(os.str());
    }
    if (p.out_dim() != dil.in_dim * s.memory_dims[i]) {
      std::ostringstream os;
      os << where.str() << "map output dimension " << p.out_dim() << " != |A_i||R_i| = " << dil.in_dim * s.memory_dims[i];
      throw ValidationError(os.str());
    }
    if (!p.trace_preserving()) throw ValidationError(where.str() + "map must be trace preserving");
    prev_in = s.memory_dims[i] * dil.env_dim;
  }
}

Matrix rollout(const std::vector<Dilation>& rounds, const Strategy& strategy) {
  validate_strategy(strategy, rounds);
  return forward(rounds, strategy, false).output;
}

Matrix rollout(const Dilation& dilation, const Strategy& strategy) {
  return rollout(std::vector<Dilation>{dilation}, strategy);
}

Matrix nonadaptive_rollout(const QuantumMap& channel, std::size_t n, const Matrix& rho_in) {
  if (n == 0) throw ValidationError("nonadaptive_rollout: n must be positive");
  std::size_t din = 1;
  for (std::size_t i = 0; i < n; ++i) {
    din *= channel.in_dim();
    check_dim(din, "nonadaptive_rollout");
  }
  if (static_cast<std::size_t>(rho_in.rows()) != din)
    throw ValidationError("nonadaptive_rollout: input must live on A^n");
  require_density(rho_in, "nonadaptive_rollout(rho_in)");
  return hermitian_part(tensor_power_map(channel, n).apply(rho_in));
}

Strategy embedding_strategy(const Matrix& rho_in, std::size_t in_dim, std::size_t n, std::size_t env_dim) {
  if (n == 0 || in_dim == 0 || env_dim == 0) throw ValidationError("embedding_strategy: dimensions must be positive");
  require_density(rho_in, "embedding_strategy(rho_in)");
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= in_dim;
  if (static_cast<std::size_t>(rho_in.rows()) != total)
    throw ValidationError("embedding_strategy: input must live on A^n");
  Strategy s;
  std::size_t mem = total / in_dim;
  s.maps.push_back(preparation_channel(hermitian_part(rho_in)));
  s.memory_dims.push_back(mem);
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<Matrix> ks;
    for (std::size_t e = 0; e < env_dim; ++e) {
      Matrix k = Matrix::Zero(idx(mem), idx(mem * env_dim));
      for (std::size_t r = 0; r < mem; ++r) k(idx(r), idx(r * env_dim + e)) = 1.0;
      ks.push_back(std::move(k));
    }
    s.maps.emplace_back(mem * env_dim, mem, std::move(ks), true);
    mem /= in_dim;
    s.memory_dims.push_back(mem);
  }
  return s;
}

Strategy mixture_strategy(const Strategy& s1, const Strategy& s2, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mixture_strategy: lambda must lie in [0, 1]");
  if (s1.n_rounds() != s2.n_rounds() || s1.n_rounds() == 0)
    throw ValidationError("mixture_strategy: strategies must have the same positive number of rounds");
  const std::size_t n = s1.n_rounds();
  const Strategy* ss[2] = {&s1, &s2};
  const double w[2] = {std::sqrt(lambda), std::sqrt(1.0 - lambda)};
  Strategy mix;
  std::size_t rp_prev = 1;
  std::size_t r_prev[2] = {1, 1};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a_dim = 0, env[2] = {1, 1};
    for (int c = 0; c < 2; ++c) {
      const QuantumMap& p = ss[c]->maps[i];
      if (p.out_dim() % ss[c]->memory_dims[i] != 0)
        throw ValidationError("mixture_strategy: output dimension is not a multiple of the memory dimension");
      const std::size_t a = p.out_dim() / ss[c]->memory_dims[i];
      if (a_dim != 0 && a != a_dim) throw ValidationError("mixture_strategy: channel input dimensions differ");
      a_dim = a;
      if (p.in_dim() % r_prev[c] != 0) throw ValidationError("mixture_strategy: inconsistent input dimension");
      env[c] = p.in_dim() / r_prev[c];
    }
    if (env[0] != env[1]) throw ValidationError("mixture_strategy: environment dimensions differ");
    const std::size_t e = i == 0 ? 1 : env[0];
    const std::size_t rp = std::max(s1.memory_dims[i], s2.memory_dims[i]);
    const std::size_t in_mix = i == 0 ? 1 : rp_prev * 2 * e;
    const std::size_t out_mix = a_dim * rp * 2;
    std::vector<Matrix> ks;
    for (int c = 0; c < 2; ++c) {
      const QuantumMap& p = ss[c]->maps[i];
      const std::size_t rc = ss[c]->memory_dims[i];
      const std::size_t rc_prev = i == 0 ? 1 : r_prev[c];
      auto in_index = [&](std::size_t r, std::size_t ee) { return i == 0 ? std::size_t{0} : (r * 2 + c) * e + ee; };
      auto out_index = [&](std::size_t a, std::size_t r) { return (a * rp + r) * 2 + c; };
      for (const Matrix& k : p.kraus()) {
        Matrix km = Matrix::Zero(idx(out_mix), idx(in_mix));
        for (std::size_t a = 0; a < a_dim; ++a)
          for (std::size_t r = 0; r < rc; ++r)
            for (std::size_t rr = 0; rr < rc_prev; ++rr)
              for (std::size_t ee = 0; ee < e; ++ee)
                km(idx(out_index(a, r)), idx(in_index(rr, ee))) = k(idx(a * rc + r), idx(rr * e + ee));
        ks.push_back(i == 0 ? Matrix(w[c] * km) : km);
      }
      if (i > 0) {
        // Inputs outside the padded branch: any trace-preserving completion.
        for (std::size_t rr = rc_prev; rr < rp_prev; ++rr)
          for (std::size_t ee = 0; ee < e; ++ee) {
            Matrix km = Matrix::Zero(idx(out_mix), idx(in_mix));
            km(idx(out_index(0, 0)), idx(in_index(rr, ee))) = 1.0;
            ks.push_back(std::move(km));
          }
      }
    }
    mix.maps.emplace_back(in_mix, out_mix, std::move(ks), true);
    mix.memory_dims.push_back(rp * 2);
    rp_prev = rp;
    r_prev[0] = s1.memory_dims[i];
    r_prev[1] = s2.memory_dims[i];
  }
  return mix;
}

GameResult beta_fixed(const Matrix& rho_n, const Matrix& sigma_n, double epsilon, std::size_t n) {
  if (n == 0) throw ValidationError("beta_fixed: n must be positive");
  const CertifiedValue cv = hypothesis_testing(rho_n, sigma_n, epsilon);
  GameResult g;
  g.beta = cv.beta;
  g.epsilon = epsilon;
  g.test_operator = cv.witness;
  g.rho_n = rho_n;
  g.sigma_n = sigma_n;
  g.exponent = cv.value / static_cast<double>(n);
  return g;
}

namespace {

struct NonadaptiveSolution {
  Matrix test;
  double upper = 1.0;
  double type1 = 0.0;
  Matrix rho_in;
  Matrix sigma_in;
  int iterations = 0;
};

// min s  s.t.  0 <= T <= I,  M^dag(T) <= s I,  N^dag(I - T) <= eps I.
NonadaptiveSolution nonadaptive_sdp(const QuantumMap& nn, const QuantumMap& mm, double epsilon) {
  const std::size_t din = nn.in_dim();
  const std::size_t dout = nn.out_dim();
  conic::LmiProblem lp;
  const std::size_t s = lp.add_scalars(1);
  const conic::HermitianVar t = lp.add_hermitian(dout, false);
  const std::size_t b_t = lp.add_block(dout);
  const std::size_t b_it = lp.add_block(dout);
  const std::size_t b_m = lp.add_block(din);
  const std::size_t b_n = lp.add_block(din);
  lp.add_linear(b_t, t, [](const Matrix& h) { return h; });
  lp.add_constant(b_it, identity(dout));
  lp.add_linear(b_it, t, [](const Matrix& h) { return Matrix(-h); });
  lp.add_coefficient(b_m, s, identity(din));
  lp.add_linear(b_m, t, [&](const Matrix& h) { return Matrix(-mm.adjoint(h)); });
  lp.add_constant(b_n, hermitian_part(epsilon * identity(din) - nn.adjoint(identity(dout))));
  lp.add_linear(b_n, t, [&](const Matrix& h) { return nn.adjoint(h); });
  lp.set_cost(s, 1.0);
  const conic::Solution sol = conic::solve(lp);

  NonadaptiveSolution out;
  out.iterations = sol.iterations;
  Matrix test = clip_unit(t.value(sol.y));
  const Matrix id = identity(dout);
  double type1 = max_eig(hermitian_part(nn.adjoint(id - test)));
  if (type1 > epsilon) {
    const double kappa = 1.0 - epsilon / type1;
    test = hermitian_part(test + kappa * (id - test));
    type1 = max_eig(hermitian_part(nn.adjoint(id - test)));
  }
  out.test = test;
  out.type1 = type1;
  out.upper = std::min(1.0 * std::max(max_eig(hermitian_part(mm.adjoint(test))), 0.0),
                       max_eig(hermitian_part(mm.adjoint(id))));
  out.sigma_in = density_from(sol.dual[b_m]);
  out.rho_in = density_from(sol.dual[b_n]);
  return out;
}

std::vector<std::size_t> adaptive_memory(std::size_t a, std::size_t n, std::size_t cap) {
  std::vector<std::size_t> mem(n, 1);
  std::size_t r = 1;
  for (std::size_t i = n; i-- > 1;) {
    r *= a;
    mem[i - 1] = std::min(r, cap);
  }
  return mem;
}

bool embeddable(std::size_t a, std::size_t n, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 1; i < n; ++i) r *= a;
  return r <= cap;
}

}  // namespace

GameBracket beta_game(const QuantumMap& n_map, const QuantumMap& m_map, std::size_t n, double epsilon,
                      const GameOptions& options) {
  if (n == 0) throw ValidationError("beta_game: n must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("beta_game: epsilon must lie in (0, 1)");
  if (n_map.in_dim() != m_map.in_dim() || n_map.out_dim() != m_map.out_dim())
    throw ValidationError("beta_game: channels must share input and output dimensions");
  if (!n_map.trace_preserving()) throw ValidationError("beta_game: first channel must be trace preserving");
  if (options.mem_cap == 0) throw ValidationError("beta_game: mem_cap must be positive");

  const QuantumMap nn = tensor_power_map(n_map.compressed(), n);
  const QuantumMap mm = tensor_power_map(m_map.compressed(), n);
  const NonadaptiveSolution na = nonadaptive_sdp(nn, mm, epsilon);

  GameBracket br;
  br.epsilon = epsilon;
  br.n = n;
  br.model = options.model;
  br.iterations = na.iterations;
  br.witness = beta_fixed(hermitian_part(nn.apply(na.rho_in)), hermitian_part(mm.apply(na.sigma_in)), epsilon, n);
  br.lower = br.witness.beta;
  br.upper = na.upper;
  br.type1_worst = na.type1;
  br.upper_certified = true;

  const Dilation dn = dilation_of(n_map);
  const Dilation dm = dilation_of(m_map);
  const std::vector<Dilation> rn{dn}, rm{dm};
  const std::size_t a = n_map.in_dim();

  if (options.model == AdversaryModel::nonadaptive) {
    if (embeddable(a, n, std::max<std::size_t>(options.mem_cap, 1)) || n == 1) {
      br.strategy_n = embedding_strategy(na.rho_in, a, n, dn.env_dim);
      br.strategy_m = embedding_strategy(na.sigma_in, a, n, dm.env_dim);
    }
    br.oscillation = br.lower > br.upper + 1e-6;
    return br;
  }

  // Adaptive model: ascend beta_eps over strategy pairs from the embedded
  // nonadaptive optimum and from random starts.
  br.upper_certified = false;
  const std::vector<std::size_t> mem = adaptive_memory(a, n, options.mem_cap);
  std::vector<std::pair<Param, Param>> starts;
  if (embeddable(a, n, options.mem_cap)) {
    Param pn = to_param(embedding_strategy(na.rho_in, a, n, dn.env_dim), options.kraus_limit);
    Param pm = to_param(embedding_strategy(na.sigma_in, a, n, dm.env_dim), options.kraus_limit);
    perturb_zero_blocks(pn, options.seed);
    perturb_zero_blocks(pm, options.seed + 97);
    starts.emplace_back(std::move(pn), std::move(pm));
  }
  for (int r = 0; r < options.restarts; ++r) {
    const std::uint64_t sd = options.seed + 1000 * static_cast<std::uint64_t>(r + 1);
    starts.emplace_back(to_param(random_strategy(rn, mem, options.kraus_limit, sd), options.kraus_limit),
                        to_param(random_strategy(rm, mem, options.kraus_limit, sd + 1), options.kraus_limit));
  }

  const GameObjective beta_obj = [&](const std::vector<Matrix>& outs, std::vector<Matrix>* g) {
    const CertifiedValue cv = hypothesis_testing(outs[0], outs[1], epsilon);
    if (g) {
      g->assign(2, Matrix());
      (*g)[0] = -cv.threshold * cv.witness;
      (*g)[1] = cv.witness;
    }
    return cv.beta;
  };

  Param best_n, best_m;
  bool have_best = false;
  for (auto& st : starts) {
    std::vector<Player> players(2);
    players[0].rounds = &rn;
    players[0].par = st.first;
    players[1].rounds = &rm;
    players[1].par = st.second;
    const AscentOutcome out = ascend(players, beta_obj, options.ascent_iter);
    br.iterations += out.iterations;
    if (out.value > br.lower || !have_best) {
      const Strategy sn = to_strategy(players[0].par);
      const Strategy sm = to_strategy(players[1].par);
      const Matrix rho_n = rollout(rn, sn), sigma_n = rollout(rm, sm);
      const GameResult gr = beta_fixed(rho_n, sigma_n, epsilon, n);
      if (gr.beta > br.lower || !have_best) {
        if (gr.beta > br.lower) {
          br.lower = gr.beta;
          br.witness = gr;
        }
        best_n = players[0].par;
        best_m = players[1].par;
        br.strategy_n = sn;
        br.strategy_m = sm;
        have_best = true;
      }
    }
  }

  // Attack the nonadaptive test: worst type-II error and worst type-I error.
  const Matrix id = identity(nn.out_dim());
  auto linear_obj = [](const Matrix& w) -> GameObjective {
    return [w](const std::vector<Matrix>& outs, std::vector<Matrix>* g) {
      if (g) g->assign(1, w);
      return real_trace(w * outs[0]);
    };
  };
  double type2 = na.upper;
  double type1 = na.type1;
  for (auto& st : starts) {
    std::vector<Player> pm(1), pn(1);
    pm[0].rounds = &rm;
    pm[0].par = st.second;
    type2 = std::max(type2, ascend(pm, linear_obj(na.test), options.ascent_iter).value);
    pn[0].rounds = &rn;
    pn[0].par = st.first;
    type1 = std::max(type1, ascend(pn, linear_obj(hermitian_part(id - na.test)), options.ascent_iter).value);
  }
  br.upper = type2;
  br.type1_worst = type1;
  br.type1_violation = type1 > epsilon + 1e-9;
  br.oscillation = br.lower > br.upper + 1e-6;
  return br;
}

ExponentTrend exponent_trend(const QuantumMap& n_map, const QuantumMap& m_map, double epsilon,
                             const std::vector<std::size_t>& n_list, const GameOptions& options,
                             const SolverOptions& solver) {
  if (n_list.empty()) throw ValidationError("exponent_trend: n_list must be non-empty");
  ExponentTrend tr;
  std::size_t n_max = 1;
  for (std::size_t n : n_list) {
    const GameBracket br = beta_game(n_map, m_map, n, epsilon, options);
    ExponentPoint p;
    p.n = n;
    const double dn = static_cast<double>(n);
    p.from_upper = br.upper > 0 ? -std::log2(br.upper) / dn : kInfinity;
    p.from_lower = br.lower > 0 ? -std::log2(br.lower) / dn : kInfinity;
    tr.points.push_back(p);
    n_max = std::max(n_max, n);
  }
  tr.bracket = regularization_bracket(n_map, m_map, 1.0, std::min<std::size_t>(n_max, 2), solver);
  return tr;
}

ConverseCheck converse_check(const Matrix& rho_n, const Matrix& sigma_n, std::size_t n, double epsilon,
                             const std::vector<std::pair<double, double>>& alpha_lower) {
  if (alpha_lower.empty()) throw ValidationError("converse_check: alpha grid must be non-empty");
  ConverseCheck c;
  c.dh = hypothesis_testing(rho_n, sigma_n, epsilon).value;
  c.bound = -kInfinity;
  for (const auto& [alpha, lower] : alpha_lower) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("converse_check: alpha must lie in (0, 1)");
    const double b = static_cast<double>(n) * lower + alpha / (alpha - 1.0) * std::log2(1.0 / epsilon);
    if (b > c.bound) {
      c.bound = b;
      c.alpha = alpha;
    }
  }
  c.margin = c.dh - c.bound;
  return c;
}

QuantumMap random_channel(std::size_t in_dim, std::size_t out_dim, std::size_t kraus, std::uint64_t seed) {
  if (in_dim == 0 || out_dim == 0 || kraus == 0) throw ValidationError("random_channel: dimensions must be positive");
  const Matrix v = random_isometry(kraus * out_dim, in_dim, seed);
  std::vector<Matrix> ks;
  for (std::size_t k = 0; k < kraus; ++k) ks.push_back(v.middleRows(idx(k * out_dim), idx(out_dim)));
  return QuantumMap(in_dim, out_dim, std::move(ks), true);
}

Strategy random_strategy(const std::vector<Dilation>& rounds, const std::vector<std::size_t>& memory_dims,
                         std::size_t kraus, std::uint64_t seed) {
  if (memory_dims.empty()) throw ValidationError("random_strategy: memory_dims must be non-empty");
  Strategy s;
  s.memory_dims = memory_dims;
  std::size_t in = 1;
  for (std::size_t i = 0; i < memory_dims.size(); ++i) {
    const Dilation& dil = round_at(rounds, i);
    const std::size_t out = dil.in_dim * memory_dims[i];
    const std::size_t k = std::max({std::size_t{1}, std::min(kraus, in * out), (in + out - 1) / out});
    s.maps.push_back(random_channel(in, out, k, seed + 7919 * i));
    in = memory_dims[i] * dil.env_dim;
  }
  return s;
}

}  // namespace divlab
