#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "divlab/adversary.hpp"
#include "divlab/errors.hpp"
#include "oracles.hpp"

using namespace divlab;

namespace {

Matrix diag(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Strategy prepare(const Matrix& rho) { return Strategy{{preparation_channel(rho)}, {1}}; }

// max over Bloch pairs of the optimal type-II error: grid, then compass search.
double bloch_pair_max_beta(const QuantumMap& a, const QuantumMap& b, double eps) {
  using V6 = std::array<double, 6>;
  auto state = [](double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    const double s = n > 1 ? 1 / n : 1;
    return oracle::bloch_state(s * x, s * y, s * z);
  };
  auto f = [&](const V6& v) {
    return oracle::np_beta(a.apply(state(v[0], v[1], v[2])), b.apply(state(v[3], v[4], v[5])), eps);
  };
  std::vector<std::array<double, 3>> grid;
  for (double x = -1; x <= 1.0001; x += 0.2)
    for (double z = -1; z <= 1.0001; z += 0.2)
      if (x * x + z * z <= 1.0001) grid.push_back({x, 0, z});
  double best = -1;
  V6 arg{};
  for (const auto& p : grid)
    for (const auto& q : grid) {
      const V6 v{p[0], p[1], p[2], q[0], q[1], q[2]};
      const double val = f(v);
      if (val > best) {
        best = val;
        arg = v;
      }
    }
  for (double step = 0.1; step > 1e-5; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t k = 0; k < 6; ++k)
        for (double sgn : {1.0, -1.0}) {
          V6 t = arg;
          t[k] += sgn * step;
          const double val = f(t);
          if (val > best + 1e-13) {
            best = val;
            arg = t;
            moved = true;
          }
        }
    }
  }
  return best;
}

}  // namespace

TEST(Rollout, SingleRoundPreparation) {
  const QuantumMap g = gad_channel(0.3, 0.5);
  const Matrix rho = random_density(2, 1);
  EXPECT_LE(max_abs(rollout(dilation_of(g), prepare(rho)) - g.apply(rho)), 1e-12);
  EXPECT_LE(max_abs(nonadaptive_rollout(g, 1, rho) - g.apply(rho)), 1e-12);
}

TEST(Rollout, ReplacerIgnoresStrategy) {
  const Matrix s0 = random_density(2, 2);
  const QuantumMap r = replacer_channel(s0, 2);
  const Dilation d = dilation_of(r);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Strategy s = random_strategy({d}, {2, 3}, 4, seed);
    EXPECT_LE(max_abs(rollout(d, s) - tensor(s0, s0)), 1e-12);
  }
}

TEST(Rollout, EmbeddingReproducesTensorPower) {
  const QuantumMap g = gad_channel(0.4, 0.2);
  const Dilation d = dilation_of(g);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix rho = random_density(4, 10 + seed);
    const Strategy s = embedding_strategy(rho, 2, 2, d.env_dim);
    const Matrix ref = oracle::apply_kraus(
        [&] {
          std::vector<Matrix> ks;
          for (const Matrix& a : g.kraus())
            for (const Matrix& b : g.kraus()) ks.push_back(oracle::kron(a, b));
          return ks;
        }(),
        rho);
    EXPECT_LE(max_abs(rollout(d, s) - ref), 1e-10);
    EXPECT_LE(max_abs(nonadaptive_rollout(g, 2, rho) - ref), 1e-10);
  }
  // product inputs give product outputs
  const Matrix r1 = random_density(2, 3), r2 = random_density(2, 4);
  EXPECT_LE(max_abs(nonadaptive_rollout(g, 2, tensor(r1, r2)) - tensor(g.apply(r1), g.apply(r2))), 1e-12);
}

TEST(Rollout, TraceOneForTracePreservingMaps) {
  const Dilation d = dilation_of(random_channel(2, 2, 3, 5));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix out = rollout(d, random_strategy({d}, {2, 2, 1}, 3, 20 + seed));
    EXPECT_NEAR(real_trace(out), 1.0, 1e-9);
    EXPECT_GE(min_eig(out), -1e-10);
    EXPECT_EQ(out.rows(), 8);
  }
}

TEST(Rollout, InvalidStrategyRejected) {
  const Dilation d = dilation_of(gad_channel(0.3, 0.3));
  Strategy bad = prepare(random_density(3, 1));
  EXPECT_THROW(rollout(d, bad), ValidationError);
  Strategy s = random_strategy({d}, {2, 2}, 2, 1);
  s.memory_dims = {2};
  EXPECT_THROW(rollout(d, s), ValidationError);
}

TEST(Mixture, Examples) {
  const QuantumMap g = gad_channel(0.3, 0.6);
  const Dilation d = dilation_of(g);
  const Strategy s1 = random_strategy({d}, {2, 1}, 3, 1), s2 = random_strategy({d}, {3, 2}, 3, 2);
  EXPECT_LE(max_abs(rollout(d, mixture_strategy(s1, s2, 1.0)) - rollout(d, s1)), 1e-10);

  const Matrix r1 = random_density(2, 3), r2 = random_density(2, 4);
  const Matrix avg = rollout(d, mixture_strategy(prepare(r1), prepare(r2), 0.5));
  EXPECT_LE(max_abs(avg - 0.5 * (g.apply(r1) + g.apply(r2))), 1e-12);
}

TEST(Mixture, LinearityAtTwoRounds) {
  const Dilation d = dilation_of(random_channel(2, 2, 2, 9));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Strategy s1 = random_strategy({d}, {1 + seed % 3, 2}, 4, 100 + seed);
    const Strategy s2 = random_strategy({d}, {2, 1 + seed % 2}, 4, 200 + seed);
    const double lam = 0.1 + 0.08 * static_cast<double>(seed);
    const Strategy mix = mixture_strategy(s1, s2, lam);
    EXPECT_NO_THROW(validate_strategy(mix, {d}));
    EXPECT_LE(max_abs(rollout(d, mix) - (lam * rollout(d, s1) + (1 - lam) * rollout(d, s2))), 1e-10);
  }
}

TEST(BetaFixed, Examples) {
  const Matrix r = random_density(3, 1);
  EXPECT_NEAR(beta_fixed(r, r, 0.2).beta, 0.8, 1e-9);
  EXPECT_NEAR(beta_fixed(diag(1, 0), diag(0, 1), 0.2).beta, 0.0, 1e-12);
  const GameResult np = beta_fixed(diag(0.7, 0.3), diag(0.4, 0.6), 0.1);
  EXPECT_NEAR(np.beta, oracle::classical_beta({0.7, 0.3}, {0.4, 0.6}, 0.1), 1e-9);
  EXPECT_NEAR(np.exponent, -std::log2(0.8), 1e-9);
  EXPECT_NEAR(beta_fixed(tensor(diag(0.7, 0.3), diag(0.7, 0.3)), tensor(diag(0.4, 0.6), diag(0.4, 0.6)), 0.1, 2).exponent,
              -std::log2(oracle::classical_beta({0.49, 0.21, 0.21, 0.09}, {0.16, 0.24, 0.24, 0.36}, 0.1)) / 2, 1e-9);
}

TEST(BetaGame, ReplacersIndependentOfModel) {
  const Matrix r0 = random_density(2, 5), s0 = random_density(2, 6);
  const QuantumMap a = replacer_channel(r0, 2), b = replacer_channel(s0, 2);
  for (std::size_t n : {1u, 2u}) {
    const double ref = hypothesis_testing(tensor_power(r0, n), tensor_power(s0, n), 0.1).beta;
    const GameBracket na = beta_game(a, b, n, 0.1);
    EXPECT_NEAR(na.lower, ref, 1e-6);
    EXPECT_NEAR(na.upper, ref, 1e-6);
    EXPECT_TRUE(na.upper_certified);
    GameOptions opt;
    opt.model = AdversaryModel::adaptive;
    const GameBracket ad = beta_game(a, b, n, 0.1, opt);
    EXPECT_NEAR(ad.lower, ref, 1e-6);
    EXPECT_NEAR(ad.upper, ref, 1e-6);
  }
}

TEST(BetaGame, IdenticalChannels) {
  const QuantumMap g = gad_channel(0.4, 0.3);
  const GameBracket br = beta_game(g, g, 1, 0.15);
  EXPECT_GE(br.lower, 0.85 - 1e-6);
  EXPECT_GE(br.upper, br.lower - 1e-6);
}

TEST(BetaGame, QubitGadMatchesBlochOracle) {
  const QuantumMap a = gad_channel(0.9, 0.0), b = gad_channel(0.9, 1.0);
  const double eps = 0.1;
  const GameBracket br = beta_game(a, b, 1, eps);
  const double ref = bloch_pair_max_beta(a, b, eps);
  EXPECT_NEAR(br.lower, ref, 2e-3);
  EXPECT_NEAR(br.upper, ref, 2e-3);
  EXPECT_FALSE(br.oscillation);
  EXPECT_FALSE(br.type1_violation);

  const QuantumMap c = gad_channel(0.5, 0.0), d = gad_channel(0.3, 0.9);
  const GameBracket br2 = beta_game(c, d, 1, 0.2);
  EXPECT_NEAR(br2.lower, bloch_pair_max_beta(c, d, 0.2), 2e-3);
}

TEST(BetaGame, AdaptiveContainsNonadaptive) {
  const QuantumMap a = gad_channel(0.7, 0.2), b = gad_channel(0.5, 0.8);
  const GameBracket na = beta_game(a, b, 2, 0.1);
  GameOptions opt;
  opt.model = AdversaryModel::adaptive;
  opt.restarts = 1;
  opt.ascent_iter = 20;
  const GameBracket ad = beta_game(a, b, 2, 0.1, opt);
  EXPECT_GE(ad.upper, na.lower - 1e-6);
  EXPECT_GE(ad.lower, na.lower - 1e-6);
  EXPECT_FALSE(ad.upper_certified);
  EXPECT_NEAR(real_trace(rollout(dilation_of(a), ad.strategy_n)), 1.0, 1e-9);
}

TEST(BetaGame, InvalidArguments) {
  const QuantumMap g = gad_channel(0.4, 0.3);
  EXPECT_THROW(beta_game(g, g, 0, 0.1), ValidationError);
  EXPECT_THROW(beta_game(g, g, 1, 1.0), ValidationError);
  GameOptions opt;
  opt.mem_cap = 0;
  EXPECT_THROW(beta_game(g, g, 1, 0.1, opt), ValidationError);
}

TEST(ExponentTrend, IdenticalAndReplacers) {
  const QuantumMap g = gad_channel(0.4, 0.3);
  const ExponentTrend same = exponent_trend(g, g, 0.1, {1, 2});
  for (const ExponentPoint& p : same.points) {
    // beta = 1 - eps gives exponent -(1/n) log2(1 - eps)
    EXPECT_NEAR(p.from_lower, -std::log2(0.9) / static_cast<double>(p.n), 1e-6);
  }
  EXPECT_NEAR(same.bracket.upper, 0.0, 1e-6);

  const Matrix r0 = random_density(2, 7), s0 = random_density(2, 8);
  const ExponentTrend rep = exponent_trend(replacer_channel(r0, 2), replacer_channel(s0, 2), 0.1, {1, 2});
  EXPECT_NEAR(rep.bracket.upper, umegaki(r0, s0), 1e-6);
  for (const ExponentPoint& p : rep.points)
    EXPECT_NEAR(p.from_lower,
                hypothesis_testing(tensor_power(r0, p.n), tensor_power(s0, p.n), 0.1).value / static_cast<double>(p.n),
                1e-6);
}

TEST(ExponentTrend, GadEstimatesBelowWeakConverse) {
  const QuantumMap a = gad_channel(0.9, 0.0), b = gad_channel(0.9, 1.0);
  const double eps = 0.1;
  const double h = -eps * std::log2(eps) - (1 - eps) * std::log2(1 - eps);
  const ExponentTrend t = exponent_trend(a, b, eps, {1, 2});
  ASSERT_EQ(t.bracket.per_n_upper.size(), 2u);
  for (const ExponentPoint& p : t.points) {
    const double dn = static_cast<double>(p.n);
    EXPECT_LE(p.from_upper, p.from_lower + 1e-9);
    // D_H <= (D + h(eps)) / (1 - eps) at the product of the minimizing pair
    const double u = t.bracket.per_n_upper[p.n - 1].second;
    EXPECT_LE(p.from_lower, (dn * u + h) / ((1 - eps) * dn) + 1e-6);
  }
}

TEST(Converse, HoldsOnRolledOutGadStrategies) {
  const QuantumMap a = gad_channel(0.9, 0.0), b = gad_channel(0.9, 1.0);
  std::vector<std::pair<double, double>> grid;
  for (double alpha : {0.5, 0.7, 0.9}) grid.emplace_back(alpha, regularization_bracket(a, b, alpha, 1).lower);
  const Dilation da = dilation_of(a), db = dilation_of(b);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Strategy sa = random_strategy({da}, {2, 1}, 4, 300 + seed);
    const Strategy sb = random_strategy({db}, {2, 1}, 4, 400 + seed);
    const ConverseCheck c = converse_check(rollout(da, sa), rollout(db, sb), 2, 0.1, grid);
    EXPECT_GE(c.margin, -1e-5) << seed;
  }
  EXPECT_THROW(converse_check(identity(2) / 2.0, identity(2) / 2.0, 1, 0.1, {}), ValidationError);
}
