#include <gtest/gtest.h>

#include <cmath>

#include "divlab/divergences.hpp"
#include "divlab/errors.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"
#include "oracles.hpp"

using namespace divlab;

namespace {

Matrix diag(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Matrix plus_state() { return oracle::bloch_state(1, 0, 0); }

// Full-rank random pair; pushes eigenvalues away from zero so closed-form
// oracles are well conditioned.
std::pair<Matrix, Matrix> random_pair(std::size_t d, std::uint64_t seed) {
  const double mix = 0.05;
  const Matrix r = (1 - mix) * random_density(d, seed) + mix * identity(d) / static_cast<double>(d);
  const Matrix s = (1 - mix) * random_density(d, seed + 7777) + mix * identity(d) / static_cast<double>(d);
  return {r, s};
}

}  // namespace

TEST(Umegaki, Examples) {
  const Matrix r = random_density(3, 1);
  EXPECT_NEAR(umegaki(r, r), 0.0, 1e-12);
  const double kl = 0.7 * std::log2(0.7 / 0.4) + 0.3 * std::log2(0.3 / 0.6);
  EXPECT_NEAR(umegaki(diag(0.7, 0.3), diag(0.4, 0.6)), kl, 1e-12);
  EXPECT_NEAR(kl, 0.26515, 1e-5);
  EXPECT_TRUE(is_infinite(umegaki(diag(1, 0), diag(0, 1))));
}

TEST(Umegaki, MatchesOracle) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto [r, q] = random_pair(2 + s % 4, s);
    EXPECT_NEAR(umegaki(r, q), oracle::umegaki_bits(r, q), 1e-9);
  }
}

TEST(Umegaki, RejectsNonDensity) {
  EXPECT_THROW(umegaki(diag(0.7, 0.7), diag(0.5, 0.5)), ValidationError);
  EXPECT_THROW(umegaki(diag(1.2, -0.2), diag(0.5, 0.5)), ValidationError);
}

TEST(Sandwiched, Examples) {
  EXPECT_NEAR(sandwiched(diag(1, 0), identity(2) / 2.0, 2.0), 1.0, 1e-12);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto [r, q] = random_pair(3, 100 + s);
    EXPECT_NEAR(sandwiched(r, q, 0.5), -2 * std::log2(fidelity(r, q)), 1e-9);
    for (double a : {0.6, 1.5, 2.0, 3.0}) EXPECT_NEAR(sandwiched(r, q, a), oracle::sandwiched_bits(r, q, a), 1e-8);
  }
  EXPECT_NEAR(sandwiched(diag(0.7, 0.3), diag(0.4, 0.6), 2.0), oracle::classical_div({0.7, 0.3}, {0.4, 0.6}, 2.0),
              1e-12);
}

TEST(Sandwiched, AlphaRange) {
  const Matrix r = random_density(2, 3);
  EXPECT_THROW(sandwiched(r, r, 0.4), ValidationError);
  EXPECT_THROW(sandwiched(r, r, 1.0), ValidationError);
}

TEST(Sandwiched, ContinuityAtOneAndMonotoneInAlpha) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto [r, q] = random_pair(3, 200 + s);
    const double d = umegaki(r, q);
    EXPECT_LE(std::abs(sandwiched(r, q, 1 + 1e-4) - d), 1e-2);
    EXPECT_LE(std::abs(sandwiched(r, q, 1 - 1e-4) - d), 1e-2);
    double prev = -1e300;
    for (double a : {0.5, 0.6, 0.75, 0.9, 0.99, 1.01, 1.2, 1.5, 2.0, 3.0, 5.0}) {
      const double v = sandwiched(r, q, a);
      EXPECT_GE(v, prev - 1e-10) << "alpha " << a;
      prev = v;
    }
  }
}

TEST(Sandwiched, SubspaceSupportForAlphaBelowOne) {
  // finite on overlapping supports for alpha < 1, infinite for alpha > 1
  const Matrix r = plus_state(), q = diag(1, 0);
  EXPECT_TRUE(std::isfinite(sandwiched(r, q, 0.75)));
  EXPECT_TRUE(is_infinite(sandwiched(r, q, 1.5)));
}

TEST(Petz, Examples) {
  const Matrix r = random_density(3, 5);
  EXPECT_NEAR(petz(r, r, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(petz(r, r, 1.7), 0.0, 1e-12);
  for (double a : {0.3, 0.6, 1.5, 2.0})
    EXPECT_NEAR(petz(diag(0.7, 0.3), diag(0.4, 0.6), a), oracle::classical_div({0.7, 0.3}, {0.4, 0.6}, a), 1e-12);
}

TEST(Petz, DominatesSandwiched) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto [r, q] = random_pair(2 + s % 3, 300 + s);
    for (double a : {0.6, 1.5, 2.0}) {
      EXPECT_NEAR(petz(r, q, a), oracle::petz_bits(r, q, a), 1e-8);
      EXPECT_GE(petz(r, q, a), sandwiched(r, q, a) - 1e-10);
    }
  }
}

TEST(Dmax, Examples) {
  const Matrix r = random_density(3, 6);
  EXPECT_NEAR(dmax(r, r), 0.0, 1e-9);
  EXPECT_NEAR(dmax(plus_state(), identity(2) / 2.0), 1.0, 1e-12);
  EXPECT_NEAR(dmax(identity(2) / 2.0, diag(0.75, 0.25)), 1.0, 1e-12);
  EXPECT_TRUE(is_infinite(dmax(plus_state(), diag(1, 0))));
}

TEST(Dmax, IsSandwichedLimit) {
  const auto [r, q] = random_pair(3, 17);
  EXPECT_NEAR(sandwiched(r, q, 200.0), dmax(r, q), 2e-2);
  EXPECT_GE(dmax(r, q), sandwiched(r, q, 50.0) - 1e-10);
}

TEST(HypothesisTesting, Examples) {
  const Matrix r = random_density(3, 7);
  const CertifiedValue same = hypothesis_testing(r, r, 0.2);
  EXPECT_NEAR(same.value, -std::log2(0.8), 1e-9);
  EXPECT_NEAR(same.beta, 0.8, 1e-9);

  EXPECT_TRUE(is_infinite(hypothesis_testing(diag(1, 0), diag(0, 1), 0.1).value));

  const CertifiedValue np = hypothesis_testing(diag(0.7, 0.3), diag(0.4, 0.6), 0.1);
  EXPECT_NEAR(np.beta, 0.8, 1e-9);
  EXPECT_NEAR(np.value, -std::log2(0.8), 1e-9);
  EXPECT_NEAR(np.beta, oracle::classical_beta({0.7, 0.3}, {0.4, 0.6}, 0.1), 1e-12);
  EXPECT_LE(max_abs(np.witness - diag(1, 2.0 / 3.0)), 1e-8);
  EXPECT_LE(np.gap, 1e-7);
}

TEST(HypothesisTesting, CertificateAndFeasibility) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const std::size_t d = 2 + s % 7;
    const Matrix r = random_density(d, 400 + s), q = random_density(d, 500 + s);
    const double eps = 0.05 + 0.9 * static_cast<double>(s % 11) / 11.0;
    const CertifiedValue v = hypothesis_testing(r, q, eps);
    EXPECT_LE(v.gap, 1e-7);
    EXPECT_LE(1.0 - real_trace(r * v.witness), eps + 1e-9);
    EXPECT_GE(min_eig(v.witness), -tol::psd);
    EXPECT_LE(max_eig(v.witness), 1 + tol::psd);
    EXPECT_NEAR(v.beta, real_trace(q * v.witness), 1e-12);
    // independent dual grid never exceeds the primal value
    if (s % 10 == 0) EXPECT_LE(oracle::np_dual(r, q, eps, 4 * v.threshold, 4000), v.beta + 1e-9);
  }
}

TEST(HypothesisTesting, ClassicalNeymanPearson) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int d = 2 + t % 5;
    std::vector<double> p(static_cast<std::size_t>(d)), q(static_cast<std::size_t>(d));
    double sp = 0, sq = 0;
    for (int i = 0; i < d; ++i) {
      p[static_cast<std::size_t>(i)] = u(rng);
      q[static_cast<std::size_t>(i)] = u(rng);
      sp += p[static_cast<std::size_t>(i)];
      sq += q[static_cast<std::size_t>(i)];
    }
    Matrix pr = Matrix::Zero(d, d), qr = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      p[static_cast<std::size_t>(i)] /= sp;
      q[static_cast<std::size_t>(i)] /= sq;
      pr(i, i) = p[static_cast<std::size_t>(i)];
      qr(i, i) = q[static_cast<std::size_t>(i)];
    }
    const double eps = 0.1 + 0.02 * t;
    EXPECT_NEAR(hypothesis_testing(pr, qr, eps).beta, oracle::classical_beta(p, q, eps), 1e-9);
  }
}

TEST(HypothesisTesting, EpsilonRange) {
  const Matrix r = random_density(2, 1);
  EXPECT_THROW(hypothesis_testing(r, r, 0.0), ValidationError);
  EXPECT_THROW(hypothesis_testing(r, r, 1.0), ValidationError);
}

TEST(HypothesisTesting, ConverseInequality) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto [r, q] = random_pair(2 + s % 3, 600 + s);
    for (double eps : {0.05, 0.3}) {
      const double dh = hypothesis_testing(r, q, eps).value;
      for (double a : {0.5, 0.7, 0.9})
        EXPECT_GE(dh, sandwiched(r, q, a) + a / (a - 1) * std::log2(1 / eps) - 1e-6);
    }
  }
}

TEST(Measured, Examples) {
  const Matrix r = random_density(3, 8);
  EXPECT_NEAR(measured_relative(r, r).value, 0.0, 1e-9);
  EXPECT_NEAR(measured_relative(diag(0.7, 0.3), diag(0.4, 0.6)).value, umegaki(diag(0.7, 0.3), diag(0.4, 0.6)),
              1e-6);
  EXPECT_TRUE(is_infinite(measured_relative(diag(1, 0), diag(0, 1)).value));
}

TEST(Measured, QubitAngleGrid) {
  // real states: measurements in the x-z plane suffice; scan the angle finely
  const Matrix r = plus_state(), q = diag(0.75, 0.25);
  double best = 0;
  for (int k = 0; k < 31416; ++k) {
    const double th = 1e-4 * k;
    Eigen::Vector2cd v(std::cos(th / 2), std::sin(th / 2));
    const Matrix p0 = v * v.adjoint();
    const double r0 = oracle::rtrace(r * p0), q0 = oracle::rtrace(q * p0);
    best = std::max(best, oracle::classical_div({r0, 1 - r0}, {q0, 1 - q0}, 1.0));
  }
  EXPECT_NEAR(measured_relative(r, q).value, best, 1e-5);
}

TEST(Measured, BlochGridOnComplexQubits) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix r = random_density(2, 700 + s), q = random_density(2, 800 + s);
    const double grid = std::max(oracle::qubit_measured(r, q, 1.0, 200), oracle::qubit_measured_refined(r, q, 1.0));
    const double v = measured_relative(r, q).value;
    EXPECT_GE(v, grid - 1e-6);
    EXPECT_LE(v, grid + 1e-3);
  }
}

TEST(Measured, OrderingAgainstUmegakiAndPetz) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto [r, q] = random_pair(2 + s % 3, 900 + s);
    const double m = measured_relative(r, q).value;
    const double d = umegaki(r, q);
    EXPECT_LE(m, d + 1e-9);
    EXPECT_LE(d, petz(r, q, 1.5) + 1e-9);
  }
}

TEST(MeasuredRenyi, Examples) {
  for (double a : {0.3, 0.5, 0.8, 1.5, 2.0})
    EXPECT_NEAR(measured_renyi(diag(0.7, 0.3), diag(0.4, 0.6), a).value,
                oracle::classical_div({0.7, 0.3}, {0.4, 0.6}, a), 1e-6);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix r = random_density(2, 1000 + s), q = random_density(2, 1100 + s);
    for (double a : {0.5, 0.7, 2.0}) {
      const double grid = oracle::qubit_measured(r, q, a, 200);
      const double v = measured_renyi(r, q, a).value;
      EXPECT_GE(v, grid - 1e-6);
      EXPECT_LE(v, grid + 1e-3);
    }
  }
  const Matrix pure = plus_state(), mixed = diag(0.75, 0.25);
  EXPECT_NEAR(measured_renyi(pure, mixed, 0.7).value, oracle::qubit_measured(pure, mixed, 0.7, 400), 1e-4);
}

TEST(MeasuredRenyi, BelowSandwiched) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto [r, q] = random_pair(2 + s % 2, 1200 + s);
    for (double a : {0.5, 0.75, 0.9}) EXPECT_LE(measured_renyi(r, q, a).value, sandwiched(r, q, a) + 1e-8);
  }
}

TEST(MeasuredRenyi, HalfEqualsSandwichedHalf) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto [r, q] = random_pair(3, 1300 + s);
    EXPECT_NEAR(measured_renyi(r, q, 0.5).value, sandwiched(r, q, 0.5), 1e-7);
  }
}

TEST(DataProcessing, AllFamiliesSmallSweep) {
  const DivergenceSpec specs[] = {{Family::umegaki, 1.0, 0.0},        {Family::sandwiched, 0.7, 0.0},
                                  {Family::sandwiched, 2.0, 0.0},     {Family::petz, 0.5, 0.0},
                                  {Family::petz, 1.5, 0.0},           {Family::max, 1.0, 0.0},
                                  {Family::measured, 1.0, 0.0},       {Family::measured_renyi, 0.7, 0.0},
                                  {Family::hypothesis, 1.0, 0.2}};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t din = 2 + s % 3, dout = 2 + (s + 1) % 3;
    const auto [r, q] = random_pair(din, 1400 + s);
    const Matrix v = random_isometry(dout * 3, din, 1500 + s);
    std::vector<Matrix> ks;
    for (std::size_t k = 0; k < 3; ++k) ks.push_back(v.middleRows(static_cast<Eigen::Index>(k * dout), static_cast<Eigen::Index>(dout)));
    const QuantumMap ch(din, dout, ks, true);
    for (const auto& spec : specs) {
      const double before = divergence(spec, r, q), after = divergence(spec, ch.apply(r), ch.apply(q));
      EXPECT_LE(after, before + 1e-6) << spec.describe() << " seed " << s;
    }
  }
}

TEST(DataProcessing, MeasuredUnderIsometricEmbedding) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto [r, q] = random_pair(2, 1600 + s);
    const Matrix v = random_isometry(3 + s % 2, 2, 1700 + s);
    const Matrix vr = hermitian_part(v * r * v.adjoint()), vq = hermitian_part(v * q * v.adjoint());
    EXPECT_NEAR(measured_relative(vr, vq).value, measured_relative(r, q).value, 1e-6) << s;
    EXPECT_NEAR(measured_renyi(vr, vq, 1.5).value, measured_renyi(r, q, 1.5).value, 1e-5) << s;
  }
}

TEST(Family, NamesRoundTrip) {
  for (Family f : {Family::umegaki, Family::sandwiched, Family::petz, Family::max, Family::measured,
                   Family::measured_renyi, Family::hypothesis})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_THROW(parse_family("geometric"), ValidationError);
}
