#include <gtest/gtest.h>

#include <cmath>

#include "divlab/errors.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"
#include "oracles.hpp"

using namespace divlab;

namespace {

Matrix ket0() {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1;
  return p;
}

// Reference Choi matrix built from the definition sum_ij |i><j| (x) N(|i><j|).
Matrix choi_reference(const QuantumMap& m) {
  const auto in = static_cast<Eigen::Index>(m.in_dim()), out = static_cast<Eigen::Index>(m.out_dim());
  Matrix c = Matrix::Zero(in * out, in * out);
  for (Eigen::Index i = 0; i < in; ++i)
    for (Eigen::Index j = 0; j < in; ++j) {
      Matrix e = Matrix::Zero(in, in);
      e(i, j) = 1;
      c.block(i * out, j * out, out, out) = oracle::apply_kraus(m.kraus(), e);
    }
  return c;
}

double kraus_residual(const QuantumMap& m) {
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(m.in_dim()), static_cast<Eigen::Index>(m.in_dim()));
  for (const Matrix& a : m.kraus()) s += a.adjoint() * a;
  return max_abs(s - identity(m.in_dim()));
}

}  // namespace

TEST(Apply, IdentityReplacerAndFullDamping) {
  const Matrix rho = random_density(2, 1);
  EXPECT_LE(max_abs(divlab::apply(identity_channel(2), rho) - rho), 1e-15);

  const Matrix sigma0 = random_density(3, 2);
  const Matrix rho_ra = random_density(4, 3);
  const Matrix out = divlab::apply(replacer_channel(sigma0, 2), rho_ra, {{2, 2}, 1});
  EXPECT_LE(max_abs(out - tensor(partial_trace(rho_ra, {2, 2}, {0}), sigma0)), 1e-14);

  EXPECT_LE(max_abs(divlab::apply(gad_channel(1.0, 0.0), rho) - ket0()), 1e-14);
}

TEST(Apply, DimensionMismatch) {
  EXPECT_THROW(divlab::apply(identity_channel(3), identity(2)), ValidationError);
  EXPECT_THROW(divlab::apply(identity_channel(2), identity(6), {{2, 3}, 1}), ValidationError);
}

TEST(Adjoint, UnitalAndDuality) {
  EXPECT_LE(max_abs(adjoint_apply(identity_channel(3), random_hermitian(3, 4)) - random_hermitian(3, 4)), 1e-15);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix c = random_density(6, 40 + s) * 6.0;
    const QuantumMap m = kraus_from_choi(c, 2, 3, false);
    const QuantumMap n = gad_channel(0.1 + 0.04 * static_cast<double>(s), 0.3);
    EXPECT_LE(max_abs(adjoint_apply(n, identity(2)) - identity(2)), 1e-12);
    const Matrix x = random_hermitian(3, 50 + s), rho = random_density(2, 60 + s);
    EXPECT_NEAR(real_trace(x * m.apply(rho)), real_trace(adjoint_apply(m, x) * rho), 1e-10);
  }
}

TEST(Choi, IdentityAndReplacer) {
  Matrix phi = Matrix::Zero(4, 4);
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 1;
  EXPECT_LE(max_abs(choi(identity_channel(2)) - phi), 1e-15);
  const Matrix s0 = random_density(2, 8);
  EXPECT_LE(max_abs(choi(replacer_channel(s0, 3)) - tensor(identity(3), s0)), 1e-14);
}

TEST(Choi, MatchesDefinitionAndRoundTrips) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const QuantumMap m = kraus_from_choi(random_density(6, 70 + s) * 6.0, 3, 2, false);
    EXPECT_LE(max_abs(choi(m) - choi_reference(m)), 1e-12);
    const QuantumMap back = kraus_from_choi(choi(m), 3, 2, false);
    EXPECT_LE(max_abs(choi(back) - choi(m)), 1e-8);
  }
  // a random CPTP map from a random isometry
  const Matrix v = random_isometry(6, 2, 5);
  std::vector<Matrix> ks;
  for (int k = 0; k < 3; ++k) ks.push_back(v.middleRows(2 * k, 2));
  const QuantumMap tp(2, 2, ks, true);
  const QuantumMap back = kraus_from_choi(choi(tp), 2, 2, true);
  EXPECT_LE(max_abs(choi(back) - choi(tp)), 1e-8);
  EXPECT_LE(kraus_residual(back), 1e-9);
}

TEST(Choi, RejectsNonCp) {
  Matrix c = Matrix::Zero(4, 4);
  c(0, 0) = 1;
  c(1, 1) = -0.5;
  EXPECT_THROW(kraus_from_choi(c, 2, 2, false), ValidationError);
}

TEST(Choi, RankTruncationDropsZeroKraus) {
  // GAD at gamma = 0 has two zero Kraus operators
  const QuantumMap g = gad_channel(0.0, 0.4);
  EXPECT_EQ(g.kraus_count(), 4u);
  EXPECT_EQ(g.compressed().kraus_count(), 1u);
}

TEST(Stinespring, UnitaryAndGad) {
  const Matrix u = random_unitary(3, 2);
  const StinespringIsometry s = stinespring(unitary_channel(u));
  EXPECT_EQ(s.env_dim, 1u);
  EXPECT_LE(max_abs(s.v - u), 1e-15);

  const QuantumMap g = gad_channel(0.5, 0.0);
  EXPECT_EQ(stinespring(g).env_dim, 4u);
  // two Kraus operators vanish at N = 0
  EXPECT_EQ(stinespring(g.compressed()).env_dim, 2u);
}

TEST(Stinespring, TraceOutEnvironmentRecoversChannel) {
  const QuantumMap g = gad_channel(0.3, 0.6);
  const StinespringIsometry s = stinespring(g);
  EXPECT_LE(max_abs(s.v.adjoint() * s.v - identity(2)), 1e-12);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Matrix rho = random_density(2, 90 + t);
    const Matrix big = s.v * rho * s.v.adjoint();
    EXPECT_LE(max_abs(partial_trace(big, {s.env_dim, 2}, {1}) - g.apply(rho)), 1e-10);
  }
}

TEST(Gad, KrausFormulas) {
  for (double n : {0.0, 0.3, 1.0}) {
    const QuantumMap g = gad_channel(0.0, n);
    EXPECT_LE(max_abs(g.kraus()[0] - std::sqrt(1 - n) * identity(2)), 1e-15);
    EXPECT_LE(max_abs(g.kraus()[2] - std::sqrt(n) * identity(2)), 1e-15);
    EXPECT_LE(max_abs(g.kraus()[1]), 0.0);
    EXPECT_LE(max_abs(g.kraus()[3]), 0.0);
  }
  for (double gamma : {0.0, 0.2, 0.5, 0.9, 1.0})
    for (double n : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      const QuantumMap g = gad_channel(gamma, n);
      EXPECT_LE(kraus_residual(g), 1e-12);
      const auto ref = oracle::gad_kraus(gamma, n);
      for (int k = 0; k < 4; ++k) EXPECT_LE(max_abs(g.kraus()[static_cast<std::size_t>(k)] - ref[static_cast<std::size_t>(k)]), 1e-15);
    }
  EXPECT_LE(max_abs(gad_channel(1.0, 0.0).apply(ket0()) - ket0()), 1e-15);
  EXPECT_THROW(gad_channel(1.2, 0.0), ValidationError);
  EXPECT_THROW(gad_channel(0.5, -0.1), ValidationError);
}

TEST(Replacer, IdempotentAndTensor) {
  const Matrix s0 = random_density(2, 3);
  const QuantumMap r = replacer_channel(s0, 2);
  const Matrix rho = random_density(2, 4);
  EXPECT_LE(max_abs(r.apply(r.apply(rho)) - r.apply(rho)), 1e-14);
  EXPECT_LE(max_abs(choi(tensor_map(identity_channel(2), identity_channel(3))) - choi(identity_channel(6))), 1e-15);
}

TEST(TensorMap, ChoiIsPermutedProduct) {
  const QuantumMap a = kraus_from_choi(random_density(4, 5) * 4.0, 2, 2, false);
  const QuantumMap b = kraus_from_choi(random_density(6, 6) * 6.0, 3, 2, false);
  const QuantumMap ab = tensor_map(a, b);
  EXPECT_EQ(ab.kraus_count(), a.kraus_count() * b.kraus_count());
  // Choi(a (x) b) on (A1 A2)(B1 B2) equals Choi(a) (x) Choi(b) on A1 B1 A2 B2 after reordering
  const Matrix prod = oracle::kron(choi(a), choi(b));
  const Matrix reordered = permute_subsystems(prod, {2, 2, 3, 2}, {0, 2, 1, 3});
  EXPECT_LE(max_abs(choi(ab) - reordered), 1e-12);
}

TEST(QuantumMap, ConstructedMapsAreCpAndTp) {
  const Matrix s0 = random_density(3, 1);
  const QuantumMap maps[] = {identity_channel(3), unitary_channel(random_unitary(3, 2)), gad_channel(0.4, 0.7),
                             replacer_channel(s0, 2), tensor_map(gad_channel(0.1, 0.2), identity_channel(2)),
                             partial_trace_channel({2, 3}, {1})};
  for (const QuantumMap& m : maps) {
    EXPECT_NO_THROW(validate_cp(m));
    EXPECT_TRUE(m.trace_preserving());
    for (std::uint64_t s = 0; s < 5; ++s)
      EXPECT_NEAR(real_trace(m.apply(random_density(m.in_dim(), s))), 1.0, 1e-9);
  }
}

TEST(QuantumMap, TraceFlagAndBoundedness) {
  EXPECT_THROW(QuantumMap(2, 2, {identity(2) * 1.1}, true), ValidationError);
  // a CP map that is not trace non-increasing is accepted; its boundedness is recorded
  const QuantumMap big(2, 2, {identity(2) * 2.0}, false);
  EXPECT_NEAR(big.log_boundedness(), 2.0, 1e-12);
  EXPECT_THROW(QuantumMap(2, 3, {identity(2)}, false), ValidationError);
}

TEST(Compose, AppliesInOrder) {
  const QuantumMap first = gad_channel(0.3, 0.2), second = unitary_channel(random_unitary(2, 9));
  const Matrix rho = random_density(2, 10);
  EXPECT_LE(max_abs(compose(second, first).apply(rho) - second.apply(first.apply(rho))), 1e-13);
}
