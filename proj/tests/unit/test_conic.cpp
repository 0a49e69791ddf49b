#include <gtest/gtest.h>

#include "divlab/conic.hpp"
#include "divlab/linalg.hpp"
#include "oracles.hpp"

using namespace divlab;

TEST(Conic, SmallestEigenvalueProgram) {
  // min tr(C X) over densities equals lambda_min(C)
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t d = 2 + seed % 4;
    const Matrix c = random_hermitian(d, seed);
    conic::LmiProblem p;
    const conic::HermitianVar x = p.add_hermitian(d, true);
    const std::size_t b = p.add_block(d);
    p.add_linear(b, x, [](const Matrix& m) { return m; });
    p.add_cost(x, c);
    const conic::Solution s = conic::solve(p);
    ASSERT_TRUE(s.converged);
    const double ref = oracle::eig(c).eigenvalues()(0);
    EXPECT_NEAR(s.primal_objective, ref, 1e-7);
    EXPECT_LE(s.dual_objective, s.primal_objective + 1e-9);
    EXPECT_NEAR(s.dual_objective, ref, 1e-7);
  }
}

TEST(Conic, ScalarBoundProgram) {
  // min t subject to t I - A >= 0 is lambda_max(A)
  const Matrix a = random_hermitian(4, 77);
  conic::LmiProblem p;
  const std::size_t t = p.add_scalars(1);
  const std::size_t b = p.add_block(4);
  p.add_coefficient(b, t, identity(4));
  p.add_constant(b, -a);
  p.set_cost(t, 1.0);
  const conic::Solution s = conic::solve(p);
  ASSERT_TRUE(s.converged);
  EXPECT_NEAR(s.y(static_cast<Eigen::Index>(t)), oracle::eig(a).eigenvalues()(3), 1e-7);
  // the dual block is a density concentrated on the top eigenvector
  EXPECT_NEAR(real_trace(s.dual[b]), 1.0, 1e-7);
}
