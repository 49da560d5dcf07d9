#include <gtest/gtest.h>

#include <random>

#include "peeriv/errors.hpp"
#include "peeriv/linalg.hpp"

using namespace peeriv;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

}  // namespace

TEST(Gram, MatchesDirectProduct) {
  const Eigen::MatrixXd a = random_matrix(1000, 3, 1), b = random_matrix(1000, 2, 2);
  std::vector<ColumnBlock> blocks{a, b};
  const Eigen::MatrixXd g = accumulate_gram(blocks, 1, 64);
  Eigen::MatrixXd ab(1000, 5);
  ab << a, b;
  EXPECT_LT((g - ab.transpose() * ab).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
}

TEST(Gram, BitIdenticalAcrossThreadCounts) {
  const Eigen::MatrixXd a = random_matrix(50'000, 6, 3);
  std::vector<ColumnBlock> blocks{a};
  const Eigen::MatrixXd g1 = accumulate_gram(blocks, 1, 1000);
  for (unsigned t : {2u, 3u, 8u}) EXPECT_TRUE(g1 == accumulate_gram(blocks, t, 1000)) << t;
}

TEST(Gram, EmptyRowsGiveZero) {
  const Eigen::MatrixXd a(0, 3);
  std::vector<ColumnBlock> blocks{a};
  EXPECT_EQ(accumulate_gram(blocks).cwiseAbs().sum(), 0.0);
}

TEST(PairwiseSum, TreeOrder) {
  std::vector<Eigen::MatrixXd> parts;
  for (int i = 0; i < 7; ++i) parts.push_back(Eigen::MatrixXd::Constant(1, 1, i + 1));
  EXPECT_EQ(pairwise_sum(parts)(0, 0), 28.0);
}

TEST(GramSolver, SolvesWellConditionedSystem) {
  const Eigen::MatrixXd x = random_matrix(200, 4, 5);
  const Eigen::MatrixXd g = x.transpose() * x;
  const Eigen::VectorXd rhs = random_matrix(4, 1, 6);
  const GramSolver s(g, {"a", "b", "c", "d"}, "test");
  EXPECT_LT((g * s.solve(rhs) - rhs).norm(), 1e-10);
  EXPECT_LT((s.inverse() * g - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-10);
}

TEST(GramSolver, RankDeficiencyNamesColumns) {
  Eigen::MatrixXd x = random_matrix(50, 3, 7);
  x.col(2) = 2.0 * x.col(0);
  try {
    GramSolver s(x.transpose() * x, {"alpha", "beta", "gamma"}, "regressors");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_TRUE(msg.find("alpha") != std::string::npos || msg.find("gamma") != std::string::npos) << msg;
  }
}

TEST(GramSolver, ScaleInvariantRankDecision) {
  // Columns with wildly different scales are still full rank.
  Eigen::MatrixXd x = random_matrix(100, 2, 8);
  x.col(0) *= 1e6;
  x.col(1) *= 1e-6;
  EXPECT_NO_THROW(GramSolver(x.transpose() * x, {"big", "small"}, "scaled"));
}
