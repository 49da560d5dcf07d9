#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "peeriv/errors.hpp"
#include "peeriv/estimator.hpp"

using namespace peeriv;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(2024);
  return r;
}

Eigen::MatrixXd normal(Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng());
  return m;
}

std::vector<std::string> names(const char* prefix, Eigen::Index k) {
  std::vector<std::string> v;
  for (Eigen::Index i = 0; i < k; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

}  // namespace

TEST(Ols, ExactLine) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  const EstimationResult r = ols(2.0 * x.col(0), x, {"x"});
  EXPECT_NEAR(r.beta[0], 2.0, 1e-14);
  EXPECT_NEAR(r.rss, 0.0, 1e-20);
  EXPECT_EQ(r.method, "ols");
}

TEST(Ols, CollinearColumnsRejected) {
  Eigen::MatrixXd x(5, 2);
  x.col(0) << 1, 2, 3, 4, 5;
  x.col(1) = x.col(0);
  try {
    ols(x.col(0) + x.col(1), x, {"x1", "x2"});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("x"), std::string::npos);
  }
}

TEST(Ols, SixPointNormalEquationsByHand) {
  // y = 0.9 + 1.1x + e on x = 1..6, with e = (.1, -.2, .1, .1, -.2, .1).
  // e sums to zero and is orthogonal to x, so the fit returns (0.9, 1.1)
  // exactly and RSS = Σe² = 0.12. Σx = 21, Σx² = 91, so nΣx² − (Σx)² = 105.
  Eigen::MatrixXd x(6, 2);
  Eigen::VectorXd y(6);
  x << 1, 1, 1, 2, 1, 3, 1, 4, 1, 5, 1, 6;
  y << 2.1, 2.9, 4.3, 5.4, 6.2, 7.6;
  const EstimationResult r = ols(y, x, {"const", "x"}, {.vcov = VcovMode::kClassical});
  EXPECT_NEAR(r.beta[0], 0.9, 1e-12);
  EXPECT_NEAR(r.beta[1], 1.1, 1e-12);
  EXPECT_NEAR(r.rss, 0.12, 1e-12);
  // Var(slope) = σ̂²·n/105 with σ̂² = 0.12/4.
  EXPECT_NEAR(r.se[1], std::sqrt(0.03 * 6.0 / 105.0), 1e-12);
  // Var(intercept) = σ̂²·Σx²/105.
  EXPECT_NEAR(r.se[0], std::sqrt(0.03 * 91.0 / 105.0), 1e-12);
  EXPECT_DOUBLE_EQ(r.df_resid, 4.0);
}

TEST(Tsls, ClosedFormJustIdentified) {
  Eigen::VectorXd y(2), x(2), z(2);
  y << 3, -3;
  x << 2, -2;
  z << 1, -1;
  const EstimationResult r = tsls(y, x, Eigen::MatrixXd(2, 0), z, {"x"}, {}, {"z"}, {.vcov = VcovMode::kClassical});
  EXPECT_NEAR(r.beta[0], 1.5, 1e-14);
}

TEST(Tsls, InstrumentEqualToRegressorCollapsesToOls) {
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 30 + trial;
    const Eigen::MatrixXd x = normal(n, 2), w = normal(n, 1);
    const Eigen::VectorXd y = normal(n, 1);
    Eigen::MatrixXd xw(n, 3);
    xw << x, w;
    for (VcovMode m : {VcovMode::kClassical, VcovMode::kHc1}) {
      const EstimationResult o = ols(y, xw, {"x0", "x1", "w0"}, {.vcov = m});
      const EstimationResult t = tsls(y, x, w, x, {"x0", "x1"}, {"w0"}, {"z0", "z1"}, {.vcov = m});
      EXPECT_LT((o.beta - t.beta).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((o.vcov - t.vcov).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_TRUE(t.first_stage[0].f.capped);
    }
  }
}

TEST(Tsls, MatchesTextbookTwoStepAndIndirectLeastSquares) {
  const Eigen::Index n = 400;
  const Eigen::MatrixXd z = normal(n, 2), w = normal(n, 1), u = normal(n, 1);
  Eigen::MatrixXd x(n, 1);
  x.col(0) = z.col(0) + 0.5 * z.col(1) + u.col(0);
  const Eigen::VectorXd y = 2.0 * x.col(0) + w.col(0) + u.col(0) + normal(n, 1);
  const EstimationResult r = tsls(y, x, w, z, {"x"}, {"w"}, {"z0", "z1"});
  const Eigen::VectorXd oracle = oracle::textbook_tsls(y, x, w, z);
  EXPECT_LT((r.beta - oracle).cwiseAbs().maxCoeff(), 1e-10);
  // Single instrument, no W: beta = (z'y)/(z'x).
  const EstimationResult one = tsls(y, x, Eigen::MatrixXd(n, 0), z.col(0), {"x"}, {}, {"z"});
  EXPECT_NEAR(one.beta[0], z.col(0).dot(y) / z.col(0).dot(x.col(0)), 1e-10);
}

TEST(Tsls, InstrumentRescalingLeavesBetaUnchanged) {
  const Eigen::Index n = 300;
  const Eigen::MatrixXd z = normal(n, 2), w = normal(n, 1);
  const Eigen::MatrixXd x = z * Eigen::Matrix2d::Identity() + normal(n, 2);
  const Eigen::VectorXd y = x.col(0) - x.col(1) + normal(n, 1);
  const EstimationResult a = tsls(y, x, w, z, {"a", "b"}, {"w"}, {"za", "zb"});
  Eigen::MatrixXd zs = z;
  zs.col(1) *= -37.5;
  const EstimationResult b = tsls(y, x, w, zs, {"a", "b"}, {"w"}, {"za", "zb"});
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Tsls, UnderIdentifiedRejected) {
  const Eigen::MatrixXd x = normal(20, 2), z = normal(20, 1);
  EXPECT_THROW(tsls(x.col(0), x, Eigen::MatrixXd(20, 0), z, {"a", "b"}, {}, {"z"}), NumericalError);
}

TEST(FirstStageF, MatchesBruteForceRefits) {
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 60 + 20 * trial;
    const Eigen::MatrixXd z = normal(n, 2), w = normal(n, 2);
    Eigen::MatrixXd x(n, 2);
    x.col(0) = 0.3 * z.col(0) + w.col(0) + normal(n, 1);
    x.col(1) = 0.2 * z.col(1) + normal(n, 1);
    const Eigen::VectorXd y = x.col(0) + normal(n, 1);
    const std::size_t absorbed = static_cast<std::size_t>(trial % 3);
    const EstimationResult r =
        tsls(y, x, w, z, {"x0", "x1"}, {"w0", "w1"}, {"z0", "z1"}, {.absorbed_df = absorbed});
    Eigen::MatrixXd a(n, 4);
    a << z, w;
    for (int e = 0; e < 2; ++e) {
      const Eigen::VectorXd xe = x.col(e);
      const double rss_u = (xe - a * oracle::lstsq(a, xe)).squaredNorm();
      const double rss_r = (xe - w * oracle::lstsq(w, xe)).squaredNorm();
      const double df = static_cast<double>(n) - 4.0 - static_cast<double>(absorbed);
      const double f = ((rss_r - rss_u) / 2.0) / (rss_u / df);
      const auto& fs = r.first_stage[static_cast<std::size_t>(e)];
      EXPECT_LT(std::abs(fs.f.value - f) / f, 1e-8);
      EXPECT_EQ(fs.f.df_num, 2u);
      EXPECT_EQ(fs.f.df_den, static_cast<std::size_t>(df));
      EXPECT_GE(fs.f.p_value, 0.0);
      EXPECT_LE(fs.f.p_value, 1.0);
    }
  }
}

TEST(FirstStageF, NullDistributionCentredNearOne) {
  std::vector<double> fs;
  for (int rep = 0; rep < 400; ++rep) {
    const Eigen::MatrixXd z = normal(200, 1), x = normal(200, 1);
    const Eigen::VectorXd y = x.col(0) + normal(200, 1);
    fs.push_back(tsls(y, x, Eigen::MatrixXd(200, 0), z, {"x"}, {}, {"z"}).first_stage[0].f.value);
  }
  const double mean = std::accumulate(fs.begin(), fs.end(), 0.0) / static_cast<double>(fs.size());
  EXPECT_NEAR(mean, 1.0, 0.25);
  std::sort(fs.begin(), fs.end());
  // 95th percentile of F(1, 199) is about 3.89.
  EXPECT_NEAR(fs[379], 3.89, 1.2);
}

TEST(FirstStageF, DegreesOfFreedomErrorAndCap) {
  EXPECT_THROW(first_stage_f(1.0, 0.5, 1, 3, 3), NumericalError);
  const FStatistic f = first_stage_f(10.0, 0.0, 1, 10, 2);
  EXPECT_TRUE(f.capped);
  EXPECT_TRUE(std::isinf(f.value));
}

TEST(Vcov, HomoskedasticHc1AgreesWithClassical) {
  const Eigen::Index n = 10'000;
  const Eigen::MatrixXd x = normal(n, 3);
  const Eigen::VectorXd y = x * Eigen::Vector3d(1, -2, 0.5) + normal(n, 1);
  const EstimationResult c = ols(y, x, names("x", 3), {.vcov = VcovMode::kClassical});
  const EstimationResult h = ols(y, x, names("x", 3), {.vcov = VcovMode::kHc1});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(h.se[i] / c.se[i], 1.0, 0.05);
}

TEST(Vcov, DuplicatedRowsInflateClusterSe) {
  const Eigen::Index base = 400, copies = 3;
  const Eigen::MatrixXd xb = normal(base, 2);
  const Eigen::VectorXd yb = xb.col(0) + normal(base, 1);
  Eigen::MatrixXd x(base * copies, 2);
  Eigen::VectorXd y(base * copies);
  std::vector<std::size_t> off{0};
  for (Eigen::Index i = 0; i < base; ++i) {
    for (Eigen::Index c = 0; c < copies; ++c) {
      x.row(i * copies + c) = xb.row(i);
      y[i * copies + c] = yb[i];
    }
    off.push_back(off.back() + copies);
  }
  const EstimationResult h = ols(y, x, {"a", "b"}, {.vcov = VcovMode::kHc1});
  const EstimationResult cl = ols(y, x, {"a", "b"}, {.vcov = VcovMode::kClusterByPlayer, .cluster_offsets = off});
  for (int i = 0; i < 2; ++i) EXPECT_GT(cl.se[i], 1.5 * h.se[i]);
}

TEST(Vcov, ZeroResidualsGiveZeroMatrix) {
  const Eigen::MatrixXd x = normal(20, 2);
  for (VcovMode m : {VcovMode::kClassical, VcovMode::kHc1}) {
    EXPECT_EQ(robust_vcov(Eigen::VectorXd::Zero(20), x, m).cwiseAbs().maxCoeff(), 0.0);
  }
  const std::vector<std::size_t> off{0, 10, 20};
  EXPECT_EQ(robust_vcov(Eigen::VectorXd::Zero(20), x, VcovMode::kClusterByPlayer, {.cluster_offsets = off})
                .cwiseAbs()
                .maxCoeff(),
            0.0);
}

TEST(Vcov, EstimatorSandwichMatchesStandaloneFunction) {
  const Eigen::Index n = 500;
  const Eigen::MatrixXd x = normal(n, 3);
  Eigen::VectorXd y = x.col(0) + normal(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) y[i] *= 1.0 + std::abs(x(i, 1));
  std::vector<std::size_t> off{0};
  while (off.back() < static_cast<std::size_t>(n)) off.push_back(std::min<std::size_t>(n, off.back() + 5));
  for (VcovMode m : {VcovMode::kClassical, VcovMode::kHc1, VcovMode::kClusterByPlayer}) {
    EstimatorOptions o{.vcov = m, .cluster_offsets = off};
    const EstimationResult r = ols(y, x, names("x", 3), o);
    const Eigen::VectorXd resid = y - x * r.beta;
    const Eigen::MatrixXd v = robust_vcov(resid, x, m, o);
    EXPECT_LT((v - r.vcov).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff(), 1e-9) << to_string(m);
    // Symmetric PSD, p-values in range.
    EXPECT_TRUE(r.vcov.isApprox(r.vcov.transpose()));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.vcov).eigenvalues().minCoeff(), -1e-12);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_GE(r.p_values[i], 0.0);
      EXPECT_LE(r.p_values[i], 1.0);
      EXPECT_DOUBLE_EQ(r.se[i], std::sqrt(r.vcov(i, i)));
    }
  }
}

TEST(Tsls, CovarianceUsesStructuralResiduals) {
  const Eigen::Index n = 300;
  const Eigen::MatrixXd z = normal(n, 1), w = normal(n, 1), u = normal(n, 1);
  Eigen::MatrixXd x(n, 1);
  x.col(0) = z.col(0) + u.col(0);
  const Eigen::VectorXd y = 1.5 * x.col(0) + 0.5 * w.col(0) + u.col(0);
  const EstimationResult r = tsls(y, x, w, z, {"x"}, {"w"}, {"z"}, {.vcov = VcovMode::kClassical});
  Eigen::MatrixXd d(n, 2), a(n, 2);
  d << x, w;
  a << z, w;
  const Eigen::VectorXd resid = y - d * r.beta;
  EXPECT_NEAR(r.rss, resid.squaredNorm(), 1e-9 * r.rss);
  const Eigen::MatrixXd xhat = a * oracle::lstsq_matrix(a, d);
  const Eigen::MatrixXd v = resid.squaredNorm() / static_cast<double>(n - 2) * (xhat.transpose() * xhat).inverse();
  EXPECT_LT((v - r.vcov).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimator, ThreadCountAndBlockSizeDoNotChangeResults) {
  const Eigen::Index n = 40'000;
  const Eigen::MatrixXd z = normal(n, 2), w = normal(n, 1);
  const Eigen::MatrixXd x = z + normal(n, 2);
  const Eigen::VectorXd y = x.col(0) + normal(n, 1);
  std::vector<std::size_t> off{0};
  while (off.back() < static_cast<std::size_t>(n)) off.push_back(off.back() + 4);
  EstimatorOptions base{.vcov = VcovMode::kClusterByPlayer, .cluster_offsets = off, .threads = 1, .block_rows = 4096};
  const EstimationResult a = tsls(y, x, w, z, {"a", "b"}, {"w"}, {"za", "zb"}, base);
  base.threads = 4;
  const EstimationResult b = tsls(y, x, w, z, {"a", "b"}, {"w"}, {"za", "zb"}, base);
  EXPECT_TRUE(a.beta == b.beta);
  EXPECT_TRUE(a.vcov == b.vcov);
}
