#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eigengap/netmodel.hpp"
#include "eigengap/spectra.hpp"

using namespace eigengap;
using namespace eigengap::spectra;

namespace {

Eigen::MatrixXd random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = z(rng);
  return a;
}

SolverOptions krylov_only() {
  SolverOptions o;
  o.dense_fallback = false;
  return o;
}

// Plain cyclic Jacobi rotations; slow but shares nothing with either solver.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  const Eigen::VectorXd diag = a.diagonal();
  std::vector<double> out(diag.data(), diag.data() + n);
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace

TEST(Dense, DiagonalMatrix) {
  const Eigen::MatrixXd a = Eigen::Vector3d(5, 3, 1).asDiagonal();
  const auto s = dense_eigenvalues(a);
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_NEAR(s.values[0], 5.0, 1e-14);
  EXPECT_NEAR(s.values[1], 3.0, 1e-14);
  EXPECT_NEAR(s.values[2], 1.0, 1e-14);
}

TEST(Dense, TwoByTwo) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const auto s = dense_eigenvalues(a);
  EXPECT_NEAR(s.values[0], 3.0, 1e-14);
  EXPECT_NEAR(s.values[1], 1.0, 1e-14);
}

TEST(Dense, ZeroMatrix) {
  const auto s = dense_eigenvalues(Eigen::MatrixXd::Zero(4, 4));
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Dense, RejectsAsymmetric) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_THROW(dense_eigenvalues(a), std::invalid_argument);
}

TEST(Dense, AgreesWithJacobiOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_symmetric(5 + rng() % 20, rng);
    const auto expected = jacobi_eigenvalues(a);
    const auto got = dense_eigenvalues(a).values;
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], expected[k], 1e-10);
  }
}

TEST(Dense, TraceIdentity) {
  std::mt19937_64 rng(8);
  const auto a = random_symmetric(50, rng);
  const auto s = dense_eigenvalues(a);
  double sum = 0.0;
  for (double v : s.values) sum += v;
  EXPECT_NEAR(sum, a.trace(), 1e-10 * a.cwiseAbs().sum());
}

TEST(Lanczos, DiagonalTopTwo) {
  Eigen::VectorXd d(60);
  for (Eigen::Index i = 0; i < 60; ++i) d(i) = static_cast<double>(i) / 10.0;
  const auto s = top_eigenvalues(SymmetricOperator::from_matrix(d.asDiagonal().toDenseMatrix()), 2, krylov_only());
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.values[0], 5.9, 1e-10);
  EXPECT_NEAR(s.values[1], 5.8, 1e-10);
}

TEST(Lanczos, RandomSymmetricMatchesDense) {
  std::mt19937_64 rng(200);
  const auto a = random_symmetric(200, rng);
  const auto dense = dense_eigenvalues(a);
  const auto s = top_eigenvalues(SymmetricOperator::from_matrix_view(a), 10, krylov_only());
  ASSERT_EQ(s.values.size(), 10u);
  const double scale = std::max(1.0, std::abs(dense.values[0]));
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(s.values[k], dense.values[k], 1e-8 * scale);
}

TEST(Lanczos, RankOneOuterProduct) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(100);
  u(0) = 2.0;
  u(1) = 1.0;
  u(2) = std::sqrt(2.0);  // |u|^2 = 7
  const Eigen::MatrixXd a = u * u.transpose();
  const auto s = top_eigenvalues(SymmetricOperator::from_matrix(a), 3, krylov_only());
  EXPECT_NEAR(s.values[0], 7.0, 1e-8 * 7.0);
  EXPECT_NEAR(s.values[1], 0.0, 1e-8 * 7.0);
  EXPECT_NEAR(s.values[2], 0.0, 1e-8 * 7.0);
}

TEST(Lanczos, ResidualsWithinTolerance) {
  std::mt19937_64 rng(12);
  const auto a = random_symmetric(150, rng);
  const auto s = top_eigenvalues(SymmetricOperator::from_matrix_view(a), 8, krylov_only());
  ASSERT_EQ(s.residuals.size(), 8u);
  for (double r : s.residuals) EXPECT_LE(r, kDefaultTol * std::max(1.0, std::abs(s.values[0])));
}

TEST(Lanczos, AgreesWithDenseAcrossSizes) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 20 + rng() % 181;
    const std::size_t m = 1 + rng() % std::min<std::size_t>(15, n / 2);
    const auto a = random_symmetric(n, rng);
    const auto dense = dense_eigenvalues(a);
    const auto s = top_eigenvalues(SymmetricOperator::from_matrix_view(a), m, krylov_only());
    const double scale = std::max(1.0, std::abs(dense.values[0]));
    for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(s.values[k], dense.values[k], 1e-8 * scale) << n << " " << m;
  }
}

TEST(Lanczos, NestedRequestsArePrefixes) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const auto a = random_symmetric(60 + rng() % 100, rng);
    const auto op = SymmetricOperator::from_matrix_view(a);
    const auto small = top_eigenvalues(op, 4, krylov_only());
    const auto large = top_eigenvalues(op, 9, krylov_only());
    const double scale = std::max(1.0, std::abs(large.values[0]));
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(small.values[k], large.values[k], 1e-8 * scale);
  }
}

TEST(Lanczos, ShiftMovesEveryValue) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 50 + rng() % 100;
    const auto a = random_symmetric(n, rng);
    const double c = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
    const Eigen::MatrixXd shifted = a + c * Eigen::MatrixXd::Identity(n, n);
    const auto s = top_eigenvalues(SymmetricOperator::from_matrix_view(a), 6, krylov_only());
    const auto t = top_eigenvalues(SymmetricOperator::from_matrix_view(shifted), 6, krylov_only());
    const double scale = std::max({1.0, std::abs(s.values[0]), std::abs(t.values[0])});
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(t.values[k], s.values[k] + c, 1e-8 * scale);
  }
}

TEST(Lanczos, SortedDescending) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_symmetric(40 + rng() % 200, rng);
    const auto s = top_eigenvalues(SymmetricOperator::from_matrix_view(a), 10, krylov_only());
    EXPECT_TRUE(std::is_sorted(s.values.rbegin(), s.values.rend()));
  }
}

TEST(Lanczos, Deterministic) {
  std::mt19937_64 rng(15);
  const auto a = random_symmetric(300, rng);
  const auto op = SymmetricOperator::from_matrix_view(a);
  const auto s = top_eigenvalues(op, 7, krylov_only());
  const auto t = top_eigenvalues(op, 7, krylov_only());
  EXPECT_EQ(s.values, t.values);
  EXPECT_EQ(s.residuals, t.residuals);
}

TEST(Lanczos, GraphOperatorMatchesDenseAdjacency) {
  const auto spec = netmodel::BlockModelSpec{netmodel::ModelKind::sbm, netmodel::make_q_planted(3, 0.5, 0.1),
                                             netmodel::make_membership_pure(600, 3),
                                             netmodel::DegreeWeights::ones(600)};
  const auto g = netmodel::sample_adjacency(netmodel::build_probability_matrix(spec), 3);
  const auto dense = dense_eigenvalues(g.dense_adjacency());
  const auto s = top_eigenvalues(SymmetricOperator::from_graph(g), 15);
  const double scale = std::abs(dense.values[0]);
  for (std::size_t k = 0; k < 15; ++k) EXPECT_NEAR(s.values[k], dense.values[k], 1e-8 * scale);
}

TEST(Lanczos, DenseFallbackAgrees) {
  std::mt19937_64 rng(16);
  const auto a = random_symmetric(100, rng);
  const auto op = SymmetricOperator::from_matrix_view(a);
  const auto fallback = top_eigenvalues(op, 5);
  const auto krylov = top_eigenvalues(op, 5, krylov_only());
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(fallback.values[k], krylov.values[k], 1e-8 * std::abs(a.norm()));
}

TEST(Lanczos, RejectsBadRequests) {
  const auto op = SymmetricOperator::from_matrix(Eigen::MatrixXd::Identity(5, 5));
  EXPECT_THROW(top_eigenvalues(op, 0), std::invalid_argument);
  EXPECT_THROW(top_eigenvalues(op, 6), std::invalid_argument);
  SolverOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(top_eigenvalues(op, 1, bad), std::invalid_argument);
}

TEST(Lanczos, RepeatedEigenvalues) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(80);
  d.head(4).setConstant(3.0);
  d(4) = 2.0;
  const auto s = top_eigenvalues(SymmetricOperator::from_matrix(d.asDiagonal().toDenseMatrix()), 5, krylov_only());
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.values[k], 3.0, 1e-8 * 3.0);
  EXPECT_NEAR(s.values[4], 2.0, 1e-8 * 3.0);
}

TEST(Operator, SelfAdjointness) {
  const auto spec = netmodel::BlockModelSpec{netmodel::ModelKind::sbm, netmodel::make_q_planted(2, 0.3, 0.05),
                                             netmodel::make_membership_pure(100, 2),
                                             netmodel::DegreeWeights::ones(100)};
  const auto g = netmodel::sample_adjacency(netmodel::build_probability_matrix(spec), 5);
  const auto op = SymmetricOperator::from_graph(g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(100), y(100), ax(100), ay(100);
    for (auto& v : x) v = z(rng);
    for (auto& v : y) v = z(rng);
    op.apply(x, ax);
    op.apply(y, ay);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      lhs += ax[i] * y[i];
      rhs += x[i] * ay[i];
    }
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
  EXPECT_EQ(op.materialize(), g.dense_adjacency());
}

TEST(Wigner, SymmetricWithExpectedScale) {
  const auto w = sample_wigner(400, 7);
  EXPECT_EQ(w, w.transpose());
  EXPECT_NEAR(w.squaredNorm() / (400.0 * 400.0), 1.0 / 400.0, 0.05 / 400.0);
  EXPECT_EQ(w, sample_wigner(400, 7));
  EXPECT_NE(w, sample_wigner(400, 8));
}

TEST(Wigner, EdgeOfSemicircle) {
  const auto s = sample_wigner_top(2000, 1, 21);
  EXPECT_GT(s.values[0], 1.9);
  EXPECT_LT(s.values[0], 2.1);
}

TEST(Wigner, TopMatchesDense) {
  const auto w = sample_wigner(300, 4);
  const auto dense = dense_eigenvalues(w);
  SolverOptions o = krylov_only();
  const auto s = sample_wigner_top(300, 12, 4, o);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(s.values[k], dense.values[k], 1e-8 * 2.0);
}

TEST(SpectrumJson, RoundTrip) {
  Spectrum s{{3.0, 1.5, -0.25}, {1e-12, 2e-11, 0.0}, true};
  const auto back = spectrum_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.residuals, s.residuals);
  EXPECT_EQ(back.converged, s.converged);
}
