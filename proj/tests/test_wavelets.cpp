#include <gtest/gtest.h>

#include <cmath>

#include "homtype/wavelets.hpp"

using namespace homtype;

namespace {

struct Haar {
  SpacePtr space;
  TreePtr tree;
  BasisPtr basis;
  AtiKernels kernels;
  FamilyPtr family;

  explicit Haar(SpacePtr sp)
      : space(sp), tree(build_dyadic(sp, 0.125)), basis(build_haar(tree)),
        kernels(build_kernels(basis)),
        family(make_family(tree, Homogeneity::homogeneous)) {}
};

Vector gaussian(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Vector f(n);
  for (int i = 0; i < n; ++i) f[i] = g(rng);
  return f;
}

// <u, v> against mu for every pair of columns
Matrix gram(const QuasiMetricSpace& sp, const Matrix& cols) {
  return cols.transpose() * sp.weights().asDiagonal() * cols;
}

}  // namespace

TEST(Haar, TwoPointWavelet) {
  PointSet pts;
  pts.coords = {{0.0}, {1.0}};
  const Haar h(build_space(pts, {}));
  ASSERT_EQ(h.tree->wavelet_cubes().size(), 1u);
  const Vector psi = h.basis->wavelet(0);
  EXPECT_NEAR(std::abs(psi[0]), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(psi[0] + psi[1], 0.0, 1e-15);
}

TEST(Haar, EightPointBinaryTreeIsOrthonormal) {
  const Haar h(builtin_line(8, 1.0));
  const std::size_t m = h.tree->wavelet_cubes().size();
  EXPECT_EQ(m, 7u);
  Matrix all(8, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) all.col(static_cast<Eigen::Index>(i)) = h.basis->wavelet(static_cast<int>(i));
  EXPECT_LE((gram(*h.space, all) - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Haar, ExactIdentitiesOnCloud) {
  const Haar h(builtin_cloud(64, 7));
  const QuasiMetricSpace& sp = *h.space;
  const int n = sp.n();
  const Vector& w = sp.weights();

  for (int k = h.tree->k_min(); k <= h.tree->k_max(); ++k) {
    const Matrix& phi = h.basis->phi(k);
    EXPECT_LE((gram(sp, phi) - Matrix::Identity(phi.cols(), phi.cols())).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix& psi = h.basis->psi(k);
    if (psi.cols() == 0) continue;
    EXPECT_LE((gram(sp, psi) - Matrix::Identity(psi.cols(), psi.cols())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((phi.transpose() * w.asDiagonal() * psi).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index c = 0; c < psi.cols(); ++c) {
      const double l1 = (psi.col(c).cwiseAbs().array() * w.array()).sum();
      EXPECT_LE(std::abs(psi.col(c).dot(w)), 1e-12 * l1);
    }
    // two-scale relation and conservation
    EXPECT_LE((h.kernels.Pk(k + 1) - h.kernels.Pk(k) - h.kernels.Dk(k)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(((h.kernels.Pk(k) * w).array() - 1.0).abs().maxCoeff(), 1e-10);
  }

  // telescoping: P_{k_min} + sum D_k acts as the identity against mu
  Matrix sum = h.kernels.Pk(h.tree->k_min());
  for (int k = h.tree->k_min(); k < h.tree->k_max(); ++k) sum += h.kernels.Dk(k);
  EXPECT_LE((sum * w.asDiagonal() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Haar, WaveletSupportsStayInParentCube) {
  const Haar h(builtin_cloud(50, 2));
  const auto& cubes = h.tree->wavelet_cubes();
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const Cube& parent = h.tree->cube(h.tree->cube(cubes[i].cube).parent);
    const Vector psi = h.basis->wavelet(static_cast<int>(i));
    for (int x = 0; x < h.space->n(); ++x)
      if (!std::binary_search(parent.points.begin(), parent.points.end(), x))
        EXPECT_EQ(psi[x], 0.0);
  }
}

TEST(Haar, AnalysisAndSynthesis) {
  const Haar h(builtin_line(64, 1.0 / 64));
  const QuasiMetricSpace& sp = *h.space;

  EXPECT_EQ(analyze(*h.basis, h.family, Vector::Ones(64)).values.cwiseAbs().maxCoeff() <= 1e-12, true);
  EXPECT_EQ(synthesize(*h.basis, CoefficientSequence(h.family)).norm(), 0.0);

  const int q = 5;
  const Vector psi = h.basis->wavelet((*h.family)[q].wavelet);
  const CoefficientSequence unit = analyze(*h.basis, h.family, psi);
  for (Eigen::Index i = 0; i < unit.values.size(); ++i)
    EXPECT_NEAR(unit.values[i], i == q ? 1.0 : 0.0, 1e-10);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector f = gaussian(64, s);
    const CoefficientSequence c = analyze(*h.basis, h.family, f);
    const double energy = c.values.squaredNorm() + c.coarse.squaredNorm();
    const double l2 = sp.inner(f, f);
    EXPECT_LE(std::abs(energy - l2), 1e-10 * l2);
    EXPECT_LE((synthesize(*h.basis, c) - f).cwiseAbs().maxCoeff(), 1e-10);
    for (int k = h.tree->k_min(); k < h.tree->k_max(); ++k) {
      const Vector lhs = apply_kernel(h.kernels.Dk(k), sp, f);
      const Vector rhs = apply_kernel(h.kernels.Pk(k + 1), sp, f) - apply_kernel(h.kernels.Pk(k), sp, f);
      EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Haar, IatiCancellationAndConservation) {
  const Haar h(builtin_line(64, 1.0 / 64));
  for (Homogeneity kind : {Homogeneity::homogeneous, Homogeneity::inhomogeneous}) {
    const IatiReport rep = verify_exp_iati(h.kernels, kind, 2.0, 1.0, 0.5);
    bool saw_size = false;
    for (const ConditionCheck& c : rep.checks) {
      if (c.name.find("cancel") != std::string::npos || c.name.find("conserv") != std::string::npos)
        EXPECT_LE(c.constant, 1e-10) << c.name << " at k=" << c.k;
      if (c.name.find("size") != std::string::npos) {
        saw_size = true;
        EXPECT_TRUE(std::isfinite(c.constant));
      }
    }
    EXPECT_TRUE(saw_size);
  }
}

TEST(Smoothed, OrthonormalWithCancellation) {
  const TreePtr tree = build_dyadic(builtin_line(32, 1.0 / 32), 0.125);
  const BasisPtr basis = build_smoothed(tree, 4.0, 1.0);
  const QuasiMetricSpace& sp = tree->space();
  const Vector& w = sp.weights();
  for (int k = tree->k_min(); k < tree->k_max(); ++k) {
    const Matrix& psi = basis->psi(k);
    if (psi.cols() == 0) continue;
    EXPECT_LE((gram(sp, psi) - Matrix::Identity(psi.cols(), psi.cols())).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((psi.transpose() * w).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((basis->phi(k).transpose() * w.asDiagonal() * psi).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_GT(basis->decay().nu_prime, 0.0);
  EXPECT_TRUE(std::isfinite(basis->decay().C));
}
