#include <gtest/gtest.h>

#include <cmath>

#include "homtype/lp_functionals.hpp"

using namespace homtype;

namespace {

struct Line {
  TreePtr tree = build_dyadic(builtin_line(64, 1.0 / 64), 0.125);
  BasisPtr basis = build_haar(tree);
  AtiKernels kernels = build_kernels(basis);
  const QuasiMetricSpace& sp = tree->space();

  SpaceParams params(double s, double p, double q) const {
    SpaceParams prm;
    prm.s = s;
    prm.p = p;
    prm.q = q;
    prm.omega = 1.0;
    prm.omega0 = 1.0;
    prm.kind = SpaceKind::triebel_lizorkin;
    return prm;
  }
};

Vector gaussian(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Vector f(n);
  for (int i = 0; i < n; ++i) f[i] = g(rng);
  return f;
}

}  // namespace

TEST(Lp, ZeroFunction) {
  const Line ln;
  const SpaceParams prm = ln.params(0, 2, 2);
  const Vector z = Vector::Zero(64);
  EXPECT_EQ(g_function(ln.kernels, z, prm).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(lusin_area(ln.kernels, z, prm).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g_lambda_star(ln.kernels, z, prm).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(lusin_area_aperture(ln.kernels, z, prm, 2.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lp, PlancherelAndCodePathIdentity) {
  const Line ln;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector f = gaussian(64, s);
    const Vector detail = f - apply_kernel(ln.kernels.Pk(ln.tree->k_min()), ln.sp, f);
    const double g2 = ln.sp.lp_norm(g_function(ln.kernels, f, ln.params(0, 2, 2)), 2.0);
    const double l2 = ln.sp.lp_norm(detail, 2.0);
    EXPECT_NEAR(g2 * g2, l2 * l2, 1e-9 * l2 * l2);

    const SpaceParams prm = ln.params(0.25, 2, 4.0 / 3.0);
    EXPECT_EQ(kernel_function_norm(ln.kernels, f, prm),
              ln.sp.lp_norm(g_function(ln.kernels, f, prm), prm.p));
  }
}

TEST(Lp, ApertureAndLambdaMonotonicity) {
  const Line ln;
  const Vector f = gaussian(64, 3);
  SpaceParams prm = ln.params(0.1, 2, 1);
  Vector prev = lusin_area_aperture(ln.kernels, f, prm, 1.0);
  for (double theta : {2.0, 4.0, 8.0}) {
    const Vector cur = lusin_area_aperture(ln.kernels, f, prm, theta);
    EXPECT_TRUE((cur.array() >= prev.array() * (1 - 1e-14)).all());
    prev = cur;
  }
  EXPECT_THROW(lusin_area_aperture(ln.kernels, f, prm, 0.5), ValidationError);

  prm.lambda_ap = 1.0;
  prev = g_lambda_star(ln.kernels, f, prm);
  for (double lam : {2.0, 4.0, 16.0}) {
    prm.lambda_ap = lam;
    const Vector cur = g_lambda_star(ln.kernels, f, prm);
    EXPECT_TRUE((cur.array() <= prev.array() * (1 + 1e-14)).all());
    prev = cur;
  }
}

TEST(Lp, AreaDominatedByGStar) {
  const Line ln;
  SpaceParams prm = ln.params(0, 2, 2);
  prm.lambda_ap = 4.0;
  const double delta = ln.tree->delta();

  // sup over in-ball pairs of [(r + d)/r]^{lambda/q} [(V_r(x) + V_r(y))/V_r(x)]^{1/q}
  double C = 0.0;
  for (int k = ln.tree->k_min(); k <= ln.tree->k_max(); ++k) {
    const double r = std::pow(delta, k);
    for (int x = 0; x < 64; ++x)
      for (int y = 0; y < 64; ++y) {
        const double d = ln.sp.dist(x, y);
        if (d >= r) continue;
        const double vx = ln.sp.ball_measure(x, r);
        const double vy = ln.sp.ball_measure(y, r);
        C = std::max(C, std::pow((r + d) / r, prm.lambda_ap / prm.q) * std::pow((vx + vy) / vx, 1 / prm.q));
      }
  }
  ASSERT_TRUE(std::isfinite(C));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector f = gaussian(64, 10 + s);
    const Vector S = lusin_area(ln.kernels, f, prm);
    const Vector G = g_lambda_star(ln.kernels, f, prm);
    EXPECT_TRUE((S.array() <= C * G.array() * (1 + 1e-12)).all());
  }
}

TEST(Lp, GStarApproachesDiagonalSum) {
  const Line ln;
  SpaceParams prm = ln.params(0, 2, 2);
  const Vector f = gaussian(64, 21);
  const DetailStack st = detail_stack(ln.kernels, f, Homogeneity::homogeneous);
  Vector diag = Vector::Zero(64);
  for (std::size_t b = 0; b < st.scales.size(); ++b) {
    const double r = std::pow(ln.tree->delta(), st.scales[b]);
    for (int x = 0; x < 64; ++x)
      diag[x] += st.values[b][x] * st.values[b][x] * ln.sp.weight(x) / (2 * ln.sp.ball_measure(x, r));
  }
  diag = diag.cwiseSqrt();

  double prev = kInf;
  for (double lam : {25.0, 50.0, 100.0, 200.0, 400.0, 1600.0}) {
    prm.lambda_ap = lam;
    const Vector G = g_lambda_star(ln.kernels, f, prm);
    EXPECT_TRUE((G.array() >= diag.array() * (1 - 1e-12)).all());
    const double excess = ((G - diag).array() / diag.array()).maxCoeff();
    EXPECT_LT(excess, prev);
    prev = excess;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Lp, RejectsUnsupportedParameters) {
  const Line ln;
  const Vector f = gaussian(64, 1);
  EXPECT_THROW(lusin_area(ln.kernels, f, ln.params(0, 2, kInf)), ValidationError);
  EXPECT_THROW(g_lambda_star(ln.kernels, f, ln.params(0, 2, kInf)), ValidationError);
  const SpaceParams angle = ln.params(0, 2, 1);
  EXPECT_THROW(change_of_angle_fit(*ln.basis, ln.kernels, angle, {1.0}, 4, 0), ValidationError);
  EXPECT_THROW(change_of_angle_fit(*ln.basis, ln.kernels, angle, {1.0, 0.5, 2.0}, 4, 0), ValidationError);
  EXPECT_THROW(change_of_angle_fit(*ln.basis, ln.kernels, ln.params(0, 2, 2), {1, 2, 4}, 4, 0),
               ValidationError);
}

TEST(Lp, EnsembleAndReport) {
  const Line ln;
  const auto a = make_ensemble(*ln.basis, ln.kernels, 9, 5);
  const auto b = make_ensemble(*ln.basis, ln.kernels, 9, 5);
  ASSERT_EQ(a.size(), 9u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_GT(a[i].cwiseAbs().maxCoeff(), 0.0);
  }

  SpaceParams prm = ln.params(0, 2, 2);
  prm.lambda_ap = 0.5;
  const LpReport low = equivalence_report(*ln.basis, ln.kernels, prm, 20, 1);
  EXPECT_FALSE(low.lambda_in_window);
  prm.lambda_ap = 4.0;
  const LpReport rep = equivalence_report(*ln.basis, ln.kernels, prm, 20, 1);
  EXPECT_TRUE(rep.lambda_in_window);
  EXPECT_TRUE(rep.g_matches_kernel_norm);
  for (const RatioBand& band : rep.bands) {
    EXPECT_TRUE(std::isfinite(band.C));
    EXPECT_GE(band.C, 1.0);
  }
}
