#include <gtest/gtest.h>

#include <cmath>

#include "homtype/almost_diag.hpp"

using namespace homtype;

namespace {

struct SixteenLine {
  TreePtr tree = build_dyadic(builtin_line(16, 1.0 / 16), 0.125);
  FamilyPtr fam = make_family(tree, Homogeneity::homogeneous);
  SpaceParams prm;
  SixteenLine() {
    prm.omega = 1.0;
    prm.omega0 = 1.0;
    prm.eps_ad = 0.5;
  }
};

// the bound written out from raw distances and weights
double direct_bound(const CubeFamily& fam, int qi, int pi, const SpaceParams& prm) {
  const QuasiMetricSpace& sp = fam.tree().space();
  const FamilyCube& Q = fam[static_cast<std::size_t>(qi)];
  const FamilyCube& P = fam[static_cast<std::size_t>(pi)];
  const double minexp = prm.kind == SpaceKind::besov ? std::min(1.0, prm.p)
                                                     : std::min({1.0, prm.p, prm.q});
  const double J = prm.omega / minexp;
  const double r = std::max(Q.ell, P.ell);
  const double d = sp.dist(Q.center, P.center);
  double vr = 0.0, vxy = 0.0;
  for (int y = 0; y < sp.n(); ++y) {
    if (sp.dist(Q.center, y) < r) vr += sp.weight(y);
    if (Q.center != P.center && sp.dist(Q.center, y) < d) vxy += sp.weight(y);
  }
  const double e = prm.eps_ad + J - prm.omega;
  const double kernel = std::pow(r / (r + d), e) / (vr + vxy);
  const double t = Q.ell / P.ell;
  return std::pow(t, prm.s) * std::sqrt(Q.mass * P.mass) * kernel *
         std::min(std::pow(t, prm.eps_ad / 2), std::pow(1 / t, prm.eps_ad / 2 + J - prm.omega));
}

}  // namespace

TEST(AlmostDiag, ExponentJ) {
  SpaceParams prm;
  prm.omega = 1.5;
  prm.p = 2;
  prm.q = 0.5;
  prm.kind = SpaceKind::besov;
  EXPECT_DOUBLE_EQ(ad_exponent_J(prm), 1.5);
  prm.kind = SpaceKind::triebel_lizorkin;
  EXPECT_DOUBLE_EQ(ad_exponent_J(prm), 3.0);
}

TEST(AlmostDiag, BoundMatchesDirectFormula) {
  SixteenLine st;
  for (double s : {-0.25, 0.0, 0.25})
    for (double p : {0.75, 2.0}) {
      st.prm.s = s;
      st.prm.p = p;
      for (int q = 0; q < static_cast<int>(st.fam->size()); ++q)
        for (int r = 0; r < static_cast<int>(st.fam->size()); ++r) {
          const double expect = direct_bound(*st.fam, q, r, st.prm);
          EXPECT_NEAR(bound_M(*st.fam, q, r, st.prm.eps_ad, st.prm), expect, 1e-14 * expect);
        }
    }

  st.prm.s = 0;
  st.prm.p = 2;
  const QuasiMetricSpace& sp = st.tree->space();
  for (int q = 0; q < static_cast<int>(st.fam->size()); ++q) {
    const FamilyCube& c = (*st.fam)[static_cast<std::size_t>(q)];
    EXPECT_NEAR(bound_M(*st.fam, q, q, 0.5, st.prm), c.mass / sp.ball_measure(c.center, c.ell), 1e-15);
  }
}

TEST(AlmostDiag, ConstantsOfSimpleOperators) {
  SixteenLine st;
  const Matrix M = bound_matrix(*st.fam, st.prm);
  EXPECT_EQ(ado_constant(CubeOperator(st.fam), st.prm), 0.0);

  double diag = 0.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) diag = std::max(diag, 1.0 / M(i, i));
  EXPECT_NEAR(ado_constant(CubeOperator::identity(st.fam), st.prm), diag, 1e-12 * diag);

  CubeOperator one(st.fam);
  one.entries.insert(3, 7) = M(3, 7);
  EXPECT_NEAR(ado_constant(one, st.prm), 1.0, 1e-14);
}

TEST(AlmostDiag, ApplyMatchesDenseProduct) {
  SixteenLine st;
  const auto m = static_cast<Eigen::Index>(st.fam->size());
  Rng rng(3);
  std::bernoulli_distribution keep(0.3);
  std::normal_distribution<double> g;
  Matrix dense = Matrix::Zero(m, m);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (keep(rng)) {
        dense(i, j) = g(rng);
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), dense(i, j));
      }
  CubeOperator op(st.fam);
  op.entries.setFromTriplets(trips.begin(), trips.end());
  CoefficientSequence lam(st.fam);
  for (Eigen::Index i = 0; i < m; ++i) lam.values[i] = g(rng);

  EXPECT_LE((apply(op, lam).values - dense * lam.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(apply(CubeOperator::identity(st.fam), lam).values, lam.values);
  EXPECT_EQ(apply(CubeOperator(st.fam), lam).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((compose(op, op).entries.toDense() - dense * dense).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AlmostDiag, CertificationOnLine) {
  const TreePtr tree = build_dyadic(builtin_line(64, 1.0 / 64), 0.125);
  const FamilyPtr fam = make_family(tree, Homogeneity::homogeneous);
  SpaceParams prm;
  prm.omega = 1.0;
  prm.omega0 = 1.0;
  const CertifyReport a = certify_boundedness(fam, prm, 60, 0.3, 1);
  const CertifyReport b = certify_boundedness(fam, prm, 60, 0.3, 1);
  EXPECT_TRUE(a.finite);
  EXPECT_TRUE(a.identity_exact);
  EXPECT_DOUBLE_EQ(a.identity_ratio * a.identity_K, 1.0);
  EXPECT_EQ(a.sup_4T, b.sup_4T);
  EXPECT_GE(a.sup_2T, a.sup_T);
  EXPECT_GE(a.sup_4T, a.sup_2T);
}
