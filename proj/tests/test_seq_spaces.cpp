#include <gtest/gtest.h>

#include <cmath>

#include "homtype/seq_spaces.hpp"
#include "support.hpp"

using namespace homtype;
using homtype::testing::pointwise_seq_norm;
using homtype::testing::rel_diff;

namespace {

TreePtr sixteen() {
  static const TreePtr tree = build_dyadic(builtin_line(16, 1.0 / 16), 0.125);
  return tree;
}

CoefficientSequence random_sparse(const FamilyPtr& fam, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution keep(0.4);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  CoefficientSequence lam(fam);
  for (Eigen::Index i = 0; i < lam.values.size(); ++i)
    if (keep(rng)) lam.values[i] = val(rng);
  return lam;
}

SpaceParams params(double s, double p, double q, SpaceKind kind,
                   Homogeneity h = Homogeneity::homogeneous) {
  SpaceParams prm;
  prm.s = s;
  prm.p = p;
  prm.q = q;
  prm.kind = kind;
  prm.homogeneity = h;
  return prm;
}

}  // namespace

TEST(SeqSpaces, CriticalExponent) {
  EXPECT_DOUBLE_EQ(critical_p(1.0, 0.0, 0.5), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(critical_p(1.0, -0.25, 0.5), 0.8);
}

TEST(SeqSpaces, Validation) {
  SpaceParams bad = params(0.6, 2, 2, SpaceKind::besov);
  bad.eta = 0.5;
  EXPECT_FALSE(validate_params(bad, ValidityScope::function).empty());
  EXPECT_THROW(require_valid(bad, ValidityScope::function), ValidationError);
  EXPECT_TRUE(validate_params(params(0.25, 2, 2, SpaceKind::besov), ValidityScope::function).empty());

  const SpaceParams tl_inf = params(0, kInf, 2, SpaceKind::triebel_lizorkin);
  EXPECT_FALSE(validate_params(tl_inf, ValidityScope::sequence).empty());
  EXPECT_TRUE(validate_params(params(0, kInf, 2, SpaceKind::besov), ValidityScope::sequence).empty());
  EXPECT_FALSE(validate_params(params(0, -1, 2, SpaceKind::besov), ValidityScope::sequence).empty());
}

TEST(SeqSpaces, SingleCoefficient) {
  const FamilyPtr fam = make_family(sixteen(), Homogeneity::homogeneous);
  for (std::size_t i = 0; i < fam->size(); i += 3) {
    const FamilyCube& c = (*fam)[i];
    CoefficientSequence lam(fam);
    lam.values[static_cast<Eigen::Index>(i)] = 1.0;
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
      const double expect = std::pow(0.125, -c.scale * 0.25) * std::pow(c.mass, 1.0 / p - 0.5);
      for (SpaceKind kind : {SpaceKind::besov, SpaceKind::triebel_lizorkin})
        EXPECT_NEAR(seq_norm(lam, params(0.25, p, 1.5, kind)), expect, 1e-13 * expect);
    }
  }
  EXPECT_EQ(seq_norm(CoefficientSequence(fam), params(0, 2, 2, SpaceKind::besov)), 0.0);
  EXPECT_EQ(seq_norm(CoefficientSequence(fam), params(0, 2, 2, SpaceKind::triebel_lizorkin)), 0.0);
}

TEST(SeqSpaces, MatchesPointwiseOracle) {
  const std::vector<SpaceParams> tuples{
      params(0.25, 1, 2, SpaceKind::besov),
      params(0, 2, 2, SpaceKind::triebel_lizorkin),
      params(-0.25, 2.0 / 3.0, 1, SpaceKind::triebel_lizorkin),
      params(0.5, kInf, 1, SpaceKind::besov),
      params(0, 3, kInf, SpaceKind::besov),
      params(0.1, 1.5, kInf, SpaceKind::triebel_lizorkin),
  };
  for (Homogeneity h : {Homogeneity::homogeneous, Homogeneity::inhomogeneous}) {
    const FamilyPtr fam = make_family(sixteen(), h);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const CoefficientSequence lam = random_sparse(fam, seed);
      for (SpaceParams prm : tuples) {
        prm.homogeneity = h;
        EXPECT_LE(rel_diff(seq_norm(lam, prm), pointwise_seq_norm(lam, prm)), 1e-12);
      }
    }
  }
}

TEST(SeqSpaces, StructuralProperties) {
  const FamilyPtr fam = make_family(sixteen(), Homogeneity::homogeneous);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CoefficientSequence a = random_sparse(fam, seed);
    const CoefficientSequence b = random_sparse(fam, seed + 100);
    CoefficientSequence scaled = a;
    scaled.values *= -3.5;
    CoefficientSequence sum = a;
    sum.values += b.values;
    for (SpaceKind kind : {SpaceKind::besov, SpaceKind::triebel_lizorkin}) {
      const SpaceParams prm = params(0.2, 0.75, 1.5, kind);
      EXPECT_NEAR(seq_norm(scaled, prm), 3.5 * seq_norm(a, prm), 1e-12 * seq_norm(scaled, prm));
      const double r = 0.75;
      EXPECT_LE(std::pow(seq_norm(sum, prm), r),
                std::pow(seq_norm(a, prm), r) + std::pow(seq_norm(b, prm), r) + 1e-12);
    }
    double prev = kInf;
    for (double q : {0.5, 1.0, 2.0, 4.0, kInf}) {
      const double v = seq_norm(a, params(0.1, 2, q, SpaceKind::besov));
      EXPECT_LE(v, prev * (1 + 1e-14));
      prev = v;
    }
    const double big = seq_norm(a, params(0, 1e6, 2, SpaceKind::besov));
    const double inf = seq_norm(a, params(0, kInf, 2, SpaceKind::besov));
    EXPECT_NEAR(big / inf, 1.0, 0.01);
  }
}

TEST(SeqSpaces, PlancherelAnchor) {
  const TreePtr tree = build_dyadic(builtin_cloud(64, 1), 0.125);
  const BasisPtr basis = build_haar(tree);
  const FamilyPtr fam = make_family(tree, Homogeneity::homogeneous);
  Rng rng(5);
  std::normal_distribution<double> g;
  Vector f(64);
  for (int i = 0; i < 64; ++i) f[i] = g(rng);
  const SpaceParams prm = params(0, 2, 2, SpaceKind::triebel_lizorkin);
  const CoefficientSequence c = analyze(*basis, fam, f);
  const double n = seq_norm(c, prm);
  EXPECT_NEAR(n * n + c.coarse.squaredNorm(), tree->space().inner(f, f), 1e-9 * tree->space().inner(f, f));
  EXPECT_EQ(wavelet_function_norm(*basis, f, prm), n);
}

TEST(SeqSpaces, SummationEstimates) {
  const TreePtr tree = build_dyadic(builtin_line(64, 1.0 / 64), 0.125);
  const auto a = summation_lemma_check(*tree, 1.0, 1.0, 2.0 / 3.0, 0.8, 200, 1);
  const auto b = summation_lemma_check(*tree, 1.0, 1.0, 2.0 / 3.0, 0.8, 200, 2);
  EXPECT_TRUE(std::isfinite(a.power_sup));
  EXPECT_TRUE(std::isfinite(a.maximal_sup));
  EXPECT_NEAR(a.power_sup / b.power_sup, 1.0, 0.25);
}
