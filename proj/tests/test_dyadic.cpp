#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "homtype/dyadic.hpp"

using namespace homtype;

namespace {

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Dyadic, FourPointLine) {
  const TreePtr tree = build_dyadic(builtin_line(4, 1.0), 0.25);
  const NetSystem& net = tree->net();
  EXPECT_EQ(net.k_min, -1);
  EXPECT_EQ(net.k_max, 1);
  EXPECT_EQ(net.A(-1), std::vector<int>({0}));
  EXPECT_EQ(net.A(0), std::vector<int>({0, 3}));
  EXPECT_EQ(net.A(1), std::vector<int>({0, 1, 2, 3}));
  EXPECT_EQ(net.G(0), std::vector<int>({1, 2}));

  const auto& lvl0 = tree->level_cubes(0);
  ASSERT_EQ(lvl0.size(), 2u);
  EXPECT_EQ(tree->cube(lvl0[0]).points, std::vector<int>({0, 1}));
  EXPECT_EQ(tree->cube(lvl0[1]).points, std::vector<int>({2, 3}));
  EXPECT_EQ(tree->wavelet_cubes().size(), 3u);
  EXPECT_TRUE(verify_dyadic(*tree).all());
}

TEST(Dyadic, TwoDistantPoints) {
  // levels -2 (one point covers) and -1 (both are net points)
  PointSet pts;
  pts.coords = {{0.0}, {10.0}};
  const TreePtr tree = build_dyadic(build_space(pts, {}), 0.125);
  EXPECT_EQ(tree->k_min(), -2);
  EXPECT_EQ(tree->k_max(), -1);
  EXPECT_EQ(tree->wavelet_cubes().size(), 1u);
  EXPECT_EQ(tree->wavelet_cubes().size(),
            tree->space().size() - tree->net().A(tree->k_min()).size());
}

TEST(Dyadic, CubePropertiesOnTestSpaces) {
  for (const SpacePtr& sp : {builtin_line(64, 1.0 / 64), builtin_cloud(100, 0)}) {
    const TreePtr tree = build_dyadic(sp, 0.125);
    const DyadicCheck chk = verify_dyadic(*tree);
    EXPECT_TRUE(chk.separation);
    EXPECT_TRUE(chk.covering);
    EXPECT_TRUE(chk.nesting);
    EXPECT_TRUE(chk.partition);
    EXPECT_TRUE(chk.monotone);
    EXPECT_TRUE(chk.sandwich);
    EXPECT_DOUBLE_EQ(tree->sandwich().c_natural, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(tree->sandwich().C_natural, 2.0);

    for (int k = tree->k_min(); k <= tree->k_max(); ++k) {
      double mass = 0.0;
      for (int c : tree->level_cubes(k)) mass += tree->cube(c).mass;
      EXPECT_NEAR(mass, sp->total_mass(), 1e-12);
    }
    EXPECT_EQ(tree->wavelet_cubes().size(),
              sp->size() - tree->net().A(tree->k_min()).size());
    for (const WaveletCube& w : tree->wavelet_cubes()) {
      EXPECT_EQ(w.level, w.k + 1);
      EXPECT_DOUBLE_EQ(w.ell, std::pow(0.125, w.k + 1));
      EXPECT_EQ(tree->dist_to_Y(w.k, w.center), 0.0);
    }
  }
}

TEST(Dyadic, NetsRespectSeparationByEnumeration) {
  const SpacePtr sp = builtin_cloud(60, 9);
  const NetSystem net = build_nets(*sp, 0.125);
  for (int k = net.k_min; k <= net.k_max; ++k) {
    const double r = std::pow(0.125, k);
    const auto& A = net.A(k);
    for (std::size_t i = 0; i < A.size(); ++i)
      for (std::size_t j = i + 1; j < A.size(); ++j) EXPECT_GE(sp->dist(A[i], A[j]), r);
    for (int x = 0; x < sp->n(); ++x) {
      double best = kInf;
      for (int a : A) best = std::min(best, sp->dist(x, a));
      EXPECT_LE(best, r);
    }
  }
}

TEST(Dyadic, RefinementMatchesDescendantCount) {
  const TreePtr tree = build_dyadic(builtin_cloud(80, 4), 0.125);
  EXPECT_THROW(refine(*tree, 0), ValidationError);
  for (int j0 : {1, 2}) {
    const Refinement ref = refine(*tree, j0);
    int max_count = 0;
    for (std::size_t c = 0; c < tree->cubes().size(); ++c) {
      const Cube& cube = tree->cube(static_cast<int>(c));
      const int target = std::min(cube.level + j0, tree->k_max());
      // brute force: level-`target` cubes whose points all lie in `cube`
      std::vector<int> expect;
      for (int d : tree->level_cubes(target)) {
        const auto& pts = tree->cube(d).points;
        if (std::includes(cube.points.begin(), cube.points.end(), pts.begin(), pts.end()))
          expect.push_back(d);
      }
      EXPECT_EQ(sorted(ref.subcubes[c]), expect);
      double mass = 0.0;
      for (int d : ref.subcubes[c]) mass += tree->cube(d).mass;
      EXPECT_NEAR(mass, cube.mass, 1e-12);
      max_count = std::max(max_count, static_cast<int>(expect.size()));
    }
    EXPECT_EQ(ref.max_count, max_count);
    if (j0 == 1)
      for (std::size_t c = 0; c < tree->cubes().size(); ++c)
        if (tree->cube(static_cast<int>(c)).level < tree->k_max())
          EXPECT_EQ(sorted(ref.subcubes[c]), sorted(tree->cube(static_cast<int>(c)).children));
  }
}

TEST(Dyadic, WidenRange) {
  const SpacePtr sp = builtin_line(16, 1.0 / 16);
  NetSystem net = build_nets(*sp, 0.125);
  const int lo = net.k_min;
  const int hi = net.k_max;
  EXPECT_THROW(widen_range(net, lo + 1, hi), ValidationError);
  EXPECT_THROW(widen_range(net, lo, hi - 1), ValidationError);
  widen_range(net, lo - 2, hi + 1);
  EXPECT_EQ(net.k_min, lo - 2);
  EXPECT_EQ(net.k_max, hi + 1);
  EXPECT_EQ(net.A(lo - 2), net.A(lo));
  EXPECT_EQ(net.A(hi + 1).size(), sp->size());
  const TreePtr tree = build_tree(sp, net);
  EXPECT_EQ(tree->wavelet_cubes().size(), sp->size() - 1);
  EXPECT_TRUE(verify_dyadic(*tree).partition);
}
