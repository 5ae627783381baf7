#include <gtest/gtest.h>

#include <cmath>

#include "homtype/molecules.hpp"

using namespace homtype;

namespace {

struct Line {
  TreePtr tree = build_dyadic(builtin_line(64, 1.0 / 64), 0.125);
  BasisPtr basis = build_haar(tree);
  SpaceParams prm;
  Line() {
    prm.omega = 1.0;
    prm.omega0 = 1.0;
  }
};

}  // namespace

TEST(Molecules, ZeroFunctionPasses) {
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  const MoleculeCheck chk = verify_molecule(*fam, 4, Vector::Zero(64), 0.45, 0.45);
  EXPECT_TRUE(chk.pass);
  EXPECT_EQ(chk.C, 0.0);
}

TEST(Molecules, CanonicalMoleculesAreNormalized) {
  Line ln;
  for (Homogeneity h : {Homogeneity::homogeneous, Homogeneity::inhomogeneous}) {
    const FamilyPtr fam = make_family(ln.tree, h);
    for (const Molecule& m : canonical_molecules(*fam, 0.45, 0.45)) {
      const MoleculeCheck chk = verify_molecule(*fam, m.index, m.values, 0.45, 0.45);
      EXPECT_TRUE(chk.pass);
      EXPECT_GE(chk.C, 1.0 - 1e-9);
      EXPECT_LE(chk.C, 1.0 + 1e-12);
      if (chk.cancellation_required) EXPECT_LE(std::abs(chk.integral), 1e-12 * chk.l1);
    }
  }
}

TEST(Molecules, InhomogeneousUnitCubeKeepsItsMean) {
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::inhomogeneous);
  ASSERT_FALSE(fam->scaling_members().empty());
  const int idx = fam->scaling_members().front();
  const Molecule m = canonical_molecule(*fam, idx, 0.45, 0.45);
  const MoleculeCheck chk = verify_molecule(*fam, idx, m.values, 0.45, 0.45);
  EXPECT_FALSE(chk.cancellation_required);
  EXPECT_GT(chk.integral, 0.0);
  EXPECT_TRUE(chk.pass);
}

TEST(Molecules, MirroredCubesGiveMirroredMolecules) {
  // the uniform line is symmetric under x -> 63 - x
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  int checked = 0;
  for (std::size_t i = 0; i < fam->size(); ++i) {
    const FamilyCube& c = (*fam)[i];
    const auto& pts = ln.tree->cube(c.cube).points;
    const int mirror = fam->find(c.level, 63 - c.center);
    if (mirror < 0) continue;
    const auto& mpts = ln.tree->cube((*fam)[static_cast<std::size_t>(mirror)].cube).points;
    if (pts.size() != mpts.size() || pts.front() != 63 - mpts.back()) continue;
    const Vector a = canonical_molecule(*fam, static_cast<int>(i), 0.45, 0.45).values;
    const Vector b = canonical_molecule(*fam, mirror, 0.45, 0.45).values;
    EXPECT_LE((a - b.reverse()).cwiseAbs().maxCoeff(), 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Molecules, WaveletGramIsIdentity) {
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  const auto mols = basis_molecules(*ln.basis, *fam, 0.45, 0.45);
  const CubeOperator G = molecule_wavelet_gram(*ln.basis, fam, mols);
  const auto m = static_cast<Eigen::Index>(fam->size());
  EXPECT_LE((Matrix(G.entries.toDense()) - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Molecules, GramWindowAndDecay) {
  SpaceParams prm;
  prm.s = 0;
  prm.p = 2;
  prm.q = 2;
  prm.beta = 0.45;
  prm.gamma = 0.45;
  prm.omega = 1.0;
  // min{0.45, 0.9, 0.9}
  EXPECT_DOUBLE_EQ(gram_eps_upper(prm), 0.45);
  prm.p = 0.5;
  // omega (1/p - 1) = 1 swallows gamma
  EXPECT_LE(gram_eps_upper(prm), 0.0);

  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  const CubeOperator G = molecule_wavelet_gram(*ln.basis, fam, canonical_molecules(*fam, 0.45, 0.45));
  ln.prm.eps_ad = 0.2;
  const double K = ado_constant(G, ln.prm);
  EXPECT_TRUE(std::isfinite(K));
  EXPECT_GT(K, 0.0);
  EXPECT_GT(chain_decay_exponent(G, 0), 0.0);
}

TEST(Molecules, Synthesis) {
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  ln.prm.kind = SpaceKind::triebel_lizorkin;

  const auto canon = canonical_molecules(*fam, 0.45, 0.45);
  const SynthesisReport zero = molecular_synthesis(*ln.basis, CoefficientSequence(fam), canon, ln.prm);
  EXPECT_EQ(zero.f.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.ratio, 0.0);

  Rng rng(8);
  std::normal_distribution<double> g;
  CoefficientSequence lam(fam);
  for (Eigen::Index i = 0; i < lam.values.size(); ++i) lam.values[i] = g(rng);
  const auto wav = basis_molecules(*ln.basis, *fam, 0.45, 0.45);
  const SynthesisReport exact = molecular_synthesis(*ln.basis, lam, wav, ln.prm);
  EXPECT_NEAR(exact.ratio, 1.0, 1e-12);
  EXPECT_LE((exact.f - synthesize(*ln.basis, lam)).cwiseAbs().maxCoeff(), 1e-12);

  const SynthesisReport mol = molecular_synthesis(*ln.basis, lam, canon, ln.prm);
  EXPECT_TRUE(std::isfinite(mol.ratio));
  EXPECT_GT(mol.ratio, 0.0);
}

TEST(Molecules, PerturbedFamilyStaysAdmissible) {
  Line ln;
  const FamilyPtr fam = make_family(ln.tree, Homogeneity::homogeneous);
  for (const Molecule& m : perturbed_molecules(*fam, 0.45, 0.45, 0.2, 4)) {
    const MoleculeCheck chk = verify_molecule(*fam, m.index, m.values, 0.45, 0.45);
    EXPECT_LE(chk.C, 1.0 + 1e-9);
    EXPECT_TRUE(chk.cancellation_ok);
  }
}
