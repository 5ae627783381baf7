#include "homtype/molecules.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace homtype {

namespace {

bool needs_cancellation(const CubeFamily& family, const FamilyCube& fc) {
  return family.kind() == Homogeneity::homogeneous || fc.ell < 1.0;
}

void check_exponents(double beta, double Gamma) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(Gamma > 0.0)) throw ValidationError("Gamma must be positive");
}

}  // namespace

MoleculeCheck verify_molecule(const CubeFamily& family, int index,
                              const Vector& b, double beta, double Gamma) {
  check_exponents(beta, Gamma);
  const QuasiMetricSpace& sp = family.tree().space();
  const int n = sp.n();
  if (b.size() != n) throw ValidationError("candidate length does not match space");
  const FamilyCube& fc = family[static_cast<std::size_t>(index)];
  const double root_mass = std::sqrt(fc.mass);
  const double reach = 1.0 / (2.0 * sp.a0());

  MoleculeCheck chk;
  Vector envelope(n);
  for (int x = 0; x < n; ++x) {
    envelope[x] = root_mass * sp.kernel_P(Gamma, fc.center, x, fc.ell);
    const double r = std::abs(b[x]) / envelope[x];
    if (r > chk.size_C) {
      chk.size_C = r;
      chk.size_witness = x;
    }
  }
  for (int x = 0; x < n; ++x) {
    const double span = fc.ell + sp.dist(fc.center, x);
    for (int xp = 0; xp < n; ++xp) {
      if (xp == x) continue;
      const double d = sp.dist(x, xp);
      if (d > reach * span) continue;
      const double r = std::abs(b[x] - b[xp]) /
                       (std::pow(d / span, beta) * envelope[x]);
      if (r > chk.holder_C) {
        chk.holder_C = r;
        chk.holder_witness = {x, xp};
      }
    }
  }
  chk.C = std::max(chk.size_C, chk.holder_C);
  chk.integral = sp.integral(b);
  chk.l1 = sp.lp_norm(b, 1.0);
  chk.cancellation_required = needs_cancellation(family, fc);
  chk.cancellation_ok =
      !chk.cancellation_required || std::abs(chk.integral) <= 1e-10 * chk.l1;
  chk.pass = chk.C <= 1.0 + 1e-9 && chk.cancellation_ok;
  return chk;
}

Molecule canonical_molecule(const CubeFamily& family, int index, double beta,
                            double Gamma) {
  check_exponents(beta, Gamma);
  const QuasiMetricSpace& sp = family.tree().space();
  const int n = sp.n();
  const FamilyCube& fc = family[static_cast<std::size_t>(index)];
  Vector bump(n);
  for (int x = 0; x < n; ++x) bump[x] = sp.kernel_P(Gamma, fc.center, x, fc.ell);
  if (needs_cancellation(family, fc))
    bump.array() -= sp.integral(bump) / sp.total_mass();
  bump *= std::sqrt(fc.mass);

  Molecule mol;
  mol.index = index;
  mol.beta = beta;
  mol.Gamma = Gamma;
  const double c0 = verify_molecule(family, index, bump, beta, Gamma).C;
  mol.values = bump / c0;
  mol.constant = verify_molecule(family, index, mol.values, beta, Gamma).C;
  while (mol.constant > 1.0) {
    mol.values *= std::nextafter(1.0, 0.0);
    mol.constant = verify_molecule(family, index, mol.values, beta, Gamma).C;
  }
  return mol;
}

std::vector<Molecule> canonical_molecules(const CubeFamily& family, double beta,
                                          double Gamma) {
  std::vector<Molecule> out(family.size());
  parallel_for(0, family.size(), [&](std::size_t i) {
    out[i] = canonical_molecule(family, static_cast<int>(i), beta, Gamma);
  });
  return out;
}

std::vector<Molecule> basis_molecules(const WaveletBasis& basis,
                                      const CubeFamily& family, double beta,
                                      double Gamma) {
  const Matrix B = family_basis(basis, family);
  std::vector<Molecule> out(family.size());
  parallel_for(0, family.size(), [&](std::size_t i) {
    Molecule& m = out[i];
    m.index = static_cast<int>(i);
    m.beta = beta;
    m.Gamma = Gamma;
    m.values = B.col(static_cast<Eigen::Index>(i));
    m.constant =
        verify_molecule(family, m.index, m.values, beta, Gamma).C;
  });
  return out;
}

std::vector<Molecule> perturbed_molecules(const CubeFamily& family, double beta,
                                          double Gamma, double amplitude,
                                          std::uint64_t seed) {
  const QuasiMetricSpace& sp = family.tree().space();
  std::vector<Molecule> out = canonical_molecules(family, beta, Gamma);
  parallel_for(0, out.size(), [&](std::size_t i) {
    Rng rng = trial_rng(seed, i);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Molecule& m = out[i];
    for (Eigen::Index x = 0; x < m.values.size(); ++x)
      m.values[x] *= 1.0 + amplitude * unit(rng);
    const FamilyCube& fc = family[i];
    if (needs_cancellation(family, fc))
      m.values.array() -= sp.integral(m.values) / sp.total_mass();
    double c = verify_molecule(family, m.index, m.values, beta, Gamma).C;
    if (c > 1.0) m.values /= c;
    m.constant = verify_molecule(family, m.index, m.values, beta, Gamma).C;
    // rounding can leave C a few ulps above 1; a one-ulp shrink may not move it
    for (double shrink = 1e-16; m.constant > 1.0; shrink *= 2.0) {
      m.values *= 1.0 - shrink;
      m.constant = verify_molecule(family, m.index, m.values, beta, Gamma).C;
    }
  });
  return out;
}

CubeOperator molecule_wavelet_gram(const WaveletBasis& basis,
                                   const FamilyPtr& family,
                                   const std::vector<Molecule>& molecules) {
  const QuasiMetricSpace& sp = basis.tree().space();
  const Matrix B = family_basis(basis, *family);
  const auto m = static_cast<Eigen::Index>(family->size());
  Matrix mols = Matrix::Zero(sp.n(), m);
  for (const Molecule& mol : molecules) mols.col(mol.index) = mol.values;
  const Matrix dense = B.transpose() * sp.weights().asDiagonal() * mols;
  CubeOperator op(family);
  op.entries = dense.sparseView();
  return op;
}

double gram_eps_upper(const SpaceParams& prm) {
  const double pplus = prm.omega * positive_part(1.0 / prm.p - 1.0);
  return std::min({prm.gamma - pplus, 2.0 * (prm.s + prm.gamma - pplus),
                   2.0 * (prm.beta - prm.s)});
}

double chain_decay_exponent(const CubeOperator& gram, int q) {
  const CubeFamily& fam = *gram.family;
  const FamilyCube& Q = fam[static_cast<std::size_t>(q)];
  const Cube& qc = fam.tree().cube(Q.cube);
  std::map<int, double> best;  // level -> max |A_{Q,P}|
  const Matrix dense(gram.entries);
  for (std::size_t p = 0; p < fam.size(); ++p) {
    const FamilyCube& P = fam[p];
    if (P.level <= Q.level) continue;
    if (!std::binary_search(qc.points.begin(), qc.points.end(), P.center)) continue;
    double& b = best[P.level];
    b = std::max(b, std::abs(dense(q, static_cast<Eigen::Index>(p))));
  }
  std::vector<double> xs, ys;
  for (const auto& [level, v] : best)
    if (v > 0.0) {
      xs.push_back(static_cast<double>(level - Q.level));
      ys.push_back(std::log(v) / std::log(fam.tree().delta()));
    }
  if (xs.size() < 2) return std::nan("");
  return least_squares(xs, ys).slope;
}

SynthesisReport molecular_synthesis(const WaveletBasis& basis,
                                    const CoefficientSequence& lambda,
                                    const std::vector<Molecule>& molecules,
                                    const SpaceParams& params) {
  const QuasiMetricSpace& sp = basis.tree().space();
  SynthesisReport rep;
  rep.f = Vector::Zero(sp.n());
  for (const Molecule& mol : molecules)
    rep.f += lambda.values[mol.index] * mol.values;
  rep.lambda_norm = seq_norm(lambda, params);
  rep.f_norm = seq_norm(analyze(basis, lambda.family, rep.f), params);
  rep.ratio = rep.lambda_norm > 0.0 ? rep.f_norm / rep.lambda_norm : 0.0;
  return rep;
}

}  // namespace homtype
