#pragma once

#include <utility>
#include <vector>

#include "homtype/almost_diag.hpp"

namespace homtype {

struct MoleculeCheck {
  double size_C = 0.0;
  double holder_C = 0.0;
  double C = 0.0;  // max of the two, the tightest admissible constant
  double integral = 0.0;
  double l1 = 0.0;
  bool cancellation_required = true;
  bool cancellation_ok = true;
  bool pass = false;
  int size_witness = -1;
  std::pair<int, int> holder_witness{-1, -1};
};

struct Molecule {
  int index = 0;  // family index of the cube it is centered at
  Vector values;
  double beta = 0.0;
  double Gamma = 0.0;
  double constant = 0.0;
};

/// Exact enumeration of the size and Hoelder sups and of the integral. The
/// cancellation requirement follows the family kind: always for the
/// homogeneous family, only when l(Q) < 1 otherwise.
MoleculeCheck verify_molecule(const CubeFamily& family, int index,
                              const Vector& b, double beta, double Gamma);

/// mu(Q)^{1/2} [P_Gamma(x_Q, x; l(Q)) - mean] scaled to constant 1; the mean
/// is only removed when cancellation is required.
Molecule canonical_molecule(const CubeFamily& family, int index, double beta,
                            double Gamma);

std::vector<Molecule> canonical_molecules(const CubeFamily& family, double beta,
                                          double Gamma);
/// The basis vectors attached to the family, with their measured constants.
std::vector<Molecule> basis_molecules(const WaveletBasis& basis,
                                      const CubeFamily& family, double beta,
                                      double Gamma);
/// Canonical molecules plus a random relative perturbation, re-verified and
/// rescaled so that every constant is at most 1.
std::vector<Molecule> perturbed_molecules(const CubeFamily& family, double beta,
                                          double Gamma, double amplitude,
                                          std::uint64_t seed);

/// A_{Q,P} = <b_P, psi_Q> (phi^0 for inhomogeneous scaling cubes).
CubeOperator molecule_wavelet_gram(const WaveletBasis& basis,
                                   const FamilyPtr& family,
                                   const std::vector<Molecule>& molecules);

/// Upper end of the admissible eps window for the Gram operator:
/// min{gamma - omega(1/p-1)_+, 2[s + gamma - omega(1/p-1)_+], 2(beta - s)}.
double gram_eps_upper(const SpaceParams& params);

/// Fitted gamma' from |A_{Q,P}| along the chain of cubes P below a fixed Q:
/// least-squares slope of log|A_{Q,P}| against log_delta-scale offsets.
double chain_decay_exponent(const CubeOperator& gram, int q);

struct SynthesisReport {
  Vector f;
  double f_norm = 0.0;
  double lambda_norm = 0.0;
  double ratio = 0.0;
};

/// f = sum_Q lambda_Q b_Q with the wavelet-side norm of f against the
/// sequence norm of lambda.
SynthesisReport molecular_synthesis(const WaveletBasis& basis,
                                    const CoefficientSequence& lambda,
                                    const std::vector<Molecule>& molecules,
                                    const SpaceParams& params);

}  // namespace homtype
