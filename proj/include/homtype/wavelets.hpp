#pragma once

#include <memory>
#include <string>
#include <vector>

#include "homtype/coefficients.hpp"

namespace homtype {

enum class Backend { haar, smoothed };

/// Fitted |psi_alpha^k(x)| sqrt(V_{delta^k}(y_alpha^k)) <= C exp{-nu' t},
/// t = [d(x, y_alpha^k) / delta^k]^a.
struct DecayFit {
  double C = 0.0;
  double nu_prime = 0.0;
  double a = 1.0;
};

class WaveletBasis;
using BasisPtr = std::shared_ptr<const WaveletBasis>;

/// Orthonormal (against mu) scaling functions and wavelets stored as dense
/// columns. phi(k) has one column per alpha in A_k, psi(k) one per alpha in
/// G_k, both ordered by point id.
class WaveletBasis {
 public:
  [[nodiscard]] const DyadicTree& tree() const { return *tree_; }
  [[nodiscard]] const TreePtr& tree_ptr() const { return tree_; }
  [[nodiscard]] Backend backend() const { return backend_; }
  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] double a() const { return a_; }

  /// Scaling functions at level k, clamped to [k_min, k_max].
  [[nodiscard]] const Matrix& phi(int k) const;
  /// Wavelets psi_alpha^k, alpha in G_k; empty outside [k_min, k_max - 1].
  [[nodiscard]] const Matrix& psi(int k) const;
  /// psi_Q for the i-th entry of tree().wavelet_cubes().
  [[nodiscard]] Vector wavelet(int i) const;
  [[nodiscard]] const DecayFit& decay() const { return decay_; }

 private:
  friend BasisPtr build_haar(TreePtr tree);
  friend BasisPtr build_smoothed(TreePtr tree, double nu, double a);
  WaveletBasis() = default;

  TreePtr tree_;
  Backend backend_ = Backend::haar;
  double nu_ = 0.0;
  double a_ = 1.0;
  std::vector<Matrix> phi_;
  std::vector<Matrix> psi_;
  std::vector<std::pair<int, int>> wavelet_slot_;  // (k, column)
  Matrix empty_;
  DecayFit decay_;
};

/// phi = 1_Q / sqrt(mu(Q)); psi from two-pass Gram-Schmidt of the new
/// children's indicators against the parent.
BasisPtr build_haar(TreePtr tree);

/// Nested level spaces generated by smoothed cube indicators
/// K_j 1_Q, K_j(x, y) proportional to exp{-nu [d(x, y) / delta^j]^a} mu(y).
/// Throws NumericalError when a Gram matrix has condition number > 1e12.
BasisPtr build_smoothed(TreePtr tree, double nu, double a);

/// Column i is the basis vector attached to family cube i (phi^0 for
/// inhomogeneous scaling cubes, psi_Q otherwise).
Matrix family_basis(const WaveletBasis& basis, const CubeFamily& family);

CoefficientSequence analyze(const WaveletBasis& basis, const FamilyPtr& family,
                            const Vector& f);
Vector synthesize(const WaveletBasis& basis, const CoefficientSequence& coeffs);

/// Integral kernels of the multiresolution, acting against mu:
/// (K f)(x) = sum_y K(x, y) f(y) mu(y).
struct AtiKernels {
  BasisPtr basis;
  int k_min = 0;
  int k_max = 0;
  std::vector<Matrix> P;  // P_k, k in [k_min, k_max]
  std::vector<Matrix> D;  // D_k, k in [k_min, k_max - 1]

  [[nodiscard]] const Matrix& Pk(int k) const;
  /// D_k, or an empty matrix outside the realized range.
  [[nodiscard]] const Matrix& Dk(int k) const;
  /// Inhomogeneous Q_0 = P_0 (clamped), Q_k = D_{k-1}.
  [[nodiscard]] const Matrix& Qk_inhom(int k) const;
  Matrix empty;
};

AtiKernels build_kernels(const BasisPtr& basis);

/// K f for a kernel K acting against mu.
Vector apply_kernel(const Matrix& K, const QuasiMetricSpace& space,
                    const Vector& f);

struct ConditionCheck {
  std::string name;
  int k = 0;
  double constant = 0.0;  // tightest C for (ii)-(iv), max deviation for (v)
  bool sampled = false;
  bool pass = false;
};

struct IatiReport {
  Homogeneity kind = Homogeneity::homogeneous;
  double nu_prime = 0.0;
  double a = 1.0;
  double eta = 0.5;
  std::vector<ConditionCheck> checks;
  bool pass = false;
};

/// Fits the constants of the size, regularity, second-difference and
/// cancellation (or conservation) conditions level by level. Failures are
/// reported, not thrown.
IatiReport verify_exp_iati(const AtiKernels& kernels, Homogeneity kind,
                           double nu_prime, double a, double eta);

}  // namespace homtype
