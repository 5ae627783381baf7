#pragma once

#include <string>
#include <vector>

#include "homtype/seq_spaces.hpp"

namespace homtype {

/// Q_k f for every realized scale k: D_k f (homogeneous, k in
/// [k_min, k_max - 1]) or Q_0 = P_0, Q_k = D_{k-1} (inhomogeneous, k >= 0).
struct DetailStack {
  std::vector<int> scales;
  std::vector<Vector> values;
};

DetailStack detail_stack(const AtiKernels& kernels, const Vector& f,
                         Homogeneity kind);

/// Inhomogeneous cutoff N: params.n_cutoff, or min(k_min + 2, k_max) clamped
/// at 0 when unset.
int cutoff_level(const DyadicTree& tree, const SpaceParams& params);

/// Littlewood-Paley g-function; the inhomogeneous variant averages
/// |Q_k f|^q over the j0-refined subcubes for k <= N.
Vector g_function(const AtiKernels& kernels, const Vector& f,
                  const SpaceParams& params);
/// Lusin area function over B(x, delta^k), normalized by V_{delta^k}(x).
Vector lusin_area(const AtiKernels& kernels, const Vector& f,
                  const SpaceParams& params);
/// Aperture variant over B(x, theta delta^k), normalized by V_{delta^k}(y).
Vector lusin_area_aperture(const AtiKernels& kernels, const Vector& f,
                           const SpaceParams& params, double theta);
/// g*_lambda with lambda = params.lambda_ap.
Vector g_lambda_star(const AtiKernels& kernels, const Vector& f,
                     const SpaceParams& params);

/// Besov / Triebel-Lizorkin norm of f computed from the kernels Q_k.
/// The homogeneous Triebel-Lizorkin norm is ||g(f)||_{L^p} through the same
/// routine as g_function.
double kernel_function_norm(const AtiKernels& kernels, const Vector& f,
                            const SpaceParams& params);

enum class EnsembleFamily { sparse_wavelet, smoothed_delta, dense_sign };

/// Deterministic test functions, cycling through the three families.
std::vector<Vector> make_ensemble(const WaveletBasis& basis,
                                  const AtiKernels& kernels, int count,
                                  std::uint64_t seed);

struct RatioBand {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double C = 0.0;       // max over the ensemble of max(r, 1/r)
  double C_half = 0.0;  // same over the first half of the ensemble
  bool stable = false;  // |C / C_half - 1| < 0.25
};

struct FunctionNorms {
  double wavelet = 0.0;
  double g = 0.0;
  double area = 0.0;
  double g_star = 0.0;
};

struct LpReport {
  SpaceParams params;
  bool lambda_in_window = false;
  double lambda_threshold = 0.0;
  std::vector<FunctionNorms> norms;
  std::vector<RatioBand> bands;  // area / wavelet, g_star / wavelet, g / wavelet
  bool g_matches_kernel_norm = false;  // homogeneous bit-for-bit contract
  bool pass = false;
};

/// Norms of every ensemble function; the ensemble is split in halves so that
/// each band can be compared with the band of its first half.
LpReport equivalence_report(const WaveletBasis& basis,
                            const AtiKernels& kernels, const SpaceParams& params,
                            int ensemble, std::uint64_t seed);

struct AngleFit {
  std::vector<double> thetas;
  std::vector<double> slopes;  // one per ensemble function with nonzero norms
  double max_slope = 0.0;
  double bound = 0.0;  // omega / p + 0.2
  bool pass = false;
};

AngleFit change_of_angle_fit(const WaveletBasis& basis,
                             const AtiKernels& kernels,
                             const SpaceParams& params,
                             const std::vector<double>& thetas, int ensemble,
                             std::uint64_t seed);

}  // namespace homtype
