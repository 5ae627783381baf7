#pragma once

#include <string>
#include <vector>

#include "homtype/coefficients.hpp"
#include "homtype/wavelets.hpp"

namespace homtype {

enum class SpaceKind { besov, triebel_lizorkin };

/// Index tuple shared by the sequence, operator and square-function code.
struct SpaceParams {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
  double beta = 0.45;
  double gamma = 0.45;
  double eps_ad = 0.5;
  double eta = 0.5;
  double omega = 1.0;
  double omega0 = 1.0;
  double lambda_ap = 4.0;
  SpaceKind kind = SpaceKind::besov;
  Homogeneity homogeneity = Homogeneity::homogeneous;
  int n_cutoff = -1;  // inhomogeneous N; -1 selects min(k_min + 2, k_max)
  int j0 = 1;
};

/// p(s, eps) = max{omega0 / (omega0 + eps), omega0 / (omega0 + s + eps)}
double critical_p(double omega0, double s, double eps);

enum class ValidityScope {
  sequence,  // only the exponent ranges of the sequence norms
  function,  // the full smoothness / test-class windows
};

/// Every violated inequality, one human-readable line each. Empty means ok.
std::vector<std::string> validate_params(const SpaceParams& params,
                                         ValidityScope scope);
/// Throws ValidationError carrying all diagnostics.
void require_valid(const SpaceParams& params, ValidityScope scope);

double besov_seq_norm(const CoefficientSequence& lambda,
                      const SpaceParams& params);
double tl_seq_norm(const CoefficientSequence& lambda, const SpaceParams& params);
/// Dispatches on params.kind.
double seq_norm(const CoefficientSequence& lambda, const SpaceParams& params);

/// Norm of f through its wavelet coefficients (analysis followed by the
/// matching sequence norm).
double wavelet_function_norm(const WaveletBasis& basis, const Vector& f,
                             const SpaceParams& params);

struct SummationReport {
  double gamma = 0.0;
  double p = 0.0;  // exponent of the power-sum bound
  double r = 0.0;  // exponent of the maximal-function bound
  int trials = 0;
  std::vector<double> power_ratios;
  std::vector<double> maximal_ratios;
  double power_sup = 0.0;
  double maximal_sup = 0.0;
};

/// Random (k, k', x, a) instances of the two summation estimates over the
/// wavelet index sets G_k; reports left/right ratios.
SummationReport summation_lemma_check(const DyadicTree& tree, double omega,
                                      double gamma, double p, double r,
                                      int trials, std::uint64_t seed);

}  // namespace homtype
