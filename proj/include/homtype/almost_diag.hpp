#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "homtype/seq_spaces.hpp"

namespace homtype {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Cube-indexed matrix {A_{Q,P}} over one family; rows Q, columns P.
struct CubeOperator {
  FamilyPtr family;
  SparseMatrix entries;

  CubeOperator() = default;
  explicit CubeOperator(FamilyPtr fam);
  static CubeOperator identity(FamilyPtr fam);
};

/// J = omega / min{1, p} (Besov) or omega / min{1, p, q} (Triebel-Lizorkin).
double ad_exponent_J(const SpaceParams& params);

/// The two-scale bound M_{Q,P}(eps) between family cubes q and p.
double bound_M(const CubeFamily& family, int q, int p, double eps,
               const SpaceParams& params);
/// All M_{Q,P}(params.eps_ad) as a dense matrix.
Matrix bound_matrix(const CubeFamily& family, const SpaceParams& params);

/// K = max |A_{Q,P}| / M_{Q,P}(eps) over stored nonzero entries; 0 for the
/// zero operator.
double ado_constant(const CubeOperator& op, const SpaceParams& params);
double ado_constant(const CubeOperator& op, const Matrix& bound);

CoefficientSequence apply(const CubeOperator& op,
                          const CoefficientSequence& lambda);
CubeOperator compose(const CubeOperator& a, const CubeOperator& b);

struct CertifyReport {
  SpaceParams params;
  double density = 0.0;
  int trials = 0;
  std::vector<double> ratios;     // ||A lambda|| / (K ||lambda||), 4 * trials
  std::vector<double> ratios_A0;  // part with l(P) >= l(Q)
  std::vector<double> ratios_A1;  // part with l(P) < l(Q)
  double sup_T = 0.0;
  double sup_2T = 0.0;
  double sup_4T = 0.0;
  double sup_A0 = 0.0;
  double sup_A1 = 0.0;
  double identity_K = 0.0;
  double identity_ratio = 0.0;
  bool identity_exact = false;
  bool finite = false;
  bool stable = false;  // each doubling changes the sup by < 25%
  std::vector<std::string> preconditions;  // notes on the proof's side conditions
  bool pass = false;
};

/// Samples random operators with |A_{Q,P}| <= M_{Q,P}(eps) and random
/// sequences, for trials, 2 * trials and 4 * trials (nested prefixes).
CertifyReport certify_boundedness(const FamilyPtr& family,
                                  const SpaceParams& params, int trials,
                                  double density, std::uint64_t seed);

}  // namespace homtype
