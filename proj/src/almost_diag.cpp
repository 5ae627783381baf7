#include "homtype/almost_diag.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace homtype {

namespace {
constexpr double kBoundFloor = 1e-300;
}

CubeOperator::CubeOperator(FamilyPtr fam) : family(std::move(fam)) {
  const auto m = static_cast<Eigen::Index>(family->size());
  entries.resize(m, m);
}

CubeOperator CubeOperator::identity(FamilyPtr fam) {
  CubeOperator op(std::move(fam));
  op.entries.setIdentity();
  return op;
}

double ad_exponent_J(const SpaceParams& prm) {
  double m = std::min(1.0, prm.p);
  if (prm.kind == SpaceKind::triebel_lizorkin) m = std::min(m, prm.q);
  return prm.omega / m;
}

double bound_M(const CubeFamily& family, int q, int p, double eps,
               const SpaceParams& prm) {
  const FamilyCube& Q = family[static_cast<std::size_t>(q)];
  const FamilyCube& P = family[static_cast<std::size_t>(p)];
  const double J = ad_exponent_J(prm);
  const double ratio = Q.ell / P.ell;
  const double r = std::max(Q.ell, P.ell);
  const double kernel =
      family.tree().space().kernel_P(eps + J - prm.omega, Q.center, P.center, r);
  const double decay = std::min(std::pow(ratio, eps / 2.0),
                                std::pow(1.0 / ratio, eps / 2.0 + J - prm.omega));
  return std::pow(ratio, prm.s) * std::sqrt(Q.mass * P.mass) * kernel * decay;
}

Matrix bound_matrix(const CubeFamily& family, const SpaceParams& params) {
  const auto m = static_cast<Eigen::Index>(family.size());
  Matrix M(m, m);
  parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t q) {
    for (Eigen::Index p = 0; p < m; ++p)
      M(static_cast<Eigen::Index>(q), p) = bound_M(
          family, static_cast<int>(q), static_cast<int>(p), params.eps_ad, params);
  });
  return M;
}

double ado_constant(const CubeOperator& op, const Matrix& bound) {
  double K = 0.0;
  for (Eigen::Index r = 0; r < op.entries.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(op.entries, r); it; ++it)
      if (it.value() != 0.0)
        K = std::max(K, std::abs(it.value()) / bound(it.row(), it.col()));
  return K;
}

double ado_constant(const CubeOperator& op, const SpaceParams& params) {
  if (!(params.eps_ad > 0.0)) throw ValidationError("eps must be positive");
  double K = 0.0;
  for (Eigen::Index r = 0; r < op.entries.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(op.entries, r); it; ++it)
      if (it.value() != 0.0)
        K = std::max(K, std::abs(it.value()) /
                            bound_M(*op.family, static_cast<int>(it.row()),
                                    static_cast<int>(it.col()), params.eps_ad,
                                    params));
  return K;
}

CoefficientSequence apply(const CubeOperator& op,
                          const CoefficientSequence& lambda) {
  if (op.family != lambda.family)
    throw ValidationError("operator and sequence are bound to different families");
  CoefficientSequence out(op.family);
  out.values = op.entries * lambda.values;
  return out;
}

CubeOperator compose(const CubeOperator& a, const CubeOperator& b) {
  if (a.family != b.family)
    throw ValidationError("operators are bound to different families");
  CubeOperator out(a.family);
  out.entries = (a.entries * b.entries).pruned();
  return out;
}

CertifyReport certify_boundedness(const FamilyPtr& family,
                                  const SpaceParams& params, int trials,
                                  double density, std::uint64_t seed) {
  require_valid(params, ValidityScope::sequence);
  if (!(params.eps_ad > 0.0)) throw ValidationError("eps must be positive");
  if (trials < 1) throw ValidationError("trials must be positive");
  if (!(density > 0.0 && density <= 1.0))
    throw ValidationError("density must lie in (0, 1]");
  if (family->size() == 0) throw ValidationError("cube family is empty");

  const CubeFamily& fam = *family;
  const auto m = static_cast<Eigen::Index>(fam.size());
  const Matrix M = bound_matrix(fam, params);

  CertifyReport rep;
  rep.params = params;
  rep.density = density;
  rep.trials = trials;
  const double J = ad_exponent_J(params);
  const double pplus = params.omega * positive_part(1.0 / params.p - 1.0);
  const double side = params.omega / (params.omega + pplus + params.eps_ad);
  rep.preconditions.push_back(fmt::format(
      "omega/[omega + omega(1/p-1)_+ + eps] = {:.6g} {} p = {:.6g}", side,
      side < params.p ? "<" : ">=", params.p));
  rep.preconditions.push_back(fmt::format("J = {:.6g}, eps + J - omega = {:.6g}",
                                          J, params.eps_ad + J - params.omega));

  const auto total = static_cast<std::size_t>(4 * trials);
  rep.ratios.resize(total);
  rep.ratios_A0.resize(total);
  rep.ratios_A1.resize(total);
  parallel_for(0, total, [&](std::size_t t) {
    Rng rng = trial_rng(seed, t);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix A0 = Matrix::Zero(m, m);
    Matrix A1 = Matrix::Zero(m, m);
    double K = 0.0;
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = 0; q < m; ++q) {
        // one draw per entry: the top 53 bits decide inclusion and, rescaled,
        // the magnitude; the lowest bit is the sign
        const std::uint64_t bits = rng();
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
        if (u >= density || !(M(q, p) > kBoundFloor)) continue;
        const double mag = u / density;
        const double v = ((bits & 1U) ? -mag : mag) * M(q, p);
        if (v == 0.0) continue;
        K = std::max(K, std::abs(v) / M(q, p));
        if (fam[static_cast<std::size_t>(p)].ell >= fam[static_cast<std::size_t>(q)].ell)
          A0(q, p) = v;
        else
          A1(q, p) = v;
      }
    CoefficientSequence lam(family);
    for (Eigen::Index i = 0; i < m; ++i) lam.values[i] = gauss(rng);
    const double base = seq_norm(lam, params);
    if (K == 0.0 || base == 0.0) return;
    CoefficientSequence out(family);
    const Vector y0 = A0 * lam.values;
    const Vector y1 = A1 * lam.values;
    out.values = y0;
    const double n0 = seq_norm(out, params);
    out.values = y1;
    const double n1 = seq_norm(out, params);
    out.values = y0 + y1;
    rep.ratios[t] = seq_norm(out, params) / (K * base);
    rep.ratios_A0[t] = n0 / (K * base);
    rep.ratios_A1[t] = n1 / (K * base);
  });

  auto sup_prefix = [](const std::vector<double>& v, std::size_t len) {
    return *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len));
  };
  const auto T = static_cast<std::size_t>(trials);
  rep.sup_T = sup_prefix(rep.ratios, T);
  rep.sup_2T = sup_prefix(rep.ratios, 2 * T);
  rep.sup_4T = sup_prefix(rep.ratios, 4 * T);
  rep.sup_A0 = sup_prefix(rep.ratios_A0, 4 * T);
  rep.sup_A1 = sup_prefix(rep.ratios_A1, 4 * T);
  rep.finite = std::all_of(rep.ratios.begin(), rep.ratios.end(),
                           [](double r) { return std::isfinite(r); });
  rep.stable = rep.sup_T > 0.0 && rep.sup_2T < 1.25 * rep.sup_T &&
               rep.sup_4T < 1.25 * rep.sup_2T;

  // identity operator: ||I lambda|| / (K ||lambda||) = 1 / K
  double Kid = 0.0;
  for (Eigen::Index q = 0; q < m; ++q) Kid = std::max(Kid, 1.0 / M(q, q));
  rep.identity_K = Kid;
  CoefficientSequence lam(family);
  Rng rng = trial_rng(seed, total);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < m; ++i) lam.values[i] = gauss(rng);
  const CoefficientSequence image = apply(CubeOperator::identity(family), lam);
  rep.identity_ratio = seq_norm(image, params) / (Kid * seq_norm(lam, params));
  rep.identity_exact = std::abs(rep.identity_ratio * Kid - 1.0) <= 1e-12;

  rep.pass = rep.finite && rep.stable && rep.identity_exact;
  return rep;
}

}  // namespace homtype
