#include "homtype/seq_spaces.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace homtype {

double critical_p(double omega0, double s, double eps) {
  return std::max(omega0 / (omega0 + eps), omega0 / (omega0 + s + eps));
}

std::vector<std::string> validate_params(const SpaceParams& prm,
                                         ValidityScope scope) {
  std::vector<std::string> out;
  auto need = [&](bool ok, std::string msg) {
    if (!ok) out.push_back(std::move(msg));
  };
  const bool tl = prm.kind == SpaceKind::triebel_lizorkin;
  need(prm.p > 0.0, fmt::format("p = {} must be positive", prm.p));
  need(prm.q > 0.0, fmt::format("q = {} must be positive", prm.q));
  need(!(tl && std::isinf(prm.p)),
       "p = inf is not defined for Triebel-Lizorkin norms");
  need(prm.omega0 >= 0.0, fmt::format("omega0 = {} must be >= 0", prm.omega0));
  need(prm.omega >= prm.omega0,
       fmt::format("omega = {} must be >= omega0 = {}", prm.omega, prm.omega0));
  if (scope == ValidityScope::sequence || !out.empty()) return out;

  need(prm.eta > 0.0 && prm.eta < 1.0,
       fmt::format("eta = {} must lie in (0, 1)", prm.eta));
  need(std::abs(prm.s) < prm.eta,
       fmt::format("s = {} must lie in (-eta, eta) = ({}, {})", prm.s,
                   -prm.eta, prm.eta));
  const double pplus = prm.omega0 * positive_part(1.0 / prm.p - 1.0);
  const double beta_lo = std::max(0.0, -prm.s + pplus);
  need(prm.beta > beta_lo && prm.beta < prm.eta,
       fmt::format("beta = {} must lie in ({}, {})", prm.beta, beta_lo,
                   prm.eta));
  const double gamma_lo = prm.homogeneity == Homogeneity::homogeneous
                              ? std::max(prm.s, pplus)
                              : pplus;
  need(prm.gamma > gamma_lo && prm.gamma < prm.eta,
       fmt::format("gamma = {} must lie in ({}, {})", prm.gamma, gamma_lo,
                   prm.eta));
  const double m = std::min(prm.beta, prm.gamma);
  need(std::abs(prm.s) < m,
       fmt::format("s = {} must lie in (-(beta^gamma), beta^gamma) = ({}, {})",
                   prm.s, -m, m));
  if (m > 0.0 && prm.omega0 + prm.s + m > 0.0) {
    const double pc = critical_p(prm.omega0, prm.s, m);
    need(prm.p > pc, fmt::format("p = {} must exceed p(s, beta^gamma) = {}",
                                 prm.p, pc));
    if (tl)
      need(prm.q > pc, fmt::format("q = {} must exceed p(s, beta^gamma) = {}",
                                   prm.q, pc));
  }
  return out;
}

void require_valid(const SpaceParams& params, ValidityScope scope) {
  const auto diag = validate_params(params, scope);
  if (diag.empty()) return;
  std::string msg = "invalid parameters:";
  for (const auto& d : diag) msg += "\n  " + d;
  throw ValidationError(msg);
}

namespace {

double scale_weight(const DyadicTree& tree, int scale, double s) {
  return std::pow(tree.delta(), -scale * s);
}

/// (sum t^r)^{1/r}, scaled by the largest term.
double power_sum_root(const std::vector<double>& terms, double r) {
  double m = 0.0;
  for (double t : terms) m = std::max(m, t);
  if (m == 0.0) return 0.0;
  CompensatedSum acc;
  for (double t : terms) acc += std::pow(t / m, r);
  return m * std::pow(acc.value(), 1.0 / r);
}

/// (sum mu^{1-p/2} |lambda|^p)^{1/p}, or max mu^{-1/2} |lambda| at p = inf.
double lp_block(const CoefficientSequence& lam, const std::vector<int>& members,
                double p) {
  const CubeFamily& fam = *lam.family;
  if (std::isinf(p)) {
    double m = 0.0;
    for (int i : members)
      m = std::max(m, std::abs(lam.values[i]) / std::sqrt(fam[i].mass));
    return m;
  }
  std::vector<double> terms;
  for (int i : members) {
    const double v = std::abs(lam.values[i]);
    if (v != 0.0) terms.push_back(std::pow(fam[i].mass, 1.0 / p - 0.5) * v);
  }
  return power_sum_root(terms, p);
}

void check_bound(const CoefficientSequence& lam) {
  if (!lam.family) throw ValidationError("coefficient sequence has no family");
  if (static_cast<std::size_t>(lam.values.size()) != lam.family->size())
    throw ValidationError("coefficient count does not match its family");
}

}  // namespace

double besov_seq_norm(const CoefficientSequence& lam, const SpaceParams& prm) {
  check_bound(lam);
  const CubeFamily& fam = *lam.family;
  const auto& scales = fam.scales();
  std::vector<double> blocks;
  for (std::size_t b = 0; b < scales.size(); ++b) {
    const double block = lp_block(lam, fam.scale_members()[b], prm.p);
    if (block != 0.0) blocks.push_back(scale_weight(fam.tree(), scales[b], prm.s) * block);
  }
  const double wavelet_part =
      std::isinf(prm.q) ? (blocks.empty() ? 0.0 : *std::max_element(blocks.begin(), blocks.end()))
                        : power_sum_root(blocks, prm.q);
  if (fam.kind() == Homogeneity::inhomogeneous)
    return lp_block(lam, fam.scaling_members(), prm.p) + wavelet_part;
  return wavelet_part;
}

double tl_seq_norm(const CoefficientSequence& lam, const SpaceParams& prm) {
  check_bound(lam);
  if (std::isinf(prm.p))
    throw ValidationError("p = inf is not defined for Triebel-Lizorkin norms");
  const CubeFamily& fam = *lam.family;
  const QuasiMetricSpace& sp = fam.tree().space();
  const int n = sp.n();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(n));
  Vector sup = Vector::Zero(n);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const FamilyCube& fc = fam[i];
    if (fc.scaling || lam.values[static_cast<Eigen::Index>(i)] == 0.0) continue;
    const double v = scale_weight(fam.tree(), fc.scale, prm.s) *
                     std::abs(lam.values[static_cast<Eigen::Index>(i)]) /
                     std::sqrt(fc.mass);
    const double vq = std::isinf(prm.q) ? 0.0 : std::pow(v, prm.q);
    for (int x : fam.tree().cube(fc.cube).points) {
      if (std::isinf(prm.q))
        sup[x] = std::max(sup[x], v);
      else
        acc[static_cast<std::size_t>(x)] += vq;
    }
  }
  Vector g(n);
  for (int x = 0; x < n; ++x) {
    if (std::isinf(prm.q)) {
      g[x] = sup[x];
    } else {
      const double t = acc[static_cast<std::size_t>(x)].value();
      g[x] = t > 0.0 ? std::pow(t, 1.0 / prm.q) : 0.0;
    }
  }
  const double wavelet_part = sp.lp_norm(g, prm.p);
  if (fam.kind() == Homogeneity::inhomogeneous)
    return lp_block(lam, fam.scaling_members(), prm.p) + wavelet_part;
  return wavelet_part;
}

double seq_norm(const CoefficientSequence& lambda, const SpaceParams& params) {
  return params.kind == SpaceKind::besov ? besov_seq_norm(lambda, params)
                                         : tl_seq_norm(lambda, params);
}

double wavelet_function_norm(const WaveletBasis& basis, const Vector& f,
                             const SpaceParams& params) {
  const FamilyPtr fam = make_family(basis.tree_ptr(), params.homogeneity);
  return seq_norm(analyze(basis, fam, f), params);
}

SummationReport summation_lemma_check(const DyadicTree& tree, double omega,
                                      double gamma, double p, double r,
                                      int trials, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(p > omega / (omega + gamma) && p <= 1.0))
    throw ValidationError(fmt::format("p = {} must lie in ({}, 1]", p,
                                      omega / (omega + gamma)));
  if (!(r > omega / (omega + gamma) && r <= 1.0))
    throw ValidationError(fmt::format("r = {} must lie in ({}, 1]", r,
                                      omega / (omega + gamma)));
  if (trials < 1) throw ValidationError("trials must be positive");
  const QuasiMetricSpace& sp = tree.space();
  const int n = sp.n();
  std::vector<int> levels;
  for (int k = tree.k_min(); k < tree.k_max(); ++k)
    if (!tree.net().G(k).empty()) levels.push_back(k);
  if (levels.empty()) throw ValidationError("tree has no wavelet levels");

  SummationReport rep;
  rep.gamma = gamma;
  rep.p = p;
  rep.r = r;
  rep.trials = trials;
  rep.power_ratios.resize(static_cast<std::size_t>(trials));
  rep.maximal_ratios.resize(static_cast<std::size_t>(trials));
  parallel_for(0, static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng = trial_rng(seed, t);
    std::uniform_int_distribution<std::size_t> pick_level(0, levels.size() - 1);
    std::uniform_int_distribution<int> pick_kp(tree.k_min(), tree.k_max());
    std::uniform_int_distribution<int> pick_x(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int k = levels[pick_level(rng)];
    const int kp = pick_kp(rng);
    const int x = pick_x(rng);
    const int km = std::min(k, kp);
    const double radius = std::pow(tree.delta(), km);
    const std::vector<int> g = tree.net().G(k);

    CompensatedSum lhs;
    for (int alpha : g) {
      const double mass = tree.cube(tree.find_cube(k + 1, alpha)).mass;
      lhs += mass * std::pow(sp.kernel_P(gamma, x, alpha, radius), p);
    }
    rep.power_ratios[t] =
        lhs.value() / std::pow(sp.ball_measure(x, radius), 1.0 - p);

    const double density = unit(rng);
    Vector h = Vector::Zero(n);
    CompensatedSum lhs2;
    for (int alpha : g) {
      const double av = unit(rng) < density ? std::abs(std::log(unit(rng))) : 0.0;
      const Cube& c = tree.cube(tree.find_cube(k + 1, alpha));
      lhs2 += c.mass * sp.kernel_P(gamma, x, alpha, radius) * av;
      for (int z : c.points) h[z] = std::pow(av, r);
    }
    if (lhs2.value() == 0.0) {
      rep.maximal_ratios[t] = 0.0;
      return;
    }
    const double mx = maximal_function(sp, h)[x];
    const double rhs = std::pow(tree.delta(), (km - k) * omega * (1.0 / r - 1.0)) *
                       std::pow(mx, 1.0 / r);
    rep.maximal_ratios[t] = lhs2.value() / rhs;
  });
  rep.power_sup =
      *std::max_element(rep.power_ratios.begin(), rep.power_ratios.end());
  rep.maximal_sup =
      *std::max_element(rep.maximal_ratios.begin(), rep.maximal_ratios.end());
  return rep;
}

}  // namespace homtype
