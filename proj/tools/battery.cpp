#include "homtype/battery.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace homtype {

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json to_json(const CheckResult& r) {
  Json j;
  j["criterion"] = r.id;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["detail"] = r.detail;
  return j;
}

Workbench make_workbench(SpacePtr space, double delta) {
  Workbench wb;
  wb.space = std::move(space);
  wb.profile = estimate_doubling(*wb.space);
  wb.tree = build_dyadic(wb.space, delta);
  wb.basis = build_haar(wb.tree);
  wb.kernels = build_kernels(wb.basis);
  return wb;
}

namespace {

SpaceParams base_params(const Workbench& wb) {
  SpaceParams p;
  p.omega = wb.profile.omega;
  p.omega0 = wb.profile.omega0;
  return p;
}

Vector random_function(int n, std::uint64_t seed, std::uint64_t stream) {
  Rng rng = trial_rng(seed, stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector f(n);
  for (int i = 0; i < n; ++i) f[i] = gauss(rng);
  return f;
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

Json space_summary(const Workbench& wb) {
  Json j;
  j["points"] = wb.space->n();
  j["a0"] = num(wb.space->a0());
  j["omega"] = num(wb.profile.omega);
  j["omega0"] = num(wb.profile.omega0);
  j["k_min"] = wb.tree->k_min();
  j["k_max"] = wb.tree->k_max();
  return j;
}

}  // namespace

double straight_loop_seq_norm(const CoefficientSequence& lambda,
                              const SpaceParams& prm) {
  const CubeFamily& fam = *lambda.family;
  const DyadicTree& tree = fam.tree();
  const QuasiMetricSpace& sp = tree.space();
  const double p = prm.p;
  const double q = prm.q;

  // level-0 block of the inhomogeneous family (cubes are disjoint)
  double head = 0.0;
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      if (!fam[i].scaling) continue;
      const double v = std::abs(lambda.values[static_cast<Eigen::Index>(i)]) /
                       std::sqrt(fam[i].mass);
      if (std::isinf(p))
        head = std::max(head, v);
      else
        acc += fam[i].mass * std::pow(v, p);
    }
    if (!std::isinf(p)) head = std::pow(acc, 1.0 / p);
  }

  std::vector<int> scales;
  for (const FamilyCube& fc : fam.cubes())
    if (!fc.scaling) scales.push_back(fc.scale);
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());

  if (prm.kind == SpaceKind::besov) {
    double total = 0.0;
    for (int k : scales) {
      double inner = 0.0;
      for (std::size_t i = 0; i < fam.size(); ++i) {
        const FamilyCube& fc = fam[i];
        if (fc.scaling || fc.scale != k) continue;
        const double lam = std::abs(lambda.values[static_cast<Eigen::Index>(i)]);
        if (std::isinf(p))
          inner = std::max(inner, lam / std::sqrt(fc.mass));
        else
          inner += std::pow(fc.mass, 1.0 - p / 2.0) * std::pow(lam, p);
      }
      if (!std::isinf(p)) inner = std::pow(inner, 1.0 / p);
      const double v = std::pow(tree.delta(), -k * prm.s) * inner;
      if (std::isinf(q))
        total = std::max(total, v);
      else
        total += std::pow(v, q);
    }
    if (!std::isinf(q)) total = std::pow(total, 1.0 / q);
    return head + total;
  }

  double integral = 0.0;
  for (int x = 0; x < sp.n(); ++x) {
    double inner = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const FamilyCube& fc = fam[i];
      if (fc.scaling) continue;
      const auto& pts = tree.cube(fc.cube).points;
      if (std::find(pts.begin(), pts.end(), x) == pts.end()) continue;
      const double v = std::pow(tree.delta(), -fc.scale * prm.s) *
                       std::abs(lambda.values[static_cast<Eigen::Index>(i)]) /
                       std::sqrt(fc.mass);
      if (std::isinf(q))
        inner = std::max(inner, v);
      else
        inner += std::pow(v, q);
    }
    if (!std::isinf(q)) inner = std::pow(inner, 1.0 / q);
    integral += std::pow(inner, p) * sp.weight(x);
  }
  return head + std::pow(integral, 1.0 / p);
}

CheckResult check_dyadic(const std::vector<const Workbench*>& spaces) {
  CheckResult r{1, "dyadic validity", true, Json::object()};
  Json rows = Json::array();
  for (const Workbench* wb : spaces) {
    const DyadicCheck chk = verify_dyadic(*wb->tree);
    const SandwichReport& sw = wb->tree->sandwich();
    const bool constants = wb->space->a0() != 1.0 ||
                           (sw.c_natural == 1.0 / 3.0 && sw.C_natural == 2.0);
    Json j = space_summary(*wb);
    j["separation"] = chk.separation;
    j["covering"] = chk.covering;
    j["nesting"] = chk.nesting;
    j["partition"] = chk.partition;
    j["monotone"] = chk.monotone;
    j["sandwich"] = chk.sandwich;
    j["c_natural"] = num(sw.c_natural);
    j["C_natural"] = num(sw.C_natural);
    j["inner"] = num(sw.inner);
    j["outer"] = num(sw.outer);
    rows.push_back(std::move(j));
    r.pass = r.pass && chk.all() && constants;
  }
  r.detail["spaces"] = std::move(rows);
  return r;
}

CheckResult check_haar(const Workbench& wb, int functions, std::uint64_t seed) {
  const QuasiMetricSpace& sp = *wb.space;
  const DyadicTree& tree = *wb.tree;
  const WaveletBasis& basis = *wb.basis;
  const AtiKernels& K = wb.kernels;
  const int n = sp.n();
  CheckResult r{2, "haar exactness", false, space_summary(wb)};

  std::vector<const Matrix*> blocks{&basis.phi(tree.k_min())};
  for (int k = tree.k_min(); k < tree.k_max(); ++k) blocks.push_back(&basis.psi(k));
  Eigen::Index cols = 0;
  for (const Matrix* b : blocks) cols += b->cols();
  Matrix B(n, cols);
  cols = 0;
  for (const Matrix* b : blocks) {
    B.middleCols(cols, b->cols()) = *b;
    cols += b->cols();
  }
  const Matrix gram = B.transpose() * sp.weights().asDiagonal() * B;
  const double gram_dev =
      (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();

  double cancel = 0.0;
  for (int k = tree.k_min(); k < tree.k_max(); ++k)
    for (Eigen::Index c = 0; c < basis.psi(k).cols(); ++c)
      cancel = std::max(cancel, std::abs(sp.integral(basis.psi(k).col(c))));

  double telescope = 0.0;
  for (int k = tree.k_min() + 1; k <= tree.k_max(); ++k)
    telescope = std::max(
        telescope, (K.Pk(k) - K.Pk(k - 1) - K.Dk(k - 1)).cwiseAbs().maxCoeff());

  double conservation = 0.0;
  for (int k = tree.k_min(); k <= tree.k_max(); ++k)
    conservation = std::max(
        conservation,
        (K.Pk(k) * sp.weights() - Vector::Ones(n)).cwiseAbs().maxCoeff());

  double plancherel = 0.0;
  for (int t = 0; t < functions; ++t) {
    const Vector f = random_function(n, seed, static_cast<std::uint64_t>(t));
    double parts = std::pow(sp.lp_norm(apply_kernel(K.Pk(tree.k_min()), sp, f), 2.0), 2);
    for (int k = tree.k_min(); k < tree.k_max(); ++k)
      parts += std::pow(sp.lp_norm(apply_kernel(K.Dk(k), sp, f), 2.0), 2);
    plancherel = std::max(plancherel, rel_err(parts, std::pow(sp.lp_norm(f, 2.0), 2)));
  }

  r.detail["gram_deviation"] = num(gram_dev);
  r.detail["cancellation"] = num(cancel);
  r.detail["telescoping"] = num(telescope);
  r.detail["conservation"] = num(conservation);
  r.detail["plancherel_rel"] = num(plancherel);
  r.detail["functions"] = functions;
  r.pass = gram_dev <= 1e-10 && cancel <= 1e-12 && telescope <= 1e-10 &&
           conservation <= 1e-10 && plancherel <= 1e-9;
  return r;
}

CheckResult check_norm_identity(const Workbench& wb, int functions,
                                std::uint64_t seed) {
  const QuasiMetricSpace& sp = *wb.space;
  CheckResult r{3, "norm identification", false, space_summary(wb)};
  SpaceParams prm = base_params(wb);
  prm.s = 0.0;
  prm.p = prm.q = 2.0;
  double worst = 0.0;
  for (int t = 0; t < functions; ++t) {
    const Vector f = random_function(sp.n(), seed, static_cast<std::uint64_t>(t));
    const Vector detail = f - apply_kernel(wb.kernels.Pk(wb.tree->k_min()), sp, f);
    const double target = sp.lp_norm(detail, 2.0);
    for (SpaceKind kind : {SpaceKind::besov, SpaceKind::triebel_lizorkin}) {
      prm.kind = kind;
      worst = std::max(worst, rel_err(wavelet_function_norm(*wb.basis, f, prm), target));
    }
  }
  r.detail["functions"] = functions;
  r.detail["max_rel_error"] = num(worst);
  r.pass = worst <= 1e-9;
  return r;
}

CheckResult check_sequence_norms(int sequences, std::uint64_t seed,
                                 const SeqOracle& oracle) {
  CheckResult r{4, "sequence-norm oracle", false, Json::object()};
  const TreePtr tree = build_dyadic(builtin_line(16, 1.0 / 16.0), 0.125);
  struct Tuple {
    double s, p, q;
    SpaceKind kind;
  };
  const std::vector<Tuple> tuples{
      {0.0, 2.0, 2.0, SpaceKind::besov},
      {0.0, 2.0, 2.0, SpaceKind::triebel_lizorkin},
      {0.25, 1.0, 2.0, SpaceKind::besov},
      {-0.25, 1.0, 2.0, SpaceKind::triebel_lizorkin},
      {0.5, 0.5, 1.0, SpaceKind::besov},
      {-0.5, 2.0 / 3.0, 1.0, SpaceKind::triebel_lizorkin},
      {0.25, kInf, 2.0, SpaceKind::besov},
      {0.0, kInf, kInf, SpaceKind::besov},
      {-0.25, 2.0, kInf, SpaceKind::besov},
      {0.25, 3.0, kInf, SpaceKind::triebel_lizorkin},
      {0.0, 4.0, 0.5, SpaceKind::triebel_lizorkin},
      {0.75, 1.5, kInf, SpaceKind::besov},
  };
  double worst = 0.0;
  int compared = 0;
  for (Homogeneity h : {Homogeneity::homogeneous, Homogeneity::inhomogeneous}) {
    const FamilyPtr fam = make_family(tree, h);
    for (int t = 0; t < sequences; ++t) {
      Rng rng = trial_rng(seed, static_cast<std::uint64_t>(t));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      CoefficientSequence lam(fam);
      for (Eigen::Index i = 0; i < lam.values.size(); ++i)
        if (unit(rng) < 0.3) lam.values[i] = gauss(rng);
      lam.values[static_cast<Eigen::Index>(unit(rng) * static_cast<double>(lam.values.size()))] = 1.0;
      for (const Tuple& tp : tuples) {
        SpaceParams prm;
        prm.s = tp.s;
        prm.p = tp.p;
        prm.q = tp.q;
        prm.kind = tp.kind;
        prm.homogeneity = h;
        worst = std::max(worst, rel_err(seq_norm(lam, prm), oracle(lam, prm)));
        ++compared;
      }
    }
  }
  r.detail["tuples"] = static_cast<int>(tuples.size());
  r.detail["comparisons"] = compared;
  r.detail["max_rel_error"] = num(worst);
  r.pass = worst <= 1e-12;
  return r;
}

CheckResult check_almost_diagonal(const Workbench& wb, int trials,
                                  std::uint64_t seed) {
  CheckResult r{5, "almost-diagonal boundedness", true, space_summary(wb)};
  const FamilyPtr fam = make_family(wb.tree, Homogeneity::homogeneous);
  Json rows = Json::array();
  std::uint64_t stream = 0;
  for (double s : {-0.25, 0.0, 0.25})
    for (auto [p, q] : {std::pair{2.0, 2.0}, {1.0, 2.0}, {2.0 / 3.0, 1.0}})
      for (SpaceKind kind : {SpaceKind::besov, SpaceKind::triebel_lizorkin}) {
        SpaceParams prm = base_params(wb);
        prm.s = s;
        prm.p = p;
        prm.q = q;
        prm.kind = kind;
        ++stream;
        if (!validate_params(prm, ValidityScope::sequence).empty()) continue;
        const CertifyReport rep =
            certify_boundedness(fam, prm, trials, 0.3, mix_seed(seed + stream));
        Json j;
        j["s"] = s;
        j["p"] = p;
        j["q"] = q;
        j["kind"] = kind == SpaceKind::besov ? "besov" : "triebel_lizorkin";
        j["sup_T"] = num(rep.sup_T);
        j["sup_2T"] = num(rep.sup_2T);
        j["sup_4T"] = num(rep.sup_4T);
        j["sup_A0"] = num(rep.sup_A0);
        j["sup_A1"] = num(rep.sup_A1);
        j["identity_K"] = num(rep.identity_K);
        j["identity_ratio"] = num(rep.identity_ratio);
        j["identity_exact"] = rep.identity_exact;
        j["finite"] = rep.finite;
        j["stable"] = rep.stable;
        j["pass"] = rep.pass;
        rows.push_back(std::move(j));
        r.pass = r.pass && rep.pass;
      }
  r.detail["trials"] = trials;
  r.detail["configurations"] = std::move(rows);
  return r;
}

CheckResult check_synthesis(const Workbench& wb, int trials, std::uint64_t seed) {
  CheckResult r{6, "molecular synthesis", false, space_summary(wb)};
  const FamilyPtr fam = make_family(wb.tree, Homogeneity::homogeneous);
  SpaceParams prm = base_params(wb);
  prm.s = 0.0;
  prm.p = prm.q = 2.0;
  const double beta = prm.beta;
  const double Gamma = prm.gamma;
  const auto canonical = canonical_molecules(*fam, beta, Gamma);
  bool verified = true;
  for (const Molecule& m : canonical) verified = verified && m.constant <= 1.0;

  auto random_lambda = [&](std::uint64_t s, int t) {
    Rng rng = trial_rng(s, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> gauss(0.0, 1.0);
    CoefficientSequence lam(fam);
    for (Eigen::Index i = 0; i < lam.values.size(); ++i) lam.values[i] = gauss(rng);
    return lam;
  };
  auto max_ratio = [&](std::uint64_t s) {
    double m = 0.0;
    for (int t = 0; t < trials; ++t)
      m = std::max(m, molecular_synthesis(*wb.basis, random_lambda(s, t), canonical, prm).ratio);
    return m;
  };
  const double m1 = max_ratio(seed);
  const double m2 = max_ratio(mix_seed(seed + 1));
  const bool stable = std::isfinite(m1) && std::isfinite(m2) && m1 > 0.0 &&
                      std::abs(m2 / m1 - 1.0) < 0.25;

  const auto wavelets = basis_molecules(*wb.basis, *fam, beta, Gamma);
  double exact_dev = 0.0;
  for (SpaceKind kind : {SpaceKind::besov, SpaceKind::triebel_lizorkin})
    for (int t = 0; t < std::min(trials, 20); ++t) {
      prm.kind = kind;
      const double ratio =
          molecular_synthesis(*wb.basis, random_lambda(seed, t), wavelets, prm).ratio;
      exact_dev = std::max(exact_dev, std::abs(ratio - 1.0));
    }

  r.detail["trials"] = trials;
  r.detail["canonical_verified"] = verified;
  r.detail["max_ratio_seed_a"] = num(m1);
  r.detail["max_ratio_seed_b"] = num(m2);
  r.detail["seed_stable"] = stable;
  r.detail["wavelet_ratio_deviation"] = num(exact_dev);
  r.pass = verified && stable && exact_dev <= 1e-12;
  return r;
}

CheckResult check_gram(const std::vector<const Workbench*>& spaces) {
  CheckResult r{7, "gram decay", true, Json::object()};
  Json rows = Json::array();
  for (const Workbench* wb : spaces) {
    const FamilyPtr fam = make_family(wb->tree, Homogeneity::homogeneous);
    SpaceParams prm = base_params(*wb);
    prm.s = 0.0;
    prm.p = prm.q = 2.0;
    const auto mols = canonical_molecules(*fam, prm.beta, prm.gamma);
    const CubeOperator gram = molecule_wavelet_gram(*wb->basis, fam, mols);
    const double upper = gram_eps_upper(prm);
    Json j = space_summary(*wb);
    j["eps_upper"] = num(upper);
    Json ks = Json::array();
    bool ok = upper > 0.0;
    for (double frac : {0.25, 0.5, 0.75}) {
      prm.eps_ad = frac * upper;
      const double K = ado_constant(gram, prm);
      ks.push_back({{"eps", num(prm.eps_ad)}, {"K", num(K)}});
      ok = ok && std::isfinite(K) && K > 0.0;
    }
    j["K"] = std::move(ks);
    std::vector<double> exps;
    for (std::size_t q = 0; q < fam->size(); ++q)
      if ((*fam)[q].level == wb->tree->k_min() + 1) {
        const double e = chain_decay_exponent(gram, static_cast<int>(q));
        if (!std::isnan(e)) exps.push_back(e);
      }
    j["chain_exponents"] = Json::array();
    for (double e : exps) j["chain_exponents"].push_back(num(e));
    j["pass"] = ok;
    r.pass = r.pass && ok;
    rows.push_back(std::move(j));
  }
  r.detail["spaces"] = std::move(rows);
  return r;
}

CheckResult check_equivalence(const Workbench& wb, int ensemble,
                              std::uint64_t seed) {
  CheckResult r{8, "square-function equivalences", true, space_summary(wb)};
  Json rows = Json::array();
  for (Homogeneity h : {Homogeneity::homogeneous, Homogeneity::inhomogeneous})
    for (auto [s, q] : {std::pair{0.0, 2.0}, {0.25, 4.0 / 3.0}}) {
      SpaceParams prm = base_params(wb);
      prm.kind = SpaceKind::triebel_lizorkin;
      prm.homogeneity = h;
      prm.s = s;
      prm.p = 2.0;
      prm.q = q;
      const LpReport rep = equivalence_report(*wb.basis, wb.kernels, prm, ensemble, seed);
      Json j;
      j["homogeneity"] = h == Homogeneity::homogeneous ? "homogeneous" : "inhomogeneous";
      j["s"] = s;
      j["p"] = 2.0;
      j["q"] = q;
      j["lambda_in_window"] = rep.lambda_in_window;
      for (const RatioBand& b : rep.bands)
        j["bands"].push_back({{"name", b.name},
                              {"min", num(b.min)},
                              {"max", num(b.max)},
                              {"C", num(b.C)},
                              {"C_half", num(b.C_half)},
                              {"stable", b.stable}});
      j["g_matches_kernel_norm"] = rep.g_matches_kernel_norm;
      j["pass"] = rep.pass;
      rows.push_back(std::move(j));
      r.pass = r.pass && rep.pass;
    }
  r.detail["ensemble"] = ensemble;
  r.detail["configurations"] = std::move(rows);
  return r;
}

CheckResult check_angle(const std::vector<const Workbench*>& spaces,
                        int ensemble, std::uint64_t seed) {
  CheckResult r{9, "change of angle", true, Json::object()};
  Json rows = Json::array();
  for (const Workbench* wb : spaces) {
    SpaceParams prm = base_params(*wb);
    prm.kind = SpaceKind::triebel_lizorkin;
    prm.p = 2.0;
    prm.q = 1.0;
    const AngleFit fit =
        change_of_angle_fit(*wb->basis, wb->kernels, prm, {1.0, 2.0, 4.0, 8.0}, ensemble, seed);
    Json j = space_summary(*wb);
    j["max_slope"] = num(fit.max_slope);
    j["bound"] = num(fit.bound);
    j["fitted"] = static_cast<int>(fit.slopes.size());
    j["pass"] = fit.pass;
    rows.push_back(std::move(j));
    r.pass = r.pass && fit.pass;
  }
  r.detail["ensemble"] = ensemble;
  r.detail["spaces"] = std::move(rows);
  return r;
}

}  // namespace homtype
