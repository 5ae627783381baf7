#include "homtype/lp_functionals.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace homtype {

DetailStack detail_stack(const AtiKernels& kernels, const Vector& f,
                         Homogeneity kind) {
  const QuasiMetricSpace& sp = kernels.basis->tree().space();
  if (f.size() != sp.n())
    throw ValidationError("function length does not match space size");
  DetailStack st;
  if (kind == Homogeneity::homogeneous) {
    for (int k = kernels.k_min; k < kernels.k_max; ++k) {
      st.scales.push_back(k);
      st.values.push_back(apply_kernel(kernels.Dk(k), sp, f));
    }
  } else {
    for (int k = 0; k <= std::max(0, kernels.k_max); ++k) {
      st.scales.push_back(k);
      st.values.push_back(apply_kernel(kernels.Qk_inhom(k), sp, f));
    }
  }
  return st;
}

int cutoff_level(const DyadicTree& tree, const SpaceParams& params) {
  if (params.n_cutoff >= 0) return params.n_cutoff;
  return std::max(0, std::min(tree.k_min() + 2, tree.k_max()));
}

namespace {

void require_finite_q(const SpaceParams& prm, const char* what) {
  if (std::isinf(prm.q))
    throw ValidationError(fmt::format("q = inf is not supported for {}", what));
  if (!(prm.q > 0.0)) throw ValidationError("q must be positive");
}

double weight(const DyadicTree& tree, int k, double s) {
  return std::pow(tree.delta(), -k * s);
}

/// mu-weighted mean of v over the level-`level` cube containing each point.
Vector cube_means(const DyadicTree& tree, int level, const Vector& v) {
  const QuasiMetricSpace& sp = tree.space();
  Vector out(sp.n());
  for (int ci : tree.level_cubes(level)) {
    const Cube& c = tree.cube(ci);
    CompensatedSum acc;
    for (int x : c.points) acc += v[x] * sp.weight(x);
    const double mean = acc.value() / c.mass;
    for (int x : c.points) out[x] = mean;
  }
  return out;
}

/// Shared by g_function and the homogeneous Triebel-Lizorkin kernel norm.
Vector g_values(const AtiKernels& kernels, const DetailStack& st,
                const SpaceParams& prm) {
  const DyadicTree& tree = kernels.basis->tree();
  const int n = tree.space().n();
  const bool inhom = prm.homogeneity == Homogeneity::inhomogeneous;
  if (inhom) require_finite_q(prm, "the inhomogeneous g-function");
  if (!(prm.q > 0.0)) throw ValidationError("q must be positive");
  const int N = inhom ? cutoff_level(tree, prm) : 0;
  Vector acc = Vector::Zero(n);
  for (std::size_t b = 0; b < st.scales.size(); ++b) {
    const int k = st.scales[b];
    const Vector& qf = st.values[b];
    if (inhom && k <= N) {
      const Vector vq = qf.cwiseAbs().array().pow(prm.q);
      acc += cube_means(tree, k + prm.j0, vq);
      continue;
    }
    const double w = weight(tree, k, prm.s);
    if (std::isinf(prm.q)) {
      acc = acc.cwiseMax(w * qf.cwiseAbs());
    } else {
      acc += (w * qf.cwiseAbs()).array().pow(prm.q).matrix();
    }
  }
  if (std::isinf(prm.q)) return acc;
  return acc.array().pow(1.0 / prm.q);
}

/// {sum_{k<=N} sum_cubes mu(C) [m_C(|Q_k f|)]^p}^{1/p}, or the sup at p = inf.
double inhomogeneous_low_block(const DyadicTree& tree, const DetailStack& st,
                               const SpaceParams& prm, int N) {
  const QuasiMetricSpace& sp = tree.space();
  CompensatedSum acc;
  double sup = 0.0;
  for (std::size_t b = 0; b < st.scales.size(); ++b) {
    const int k = st.scales[b];
    if (k > N) continue;
    const Vector abs_qf = st.values[b].cwiseAbs();
    for (int ci : tree.level_cubes(k + prm.j0)) {
      const Cube& c = tree.cube(ci);
      CompensatedSum m;
      for (int x : c.points) m += abs_qf[x] * sp.weight(x);
      const double mean = m.value() / c.mass;
      if (std::isinf(prm.p))
        sup = std::max(sup, mean);
      else if (mean > 0.0)
        acc += c.mass * std::pow(mean, prm.p);
    }
  }
  if (std::isinf(prm.p)) return sup;
  const double t = acc.value();
  return t > 0.0 ? std::pow(t, 1.0 / prm.p) : 0.0;
}

template <typename Term>
Vector area_like(const AtiKernels& kernels, const Vector& f,
                 const SpaceParams& prm, const char* what, Term term) {
  require_finite_q(prm, what);
  const DyadicTree& tree = kernels.basis->tree();
  const QuasiMetricSpace& sp = tree.space();
  const int n = sp.n();
  const DetailStack st = detail_stack(kernels, f, prm.homogeneity);
  std::vector<Vector> vq;
  std::vector<Vector> vol;
  for (std::size_t b = 0; b < st.scales.size(); ++b) {
    vq.push_back(st.values[b].cwiseAbs().array().pow(prm.q));
    const double r = std::pow(tree.delta(), st.scales[b]);
    Vector v(n);
    for (int x = 0; x < n; ++x) v[x] = sp.ball_measure(x, r);
    vol.push_back(std::move(v));
  }
  Vector out(n);
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t xi) {
    const int x = static_cast<int>(xi);
    double total = 0.0;
    for (std::size_t b = 0; b < st.scales.size(); ++b) {
      const int k = st.scales[b];
      const double r = std::pow(tree.delta(), k);
      const double w = std::pow(weight(tree, k, prm.s), prm.q);
      total += w * term(x, r, vq[b], vol[b]);
    }
    out[x] = std::pow(total, 1.0 / prm.q);
  });
  return out;
}

}  // namespace

Vector g_function(const AtiKernels& kernels, const Vector& f,
                  const SpaceParams& params) {
  return g_values(kernels, detail_stack(kernels, f, params.homogeneity), params);
}

Vector lusin_area(const AtiKernels& kernels, const Vector& f,
                  const SpaceParams& params) {
  const QuasiMetricSpace& sp = kernels.basis->tree().space();
  return area_like(kernels, f, params, "the area function",
                   [&](int x, double r, const Vector& vq, const Vector& vol) {
                     const auto& ord = sp.order_from(x);
                     const auto& sd = sp.sorted_distances(x);
                     double s = 0.0;
                     for (std::size_t t = 0; t < ord.size() && sd[t] < r; ++t)
                       s += vq[ord[t]] * sp.weight(ord[t]);
                     return s / vol[x];
                   });
}

Vector lusin_area_aperture(const AtiKernels& kernels, const Vector& f,
                           const SpaceParams& params, double theta) {
  if (!(theta >= 1.0)) throw ValidationError("aperture theta must be >= 1");
  const QuasiMetricSpace& sp = kernels.basis->tree().space();
  return area_like(kernels, f, params, "the area function",
                   [&](int x, double r, const Vector& vq, const Vector& vol) {
                     const auto& ord = sp.order_from(x);
                     const auto& sd = sp.sorted_distances(x);
                     const double reach = theta * r;
                     double s = 0.0;
                     for (std::size_t t = 0; t < ord.size() && sd[t] < reach; ++t)
                       s += vq[ord[t]] * sp.weight(ord[t]) / vol[ord[t]];
                     return s;
                   });
}

Vector g_lambda_star(const AtiKernels& kernels, const Vector& f,
                     const SpaceParams& params) {
  if (!(params.lambda_ap > 0.0)) throw ValidationError("lambda must be positive");
  const QuasiMetricSpace& sp = kernels.basis->tree().space();
  const int n = sp.n();
  return area_like(kernels, f, params, "g*_lambda",
                   [&](int x, double r, const Vector& vq, const Vector& vol) {
                     double s = 0.0;
                     for (int y = 0; y < n; ++y) {
                       if (vq[y] == 0.0) continue;
                       const double decay =
                           std::pow(r / (r + sp.dist(x, y)), params.lambda_ap);
                       s += vq[y] * decay * sp.weight(y) / (vol[x] + vol[y]);
                     }
                     return s;
                   });
}

double kernel_function_norm(const AtiKernels& kernels, const Vector& f,
                            const SpaceParams& prm) {
  const DyadicTree& tree = kernels.basis->tree();
  const QuasiMetricSpace& sp = tree.space();
  const DetailStack st = detail_stack(kernels, f, prm.homogeneity);
  const bool inhom = prm.homogeneity == Homogeneity::inhomogeneous;
  const int N = inhom ? cutoff_level(tree, prm) : 0;

  if (prm.kind == SpaceKind::triebel_lizorkin) {
    if (std::isinf(prm.p))
      throw ValidationError("p = inf is not defined for Triebel-Lizorkin norms");
    if (!inhom) return sp.lp_norm(g_values(kernels, st, prm), prm.p);
    Vector acc = Vector::Zero(sp.n());
    for (std::size_t b = 0; b < st.scales.size(); ++b) {
      const int k = st.scales[b];
      if (k <= N) continue;
      const Vector v = weight(tree, k, prm.s) * st.values[b].cwiseAbs();
      if (std::isinf(prm.q))
        acc = acc.cwiseMax(v);
      else
        acc += v.array().pow(prm.q).matrix();
    }
    if (!std::isinf(prm.q)) acc = acc.array().pow(1.0 / prm.q);
    return inhomogeneous_low_block(tree, st, prm, N) + sp.lp_norm(acc, prm.p);
  }

  CompensatedSum outer;
  double sup = 0.0;
  for (std::size_t b = 0; b < st.scales.size(); ++b) {
    const int k = st.scales[b];
    if (inhom && k <= N) continue;
    const double v = weight(tree, k, prm.s) * sp.lp_norm(st.values[b], prm.p);
    if (v == 0.0) continue;
    if (std::isinf(prm.q))
      sup = std::max(sup, v);
    else
      outer += std::pow(v, prm.q);
  }
  double high = sup;
  if (!std::isinf(prm.q)) {
    const double t = outer.value();
    high = t > 0.0 ? std::pow(t, 1.0 / prm.q) : 0.0;
  }
  return inhom ? inhomogeneous_low_block(tree, st, prm, N) + high : high;
}

std::vector<Vector> make_ensemble(const WaveletBasis& basis,
                                  const AtiKernels& kernels, int count,
                                  std::uint64_t seed) {
  const DyadicTree& tree = basis.tree();
  const QuasiMetricSpace& sp = tree.space();
  const int n = sp.n();
  const FamilyPtr fam = make_family(basis.tree_ptr(), Homogeneity::homogeneous);
  const Matrix B = family_basis(basis, *fam);
  const auto m = B.cols();
  std::vector<Vector> out(static_cast<std::size_t>(std::max(count, 0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng rng = trial_rng(seed, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto family = static_cast<EnsembleFamily>(i % 3);
    Vector f = Vector::Zero(n);
    switch (family) {
      case EnsembleFamily::sparse_wavelet: {
        Vector lam = Vector::Zero(m);
        for (Eigen::Index j = 0; j < m; ++j)
          if (unit(rng) < 0.15) lam[j] = gauss(rng);
        if (m > 0) lam[static_cast<Eigen::Index>(unit(rng) * static_cast<double>(m)) % m] += 1.0;
        f = B * lam;
        break;
      }
      case EnsembleFamily::smoothed_delta: {
        const int bumps = 1 + static_cast<int>(unit(rng) * 3.0);
        for (int b = 0; b < bumps; ++b) {
          const int k = tree.k_min() + 1 +
                        static_cast<int>(unit(rng) * (tree.k_max() - tree.k_min()));
          const int x = static_cast<int>(unit(rng) * n) % n;
          const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
          f += sign * kernels.Pk(k).col(x) * sp.weight(x);
        }
        break;
      }
      case EnsembleFamily::dense_sign: {
        Vector lam(m);
        for (Eigen::Index j = 0; j < m; ++j) lam[j] = unit(rng) < 0.5 ? -1.0 : 1.0;
        f = B * lam;
        break;
      }
    }
    out[i] = std::move(f);
  }
  return out;
}

namespace {

RatioBand make_band(std::string name, const std::vector<double>& ratios) {
  RatioBand band;
  band.name = std::move(name);
  if (ratios.empty()) {
    band.stable = true;
    return band;
  }
  auto spread = [](double r) { return r > 0.0 ? std::max(r, 1.0 / r) : kInf; };
  band.min = *std::min_element(ratios.begin(), ratios.end());
  band.max = *std::max_element(ratios.begin(), ratios.end());
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  band.median = sorted[sorted.size() / 2];
  const std::size_t half = std::max<std::size_t>(1, ratios.size() / 2);
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    band.C = std::max(band.C, spread(ratios[i]));
    if (i < half) band.C_half = std::max(band.C_half, spread(ratios[i]));
  }
  band.stable = std::isfinite(band.C) && band.C < 1.25 * band.C_half;
  return band;
}

}  // namespace

LpReport equivalence_report(const WaveletBasis& basis,
                            const AtiKernels& kernels, const SpaceParams& params,
                            int ensemble, std::uint64_t seed) {
  if (params.kind != SpaceKind::triebel_lizorkin)
    throw ValidationError("equivalence report needs Triebel-Lizorkin parameters");
  require_valid(params, ValidityScope::function);
  const QuasiMetricSpace& sp = basis.tree().space();
  LpReport rep;
  rep.params = params;
  rep.lambda_threshold =
      std::max(params.omega0, params.q * params.omega0 / params.p);
  rep.lambda_in_window = params.lambda_ap > rep.lambda_threshold;

  const std::vector<Vector> fs = make_ensemble(basis, kernels, ensemble, seed);
  rep.norms.resize(fs.size());
  std::vector<char> g_ok(fs.size(), 1);
  parallel_for(0, fs.size(), [&](std::size_t i) {
    FunctionNorms& fn = rep.norms[i];
    fn.wavelet = wavelet_function_norm(basis, fs[i], params);
    fn.g = sp.lp_norm(g_function(kernels, fs[i], params), params.p);
    fn.area = sp.lp_norm(lusin_area(kernels, fs[i], params), params.p);
    fn.g_star = sp.lp_norm(g_lambda_star(kernels, fs[i], params), params.p);
    if (params.homogeneity == Homogeneity::homogeneous)
      g_ok[i] = fn.g == kernel_function_norm(kernels, fs[i], params);
  });

  std::vector<double> r_area, r_star, r_g;
  for (const FunctionNorms& fn : rep.norms) {
    if (fn.wavelet == 0.0 && fn.area == 0.0 && fn.g_star == 0.0) continue;
    const double w = fn.wavelet;
    r_area.push_back(w > 0.0 ? fn.area / w : kInf);
    r_star.push_back(w > 0.0 ? fn.g_star / w : kInf);
    r_g.push_back(w > 0.0 ? fn.g / w : kInf);
  }
  rep.bands.push_back(make_band("area/wavelet", r_area));
  rep.bands.push_back(make_band("g_star/wavelet", r_star));
  rep.bands.push_back(make_band("g/wavelet", r_g));
  rep.g_matches_kernel_norm =
      std::all_of(g_ok.begin(), g_ok.end(), [](char c) { return c != 0; });
  rep.pass = rep.g_matches_kernel_norm &&
             std::all_of(rep.bands.begin(), rep.bands.end(),
                         [](const RatioBand& b) { return b.stable; });
  return rep;
}

AngleFit change_of_angle_fit(const WaveletBasis& basis,
                             const AtiKernels& kernels,
                             const SpaceParams& params,
                             const std::vector<double>& thetas, int ensemble,
                             std::uint64_t seed) {
  if (thetas.size() < 3)
    throw ValidationError("change-of-angle fit needs at least three apertures");
  for (double t : thetas)
    if (!(t >= 1.0)) throw ValidationError("apertures must be >= 1");
  if (!(params.q < params.p))
    throw ValidationError(fmt::format(
        "change-of-angle fit needs q < p (got p = {}, q = {})", params.p,
        params.q));
  require_finite_q(params, "the area function");
  const QuasiMetricSpace& sp = basis.tree().space();
  AngleFit fit;
  fit.thetas = thetas;
  fit.bound = params.omega / params.p + 0.2;
  const std::vector<Vector> fs = make_ensemble(basis, kernels, ensemble, seed);
  std::vector<double> slopes(fs.size(), std::nan(""));
  std::vector<double> lx;
  for (double t : thetas) lx.push_back(std::log(t));
  parallel_for(0, fs.size(), [&](std::size_t i) {
    std::vector<double> ly;
    for (double t : thetas) {
      const double v =
          sp.lp_norm(lusin_area_aperture(kernels, fs[i], params, t), params.p);
      if (!(v > 0.0)) return;
      ly.push_back(std::log(v));
    }
    slopes[i] = least_squares(lx, ly).slope;
  });
  for (double s : slopes)
    if (!std::isnan(s)) fit.slopes.push_back(s);
  fit.max_slope = fit.slopes.empty()
                      ? 0.0
                      : *std::max_element(fit.slopes.begin(), fit.slopes.end());
  fit.pass = fit.max_slope <= fit.bound;
  return fit;
}

}  // namespace homtype
