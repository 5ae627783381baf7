#include "homtype/wavelets.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace homtype {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kPairBudget = 4e7;

Vector indicator(const Cube& c, int n) {
  Vector v = Vector::Zero(n);
  for (int x : c.points) v[x] = 1.0;
  return v;
}

/// Columns of G orthonormalized symmetrically: G (G^T M G)^{-1/2}.
Matrix lowdin(const Matrix& G, const Vector& mu, const std::string& what) {
  const Matrix gram = G.transpose() * mu.asDiagonal() * G;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw NumericalError(fmt::format(
        "{}: Gram matrix is numerically singular (condition {:.3g}); use a "
        "larger nu or the haar backend",
        what, lo > 0.0 ? hi / lo : kInf));
  const Matrix inv_sqrt = eig.eigenvectors() *
                          ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  return G * inv_sqrt;
}

void fix_signs(Matrix& cols, const std::vector<int>& centers) {
  for (Eigen::Index j = 0; j < cols.cols(); ++j)
    if (cols(centers[static_cast<std::size_t>(j)], j) < 0.0) cols.col(j) *= -1.0;
}

void index_wavelets(const DyadicTree& tree,
                    std::vector<std::pair<int, int>>& slots) {
  int col = 0;
  int last_k = tree.k_min() - 1;
  for (const auto& w : tree.wavelet_cubes()) {
    if (w.k != last_k) {
      col = 0;
      last_k = w.k;
    }
    slots.emplace_back(w.k, col++);
  }
}

}  // namespace

const Matrix& WaveletBasis::phi(int k) const {
  return phi_[static_cast<std::size_t>(tree_->net().clamp(k) - tree_->k_min())];
}

const Matrix& WaveletBasis::psi(int k) const {
  if (k < tree_->k_min() || k >= tree_->k_max()) return empty_;
  return psi_[static_cast<std::size_t>(k - tree_->k_min())];
}

Vector WaveletBasis::wavelet(int i) const {
  const auto [k, col] = wavelet_slot_[static_cast<std::size_t>(i)];
  return psi(k).col(col);
}

BasisPtr build_haar(TreePtr tree) {
  auto basis = std::shared_ptr<WaveletBasis>(new WaveletBasis());
  const DyadicTree& t = *tree;
  const QuasiMetricSpace& sp = t.space();
  const int n = sp.n();

  for (int k = t.k_min(); k <= t.k_max(); ++k) {
    const auto& a = t.net().A(k);
    Matrix phi = Matrix::Zero(n, static_cast<Eigen::Index>(a.size()));
    for (std::size_t j = 0; j < a.size(); ++j) {
      const Cube& c = t.cube(t.find_cube(k, a[j]));
      const double v = 1.0 / std::sqrt(c.mass);
      for (int x : c.points) phi(x, static_cast<Eigen::Index>(j)) = v;
    }
    basis->phi_.push_back(std::move(phi));
  }

  for (int k = t.k_min(); k < t.k_max(); ++k) {
    const std::vector<int> g = t.net().G(k);
    Matrix psi = Matrix::Zero(n, static_cast<Eigen::Index>(g.size()));
    for (int pi : t.level_cubes(k)) {
      const Cube& parent = t.cube(pi);
      std::vector<int> fresh;
      for (int ch : parent.children)
        if (t.cube(ch).center != parent.center) fresh.push_back(ch);
      std::sort(fresh.begin(), fresh.end(), [&](int a, int b) {
        return t.cube(a).center < t.cube(b).center;
      });
      std::vector<Vector> done{indicator(parent, n) / std::sqrt(parent.mass)};
      for (int ch : fresh) {
        const Cube& child = t.cube(ch);
        Vector v = indicator(child, n);
        for (int pass = 0; pass < 2; ++pass)
          for (const Vector& e : done) v -= sp.inner(v, e) * e;
        v /= std::sqrt(sp.inner(v, v));
        if (v[child.center] < 0.0) v = -v;
        const auto col =
            std::lower_bound(g.begin(), g.end(), child.center) - g.begin();
        psi.col(col) = v;
        done.push_back(std::move(v));
      }
    }
    basis->psi_.push_back(std::move(psi));
  }

  basis->backend_ = Backend::haar;
  index_wavelets(t, basis->wavelet_slot_);
  basis->tree_ = std::move(tree);
  return basis;
}

BasisPtr build_smoothed(TreePtr tree, double nu, double a) {
  if (!(nu > 0.0)) throw ValidationError("nu must be positive");
  if (!(a > 0.0 && a <= 1.0)) throw ValidationError("a must lie in (0, 1]");
  auto basis = std::shared_ptr<WaveletBasis>(new WaveletBasis());
  const DyadicTree& t = *tree;
  const QuasiMetricSpace& sp = t.space();
  const int n = sp.n();
  const Vector& mu = sp.weights();
  const int root = t.net().A(t.k_min()).front();

  // generator of each point: the constant for the root, otherwise the
  // smoothed indicator of the cube where it first appears
  Matrix generator(n, n);
  generator.col(root).setOnes();

  Matrix B = Vector::Constant(n, 1.0 / std::sqrt(sp.total_mass()));
  for (int k = t.k_min(); k < t.k_max(); ++k) {
    const int j = k + 1;
    const double scale = std::pow(t.delta(), j);
    Matrix W(n, n);
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y)
        W(x, y) = std::exp(-nu * std::pow(sp.dist(x, y) / scale, a)) * mu[y];
      W.row(x) /= W.row(x).sum();
    }
    const std::vector<int> g = t.net().G(k);
    Matrix gens(n, static_cast<Eigen::Index>(g.size()));
    for (std::size_t c = 0; c < g.size(); ++c) {
      gens.col(static_cast<Eigen::Index>(c)) =
          W * indicator(t.cube(t.find_cube(j, g[c])), n);
      generator.col(g[c]) = gens.col(static_cast<Eigen::Index>(c));
    }
    Matrix R = gens;
    for (int pass = 0; pass < 2; ++pass)
      R -= B * (B.transpose() * mu.asDiagonal() * R);
    Matrix psi = lowdin(R, mu, fmt::format("wavelets at level {}", k));
    fix_signs(psi, g);
    Matrix grown(n, B.cols() + psi.cols());
    grown << B, psi;
    B = std::move(grown);
    basis->psi_.push_back(std::move(psi));
  }

  for (int k = t.k_min(); k <= t.k_max(); ++k) {
    const auto& ak = t.net().A(k);
    Matrix gk(n, static_cast<Eigen::Index>(ak.size()));
    for (std::size_t c = 0; c < ak.size(); ++c)
      gk.col(static_cast<Eigen::Index>(c)) = generator.col(ak[c]);
    Matrix phi = lowdin(gk, mu, fmt::format("scaling functions at level {}", k));
    fix_signs(phi, ak);
    basis->phi_.push_back(std::move(phi));
  }

  // decay fit over all (k, alpha, x)
  std::vector<double> ts, logs;
  struct Sample {
    double t, v;
  };
  std::vector<Sample> samples;
  double vmax = 0.0;
  for (int k = t.k_min(); k < t.k_max(); ++k) {
    const Matrix& psi = basis->psi_[static_cast<std::size_t>(k - t.k_min())];
    const std::vector<int> g = t.net().G(k);
    const double scale = std::pow(t.delta(), k);
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double vol = std::sqrt(sp.ball_measure(g[c], scale));
      for (int x = 0; x < n; ++x) {
        const double v = std::abs(psi(x, static_cast<Eigen::Index>(c))) * vol;
        samples.push_back({std::pow(sp.dist(x, g[c]) / scale, a), v});
        vmax = std::max(vmax, v);
      }
    }
  }
  for (const auto& s : samples)
    if (s.v > 1e-12 * vmax) {
      ts.push_back(s.t);
      logs.push_back(std::log(s.v));
    }
  DecayFit fit;
  fit.a = a;
  if (ts.size() >= 2) {
    const LinearFit lf = least_squares(ts, logs);
    fit.nu_prime = -lf.slope;
  }
  for (const auto& s : samples)
    fit.C = std::max(fit.C, s.v * std::exp(fit.nu_prime * s.t));

  basis->backend_ = Backend::smoothed;
  basis->nu_ = nu;
  basis->a_ = a;
  basis->decay_ = fit;
  index_wavelets(t, basis->wavelet_slot_);
  basis->tree_ = std::move(tree);
  return basis;
}

Matrix family_basis(const WaveletBasis& basis, const CubeFamily& family) {
  const int n = basis.tree().space().n();
  Matrix out(n, static_cast<Eigen::Index>(family.size()));
  const auto& a0 = basis.tree().net().A(0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    const FamilyCube& fc = family[i];
    if (fc.scaling) {
      const auto col = std::lower_bound(a0.begin(), a0.end(), fc.center) - a0.begin();
      out.col(static_cast<Eigen::Index>(i)) = basis.phi(0).col(col);
    } else {
      out.col(static_cast<Eigen::Index>(i)) = basis.wavelet(fc.wavelet);
    }
  }
  return out;
}

CoefficientSequence analyze(const WaveletBasis& basis, const FamilyPtr& family,
                            const Vector& f) {
  const QuasiMetricSpace& sp = basis.tree().space();
  if (f.size() != sp.n())
    throw ValidationError("function length does not match space size");
  if (&family->tree() != &basis.tree())
    throw ValidationError("family and basis are bound to different trees");
  const Vector fm = f.cwiseProduct(sp.weights());
  CoefficientSequence out(family);
  out.values = family_basis(basis, *family).transpose() * fm;
  if (family->kind() == Homogeneity::homogeneous)
    out.coarse = basis.phi(basis.tree().k_min()).transpose() * fm;
  return out;
}

Vector synthesize(const WaveletBasis& basis, const CoefficientSequence& coeffs) {
  if (&coeffs.family->tree() != &basis.tree())
    throw ValidationError("coefficients are bound to a different tree");
  Vector f = family_basis(basis, *coeffs.family) * coeffs.values;
  if (coeffs.coarse.size() > 0)
    f += basis.phi(basis.tree().k_min()) * coeffs.coarse;
  return f;
}

const Matrix& AtiKernels::Pk(int k) const {
  return P[static_cast<std::size_t>(std::clamp(k, k_min, k_max) - k_min)];
}

const Matrix& AtiKernels::Dk(int k) const {
  if (k < k_min || k >= k_max) return empty;
  return D[static_cast<std::size_t>(k - k_min)];
}

const Matrix& AtiKernels::Qk_inhom(int k) const {
  return k == 0 ? Pk(0) : Dk(k - 1);
}

AtiKernels build_kernels(const BasisPtr& basis) {
  AtiKernels K;
  K.basis = basis;
  K.k_min = basis->tree().k_min();
  K.k_max = basis->tree().k_max();
  for (int k = K.k_min; k <= K.k_max; ++k) {
    const Matrix& phi = basis->phi(k);
    K.P.push_back(phi * phi.transpose());
  }
  for (int k = K.k_min; k < K.k_max; ++k) {
    const Matrix& psi = basis->psi(k);
    K.D.push_back(psi * psi.transpose());
  }
  return K;
}

Vector apply_kernel(const Matrix& K, const QuasiMetricSpace& space,
                    const Vector& f) {
  if (K.size() == 0) return Vector::Zero(space.n());
  return K * f.cwiseProduct(space.weights());
}

namespace {

struct LevelGeometry {
  double scale;
  Vector vol;                                    // V_scale(x)
  Vector ydist;                                  // d(x, Y) or 0
  std::vector<std::pair<int, int>> near_pairs;  // ordered, 0 < d <= scale
};

LevelGeometry level_geometry(const DyadicTree& tree, double scale, int yk,
                             bool with_y) {
  const QuasiMetricSpace& sp = tree.space();
  const int n = sp.n();
  LevelGeometry g;
  g.scale = scale;
  g.vol.resize(n);
  g.ydist = Vector::Zero(n);
  for (int x = 0; x < n; ++x) {
    g.vol[x] = sp.ball_measure(x, scale);
    if (with_y) g.ydist[x] = tree.dist_to_Y(yk, x);
    for (int y = 0; y < n; ++y)
      if (x != y && sp.dist(x, y) <= scale) g.near_pairs.emplace_back(x, y);
  }
  return g;
}

void check_kernel(const Matrix& K, const DyadicTree& tree,
                  const LevelGeometry& g, int k, double nu, double a,
                  double eta, double target_integral, IatiReport& rep) {
  const QuasiMetricSpace& sp = tree.space();
  const int n = sp.n();
  Matrix E(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const double far = std::max(g.ydist[x], g.ydist[y]) / g.scale;
      E(x, y) = std::exp(-nu * std::pow(sp.dist(x, y) / g.scale, a)) *
                std::exp(-nu * std::pow(far, a)) /
                std::sqrt(g.vol[x] * g.vol[y]);
    }
  const double floor = 1e-14 * K.cwiseAbs().maxCoeff();
  auto ratio = [&](double num, double den) {
    if (num <= floor) return 0.0;
    return den > 0.0 ? num / den : kInf;
  };

  ConditionCheck size{"size", k};
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      size.constant = std::max(size.constant, ratio(std::abs(K(x, y)), E(x, y)));

  ConditionCheck holder{"regularity", k};
  for (const auto& [x, xp] : g.near_pairs) {
    const double h = std::pow(sp.dist(x, xp) / g.scale, eta);
    for (int y = 0; y < n; ++y) {
      const double num =
          std::abs(K(x, y) - K(xp, y)) + std::abs(K(y, x) - K(y, xp));
      holder.constant = std::max(holder.constant, ratio(num, h * E(x, y)));
    }
  }

  ConditionCheck second{"second difference", k};
  const auto& pairs = g.near_pairs;
  const double total = static_cast<double>(pairs.size()) *
                       static_cast<double>(pairs.size());
  auto visit = [&](std::size_t i, std::size_t j) {
    const auto [x, xp] = pairs[i];
    const auto [y, yp] = pairs[j];
    const double num = std::abs(K(x, y) - K(xp, y) - K(x, yp) + K(xp, yp));
    const double h = std::pow(sp.dist(x, xp) / g.scale, eta) *
                     std::pow(sp.dist(y, yp) / g.scale, eta);
    second.constant = std::max(second.constant, ratio(num, h * E(x, y)));
  };
  if (total <= kPairBudget) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t j = 0; j < pairs.size(); ++j) visit(i, j);
  } else {
    second.sampled = true;
    Rng rng(mix_seed(static_cast<std::uint64_t>(k) + 17));
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    for (double s = 0; s < kPairBudget; ++s) visit(pick(rng), pick(rng));
  }

  ConditionCheck integral{target_integral == 0.0 ? "cancellation" : "conservation", k};
  double row_l1 = 0.0;
  for (int x = 0; x < n; ++x) {
    CompensatedSum row, col, l1;
    for (int y = 0; y < n; ++y) {
      row += K(x, y) * sp.weight(y);
      col += K(y, x) * sp.weight(y);
      l1 += std::abs(K(x, y)) * sp.weight(y);
    }
    integral.constant = std::max({integral.constant,
                                  std::abs(row.value() - target_integral),
                                  std::abs(col.value() - target_integral)});
    row_l1 = std::max(row_l1, l1.value());
  }
  integral.pass = integral.constant <= 1e-10 * std::max(1.0, row_l1);

  for (ConditionCheck* c : {&size, &holder, &second}) {
    c->pass = std::isfinite(c->constant);
    rep.checks.push_back(*c);
  }
  rep.checks.push_back(integral);
}

}  // namespace

IatiReport verify_exp_iati(const AtiKernels& kernels, Homogeneity kind,
                           double nu_prime, double a, double eta) {
  if (!(nu_prime > 0.0)) throw ValidationError("nu' must be positive");
  if (!(a > 0.0 && a <= 1.0)) throw ValidationError("a must lie in (0, 1]");
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("eta must lie in (0, 1)");
  const DyadicTree& tree = kernels.basis->tree();
  IatiReport rep;
  rep.kind = kind;
  rep.nu_prime = nu_prime;
  rep.a = a;
  rep.eta = eta;

  if (kind == Homogeneity::inhomogeneous) {
    const LevelGeometry g = level_geometry(tree, 1.0, 0, false);
    check_kernel(kernels.Pk(0), tree, g, 0, nu_prime, a, eta, 1.0, rep);
  }
  for (int k = kernels.k_min; k < kernels.k_max; ++k) {
    if (kind == Homogeneity::inhomogeneous && k < 0) continue;
    if (tree.net().G(k).empty()) continue;
    const LevelGeometry g =
        level_geometry(tree, std::pow(tree.delta(), k), k, true);
    const int label = kind == Homogeneity::inhomogeneous ? k + 1 : k;
    check_kernel(kernels.Dk(k), tree, g, label, nu_prime, a, eta, 0.0, rep);
  }
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                         [](const ConditionCheck& c) { return c.pass; });
  return rep;
}

}  // namespace homtype
