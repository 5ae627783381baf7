#include "homtype/space.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace homtype {

namespace {

constexpr int kExactA0Limit = 512;
constexpr int kSampledTriples = 1000000;

bool holds_quasi_triangle(const Matrix& d, double a0) {
  const Eigen::Index n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        if (d(i, k) > a0 * (d(i, j) + d(j, k))) return false;
      }
  return true;
}

double sampled_quasi_triangle_constant(const Matrix& d) {
  const auto n = static_cast<int>(d.rows());
  Rng rng(0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  double worst = 1.0;
  for (int t = 0; t < kSampledTriples; ++t) {
    const int i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    worst = std::max(worst, d(i, k) / (d(i, j) + d(j, k)));
  }
  return worst * 1.05;
}

}  // namespace

double exact_quasi_triangle_constant(const Matrix& d) {
  const Eigen::Index n = d.rows();
  double worst = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const double dik = d(i, k);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        const double r = dik / (d(i, j) + d(j, k));
        if (r > worst) worst = r;
      }
    }
  // Round up until the inequality holds in floating point as evaluated.
  for (int guard = 0; guard < 16 && !holds_quasi_triangle(d, worst); ++guard)
    worst = std::nextafter(worst, kInf);
  return worst;
}

SpacePtr build_space(const PointSet& points, const MetricSpec& metric,
                     std::optional<double> a0_hint) {
  std::size_t n = 0;
  Matrix d;
  switch (metric.kind) {
    case MetricKind::euclidean:
    case MetricKind::snowflake: {
      n = points.coords.size();
      if (n < 2) throw ValidationError("space needs at least 2 points");
      const std::size_t dim = points.coords.front().size();
      for (std::size_t i = 0; i < n; ++i)
        if (points.coords[i].size() != dim)
          throw ValidationError(
              fmt::format("point {} has {} coordinates, expected {}", i,
                          points.coords[i].size(), dim));
      double theta = 1.0;
      if (metric.kind == MetricKind::snowflake) {
        theta = metric.theta;
        if (!(theta > 0.0 && theta <= 1.0))
          throw ValidationError("snowflake exponent must lie in (0, 1]");
      }
      d.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dim; ++c) {
            const double diff = points.coords[i][c] - points.coords[j][c];
            s += diff * diff;
          }
          double v = std::sqrt(s);
          if (theta != 1.0) v = std::pow(v, theta);
          d(i, j) = d(j, i) = v;
        }
      break;
    }
    case MetricKind::explicit_matrix: {
      d = metric.matrix;
      if (d.rows() != d.cols())
        throw ValidationError("distance matrix must be square");
      n = static_cast<std::size_t>(d.rows());
      if (n < 2) throw ValidationError("space needs at least 2 points");
      for (std::size_t i = 0; i < n; ++i) {
        if (d(i, i) != 0.0)
          throw ValidationError(fmt::format("nonzero diagonal at {}", i));
        for (std::size_t j = 0; j < n; ++j) {
          if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
            throw ValidationError(
                fmt::format("invalid distance at ({}, {})", i, j));
          if (d(i, j) != d(j, i))
            throw ValidationError(
                fmt::format("distance matrix not symmetric at ({}, {})", i, j));
        }
      }
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(d(i, j) > 0.0))
        throw ValidationError(
            fmt::format("zero distance between distinct points {} and {}", i,
                        j));

  auto space = std::shared_ptr<QuasiMetricSpace>(new QuasiMetricSpace());
  space->dist_ = std::move(d);
  space->weights_ = Vector::Ones(static_cast<Eigen::Index>(n));
  if (!points.weights.empty()) {
    if (points.weights.size() != n)
      throw ValidationError("weight count does not match point count");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(points.weights[i] > 0.0) || !std::isfinite(points.weights[i]))
        throw ValidationError(
            fmt::format("nonpositive weight at point {}", i));
      space->weights_[static_cast<Eigen::Index>(i)] = points.weights[i];
    }
  }
  if (!points.ids.empty() && points.ids.size() != n)
    throw ValidationError("id count does not match point count");
  space->ids_ = points.ids;
  if (space->ids_.empty())
    for (std::size_t i = 0; i < n; ++i) space->ids_.push_back(std::to_string(i));
  space->coords_ = points.coords;

  const Matrix& dist = space->dist_;
  if (static_cast<int>(n) <= kExactA0Limit) {
    space->a0_ = exact_quasi_triangle_constant(dist);
    space->a0_exact_ = true;
  } else {
    space->a0_ = sampled_quasi_triangle_constant(dist);
    space->a0_exact_ = false;
  }
  if (a0_hint && space->a0_ > *a0_hint)
    throw ValidationError(fmt::format(
        "quasi-triangle constant {:.17g} exceeds hint {:.17g}", space->a0_,
        *a0_hint));

  CompensatedSum mass;
  for (Eigen::Index i = 0; i < space->weights_.size(); ++i)
    mass += space->weights_[i];
  space->total_mass_ = mass.value();
  space->diam_ = dist.maxCoeff();
  double min_sep = kInf;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) min_sep = std::min(min_sep, dist(i, j));
  space->min_sep_ = min_sep;

  space->order_.resize(n);
  space->sorted_dist_.resize(n);
  space->cumulative_mass_.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    auto& ord = space->order_[x];
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) {
      return dist(x, a) < dist(x, b);
    });
    auto& sd = space->sorted_dist_[x];
    auto& cm = space->cumulative_mass_[x];
    sd.resize(n);
    cm.assign(n + 1, 0.0);
    CompensatedSum acc;
    for (std::size_t t = 0; t < n; ++t) {
      sd[t] = dist(x, ord[t]);
      acc += space->weights_[ord[t]];
      cm[t + 1] = acc.value();
    }
  }
  return space;
}

double QuasiMetricSpace::ball_measure(int x, double r) const {
  const auto& sd = sorted_dist_[x];
  const auto count = std::lower_bound(sd.begin(), sd.end(), r) - sd.begin();
  return cumulative_mass_[x][static_cast<std::size_t>(count)];
}

double QuasiMetricSpace::mutual_volume(int x, int y) const {
  if (x == y) return 0.0;
  return ball_measure(x, dist_(x, y));
}

double QuasiMetricSpace::kernel_P(double eps, int x, int y, double r) const {
  const double d = dist_(x, y);
  const double denom = ball_measure(x, r) + mutual_volume(x, y);
  return std::pow(r / (r + d), eps) / denom;
}

double QuasiMetricSpace::integral(const Vector& f) const {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += f[i] * weights_[i];
  return s.value();
}

double QuasiMetricSpace::inner(const Vector& f, const Vector& g) const {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += f[i] * g[i] * weights_[i];
  return s.value();
}

double QuasiMetricSpace::lp_norm(const Vector& f, double p) const {
  if (std::isinf(p)) return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  // scaled by max |f| so that large p neither underflows nor overflows
  const double m = f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  CompensatedSum s;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] != 0.0) s += std::pow(std::abs(f[i]) / m, p) * weights_[i];
  return m * std::pow(s.value(), 1.0 / p);
}

SpacePtr builtin_line(int n, double spacing) {
  PointSet ps;
  for (int i = 0; i < n; ++i) ps.coords.push_back({i * spacing});
  return build_space(ps, MetricSpec{});
}

SpacePtr builtin_grid(int rows, int cols) {
  PointSet ps;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      ps.coords.push_back({static_cast<double>(r), static_cast<double>(c)});
  return build_space(ps, MetricSpec{});
}

SpacePtr builtin_cloud(int n, std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointSet ps;
  for (int i = 0; i < n; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    ps.coords.push_back({x, y});
  }
  return build_space(ps, MetricSpec{});
}

DoublingProfile estimate_doubling(const QuasiMetricSpace& space,
                                  const std::vector<double>& lambda_grid) {
  if (space.size() < 2)
    throw ValidationError("doubling estimate needs at least two points");
  if (lambda_grid.empty())
    throw ValidationError("lambda grid must be nonempty");
  for (double l : lambda_grid)
    if (!(l > 1.0) || !std::isfinite(l))
      throw ValidationError("lambda grid must lie in (1, inf)");

  // Radii: half-octave geometric grid starting at the median nearest-neighbour
  // distance; each enlarged ball stays within half the diameter so that
  // saturation at mu(X) does not flatten the fit.
  std::vector<double> nn(space.size());
  for (int c = 0; c < space.n(); ++c) nn[c] = space.sorted_distances(c)[1];
  std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2), nn.end());
  const double r0 = nn[nn.size() / 2];
  DoublingProfile prof;
  std::vector<double> local;
  CompensatedSum sxy, sxx;
  auto record = [&](int c, double r, double l) {
    const double ratio = space.ball_measure(c, l * r) / space.ball_measure(c, r);
    prof.records.push_back({c, r, l, ratio});
    const double x = std::log(l);
    const double y = std::log(ratio);
    sxy += x * y;
    sxx += x * x;
    local.push_back(y / x);
  };
  for (double l : lambda_grid)
    for (double r = r0; l * r <= 0.5 * space.diam() * (1.0 + 1e-12);
         r *= std::sqrt(2.0))
      for (int c = 0; c < space.n(); ++c) record(c, r, l);
  if (prof.records.empty()) {
    const double l = *std::min_element(lambda_grid.begin(), lambda_grid.end());
    for (int c = 0; c < space.n(); ++c) record(c, r0, l);
  }
  // least squares through the origin: log ratio = omega log lambda
  prof.omega = sxy.value() / sxx.value();
  {
    CompensatedSum res;
    for (const auto& rec : prof.records) {
      const double e = std::log(rec.ratio) - prof.omega * std::log(rec.lambda);
      res += e * e;
    }
    prof.fit_rms = std::sqrt(res.value() / static_cast<double>(prof.records.size()));
  }
  prof.omega = std::max(prof.omega, 0.0);
  std::nth_element(local.begin(), local.begin() + local.size() / 2,
                   local.end());
  prof.omega0 = std::clamp(local[local.size() / 2], 0.0, prof.omega);

  double c = 0.0;
  for (const auto& rec : prof.records)
    c = std::max(c, rec.ratio / std::pow(rec.lambda, prof.omega));
  auto holds = [&](double cm) {
    for (const auto& rec : prof.records)
      if (rec.ratio > cm * std::pow(rec.lambda, prof.omega)) return false;
    return true;
  };
  while (!holds(c)) c = std::nextafter(c, kInf);
  prof.c_mu = c;
  return prof;
}

Vector maximal_function(const QuasiMetricSpace& space, const Vector& f) {
  const int n = space.n();
  if (f.size() != n)
    throw ValidationError("function length does not match space size");
  // Per-center candidate values, merged by max afterwards so each
  // parallel task writes only its own row.
  std::vector<std::vector<double>> best(static_cast<std::size_t>(n));
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t ci) {
    const int c = static_cast<int>(ci);
    const auto& ord = space.order_from(c);
    const auto& sd = space.sorted_distances(c);
    std::vector<double> prefix_avg(static_cast<std::size_t>(n));
    CompensatedSum num, den;
    // group boundaries: a prefix is a ball only at the end of a tie group
    std::vector<double> group_avg;
    std::vector<int> group_of(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
      num += std::abs(f[ord[t]]) * space.weight(ord[t]);
      den += space.weight(ord[t]);
      if (t + 1 == n || sd[t + 1] != sd[t])
        group_avg.push_back(num.value() / den.value());
      group_of[t] = static_cast<int>(group_avg.size());
    }
    // group_of[t] was recorded before closing the group; fix to index
    int g = 0;
    for (int t = 0; t < n; ++t) {
      group_of[t] = g;
      if (t + 1 == n || sd[t + 1] != sd[t]) ++g;
    }
    std::vector<double> suffix(group_avg.size());
    double m = 0.0;
    for (std::size_t k = group_avg.size(); k-- > 0;) {
      m = std::max(m, group_avg[k]);
      suffix[k] = m;
    }
    auto& row = best[ci];
    row.assign(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) row[ord[t]] = suffix[group_of[t]];
  });
  Vector out = Vector::Zero(n);
  for (int c = 0; c < n; ++c)
    for (int x = 0; x < n; ++x) out[x] = std::max(out[x], best[c][x]);
  return out;
}

FeffermanSteinReport fefferman_stein_check(const QuasiMetricSpace& space,
                                           double p, double u, int families,
                                           int family_size,
                                           std::uint64_t seed) {
  if (!(p > 1.0) || std::isinf(p))
    throw ValidationError("Fefferman-Stein check needs p in (1, inf)");
  if (!(u > 1.0)) throw ValidationError("Fefferman-Stein check needs u > 1");
  const int n = space.n();
  FeffermanSteinReport rep;
  rep.p = p;
  rep.u = u;
  rep.families = families;
  rep.ratios.resize(static_cast<std::size_t>(families));
  parallel_for(0, static_cast<std::size_t>(families), [&](std::size_t t) {
    Rng rng = trial_rng(seed, t);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector lhs = Vector::Zero(n), rhs = Vector::Zero(n);
    for (int j = 0; j < family_size; ++j) {
      Vector fj = Vector::Zero(n);
      const double density = 0.02 + 0.5 * unit(rng);
      for (int x = 0; x < n; ++x)
        if (unit(rng) < density) fj[x] = gauss(rng);
      const Vector mf = maximal_function(space, fj);
      for (int x = 0; x < n; ++x) {
        if (std::isinf(u)) {
          lhs[x] = std::max(lhs[x], mf[x]);
          rhs[x] = std::max(rhs[x], std::abs(fj[x]));
        } else {
          lhs[x] += std::pow(mf[x], u);
          rhs[x] += std::pow(std::abs(fj[x]), u);
        }
      }
    }
    if (!std::isinf(u)) {
      lhs = lhs.array().pow(1.0 / u);
      rhs = rhs.array().pow(1.0 / u);
    }
    const double den = space.lp_norm(rhs, p);
    rep.ratios[t] = den > 0.0 ? space.lp_norm(lhs, p) / den : 1.0;
  });
  rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.min_ratio = *std::min_element(rep.ratios.begin(), rep.ratios.end());
  return rep;
}

}  // namespace homtype
