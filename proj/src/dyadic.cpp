#include "homtype/dyadic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace homtype {

std::vector<int> NetSystem::G(int k) const {
  std::vector<int> out;
  if (k < k_min || k >= k_max) return out;
  for (int id : A(k + 1))
    if (first_level[static_cast<std::size_t>(id)] == k + 1) out.push_back(id);
  return out;
}

NetSystem build_nets(const QuasiMetricSpace& space, double delta, double c0,
                     double C0) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("delta must lie in (0, 1)");
  if (!(c0 > 0.0) || !(C0 > 0.0))
    throw ValidationError("net constants c0, C0 must be positive");
  const int n = space.n();

  int seed = 0;
  for (int i = 1; i < n; ++i)
    if (space.weight(i) > space.weight(seed)) seed = i;
  double reach = 0.0;
  for (int i = 0; i < n; ++i) reach = std::max(reach, space.dist(seed, i));

  NetSystem net;
  net.delta = delta;
  net.c0 = c0;
  net.C0 = C0;
  int k = static_cast<int>(std::floor(std::log(reach / C0) / std::log(delta)));
  while (C0 * std::pow(delta, k + 1) >= reach) ++k;
  while (C0 * std::pow(delta, k) < reach) --k;
  net.k_min = k;
  net.first_level.assign(static_cast<std::size_t>(n), 0);

  std::vector<int> current{seed};
  std::vector<double> gap(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) gap[i] = space.dist(seed, i);
  net.first_level[seed] = k;
  net.nets.push_back(current);

  while (static_cast<int>(current.size()) < n) {
    ++k;
    const double radius = C0 * std::pow(delta, k);
    for (;;) {
      int far = -1;
      for (int i = 0; i < n; ++i)
        if (far < 0 || gap[i] > gap[far]) far = i;
      if (!(gap[far] > radius)) break;
      current.push_back(far);
      net.first_level[far] = k;
      for (int i = 0; i < n; ++i) gap[i] = std::min(gap[i], space.dist(far, i));
    }
    std::vector<int> sorted = current;
    std::sort(sorted.begin(), sorted.end());
    net.nets.push_back(std::move(sorted));
  }
  net.k_max = k;

  for (int level = net.k_min; level <= net.k_max; ++level) {
    const auto& a = net.A(level);
    const double scale = std::pow(delta, level);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j)
        if (space.dist(a[i], a[j]) < c0 * scale)
          throw ValidationError(fmt::format(
              "separation fails at level {}: points {} and {} are {:.17g} "
              "apart, need {:.17g}",
              level, a[i], a[j], space.dist(a[i], a[j]), c0 * scale));
    for (int x = 0; x < n; ++x) {
      double best = kInf;
      for (int z : a) best = std::min(best, space.dist(x, z));
      if (best > C0 * scale)
        throw ValidationError(fmt::format(
            "covering fails at level {}: point {} is {:.17g} from the net, "
            "allowed {:.17g}",
            level, x, best, C0 * scale));
    }
  }
  return net;
}

void widen_range(NetSystem& net, int k_min, int k_max) {
  if (k_min > net.k_min)
    throw ValidationError(fmt::format(
        "kmin override {} exceeds the natural coarsest level {}", k_min, net.k_min));
  if (k_max < net.k_max)
    throw ValidationError(fmt::format(
        "kmax override {} is below the natural finest level {}", k_max, net.k_max));
  const std::vector<int> coarsest = net.nets.front();
  const std::vector<int> finest = net.nets.back();
  net.nets.insert(net.nets.begin(), static_cast<std::size_t>(net.k_min - k_min),
                  coarsest);
  net.nets.insert(net.nets.end(), static_cast<std::size_t>(k_max - net.k_max),
                  finest);
  for (int& f : net.first_level)
    if (f == net.k_min) f = k_min;
  net.k_min = k_min;
  net.k_max = k_max;
}

TreePtr build_tree(SpacePtr space, NetSystem net) {
  auto tree = std::shared_ptr<DyadicTree>(new DyadicTree());
  const QuasiMetricSpace& sp = *space;
  const int n = sp.n();
  const int levels = net.levels();

  // ancestor[level][x]: the level-k net point that owns x
  std::vector<std::vector<int>> ancestor(static_cast<std::size_t>(levels),
                                         std::vector<int>(n));
  for (int x = 0; x < n; ++x) ancestor[levels - 1][x] = x;
  for (int li = levels - 2; li >= 0; --li) {
    const int k = net.k_min + li;
    const auto& a = net.A(k);
    std::vector<int> parent_of(static_cast<std::size_t>(n), -1);
    for (int z : net.A(k + 1)) {
      if (net.in_net(k, z)) {
        parent_of[z] = z;
        continue;
      }
      int best = a.front();
      for (int w : a)
        if (sp.dist(z, w) < sp.dist(z, best)) best = w;
      parent_of[z] = best;
    }
    for (int x = 0; x < n; ++x) ancestor[li][x] = parent_of[ancestor[li + 1][x]];
  }

  tree->level_cubes_.resize(static_cast<std::size_t>(levels));
  tree->point_cube_.assign(static_cast<std::size_t>(levels),
                           std::vector<int>(n, -1));
  for (int li = 0; li < levels; ++li) {
    const int k = net.k_min + li;
    for (int z : net.A(k)) {
      Cube c;
      c.level = k;
      c.center = z;
      const int index = static_cast<int>(tree->cubes_.size());
      tree->index_[{k, z}] = index;
      tree->level_cubes_[li].push_back(index);
      tree->cubes_.push_back(std::move(c));
    }
    for (int x = 0; x < n; ++x) {
      const int index = tree->index_.at({k, ancestor[li][x]});
      tree->cubes_[index].points.push_back(x);
      tree->point_cube_[li][x] = index;
    }
  }
  for (auto& c : tree->cubes_) {
    CompensatedSum m;
    for (int x : c.points) m += sp.weight(x);
    c.mass = m.value();
    if (c.level > net.k_min) {
      const int li = c.level - net.k_min;
      c.parent = tree->point_cube_[li - 1][c.center];
    }
  }
  for (std::size_t i = 0; i < tree->cubes_.size(); ++i)
    if (tree->cubes_[i].parent >= 0)
      tree->cubes_[tree->cubes_[i].parent].children.push_back(
          static_cast<int>(i));

  SandwichReport& sw = tree->sandwich_;
  sw.c_natural = net.c0 / (3.0 * sp.a0() * sp.a0());
  sw.C_natural = 2.0 * sp.a0() * net.C0;
  sw.hypothesis =
      12.0 * sp.a0() * sp.a0() * sp.a0() * net.C0 * net.delta <= net.c0;
  sw.inner = kInf;
  sw.outer = 0.0;
  for (int li = 0; li < levels; ++li) {
    const double scale = std::pow(net.delta, net.k_min + li);
    for (int x = 0; x < n; ++x) {
      const int own = tree->point_cube_[li][x];
      for (int ci : tree->level_cubes_[li]) {
        const double r = sp.dist(x, tree->cubes_[ci].center) / scale;
        if (ci == own)
          sw.outer = std::max(sw.outer, r);
        else
          sw.inner = std::min(sw.inner, r);
      }
    }
  }
  sw.holds = sw.inner >= sw.c_natural && sw.outer < sw.C_natural;

  for (int k = net.k_min; k < net.k_max; ++k)
    for (int alpha : net.G(k)) {
      WaveletCube w;
      w.k = k;
      w.level = k + 1;
      w.center = alpha;
      w.cube = tree->index_.at({k + 1, alpha});
      w.ell = std::pow(net.delta, k + 1);
      tree->wavelet_cubes_.push_back(w);
    }

  tree->space_ = std::move(space);
  tree->net_ = std::move(net);
  return tree;
}

TreePtr build_dyadic(SpacePtr space, double delta, double c0, double C0) {
  NetSystem net = build_nets(*space, delta, c0, C0);
  return build_tree(std::move(space), std::move(net));
}

const std::vector<int>& DyadicTree::level_cubes(int k) const {
  return level_cubes_[static_cast<std::size_t>(net_.clamp(k) - net_.k_min)];
}

int DyadicTree::cube_of(int k, int x) const {
  return point_cube_[static_cast<std::size_t>(net_.clamp(k) - net_.k_min)]
                    [static_cast<std::size_t>(x)];
}

int DyadicTree::find_cube(int k, int center) const {
  const auto it = index_.find({net_.clamp(k), center});
  return it == index_.end() ? -1 : it->second;
}

double DyadicTree::dist_to_Y(int k, int y) const {
  double best = kInf;
  for (int alpha : net_.G(k)) best = std::min(best, space_->dist(y, alpha));
  return best;
}

DyadicCheck verify_dyadic(const DyadicTree& tree) {
  const QuasiMetricSpace& sp = tree.space();
  const NetSystem& net = tree.net();
  const int n = sp.n();
  DyadicCheck chk;
  chk.separation = chk.covering = chk.nesting = true;
  chk.partition = chk.monotone = true;
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    const auto& a = net.A(k);
    const double scale = std::pow(tree.delta(), k);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j)
        if (sp.dist(a[i], a[j]) < net.c0 * scale) chk.separation = false;
    for (int x = 0; x < n; ++x) {
      double best = kInf;
      for (int z : a) best = std::min(best, sp.dist(x, z));
      if (best > net.C0 * scale) chk.covering = false;
    }
    if (k > tree.k_min()) {
      const auto& coarse = net.A(k - 1);
      if (!std::includes(a.begin(), a.end(), coarse.begin(), coarse.end()))
        chk.nesting = false;
    }

    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    CompensatedSum mass;
    for (int ci : tree.level_cubes(k)) {
      const Cube& c = tree.cube(ci);
      mass += c.mass;
      for (int x : c.points) {
        if (owner[static_cast<std::size_t>(x)] >= 0) chk.partition = false;
        owner[static_cast<std::size_t>(x)] = ci;
      }
      if (k > tree.k_min()) {
        if (c.parent < 0) {
          chk.monotone = false;
          continue;
        }
        const auto& up = tree.cube(c.parent).points;
        if (!std::includes(up.begin(), up.end(), c.points.begin(), c.points.end()))
          chk.monotone = false;
      }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) chk.partition = false;
    if (std::abs(mass.value() - sp.total_mass()) > 1e-12 * sp.total_mass())
      chk.partition = false;
  }
  chk.sandwich = tree.sandwich().holds;
  return chk;
}

Refinement refine(const DyadicTree& tree, int j0) {
  if (j0 < 1) throw ValidationError("j0 must be at least 1");
  Refinement r;
  r.j0 = j0;
  r.subcubes.resize(tree.cubes().size());
  for (std::size_t c = 0; c < tree.cubes().size(); ++c) {
    const int target = std::min(tree.cube(static_cast<int>(c)).level + j0,
                                tree.k_max());
    std::vector<int> frontier{static_cast<int>(c)};
    while (tree.cube(frontier.front()).level < target) {
      std::vector<int> next;
      for (int f : frontier)
        for (int ch : tree.cube(f).children) next.push_back(ch);
      frontier = std::move(next);
    }
    std::sort(frontier.begin(), frontier.end(), [&](int a, int b) {
      return tree.cube(a).center < tree.cube(b).center;
    });
    r.max_count = std::max(r.max_count, static_cast<int>(frontier.size()));
    r.subcubes[c] = std::move(frontier);
  }
  return r;
}

}  // namespace homtype
