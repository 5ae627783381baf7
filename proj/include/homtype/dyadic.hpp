#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "homtype/space.hpp"

namespace homtype {

/// Nested nets A_k, k in [k_min, k_max]. Queries outside the realized range
/// are clamped: below k_min there is one net point, above k_max every point.
struct NetSystem {
  double delta = 0.125;
  double c0 = 1.0;
  double C0 = 1.0;
  int k_min = 0;
  int k_max = 0;
  std::vector<std::vector<int>> nets;  // sorted point ids, index k - k_min
  std::vector<int> first_level;        // smallest k with the point in A_k

  [[nodiscard]] int clamp(int k) const {
    return k < k_min ? k_min : (k > k_max ? k_max : k);
  }
  [[nodiscard]] const std::vector<int>& A(int k) const {
    return nets[static_cast<std::size_t>(clamp(k) - k_min)];
  }
  [[nodiscard]] bool in_net(int k, int id) const {
    return first_level[static_cast<std::size_t>(id)] <= clamp(k);
  }
  /// G_k = A_{k+1} \ A_k, sorted.
  [[nodiscard]] std::vector<int> G(int k) const;
  [[nodiscard]] int levels() const { return k_max - k_min + 1; }
};

/// Greedy farthest-point nets, seeded by the max-weight point and nested by
/// construction. Separation and covering are verified by enumeration.
NetSystem build_nets(const QuasiMetricSpace& space, double delta,
                     double c0 = 1.0, double C0 = 1.0);

/// Widens the realized range to [k_min, k_max] by repeating the coarsest and
/// finest nets. Narrowing is rejected since it would break covering or
/// leave non-singleton finest cubes.
void widen_range(NetSystem& net, int k_min, int k_max);

struct Cube {
  int level = 0;
  int center = 0;
  int parent = -1;  // cube index one level up, -1 at k_min
  std::vector<int> children;
  std::vector<int> points;  // sorted
  double mass = 0.0;
};

/// A cube of the wavelet family: Q = Q_alpha^{k+1} for alpha in G_k.
struct WaveletCube {
  int k = 0;       // index of G_k
  int level = 0;   // k + 1
  int center = 0;  // x_Q = y_alpha^k
  int cube = 0;    // index into DyadicTree::cubes()
  double ell = 1.0;
};

struct SandwichReport {
  double c_natural = 0.0;  // (3 A0^2)^{-1} c0
  double C_natural = 0.0;  // 2 A0 C0
  double inner = 0.0;      // largest c with B(z, c delta^k) inside every cube
  double outer = 0.0;      // sup d(z, x) / delta^k over x in the cube
  bool hypothesis = false;  // 12 A0^3 C0 delta <= c0
  bool holds = false;       // inner >= c_natural and outer < C_natural
};

class DyadicTree;
using TreePtr = std::shared_ptr<const DyadicTree>;

class DyadicTree {
 public:
  [[nodiscard]] const QuasiMetricSpace& space() const { return *space_; }
  [[nodiscard]] const SpacePtr& space_ptr() const { return space_; }
  [[nodiscard]] const NetSystem& net() const { return net_; }
  [[nodiscard]] double delta() const { return net_.delta; }
  [[nodiscard]] int k_min() const { return net_.k_min; }
  [[nodiscard]] int k_max() const { return net_.k_max; }

  [[nodiscard]] const std::vector<Cube>& cubes() const { return cubes_; }
  [[nodiscard]] const Cube& cube(int index) const {
    return cubes_[static_cast<std::size_t>(index)];
  }
  /// Cube indices at level k (clamped), ordered by center id.
  [[nodiscard]] const std::vector<int>& level_cubes(int k) const;
  /// Index of the level-k cube (clamped) that contains point x.
  [[nodiscard]] int cube_of(int k, int x) const;
  /// Index of Q_alpha^k, or -1 when alpha is not in A_k.
  [[nodiscard]] int find_cube(int k, int center) const;

  [[nodiscard]] const std::vector<WaveletCube>& wavelet_cubes() const {
    return wavelet_cubes_;
  }
  [[nodiscard]] const SandwichReport& sandwich() const { return sandwich_; }

  /// d(y, Y^k) with Y^k = {y_alpha^k : alpha in G_k}; +inf if G_k is empty.
  [[nodiscard]] double dist_to_Y(int k, int y) const;

 private:
  friend TreePtr build_tree(SpacePtr space, NetSystem net);
  DyadicTree() = default;

  SpacePtr space_;
  NetSystem net_;
  std::vector<Cube> cubes_;
  std::vector<std::vector<int>> level_cubes_;
  std::vector<std::vector<int>> point_cube_;  // [k - k_min][x]
  std::map<std::pair<int, int>, int> index_;
  std::vector<WaveletCube> wavelet_cubes_;
  SandwichReport sandwich_;
};

/// Cubes by net-point ancestry: the parent of a level-(k+1) net point is its
/// nearest level-k net point (ties by smallest id), and the level-k cube of
/// x collects the points whose level-k ancestor is the same.
TreePtr build_tree(SpacePtr space, NetSystem net);

/// Convenience: build_nets followed by build_tree.
TreePtr build_dyadic(SpacePtr space, double delta, double c0 = 1.0,
                     double C0 = 1.0);

/// Exhaustive re-check of the net and cube properties of a finished tree.
struct DyadicCheck {
  bool separation = false;
  bool covering = false;
  bool nesting = false;
  bool partition = false;  // disjoint, covering X, masses sum to mu(X)
  bool monotone = false;   // each cube inside its parent
  bool sandwich = false;
  [[nodiscard]] bool all() const {
    return separation && covering && nesting && partition && monotone && sandwich;
  }
};

DyadicCheck verify_dyadic(const DyadicTree& tree);

struct Refinement {
  int j0 = 1;
  /// subcubes[c] = level-(k + j0) descendants of cube c, clamped at k_max.
  std::vector<std::vector<int>> subcubes;
  int max_count = 0;
};

Refinement refine(const DyadicTree& tree, int j0);

}  // namespace homtype
