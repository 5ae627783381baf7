#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "homtype/dyadic.hpp"

namespace homtype {

enum class Homogeneity { homogeneous, inhomogeneous };

/// One index of a coefficient family. In the homogeneous family every entry
/// is a wavelet cube Q_alpha^{k+1} with scale index k; in the inhomogeneous
/// family the level-0 scaling cubes come first (scale 0) and the wavelet
/// cubes of level k >= 1 carry scale index k.
struct FamilyCube {
  int level = 0;
  int scale = 0;   // exponent in the delta^{-scale * s} weight
  int center = 0;  // x_Q
  int cube = 0;    // tree cube index
  double ell = 1.0;
  double mass = 0.0;
  bool scaling = false;
  int wavelet = -1;  // index into DyadicTree::wavelet_cubes(), -1 if scaling
};

class CubeFamily;
using FamilyPtr = std::shared_ptr<const CubeFamily>;

class CubeFamily {
 public:
  [[nodiscard]] const DyadicTree& tree() const { return *tree_; }
  [[nodiscard]] const TreePtr& tree_ptr() const { return tree_; }
  [[nodiscard]] Homogeneity kind() const { return kind_; }
  [[nodiscard]] std::size_t size() const { return cubes_.size(); }
  [[nodiscard]] const FamilyCube& operator[](std::size_t i) const {
    return cubes_[i];
  }
  [[nodiscard]] const std::vector<FamilyCube>& cubes() const { return cubes_; }
  /// Distinct wavelet scale indices in increasing order; scaling cubes of
  /// the inhomogeneous family are kept apart in scaling_members().
  [[nodiscard]] const std::vector<int>& scales() const { return scales_; }
  [[nodiscard]] const std::vector<std::vector<int>>& scale_members() const {
    return members_;
  }
  [[nodiscard]] const std::vector<int>& scaling_members() const {
    return scaling_;
  }
  /// Family index of (level, center), or -1.
  [[nodiscard]] int find(int level, int center) const;

 private:
  friend FamilyPtr make_family(TreePtr tree, Homogeneity kind);
  CubeFamily() = default;

  TreePtr tree_;
  Homogeneity kind_ = Homogeneity::homogeneous;
  std::vector<FamilyCube> cubes_;
  std::vector<int> scales_;
  std::vector<std::vector<int>> members_;
  std::vector<int> scaling_;
  std::map<std::pair<int, int>, int> index_;
};

FamilyPtr make_family(TreePtr tree, Homogeneity kind);

/// lambda_Q over a cube family. `coarse` holds the <f, phi^{k_min}> block
/// produced by homogeneous analysis; it is not part of any sequence norm.
struct CoefficientSequence {
  FamilyPtr family;
  Vector values;
  Vector coarse;

  CoefficientSequence() = default;
  explicit CoefficientSequence(FamilyPtr fam)
      : family(std::move(fam)), values(Vector::Zero(
                                    static_cast<Eigen::Index>(family->size()))) {}
};

}  // namespace homtype
