#include "homtype/coefficients.hpp"

#include <algorithm>
#include <cmath>

namespace homtype {

int CubeFamily::find(int level, int center) const {
  const auto it = index_.find({level, center});
  return it == index_.end() ? -1 : it->second;
}

FamilyPtr make_family(TreePtr tree, Homogeneity kind) {
  auto fam = std::shared_ptr<CubeFamily>(new CubeFamily());
  fam->kind_ = kind;
  const DyadicTree& t = *tree;
  if (kind == Homogeneity::inhomogeneous) {
    for (int ci : t.level_cubes(0)) {
      FamilyCube fc;
      fc.level = 0;
      fc.scale = 0;
      fc.center = t.cube(ci).center;
      fc.cube = ci;
      fc.ell = 1.0;
      fc.mass = t.cube(ci).mass;
      fc.scaling = true;
      fam->scaling_.push_back(static_cast<int>(fam->cubes_.size()));
      fam->cubes_.push_back(fc);
    }
  }
  const auto& wc = t.wavelet_cubes();
  for (std::size_t w = 0; w < wc.size(); ++w) {
    if (kind == Homogeneity::inhomogeneous && wc[w].level < 1) continue;
    FamilyCube fc;
    fc.level = wc[w].level;
    fc.scale = kind == Homogeneity::homogeneous ? wc[w].k : wc[w].level;
    fc.center = wc[w].center;
    fc.cube = wc[w].cube;
    fc.ell = wc[w].ell;
    fc.mass = t.cube(wc[w].cube).mass;
    fc.wavelet = static_cast<int>(w);
    fam->cubes_.push_back(fc);
  }
  for (std::size_t i = 0; i < fam->cubes_.size(); ++i) {
    const FamilyCube& fc = fam->cubes_[i];
    fam->index_[{fc.level, fc.center}] = static_cast<int>(i);
    if (fc.scaling) continue;
    auto it = std::find(fam->scales_.begin(), fam->scales_.end(), fc.scale);
    if (it == fam->scales_.end()) {
      fam->scales_.push_back(fc.scale);
      fam->members_.emplace_back();
      it = fam->scales_.end() - 1;
    }
    fam->members_[static_cast<std::size_t>(it - fam->scales_.begin())]
        .push_back(static_cast<int>(i));
  }
  fam->tree_ = std::move(tree);
  return fam;
}

}  // namespace homtype
