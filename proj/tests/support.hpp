#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "homtype/seq_spaces.hpp"

namespace homtype::testing {

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double power_mean(const std::vector<double>& v, double r) {
  if (std::isinf(r)) return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::pow(x, r);
  return std::pow(acc, 1.0 / r);
}

// Walks from each point up through its ancestors instead of scanning cubes,
// so that it shares no traversal with the library or the selftest.
inline double pointwise_seq_norm(const CoefficientSequence& lambda,
                                 const SpaceParams& prm) {
  const CubeFamily& fam = *lambda.family;
  const DyadicTree& tree = fam.tree();
  const QuasiMetricSpace& sp = tree.space();
  auto value = [&](int idx) { return std::abs(lambda.values[idx]); };

  std::vector<double> head_terms;
  std::map<int, std::vector<double>> blocks;
  for (int i = 0; i < static_cast<int>(fam.size()); ++i) {
    const FamilyCube& c = fam[static_cast<std::size_t>(i)];
    const double normalized = value(i) / std::sqrt(c.mass);
    if (c.scaling) {
      // mu(Q)^{1/p} |lambda| / sqrt(mu(Q)) is the L^p norm of lambda 1~_Q
      head_terms.push_back(std::isinf(prm.p) ? normalized
                                             : std::pow(c.mass, 1.0 / prm.p) * normalized);
    } else {
      blocks[c.scale].push_back(std::isinf(prm.p) ? normalized
                                                  : std::pow(c.mass, 1.0 / prm.p) * normalized);
    }
  }
  const double head = power_mean(head_terms, prm.p);

  if (prm.kind == SpaceKind::besov) {
    std::vector<double> outer;
    for (const auto& [k, terms] : blocks)
      outer.push_back(std::pow(tree.delta(), -k * prm.s) * power_mean(terms, prm.p));
    return head + power_mean(outer, prm.q);
  }

  std::vector<double> at_point;
  for (int x = 0; x < sp.n(); ++x) {
    std::vector<double> column;
    for (int level = tree.k_min(); level <= tree.k_max(); ++level) {
      const int center = tree.cube(tree.cube_of(level, x)).center;
      const int idx = fam.find(level, center);
      if (idx < 0 || fam[static_cast<std::size_t>(idx)].scaling) continue;
      const FamilyCube& c = fam[static_cast<std::size_t>(idx)];
      column.push_back(std::pow(tree.delta(), -c.scale * prm.s) * value(idx) /
                       std::sqrt(c.mass));
    }
    at_point.push_back(std::pow(sp.weight(x), 1.0 / prm.p) * power_mean(column, prm.q));
  }
  return head + power_mean(at_point, prm.p);
}

}  // namespace homtype::testing
