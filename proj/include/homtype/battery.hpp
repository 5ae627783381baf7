#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "homtype/lp_functionals.hpp"
#include "homtype/molecules.hpp"

namespace homtype {

using Json = nlohmann::ordered_json;

/// Finite doubles as numbers, everything else as "inf" / "-inf" / "nan".
Json num(double v);

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  Json detail = Json::object();
};

/// Everything the battery needs about one test space.
struct Workbench {
  SpacePtr space;
  DoublingProfile profile;
  TreePtr tree;
  BasisPtr basis;
  AtiKernels kernels;
};

Workbench make_workbench(SpacePtr space, double delta = 0.125);

/// Reference sequence-norm evaluator used to cross-check seq_norm.
using SeqOracle = std::function<double(const CoefficientSequence&, const SpaceParams&)>;

/// One loop over points and cubes per norm, no shared code with seq_spaces.
double straight_loop_seq_norm(const CoefficientSequence& lambda,
                              const SpaceParams& params);

/// Net and cube properties, with c_natural = 1/3 and C_natural = 2 at A0 = 1.
CheckResult check_dyadic(const std::vector<const Workbench*>& spaces);
/// Orthonormality, cancellation, telescoping, conservation, Plancherel.
CheckResult check_haar(const Workbench& wb, int functions, std::uint64_t seed);
/// s = 0, p = q = 2 wavelet norm against the L2 norm of f - P_{k_min} f.
CheckResult check_norm_identity(const Workbench& wb, int functions,
                                std::uint64_t seed);
/// seq_norm against `oracle` over sparse random sequences on a 16-point line.
CheckResult check_sequence_norms(int sequences, std::uint64_t seed,
                                 const SeqOracle& oracle);
CheckResult check_almost_diagonal(const Workbench& wb, int trials,
                                  std::uint64_t seed);
CheckResult check_synthesis(const Workbench& wb, int trials, std::uint64_t seed);
CheckResult check_gram(const std::vector<const Workbench*>& spaces);
CheckResult check_equivalence(const Workbench& wb, int ensemble,
                              std::uint64_t seed);
CheckResult check_angle(const std::vector<const Workbench*>& spaces,
                        int ensemble, std::uint64_t seed);

Json to_json(const CheckResult& r);

}  // namespace homtype
