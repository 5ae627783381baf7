#include "homtype/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "homtype/battery.hpp"
#include "homtype/io.hpp"

namespace homtype::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  // space
  std::string points;
  std::string matrix;
  std::string builtin = "line:64";
  std::string metric = "euclidean";
  double theta = 1.0;
  // dyadic
  double delta = 0.125;
  double c0 = 1.0;
  double C0 = 1.0;
  int j0 = 1;
  std::optional<int> kmin;
  std::optional<int> kmax;
  // wavelets
  std::string backend = "haar";
  double nu = 4.0;
  double a = 1.0;
  std::optional<double> nu_prime;
  bool export_kernels = false;
  // seq_spaces
  std::string s = "0";
  std::string p = "2";
  std::string q = "2";
  std::string kind = "besov";
  std::string homogeneity = "homogeneous";
  double beta = 0.45;
  double gamma = 0.45;
  double eta = 0.5;
  std::optional<double> omega;
  std::optional<double> omega0;
  int n_cutoff = -1;
  std::string coeffs;
  std::string function;
  // almost_diag
  double eps = 0.5;
  int trials = 200;
  double density = 0.3;
  std::string op;
  // molecules
  std::string mol_family = "canonical";
  double mol_beta = 0.45;
  double mol_Gamma = 0.45;
  double amplitude = 0.1;
  // lp_functionals
  double lambda = 4.0;
  int ensemble = 100;
  std::vector<double> thetas{1.0, 2.0, 4.0, 8.0};
  bool pointwise = false;
  // run
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string outdir = "out";
  int selftest_points = 64;
};

/// Accepts decimals, "inf" and simple fractions such as "2/3".
double parse_real(const std::string& text, const char* what) {
  auto one = [&](const std::string& t) {
    std::istringstream in(t);
    in.imbue(std::locale::classic());
    if (t == "inf" || t == "+inf" || t == "infinity") return kInf;
    double v = 0.0;
    in >> v;
    if (!in || !in.eof()) throw ValidationError(fmt::format("bad value for {}: '{}'", what, text));
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return one(text);
  const double den = one(text.substr(slash + 1));
  if (den == 0.0) throw ValidationError(fmt::format("zero denominator in {}", what));
  return one(text.substr(0, slash)) / den;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item, what));
  return out;
}

void load_ini(const std::string& path, RunConfig& c) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("config {}: {}", path, e.what()));
  }
  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string v = node.get_value<std::string>();
      const std::string name = section + "." + key;
      auto real = [&] { return parse_real(v, name.c_str()); };
      auto integer = [&] {
        const double d = real();
        if (d != std::floor(d)) throw ValidationError(fmt::format("{} must be an integer", name));
        return static_cast<int>(d);
      };
      if (name == "space.points") c.points = v;
      else if (name == "space.matrix") c.matrix = v;
      else if (name == "space.builtin") c.builtin = v;
      else if (name == "space.metric") c.metric = v;
      else if (name == "space.theta") c.theta = real();
      else if (name == "dyadic.delta") c.delta = real();
      else if (name == "dyadic.c0") c.c0 = real();
      else if (name == "dyadic.C0") c.C0 = real();
      else if (name == "dyadic.j0") c.j0 = integer();
      else if (name == "dyadic.kmin") c.kmin = integer();
      else if (name == "dyadic.kmax") c.kmax = integer();
      else if (name == "wavelets.backend") c.backend = v;
      else if (name == "wavelets.nu") c.nu = real();
      else if (name == "wavelets.a") c.a = real();
      else if (name == "wavelets.nu_prime") c.nu_prime = real();
      else if (name == "seq_spaces.s") c.s = v;
      else if (name == "seq_spaces.p") c.p = v;
      else if (name == "seq_spaces.q") c.q = v;
      else if (name == "seq_spaces.kind") c.kind = v;
      else if (name == "seq_spaces.homogeneity") c.homogeneity = v;
      else if (name == "seq_spaces.beta") c.beta = real();
      else if (name == "seq_spaces.gamma") c.gamma = real();
      else if (name == "seq_spaces.eta") c.eta = real();
      else if (name == "seq_spaces.omega") c.omega = real();
      else if (name == "seq_spaces.omega0") c.omega0 = real();
      else if (name == "seq_spaces.n_cutoff") c.n_cutoff = integer();
      else if (name == "seq_spaces.coeffs") c.coeffs = v;
      else if (name == "seq_spaces.function") c.function = v;
      else if (name == "almost_diag.eps") c.eps = real();
      else if (name == "almost_diag.trials") c.trials = integer();
      else if (name == "almost_diag.density") c.density = real();
      else if (name == "almost_diag.operator") c.op = v;
      else if (name == "molecules.family") c.mol_family = v;
      else if (name == "molecules.beta") c.mol_beta = real();
      else if (name == "molecules.Gamma") c.mol_Gamma = real();
      else if (name == "molecules.amplitude") c.amplitude = real();
      else if (name == "lp_functionals.lambda") c.lambda = real();
      else if (name == "lp_functionals.ensemble") c.ensemble = integer();
      else if (name == "lp_functionals.thetas") c.thetas = parse_list(v, "thetas");
      else if (name == "run.seed") c.seed = static_cast<std::uint64_t>(integer());
      else if (name == "run.threads") c.threads = static_cast<unsigned>(integer());
      else if (name == "run.out") c.outdir = v;
      else throw ValidationError(fmt::format("config {}: unknown key '{}'", path, name));
    }
  }
}

// ---- pipeline --------------------------------------------------------------

SpacePtr load_space(const RunConfig& c) {
  if (!c.points.empty() && !c.matrix.empty())
    throw ValidationError("give either --points or --matrix, not both");
  if (!c.matrix.empty()) {
    MetricSpec m;
    m.kind = MetricKind::explicit_matrix;
    m.matrix = io::read_distance_matrix(c.matrix);
    PointSet pts;
    for (Eigen::Index i = 0; i < m.matrix.rows(); ++i) pts.ids.push_back(std::to_string(i));
    return build_space(pts, m);
  }
  if (!c.points.empty()) {
    MetricSpec m;
    if (c.metric == "snowflake") {
      m.kind = MetricKind::snowflake;
      m.theta = c.theta;
    } else if (c.metric != "euclidean") {
      throw ValidationError(fmt::format("unknown metric '{}'", c.metric));
    }
    return build_space(io::read_points_csv(c.points), m);
  }
  const auto colon = c.builtin.find(':');
  const std::string name = c.builtin.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : c.builtin.substr(colon + 1);
  auto count = [&](const std::string& t, int fallback) {
    if (t.empty()) return fallback;
    const double v = parse_real(t, "builtin size");
    if (v != std::floor(v) || v < 1) throw ValidationError("builtin size must be a positive integer");
    return static_cast<int>(v);
  };
  if (name == "line") {
    const int n = count(arg, 64);
    return builtin_line(n, 1.0 / n);
  }
  if (name == "cloud") return builtin_cloud(count(arg, 100), c.seed);
  if (name == "grid") {
    const auto x = arg.find('x');
    if (x == std::string::npos) throw ValidationError("grid needs ROWSxCOLS");
    return builtin_grid(count(arg.substr(0, x), 8), count(arg.substr(x + 1), 8));
  }
  throw ValidationError(fmt::format("unknown builtin space '{}'", c.builtin));
}

struct Pipeline {
  SpacePtr space;
  DoublingProfile profile;
  TreePtr tree;
};

Pipeline build_pipeline(const RunConfig& c) {
  Pipeline pl;
  pl.space = load_space(c);
  pl.profile = estimate_doubling(*pl.space);
  NetSystem net = build_nets(*pl.space, c.delta, c.c0, c.C0);
  if (c.kmin || c.kmax) widen_range(net, c.kmin.value_or(net.k_min), c.kmax.value_or(net.k_max));
  pl.tree = build_tree(pl.space, std::move(net));
  return pl;
}

BasisPtr build_basis(const RunConfig& c, const TreePtr& tree) {
  if (c.backend == "haar") return build_haar(tree);
  if (c.backend == "smoothed") return build_smoothed(tree, c.nu, c.a);
  throw ValidationError(fmt::format("unknown backend '{}'", c.backend));
}

SpaceParams make_params(const RunConfig& c, const Pipeline& pl) {
  SpaceParams p;
  p.s = parse_real(c.s, "s");
  p.p = parse_real(c.p, "p");
  p.q = parse_real(c.q, "q");
  if (c.kind == "besov") p.kind = SpaceKind::besov;
  else if (c.kind == "tl" || c.kind == "triebel_lizorkin") p.kind = SpaceKind::triebel_lizorkin;
  else throw ValidationError(fmt::format("unknown kind '{}'", c.kind));
  if (c.homogeneity == "homogeneous") p.homogeneity = Homogeneity::homogeneous;
  else if (c.homogeneity == "inhomogeneous") p.homogeneity = Homogeneity::inhomogeneous;
  else throw ValidationError(fmt::format("unknown homogeneity '{}'", c.homogeneity));
  p.beta = c.beta;
  p.gamma = c.gamma;
  p.eta = c.eta;
  p.eps_ad = c.eps;
  p.lambda_ap = c.lambda;
  p.n_cutoff = c.n_cutoff;
  p.j0 = c.j0;
  p.omega = c.omega.value_or(pl.profile.omega);
  p.omega0 = c.omega0.value_or(std::min(pl.profile.omega0, p.omega));
  return p;
}

Json params_json(const SpaceParams& p) {
  Json j;
  j["s"] = num(p.s);
  j["p"] = num(p.p);
  j["q"] = num(p.q);
  j["kind"] = p.kind == SpaceKind::besov ? "besov" : "triebel_lizorkin";
  j["homogeneity"] = p.homogeneity == Homogeneity::homogeneous ? "homogeneous" : "inhomogeneous";
  j["beta"] = num(p.beta);
  j["gamma"] = num(p.gamma);
  j["eta"] = num(p.eta);
  j["eps"] = num(p.eps_ad);
  j["omega"] = num(p.omega);
  j["omega0"] = num(p.omega0);
  j["lambda"] = num(p.lambda_ap);
  j["n_cutoff"] = p.n_cutoff;
  j["j0"] = p.j0;
  return j;
}

Json space_json(const Pipeline& pl) {
  Json j;
  j["points"] = pl.space->n();
  j["a0"] = num(pl.space->a0());
  j["a0_exact"] = pl.space->a0_exact();
  j["total_mass"] = num(pl.space->total_mass());
  j["diameter"] = num(pl.space->diam());
  j["doubling"] = {{"omega", num(pl.profile.omega)},
                   {"omega0", num(pl.profile.omega0)},
                   {"c_mu", num(pl.profile.c_mu)},
                   {"fit_rms", num(pl.profile.fit_rms)}};
  j["delta"] = num(pl.tree->delta());
  j["k_min"] = pl.tree->k_min();
  j["k_max"] = pl.tree->k_max();
  return j;
}

fs::path artifact_dir(const RunConfig& c, const std::string& sub) {
  const fs::path dir = fs::path(c.outdir) / sub;
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

template <typename Writer>
void write_csv(const fs::path& path, Writer&& w) {
  std::ostringstream s;
  w(s);
  io::write_text(path, s.str());
}

std::vector<std::string> id_list(const QuasiMetricSpace& sp, const std::vector<int>& idx) {
  std::vector<std::string> out;
  for (int i : idx) out.push_back(sp.ids()[static_cast<std::size_t>(i)]);
  return out;
}

Vector read_function(const std::string& path, const QuasiMetricSpace& sp) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path));
  std::map<std::string, int> idx;
  for (int i = 0; i < sp.n(); ++i) idx[sp.ids()[static_cast<std::size_t>(i)]] = i;
  Vector f = Vector::Zero(sp.n());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.rfind("point_id", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError(fmt::format("{}:{}: expected point_id,value", path, lineno));
    const auto it = idx.find(line.substr(0, comma));
    if (it == idx.end())
      throw ValidationError(fmt::format("{}:{}: unknown point '{}'", path, lineno, line.substr(0, comma)));
    f[it->second] = parse_real(line.substr(comma + 1), "function value");
  }
  return f;
}

Vector random_function(int n, std::uint64_t seed) {
  Rng rng = trial_rng(seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector f(n);
  for (int i = 0; i < n; ++i) f[i] = gauss(rng);
  return f;
}

// ---- subcommands -----------------------------------------------------------

int cmd_build(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Pipeline pl = build_pipeline(c);
  const DyadicTree& tree = *pl.tree;
  const QuasiMetricSpace& sp = *pl.space;
  const DyadicCheck chk = verify_dyadic(tree);
  const SandwichReport& sw = tree.sandwich();
  const Refinement ref = refine(tree, c.j0);

  Json j;
  j["space"] = space_json(pl);
  j["checks"] = {{"separation", chk.separation}, {"covering", chk.covering},
                 {"nesting", chk.nesting},       {"partition", chk.partition},
                 {"monotone", chk.monotone},     {"sandwich", chk.sandwich}};
  j["sandwich"] = {{"c_natural", num(sw.c_natural)}, {"C_natural", num(sw.C_natural)},
                   {"inner", num(sw.inner)},         {"outer", num(sw.outer)},
                   {"hypothesis", sw.hypothesis},    {"holds", sw.holds}};
  Json levels = Json::array();
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    Json lv;
    lv["k"] = k;
    lv["net"] = id_list(sp, tree.net().A(k));
    lv["G"] = id_list(sp, tree.net().G(k));
    Json cubes = Json::array();
    for (int ci : tree.level_cubes(k)) {
      const Cube& cube = tree.cube(ci);
      Json cj;
      cj["center"] = sp.ids()[static_cast<std::size_t>(cube.center)];
      cj["parent_center"] = cube.parent < 0 ? Json(nullptr)
                                            : Json(sp.ids()[static_cast<std::size_t>(tree.cube(cube.parent).center)]);
      cj["mass"] = num(cube.mass);
      cj["points"] = id_list(sp, cube.points);
      cubes.push_back(std::move(cj));
    }
    lv["cubes"] = std::move(cubes);
    levels.push_back(std::move(lv));
  }
  j["levels"] = std::move(levels);
  Json wc = Json::array();
  for (const WaveletCube& w : tree.wavelet_cubes())
    wc.push_back({{"k", w.k}, {"level", w.level},
                  {"y", sp.ids()[static_cast<std::size_t>(w.center)]}, {"ell", num(w.ell)}});
  j["wavelet_cubes"] = std::move(wc);
  Json rt = Json::array();
  for (std::size_t ci = 0; ci < tree.cubes().size(); ++ci) {
    const Cube& cube = tree.cubes()[ci];
    std::vector<int> centers;
    for (int sc : ref.subcubes[ci]) centers.push_back(tree.cube(sc).center);
    rt.push_back({{"level", cube.level},
                  {"center", sp.ids()[static_cast<std::size_t>(cube.center)]},
                  {"subcubes", id_list(sp, centers)}});
  }
  j["refinement"] = {{"j0", ref.j0}, {"max_count", ref.max_count}, {"tables", std::move(rt)}};

  write_json(artifact_dir(c, "build") / "tree.json", j);
  if (!chk.sandwich)
    err << fmt::format("warning: sandwich constants not met (inner {:.6g}, outer {:.6g})\n",
                       sw.inner, sw.outer);
  out << fmt::format("{} points, levels {}..{}, {} wavelet cubes\n", sp.n(), tree.k_min(),
                     tree.k_max(), tree.wavelet_cubes().size());
  return chk.separation && chk.covering && chk.nesting && chk.partition && chk.monotone
             ? kOk
             : kCertificationFailure;
}

int cmd_wavelets(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  const BasisPtr basis = build_basis(c, pl.tree);
  const QuasiMetricSpace& sp = *pl.space;
  const DyadicTree& tree = *pl.tree;
  const fs::path dir = artifact_dir(c, "wavelets");

  auto dump_block = [&](const fs::path& path, const Matrix& m, const std::vector<int>& cols) {
    write_csv(path, [&](std::ostream& s) {
      s << "point_id";
      for (int a : cols) s << ',' << sp.ids()[static_cast<std::size_t>(a)];
      s << '\n';
      for (int x = 0; x < sp.n(); ++x) {
        s << sp.ids()[static_cast<std::size_t>(x)];
        for (Eigen::Index col = 0; col < m.cols(); ++col) s << ',' << io::format_double(m(x, col));
        s << '\n';
      }
    });
  };
  Json files = Json::array();
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    const std::string phi = fmt::format("phi_{}.csv", k);
    dump_block(dir / phi, basis->phi(k), tree.net().A(k));
    files.push_back({{"k", k}, {"kind", "phi"}, {"file", phi}});
    if (k < tree.k_max()) {
      const std::string psi = fmt::format("psi_{}.csv", k);
      dump_block(dir / psi, basis->psi(k), tree.net().G(k));
      files.push_back({{"k", k}, {"kind", "psi"}, {"file", psi}});
    }
  }
  const AtiKernels kernels = build_kernels(basis);
  if (c.export_kernels) {
    auto dump_kernel = [&](const fs::path& path, const Matrix& K) {
      write_csv(path, [&](std::ostream& s) {
        for (Eigen::Index r = 0; r < K.rows(); ++r) {
          for (Eigen::Index col = 0; col < K.cols(); ++col)
            s << (col ? "," : "") << io::format_double(K(r, col));
          s << '\n';
        }
      });
    };
    for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
      dump_kernel(dir / fmt::format("P_{}.csv", k), kernels.Pk(k));
      if (k < tree.k_max()) dump_kernel(dir / fmt::format("D_{}.csv", k), kernels.Dk(k));
    }
  }
  const DecayFit& fit = basis->decay();
  const double nu_prime = c.nu_prime.value_or(fit.nu_prime);
  Json iati = Json::array();
  bool pass = true;
  for (Homogeneity h : {Homogeneity::homogeneous, Homogeneity::inhomogeneous}) {
    const IatiReport rep = verify_exp_iati(kernels, h, nu_prime, fit.a, c.eta);
    Json rj;
    rj["kind"] = h == Homogeneity::homogeneous ? "homogeneous" : "inhomogeneous";
    rj["pass"] = rep.pass;
    for (const ConditionCheck& ck : rep.checks)
      rj["checks"].push_back({{"name", ck.name}, {"k", ck.k}, {"constant", num(ck.constant)},
                              {"sampled", ck.sampled}, {"pass", ck.pass}});
    iati.push_back(std::move(rj));
    pass = pass && rep.pass;
  }
  Json manifest;
  manifest["space"] = space_json(pl);
  manifest["backend"] = c.backend;
  manifest["nu"] = num(basis->nu());
  manifest["a"] = num(basis->a());
  manifest["decay"] = {{"C", num(fit.C)}, {"nu_prime", num(fit.nu_prime)}, {"a", num(fit.a)}};
  manifest["files"] = std::move(files);
  write_json(dir / "manifest.json", manifest);
  write_json(dir / "iati.json", {{"nu_prime", num(nu_prime)}, {"eta", num(c.eta)}, {"reports", iati}});
  out << fmt::format("{} basis, decay C = {:.6g}, nu' = {:.6g}, IATI {}\n", c.backend, fit.C,
                     fit.nu_prime, pass ? "pass" : "FAIL");
  return pass ? kOk : kCertificationFailure;
}

int cmd_norm(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  const SpaceParams prm = make_params(c, pl);
  const FamilyPtr fam = make_family(pl.tree, prm.homogeneity);
  const fs::path dir = artifact_dir(c, "norm");
  Json j;
  j["space"] = space_json(pl);
  j["params"] = params_json(prm);
  double value = 0.0;
  if (!c.coeffs.empty()) {
    require_valid(prm, ValidityScope::sequence);
    std::ifstream in(c.coeffs);
    if (!in) throw ValidationError(fmt::format("cannot open {}", c.coeffs));
    const CoefficientSequence lam = io::parse_coefficients_csv(in, fam, c.coeffs);
    value = seq_norm(lam, prm);
    j["source"] = "coefficients";
  } else {
    require_valid(prm, ValidityScope::function);
    const BasisPtr basis = build_basis(c, pl.tree);
    const Vector f = c.function.empty() ? random_function(pl.space->n(), c.seed)
                                        : read_function(c.function, *pl.space);
    const CoefficientSequence lam = analyze(*basis, fam, f);
    value = seq_norm(lam, prm);
    const AtiKernels kernels = build_kernels(basis);
    const Vector detail = f - apply_kernel(kernels.Pk(pl.tree->k_min()), *pl.space, f);
    j["source"] = c.function.empty() ? "random" : "function";
    j["detail_l2"] = num(pl.space->lp_norm(detail, 2.0));
    j["l2"] = num(pl.space->lp_norm(f, 2.0));
    write_csv(dir / "coefficients.csv", [&](std::ostream& s) { io::write_coefficients_csv(s, lam); });
  }
  j["norm"] = num(value);
  write_json(dir / "norm.json", j);
  out << io::format_double(value) << '\n';
  return kOk;
}

int cmd_ado(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  const SpaceParams prm = make_params(c, pl);
  const FamilyPtr fam = make_family(pl.tree, prm.homogeneity);
  const fs::path dir = artifact_dir(c, "ado-certify");
  Json j;
  j["space"] = space_json(pl);
  j["params"] = params_json(prm);
  if (!c.op.empty()) {
    require_valid(prm, ValidityScope::sequence);
    std::ifstream in(c.op);
    if (!in) throw ValidationError(fmt::format("cannot open {}", c.op));
    const CubeOperator op = io::parse_operator_csv(in, fam, c.op);
    const double K = ado_constant(op, prm);
    j["operator"] = c.op;
    j["K"] = num(K);
    j["almost_diagonal"] = std::isfinite(K);
    write_json(dir / "report.json", j);
    out << fmt::format("K = {}\n", io::format_double(K));
    return std::isfinite(K) ? kOk : kCertificationFailure;
  }
  const CertifyReport rep = certify_boundedness(fam, prm, c.trials, c.density, c.seed);
  j["trials"] = rep.trials;
  j["density"] = num(rep.density);
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
  j["preconditions"] = rep.preconditions;
  for (std::size_t t = 0; t < rep.ratios.size(); ++t)
    j["ratios"].push_back({{"all", num(rep.ratios[t])},
                           {"A0", num(rep.ratios_A0[t])},
                           {"A1", num(rep.ratios_A1[t])}});
  j["pass"] = rep.pass;
  write_json(dir / "report.json", j);
  out << fmt::format("empirical C = {:.6g} (T), {:.6g} (2T), {:.6g} (4T): {}\n", rep.sup_T,
                     rep.sup_2T, rep.sup_4T, rep.pass ? "pass" : "FAIL");
  return rep.pass ? kOk : kCertificationFailure;
}

int cmd_molecule(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  const SpaceParams prm = make_params(c, pl);
  require_valid(prm, ValidityScope::sequence);
  const FamilyPtr fam = make_family(pl.tree, prm.homogeneity);
  const BasisPtr basis = build_basis(c, pl.tree);
  const QuasiMetricSpace& sp = *pl.space;
  std::vector<Molecule> mols;
  if (c.mol_family == "canonical") mols = canonical_molecules(*fam, c.mol_beta, c.mol_Gamma);
  else if (c.mol_family == "basis") mols = basis_molecules(*basis, *fam, c.mol_beta, c.mol_Gamma);
  else if (c.mol_family == "perturbed")
    mols = perturbed_molecules(*fam, c.mol_beta, c.mol_Gamma, c.amplitude, c.seed);
  else throw ValidationError(fmt::format("unknown molecule family '{}'", c.mol_family));

  const fs::path dir = artifact_dir(c, "molecule");
  Json manifest = Json::array();
  bool verified = true;
  for (const Molecule& m : mols) {
    const FamilyCube& fc = (*fam)[static_cast<std::size_t>(m.index)];
    const MoleculeCheck chk = verify_molecule(*fam, m.index, m.values, m.beta, m.Gamma);
    const std::string file = fmt::format("molecule_{}_{}.csv", fc.level,
                                         sp.ids()[static_cast<std::size_t>(fc.center)]);
    write_csv(dir / file, [&](std::ostream& s) { io::write_vector_csv(s, sp, m.values); });
    manifest.push_back({{"cube", {{"level", fc.level},
                                  {"center", sp.ids()[static_cast<std::size_t>(fc.center)]},
                                  {"ell", num(fc.ell)}}},
                        {"beta", num(m.beta)},
                        {"Gamma", num(m.Gamma)},
                        {"kind", c.mol_family},
                        {"file", file},
                        {"constant", num(chk.C)},
                        {"integral", num(chk.integral)},
                        {"pass", chk.pass}});
    verified = verified && chk.pass;
  }
  write_json(dir / "manifest.json", manifest);

  const CubeOperator gram = molecule_wavelet_gram(*basis, fam, mols);
  write_csv(dir / "gram.csv", [&](std::ostream& s) { io::write_operator_csv(s, gram); });
  const double K = ado_constant(gram, prm);
  double worst = 0.0;
  Rng rng = trial_rng(c.seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Json ratios = Json::array();
  for (int t = 0; t < c.trials; ++t) {
    CoefficientSequence lam(fam);
    for (Eigen::Index i = 0; i < lam.values.size(); ++i) lam.values[i] = gauss(rng);
    const SynthesisReport rep = molecular_synthesis(*basis, lam, mols, prm);
    ratios.push_back(num(rep.ratio));
    worst = std::max(worst, rep.ratio);
  }
  Json report;
  report["space"] = space_json(pl);
  report["params"] = params_json(prm);
  report["family"] = c.mol_family;
  report["verified"] = verified;
  report["gram"] = {{"eps", num(prm.eps_ad)}, {"eps_upper", num(gram_eps_upper(prm))}, {"K", num(K)}};
  report["synthesis"] = {{"trials", c.trials}, {"max_ratio", num(worst)}, {"ratios", ratios}};
  const bool pass = verified && std::isfinite(K) && std::isfinite(worst);
  report["pass"] = pass;
  write_json(dir / "report.json", report);
  out << fmt::format("{} molecules, verified {}, gram K = {:.6g}, max synthesis ratio {:.6g}\n",
                     mols.size(), verified ? "yes" : "no", K, worst);
  return pass ? kOk : kCertificationFailure;
}

int cmd_lp(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  SpaceParams prm = make_params(c, pl);
  prm.kind = SpaceKind::triebel_lizorkin;
  const BasisPtr basis = build_basis(c, pl.tree);
  const AtiKernels kernels = build_kernels(basis);
  const LpReport rep = equivalence_report(*basis, kernels, prm, c.ensemble, c.seed);
  const fs::path dir = artifact_dir(c, "lp-report");
  Json j;
  j["space"] = space_json(pl);
  j["params"] = params_json(prm);
  j["lambda_threshold"] = num(rep.lambda_threshold);
  j["lambda_in_window"] = rep.lambda_in_window;
  for (const FunctionNorms& fn : rep.norms)
    j["norms"].push_back({{"wavelet", num(fn.wavelet)}, {"g", num(fn.g)},
                          {"area", num(fn.area)}, {"g_star", num(fn.g_star)}});
  for (const RatioBand& b : rep.bands)
    j["bands"].push_back({{"name", b.name}, {"min", num(b.min)}, {"max", num(b.max)},
                          {"median", num(b.median)}, {"C", num(b.C)},
                          {"C_half", num(b.C_half)}, {"stable", b.stable}});
  j["g_matches_kernel_norm"] = rep.g_matches_kernel_norm;
  j["pass"] = rep.pass;
  write_json(dir / "report.json", j);
  if (c.pointwise && c.ensemble > 0) {
    const Vector f = make_ensemble(*basis, kernels, 1, c.seed).front();
    const Vector g = g_function(kernels, f, prm);
    const Vector S = lusin_area(kernels, f, prm);
    const Vector gs = g_lambda_star(kernels, f, prm);
    write_csv(dir / "pointwise.csv", [&](std::ostream& s) {
      s << "point_id,f,g,area,g_star\n";
      for (int x = 0; x < pl.space->n(); ++x)
        s << pl.space->ids()[static_cast<std::size_t>(x)] << ',' << io::format_double(f[x]) << ','
          << io::format_double(g[x]) << ',' << io::format_double(S[x]) << ','
          << io::format_double(gs[x]) << '\n';
    });
  }
  if (!rep.lambda_in_window)
    out << fmt::format("note: lambda = {:.6g} is outside the window (> {:.6g})\n", prm.lambda_ap,
                       rep.lambda_threshold);
  for (const RatioBand& b : rep.bands)
    out << fmt::format("{:>15}: C = {:.6g} ({})\n", b.name, b.C, b.stable ? "stable" : "unstable");
  return rep.pass ? kOk : kCertificationFailure;
}

int cmd_angle(const RunConfig& c, std::ostream& out, std::ostream&) {
  const Pipeline pl = build_pipeline(c);
  SpaceParams prm = make_params(c, pl);
  prm.kind = SpaceKind::triebel_lizorkin;
  const BasisPtr basis = build_basis(c, pl.tree);
  const AtiKernels kernels = build_kernels(basis);
  const AngleFit fit = change_of_angle_fit(*basis, kernels, prm, c.thetas, c.ensemble, c.seed);
  Json j;
  j["space"] = space_json(pl);
  j["params"] = params_json(prm);
  j["thetas"] = fit.thetas;
  j["slopes"] = Json::array();
  for (double s : fit.slopes) j["slopes"].push_back(num(s));
  j["max_slope"] = num(fit.max_slope);
  j["bound"] = num(fit.bound);
  j["pass"] = fit.pass;
  write_json(artifact_dir(c, "angle-fit") / "report.json", j);
  out << fmt::format("max slope {:.6g}, bound {:.6g}: {}\n", fit.max_slope, fit.bound,
                     fit.pass ? "pass" : "FAIL");
  return fit.pass ? kOk : kCertificationFailure;
}

int cmd_selftest(const RunConfig& c, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const int n = c.selftest_points;
  if (n < 2) throw ValidationError("selftest needs at least two points");
  const Workbench wb = make_workbench(builtin_line(n, 1.0 / n), c.delta);
  const std::vector<const Workbench*> spaces{&wb};

  std::vector<CheckResult> results;
  auto timed = [&](auto&& fn) {
    const auto t0 = clock::now();
    results.push_back(fn());
    err << fmt::format("criterion {} ({}): {:.2f} s\n", results.back().id, results.back().name,
                       std::chrono::duration<double>(clock::now() - t0).count());
  };
  timed([&] { return check_dyadic(spaces); });
  timed([&] { return check_haar(wb, 20, c.seed); });
  timed([&] { return check_norm_identity(wb, 20, c.seed); });
  timed([&] { return check_sequence_norms(10, c.seed, straight_loop_seq_norm); });
  // trial counts shrink with the square of the family size
  const int ad_trials = std::clamp(200 * 64 * 64 / (n * n), 10, 200);
  timed([&] { return check_almost_diagonal(wb, ad_trials, c.seed); });
  timed([&] { return check_synthesis(wb, 50, c.seed); });
  timed([&] { return check_gram(spaces); });
  timed([&] { return check_equivalence(wb, 60, c.seed); });
  timed([&] { return check_angle(spaces, 12, c.seed); });

  Json j;
  j["points"] = n;
  j["seed"] = c.seed;
  j["checks"] = Json::array();
  bool pass = true;
  for (const CheckResult& r : results) {
    j["checks"].push_back(to_json(r));
    pass = pass && r.pass;
    out << fmt::format("{} criterion {}: {}\n", r.pass ? "PASS" : "FAIL", r.id, r.name);
  }
  j["pass"] = pass;
  write_json(artifact_dir(c, "selftest") / "report.json", j);
  err << fmt::format("selftest total: {:.2f} s\n",
                     std::chrono::duration<double>(clock::now() - start).count());
  return pass ? kOk : kCertificationFailure;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  if (const char* env = std::getenv("HOMTYPE_SEED")) {
    try {
      c.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << fmt::format("error: HOMTYPE_SEED must be a non-negative integer, got '{}'\n", env);
      return kValidationFailure;
    }
  }
  try {
    if (auto cfg = find_config(args)) load_ini(*cfg, c);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }

  CLI::App app{"Function-space analysis on finite spaces of homogeneous type", "homtype"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "INI file; command-line flags override it");
  app.add_option("--seed", c.seed, "random seed (default: HOMTYPE_SEED or 0)");
  app.add_option("--threads", c.threads, "worker threads (0 = all cores)");
  app.add_option("--out", c.outdir, "artifact directory");
  app.add_option("--points", c.points, "point-cloud CSV (id,x1,...,xd[,weight])");
  app.add_option("--matrix", c.matrix, "distance-matrix file");
  app.add_option("--builtin", c.builtin, "line:N, grid:RxC or cloud:N");
  app.add_option("--metric", c.metric, "euclidean or snowflake");
  app.add_option("--theta", c.theta, "snowflake exponent in (0, 1]");
  app.add_option("--delta", c.delta, "scale base in (0, 1)");
  app.add_option("--c0", c.c0, "net separation constant");
  app.add_option("--C0", c.C0, "net covering constant");
  app.add_option("--j0", c.j0, "refinement depth");
  app.add_option("--kmin", c.kmin, "coarsest level (may only widen the range)");
  app.add_option("--kmax", c.kmax, "finest level (may only widen the range)");
  app.add_option("--backend", c.backend, "haar or smoothed");
  app.add_option("--nu", c.nu, "smoothed backend decay rate");
  app.add_option("--a", c.a, "smoothed backend decay power");
  app.add_option("--nu-prime", c.nu_prime, "decay rate used by the kernel checks");
  app.add_option("--s", c.s, "smoothness");
  app.add_option("--p", c.p, "integrability (number, fraction or inf)");
  app.add_option("--q", c.q, "summability (number, fraction or inf)");
  app.add_option("--kind", c.kind, "besov or tl");
  app.add_option("--homogeneity", c.homogeneity, "homogeneous or inhomogeneous");
  app.add_option("--beta", c.beta);
  app.add_option("--gamma", c.gamma);
  app.add_option("--eta", c.eta);
  app.add_option("--omega", c.omega, "override the estimated doubling exponent");
  app.add_option("--omega0", c.omega0, "override the estimated lower exponent");
  app.add_option("--ncutoff", c.n_cutoff, "inhomogeneous cutoff level (-1 = default)");
  app.add_option("--eps", c.eps, "almost-diagonal exponent");
  app.add_option("--trials", c.trials);
  app.add_option("--density", c.density, "fraction of nonzero operator entries");
  app.add_option("--lambda", c.lambda, "g*_lambda exponent");
  app.add_option("--ensemble", c.ensemble, "number of test functions");

  auto* build = app.add_subcommand("build", "dyadic cubes and tree export");
  auto* wavelets = app.add_subcommand("wavelets", "basis export and kernel checks");
  wavelets->add_flag("--export-kernels", c.export_kernels, "also write P_k and D_k as CSV");
  auto* norm = app.add_subcommand("norm", "Besov / Triebel-Lizorkin norm of a function or sequence");
  norm->add_option("--coeffs", c.coeffs, "coefficient CSV (level,alpha,value)");
  norm->add_option("--function", c.function, "function CSV (point_id,value)");
  auto* ado = app.add_subcommand("ado-certify", "almost-diagonal boundedness certification");
  ado->add_option("--operator", c.op, "operator CSV to measure instead of random sampling");
  auto* molecule = app.add_subcommand("molecule", "molecule families, Gram operator, synthesis");
  molecule->add_option("--family", c.mol_family, "canonical, basis or perturbed");
  molecule->add_option("--mbeta", c.mol_beta, "molecule Hoelder exponent");
  molecule->add_option("--mGamma", c.mol_Gamma, "molecule decay exponent");
  molecule->add_option("--amplitude", c.amplitude, "relative perturbation size");
  auto* lp = app.add_subcommand("lp-report", "square-function equivalence report");
  lp->add_flag("--pointwise", c.pointwise, "write per-point functionals of one test function");
  auto* angle = app.add_subcommand("angle-fit", "aperture growth of the area function");
  std::string thetas;
  angle->add_option("--thetas", thetas, "comma-separated apertures >= 1");
  auto* selftest = app.add_subcommand("selftest", "invariant battery on a built-in line");
  selftest->add_option("--size", c.selftest_points, "number of points of the line");
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }

  try {
    if (!thetas.empty()) c.thetas = parse_list(thetas, "thetas");
    set_thread_count(c.threads);
    if (*build) return cmd_build(c, out, err);
    if (*wavelets) return cmd_wavelets(c, out, err);
    if (*norm) return cmd_norm(c, out, err);
    if (*ado) return cmd_ado(c, out, err);
    if (*molecule) return cmd_molecule(c, out, err);
    if (*lp) return cmd_lp(c, out, err);
    if (*angle) return cmd_angle(c, out, err);
    if (*selftest) return cmd_selftest(c, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kCertificationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace homtype::cli
