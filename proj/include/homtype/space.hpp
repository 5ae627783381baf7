#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homtype/common.hpp"

namespace homtype {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class MetricKind { euclidean, snowflake, explicit_matrix };

struct MetricSpec {
  MetricKind kind = MetricKind::euclidean;
  double theta = 1.0;  // snowflake exponent, in (0, 1]
  Matrix matrix;       // used by explicit_matrix
};

/// Input for build_space. Coordinates are required by the euclidean and
/// snowflake metrics; ids default to "0".."n-1"; weights default to 1.
struct PointSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> coords;
  std::vector<double> weights;
};

/// Finite quasi-metric measure space with an atomic measure. Immutable
/// after construction; share it through std::shared_ptr<const ...>.
class QuasiMetricSpace {
 public:
  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] int n() const { return static_cast<int>(weights_.size()); }

  [[nodiscard]] double dist(int i, int j) const { return dist_(i, j); }
  [[nodiscard]] const Matrix& distances() const { return dist_; }
  [[nodiscard]] double weight(int i) const { return weights_[i]; }
  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] double a0() const { return a0_; }
  [[nodiscard]] double total_mass() const { return total_mass_; }
  [[nodiscard]] double diam() const { return diam_; }
  [[nodiscard]] double min_separation() const { return min_sep_; }
  [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
  [[nodiscard]] const std::vector<std::vector<double>>& coords() const {
    return coords_;
  }
  /// true when a0 came from exhaustive triple enumeration
  [[nodiscard]] bool a0_exact() const { return a0_exact_; }

  /// mu(B(x, r)) for the open ball {y : d(y, x) < r}.
  [[nodiscard]] double ball_measure(int x, double r) const;
  /// V(x, y) = mu(B(x, d(x, y))), and 0 when x == y.
  [[nodiscard]] double mutual_volume(int x, int y) const;
  /// P_eps(x, y; r) = [V_r(x) + V(x, y)]^{-1} [r / (r + d(x, y))]^eps.
  [[nodiscard]] double kernel_P(double eps, int x, int y, double r) const;

  /// Point ids sorted by distance from x (ties by id), with matching
  /// sorted distances.
  [[nodiscard]] const std::vector<int>& order_from(int x) const {
    return order_[x];
  }
  [[nodiscard]] const std::vector<double>& sorted_distances(int x) const {
    return sorted_dist_[x];
  }

  // Lebesgue-type functionals against the atomic measure.
  [[nodiscard]] double integral(const Vector& f) const;
  [[nodiscard]] double inner(const Vector& f, const Vector& g) const;
  /// ||f||_{L^p}; p = infinity gives max |f|.
  [[nodiscard]] double lp_norm(const Vector& f, double p) const;

 private:
  friend std::shared_ptr<const QuasiMetricSpace> build_space(
      const PointSet&, const MetricSpec&, std::optional<double>);
  QuasiMetricSpace() = default;

  Matrix dist_;
  Vector weights_;
  std::vector<std::string> ids_;
  std::vector<std::vector<double>> coords_;
  double a0_ = 1.0;
  bool a0_exact_ = true;
  double total_mass_ = 0.0;
  double diam_ = 0.0;
  double min_sep_ = 0.0;
  std::vector<std::vector<int>> order_;
  std::vector<std::vector<double>> sorted_dist_;
  std::vector<std::vector<double>> cumulative_mass_;  // size n + 1 each
};

using SpacePtr = std::shared_ptr<const QuasiMetricSpace>;

/// Validates the inputs, computes the distance matrix and the smallest
/// verified quasi-triangle constant. Throws ValidationError.
SpacePtr build_space(const PointSet& points, const MetricSpec& metric,
                     std::optional<double> a0_hint = std::nullopt);

/// Exhaustive minimal A0 over all triples; exposed for diagnostics.
double exact_quasi_triangle_constant(const Matrix& dist);

/// Uniform points i * spacing on a line, unit weights.
SpacePtr builtin_line(int n, double spacing);
/// Uniform rows x cols grid with unit spacing, unit weights.
SpacePtr builtin_grid(int rows, int cols);
/// Uniform random points in the unit square, unit weights.
SpacePtr builtin_cloud(int n, std::uint64_t seed);

struct DoublingRecord {
  int center = 0;
  double radius = 0.0;
  double lambda = 0.0;
  double ratio = 0.0;  // mu(lambda B) / mu(B)
};

struct DoublingProfile {
  double c_mu = 1.0;
  double omega = 0.0;
  double omega0 = 0.0;
  double fit_rms = 0.0;
  std::vector<DoublingRecord> records;
};

/// Fits mu(lambda B) <= C lambda^omega mu(B) on a deterministic grid of
/// balls; c_mu is chosen so the inequality holds on every record.
DoublingProfile estimate_doubling(const QuasiMetricSpace& space,
                                  const std::vector<double>& lambda_grid = {
                                      2.0, 4.0, 8.0});

/// Hardy-Littlewood maximal function: exact sup over all distinct balls.
Vector maximal_function(const QuasiMetricSpace& space, const Vector& f);

struct FeffermanSteinReport {
  double p = 2.0;
  double u = 2.0;
  int families = 0;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  std::vector<double> ratios;
};

/// Ratio ||(sum M(f_j)^u)^{1/u}||_p / ||(sum |f_j|^u)^{1/u}||_p over random
/// finite families of `family_size` functions.
FeffermanSteinReport fefferman_stein_check(const QuasiMetricSpace& space,
                                           double p, double u, int families,
                                           int family_size,
                                           std::uint64_t seed);

}  // namespace homtype
