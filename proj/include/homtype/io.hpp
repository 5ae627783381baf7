#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "homtype/almost_diag.hpp"
#include "homtype/lp_functionals.hpp"
#include "homtype/molecules.hpp"

namespace homtype::io {

/// `id,x1,...,xd[,weight]` with a header row. Locale independent; every
/// rejected row is reported with its 1-based line number.
PointSet parse_points_csv(std::istream& in, const std::string& source = "<input>");
PointSet read_points_csv(const std::filesystem::path& path);

/// First line n, then n whitespace-separated rows. Asymmetry up to
/// `tolerance * max(1, max |d|)` is averaged away; larger asymmetry throws.
Matrix parse_distance_matrix(std::istream& in, double tolerance = 1e-8,
                             const std::string& source = "<input>");
Matrix read_distance_matrix(const std::filesystem::path& path,
                            double tolerance = 1e-8);

/// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

/// `level,alpha,value`; alpha is the point id of the cube center.
void write_coefficients_csv(std::ostream& out, const CoefficientSequence& seq);
CoefficientSequence parse_coefficients_csv(std::istream& in,
                                           const FamilyPtr& family,
                                           const std::string& source = "<input>");

/// `qlevel,qalpha,plevel,palpha,value`, nonzero entries only.
void write_operator_csv(std::ostream& out, const CubeOperator& op);
CubeOperator parse_operator_csv(std::istream& in, const FamilyPtr& family,
                                const std::string& source = "<input>");

/// `point_id,value`.
void write_vector_csv(std::ostream& out, const QuasiMetricSpace& space,
                      const Vector& v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace homtype::io
