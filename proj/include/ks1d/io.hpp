// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_IO_HPP
#define KS1D_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ks1d/complex_ext.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/linear_response.hpp"
#include "ks1d/manybody.hpp"

namespace ks1d
{

// Shortest decimal representation that round-trips to the same double; the
// one float-formatting rule used by every text output.
std::string format_double(double x);

// Writes to a temporary sibling and renames into place, so readers never see
// a partial file.
void atomic_write(const std::filesystem::path &path, std::string_view content);

std::string field_csv(const Grid &grid, const Field &values,
                      const std::string &value_header = "value");
std::string complex_field_csv(const Grid &grid, const ComplexField &values);
std::string pair_density_csv(const Grid &grid, const Eigen::MatrixXd &values);
std::string history_csv(const std::string &header, const std::vector<double> &values);

nlohmann::json potential_to_json(const Grid &grid, const PotentialField &v);
PotentialField potential_from_json(const Grid &grid, const nlohmann::json &j);

// Binary container: u32 n, u32 N, u64 coefficient count, then little-endian
// f64 (real, imaginary) pairs. Real states store zero imaginary halves.
std::string fermion_state_bytes(const FermionState &state);
FermionState fermion_state_from_bytes(std::string_view bytes);

nlohmann::json spectral_summary_json(const SpectralSolution &sol);

// Binary container for the assembled response: u64 side length, little-endian
// f64 entries in column-major order, then the four diagnostic scalars
// (symmetry residual, extreme eigenvalues, condition number).
std::string response_matrix_bytes(const ResponseMatrix &rm);
ResponseMatrix response_matrix_from_bytes(std::string_view bytes);
nlohmann::json response_condition_json(const ResponseMatrix &rm);

}  // namespace ks1d

#endif  // KS1D_IO_HPP
