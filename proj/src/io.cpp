// SPDX-License-Identifier: Apache-2.0

#include "ks1d/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <system_error>

#include "ks1d/errors.hpp"

namespace ks1d
{

namespace
{

template <typename T>
void append_le(std::string &out, T value)
{
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
  {
    std::reverse(buf.begin(), buf.end());
  }
  out.append(reinterpret_cast<const char *>(buf.data()), sizeof(T));
}

template <typename T>
T read_le(std::string_view bytes, std::size_t &pos)
{
  if (pos + sizeof(T) > bytes.size())
  {
    throw ConfigError("binary payload is truncated");
  }
  std::array<unsigned char, sizeof(T)> buf;
  std::memcpy(buf.data(), bytes.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
  {
    std::reverse(buf.begin(), buf.end());
  }
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string format_double(double x)
{
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void atomic_write(const std::filesystem::path &path, std::string_view content)
{
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw ConfigError("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
    {
      throw ConfigError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
  {
    throw ConfigError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string field_csv(const Grid &grid, const Field &values, const std::string &value_header)
{
  if (values.size() != grid.n)
  {
    throw ConfigError("field size does not match the grid");
  }
  std::string out = "x," + value_header + "\n";
  for (int i = 0; i < grid.n; i++)
  {
    out += format_double(grid.nodes[i]);
    out += ',';
    out += format_double(values[i]);
    out += '\n';
  }
  return out;
}

std::string complex_field_csv(const Grid &grid, const ComplexField &values)
{
  if (values.size() != grid.n)
  {
    throw ConfigError("field size does not match the grid");
  }
  std::string out = "x,re,im\n";
  for (int i = 0; i < grid.n; i++)
  {
    out += format_double(grid.nodes[i]);
    out += ',';
    out += format_double(values[i].real());
    out += ',';
    out += format_double(values[i].imag());
    out += '\n';
  }
  return out;
}

std::string pair_density_csv(const Grid &grid, const Eigen::MatrixXd &values)
{
  if (values.rows() != grid.n || values.cols() != grid.n)
  {
    throw ConfigError("pair-density size does not match the grid");
  }
  std::string out = "x,y,value\n";
  for (int i = 0; i < grid.n; i++)
  {
    for (int j = 0; j < grid.n; j++)
    {
      out += format_double(grid.nodes[i]);
      out += ',';
      out += format_double(grid.nodes[j]);
      out += ',';
      out += format_double(values(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string history_csv(const std::string &header, const std::vector<double> &values)
{
  std::string out = "index," + header + "\n";
  for (std::size_t k = 0; k < values.size(); k++)
  {
    out += std::to_string(k);
    out += ',';
    out += format_double(values[k]);
    out += '\n';
  }
  return out;
}

nlohmann::json potential_to_json(const Grid &grid, const PotentialField &v)
{
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto &[idx, wgt] : v.atoms)
  {
    atoms.push_back({idx, wgt});
  }
  nlohmann::json smooth = nlohmann::json::array();
  for (int i = 0; i < grid.n; i++)
  {
    smooth.push_back(v.smooth[i]);
  }
  return {{"smooth", smooth}, {"atoms", atoms}, {"n", grid.n}};
}

PotentialField potential_from_json(const Grid &grid, const nlohmann::json &j)
{
  if (!j.is_object() || !j.contains("smooth"))
  {
    throw ConfigError("potential document needs a 'smooth' array");
  }
  if (j.contains("n") && j.at("n").get<int>() != grid.n)
  {
    throw ConfigError("potential document was sampled on a different grid");
  }
  const auto &smooth_j = j.at("smooth");
  if (!smooth_j.is_array() || static_cast<int>(smooth_j.size()) != grid.n)
  {
    throw ConfigError("potential 'smooth' must hold one sample per node");
  }
  Field smooth(grid.n);
  for (int i = 0; i < grid.n; i++)
  {
    smooth[i] = smooth_j.at(i).get<double>();
  }
  std::vector<std::pair<int, double>> atoms;
  if (j.contains("atoms"))
  {
    for (const auto &entry : j.at("atoms"))
    {
      if (!entry.is_array() || entry.size() != 2)
      {
        throw ConfigError("each atom must be a [node, weight] pair");
      }
      atoms.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
    }
  }
  return make_potential(grid, std::move(smooth), std::move(atoms));
}

std::string fermion_state_bytes(const FermionState &state)
{
  std::string out;
  out.reserve(16 + 16 * static_cast<std::size_t>(state.coeffs.size()));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(state.n));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(state.N));
  append_le<std::uint64_t>(out, static_cast<std::uint64_t>(state.coeffs.size()));
  for (Eigen::Index r = 0; r < state.coeffs.size(); r++)
  {
    append_le<double>(out, state.coeffs[r]);
    append_le<double>(out, 0.0);
  }
  return out;
}

FermionState fermion_state_from_bytes(std::string_view bytes)
{
  std::size_t pos = 0;
  FermionState state;
  state.n = static_cast<int>(read_le<std::uint32_t>(bytes, pos));
  state.N = static_cast<int>(read_le<std::uint32_t>(bytes, pos));
  const auto dim = read_le<std::uint64_t>(bytes, pos);
  if (bytes.size() != pos + 16 * dim)
  {
    throw ConfigError("state payload size disagrees with its header");
  }
  state.coeffs.resize(static_cast<Eigen::Index>(dim));
  for (std::uint64_t r = 0; r < dim; r++)
  {
    state.coeffs[static_cast<Eigen::Index>(r)] = read_le<double>(bytes, pos);
    (void)read_le<double>(bytes, pos);  // imaginary half, zero for real states
  }
  return state;
}

nlohmann::json spectral_summary_json(const SpectralSolution &sol)
{
  nlohmann::json excited = nlohmann::json::array();
  for (double e : sol.excited_energies())
  {
    excited.push_back(e);
  }
  return {{"energy", sol.energy()},
          {"gap", sol.gap()},
          {"dim", sol.ham().dim()},
          {"n", sol.ham().grid.n},
          {"N", sol.ham().N},
          {"state_norm", sol.psi0().coeffs.norm()},
          {"excited_energies", excited}};
}

std::string response_matrix_bytes(const ResponseMatrix &rm)
{
  std::string out;
  const auto m = static_cast<std::uint64_t>(rm.M.rows());
  out.reserve(8 + 8 * m * m + 32);
  append_le<std::uint64_t>(out, m);
  for (Eigen::Index c = 0; c < rm.M.cols(); c++)
  {
    for (Eigen::Index r = 0; r < rm.M.rows(); r++)
    {
      append_le<double>(out, rm.M(r, c));
    }
  }
  append_le<double>(out, rm.sym_residual);
  append_le<double>(out, rm.eig_min);
  append_le<double>(out, rm.eig_max);
  append_le<double>(out, rm.cond);
  return out;
}

ResponseMatrix response_matrix_from_bytes(std::string_view bytes)
{
  std::size_t pos = 0;
  const auto m = read_le<std::uint64_t>(bytes, pos);
  if (bytes.size() != 8 + 8 * m * m + 32)
  {
    throw ConfigError("response payload size disagrees with its header");
  }
  ResponseMatrix rm;
  rm.M.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index c = 0; c < rm.M.cols(); c++)
  {
    for (Eigen::Index r = 0; r < rm.M.rows(); r++)
    {
      rm.M(r, c) = read_le<double>(bytes, pos);
    }
  }
  rm.sym_residual = read_le<double>(bytes, pos);
  rm.eig_min = read_le<double>(bytes, pos);
  rm.eig_max = read_le<double>(bytes, pos);
  rm.cond = read_le<double>(bytes, pos);
  return rm;
}

nlohmann::json response_condition_json(const ResponseMatrix &rm)
{
  return {{"size", rm.M.rows()},
          {"symmetry_residual", rm.sym_residual},
          {"eig_min", rm.eig_min},
          {"eig_max", rm.eig_max},
          {"condition", rm.cond}};
}

}  // namespace ks1d
