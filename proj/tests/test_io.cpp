// SPDX-License-Identifier: Apache-2.0
//
// Serialization: float formatting, CSV layouts, JSON and binary round-trips.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ks1d/io.hpp"

using namespace ks1d;

namespace
{

int count_lines(const std::string &s)
{
  int lines = 0;
  for (char c : s)
  {
    if (c == '\n')
    {
      lines++;
    }
  }
  return lines;
}

}  // namespace

TEST_CASE("float formatting is shortest and round-trips exactly")
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; trial++)
  {
    const double x = dist(rng) * std::pow(10.0, trial % 30 - 15);
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_double(0.125) == "0.125");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
}

TEST_CASE("CSV layouts carry the right shapes")
{
  const Grid grid = make_grid(8);
  Field f(8);
  for (int i = 0; i < 8; i++)
  {
    f[i] = i * 0.5;
  }

  const std::string csv = field_csv(grid, f, "rho");
  CHECK(count_lines(csv) == 9);  // header + 8 rows
  CHECK(csv.rfind("x,rho\n", 0) == 0);
  CHECK(csv.find("0.0625,0") != std::string::npos);

  ComplexField cf(8);
  for (int i = 0; i < 8; i++)
  {
    cf[i] = Complex(i, -i * 0.5);
  }
  const std::string ccsv = complex_field_csv(grid, cf);
  CHECK(count_lines(ccsv) == 9);
  CHECK(ccsv.rfind("x,re,im\n", 0) == 0);

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(8, 8);
  P(2, 3) = 1.25;
  const std::string pcsv = pair_density_csv(grid, P);
  CHECK(count_lines(pcsv) == 65);  // header + 64 rows
  CHECK(pcsv.rfind("x,y,value\n", 0) == 0);
  CHECK(pcsv.find("1.25") != std::string::npos);

  const std::string h = history_csv("residual", {1.0, 0.5});
  CHECK(h == "index,residual\n0,1\n1,0.5\n");
}

TEST_CASE("potential JSON round-trip preserves atoms and samples")
{
  const Grid grid = make_grid(8);
  Field smooth(8);
  for (int i = 0; i < 8; i++)
  {
    smooth[i] = std::sin(i * 0.7);
  }
  const PotentialField v = make_potential(grid, smooth, {{2, 0.5}, {5, -1.25}});

  const nlohmann::json j = potential_to_json(grid, v);
  CHECK(j.at("n").get<int>() == 8);
  const PotentialField back = potential_from_json(grid, j);
  CHECK((back.smooth - v.smooth).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.atoms.size() == 2);
  CHECK(back.atoms[0].first == v.atoms[0].first);
  CHECK(back.atoms[0].second == v.atoms[0].second);

  // Grid mismatch and malformed documents are rejected.
  const Grid other = make_grid(16);
  CHECK_THROWS_AS(potential_from_json(other, j), ConfigError);
  CHECK_THROWS_AS(potential_from_json(grid, nlohmann::json::parse(R"({"n": 8})")),
                  ConfigError);
}

TEST_CASE("state binary container round-trips and rejects truncation")
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  FermionState state;
  state.n = 8;
  state.N = 2;
  state.coeffs.resize(28);
  for (int i = 0; i < 28; i++)
  {
    state.coeffs[i] = dist(rng);
  }
  state.coeffs.normalize();

  const std::string bytes = fermion_state_bytes(state);
  CHECK(bytes.size() == 4 + 4 + 8 + 28 * 16);
  const FermionState back = fermion_state_from_bytes(bytes);
  CHECK(back.n == 8);
  CHECK(back.N == 2);
  CHECK((back.coeffs - state.coeffs).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(fermion_state_from_bytes(std::string_view(bytes).substr(0, 40)),
                  ConfigError);
  CHECK_THROWS_AS(fermion_state_from_bytes(std::string_view(bytes).substr(0, 10)),
                  ConfigError);
}

TEST_CASE("response matrix binary container keeps entries and diagnostics")
{
  ResponseMatrix rm;
  rm.M.resize(3, 3);
  rm.M << -2.0, 0.1, 0.0, 0.1, -1.5, 0.2, 0.0, 0.2, -3.0;
  rm.sym_residual = 1e-12;
  rm.eig_max = -0.5;
  rm.eig_min = -3.2;
  rm.cond = 6.4;

  const std::string bytes = response_matrix_bytes(rm);
  const ResponseMatrix back = response_matrix_from_bytes(bytes);
  CHECK((back.M - rm.M).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.sym_residual == rm.sym_residual);
  CHECK(back.eig_max == rm.eig_max);
  CHECK(back.eig_min == rm.eig_min);
  CHECK(back.cond == rm.cond);

  CHECK_THROWS_AS(response_matrix_from_bytes(std::string_view(bytes).substr(0, 16)),
                  ConfigError);

  const nlohmann::json j = response_condition_json(rm);
  CHECK(j.at("condition").get<double>() == 6.4);
}

TEST_CASE("atomic writes land complete and replace existing files")
{
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ks1d_io_test";
  fs::create_directories(dir);
  const fs::path target = dir / "out.csv";

  atomic_write(target, "first\n");
  atomic_write(target, "second version\n");
  std::ifstream in(target);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "second version\n");
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));

  // Writing into a missing directory fails loudly.
  CHECK_THROWS_AS(atomic_write(dir / "nope" / "out.csv", "x"), ConfigError);
  fs::remove_all(dir);
}
