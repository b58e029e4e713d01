// SPDX-License-Identifier: Apache-2.0

#include "ks1d/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ks1d/complex_ext.hpp"
#include "ks1d/density_algebra.hpp"
#include "ks1d/errors.hpp"
#include "ks1d/functionals.hpp"
#include "ks1d/grid.hpp"
#include "ks1d/interaction.hpp"
#include "ks1d/inversion.hpp"
#include "ks1d/io.hpp"
#include "ks1d/linear_response.hpp"
#include "ks1d/manybody.hpp"
#include "ks1d/util.hpp"

namespace ks1d
{

namespace
{

using nlohmann::json;

struct CliArgs
{
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<unsigned> threads;
};

struct RunContext
{
  json config;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int threads = 1;
  std::optional<double> gap_floor;
  std::vector<std::string> files;  // manifest accumulator
};

json load_json_file(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open " + path.string());
  }
  try
  {
    return json::parse(in);
  }
  catch (const json::exception &e)
  {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void require_keys(const json &j, const std::set<std::string> &allowed, const std::string &where)
{
  if (!j.is_object())
  {
    throw ConfigError(where + " must be a JSON object");
  }
  for (const auto &item : j.items())
  {
    if (!allowed.count(item.key()))
    {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_field(const json &j, const std::string &key)
{
  if (!j.contains(key))
  {
    throw ConfigError("missing required config key '" + key + "'");
  }
  try
  {
    return j.at(key).get<T>();
  }
  catch (const json::exception &)
  {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_field_or(const json &j, const std::string &key, T fallback)
{
  if (!j.contains(key))
  {
    return fallback;
  }
  try
  {
    return j.at(key).get<T>();
  }
  catch (const json::exception &)
  {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

Grid grid_from(const RunContext &ctx)
{
  return make_grid(get_field<int>(ctx.config, "n"));
}

int particles_from(const RunContext &ctx)
{
  return get_field<int>(ctx.config, "N");
}

InteractionSpec interaction_from(const RunContext &ctx)
{
  if (!ctx.config.contains("interaction"))
  {
    throw ConfigError("missing required config key 'interaction'");
  }
  const json &j = ctx.config.at("interaction");
  require_keys(j, {"kind", "strength", "softening", "screening", "samples"}, "interaction");
  const auto kind = get_field<std::string>(j, "kind");
  if (kind == "soft_coulomb")
  {
    return InteractionSpec::soft_coulomb(get_field<double>(j, "strength"),
                                         get_field<double>(j, "softening"));
  }
  if (kind == "yukawa")
  {
    return InteractionSpec::yukawa(get_field<double>(j, "strength"),
                                   get_field<double>(j, "screening"));
  }
  if (kind == "contact")
  {
    return InteractionSpec::contact(get_field<double>(j, "strength"));
  }
  if (kind == "custom")
  {
    const auto rows = get_field<std::vector<std::vector<double>>>(j, "samples");
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd samples(m, m);
    for (Eigen::Index r = 0; r < m; r++)
    {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != m)
      {
        throw ConfigError("custom interaction samples must form a square matrix");
      }
      for (Eigen::Index c = 0; c < m; c++)
      {
        samples(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
    }
    return InteractionSpec::custom_kernel(std::move(samples));
  }
  throw ConfigError("unknown interaction kind '" + kind + "'");
}

Field cosine_sum(const Grid &grid, const std::vector<std::pair<int, double>> &modes)
{
  Field f = Field::Zero(grid.n);
  for (const auto &[k, amp] : modes)
  {
    if (k < 1 || k >= grid.n)
    {
      throw ConfigError("cosine mode index must lie in [1, n)");
    }
    for (int i = 0; i < grid.n; i++)
    {
      f[i] += amp * std::cos(k * M_PI * grid.nodes[i]);
    }
  }
  return f;
}

std::vector<std::pair<int, double>> mode_list(const json &j, const std::string &where)
{
  std::vector<std::pair<int, double>> modes;
  if (!j.is_array())
  {
    throw ConfigError(where + " must be an array of [mode, amplitude] pairs");
  }
  for (const auto &entry : j)
  {
    if (!entry.is_array() || entry.size() != 2)
    {
      throw ConfigError(where + " must be an array of [mode, amplitude] pairs");
    }
    modes.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
  }
  return modes;
}

PotentialField potential_from(const RunContext &ctx, const Grid &grid)
{
  if (!ctx.config.contains("potential"))
  {
    throw ConfigError("missing required config key 'potential'");
  }
  const json &j = ctx.config.at("potential");
  require_keys(j, {"smooth", "atoms", "file", "cosine"}, "potential");
  const int sources =
      static_cast<int>(j.contains("smooth")) + static_cast<int>(j.contains("file")) +
      static_cast<int>(j.contains("cosine"));
  if (sources != 1)
  {
    throw ConfigError("potential needs exactly one of 'smooth', 'file', 'cosine'");
  }
  if (j.contains("file"))
  {
    return potential_from_json(grid, load_json_file(get_field<std::string>(j, "file")));
  }
  Field smooth;
  if (j.contains("cosine"))
  {
    smooth = cosine_sum(grid, mode_list(j.at("cosine"), "potential.cosine"));
  }
  else
  {
    const auto values = get_field<std::vector<double>>(j, "smooth");
    if (static_cast<int>(values.size()) != grid.n)
    {
      throw ConfigError("potential 'smooth' must hold one sample per node");
    }
    smooth = Eigen::Map<const Field>(values.data(), grid.n);
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

DensityField density_from_csv(const Grid &grid, const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open " + path.string());
  }
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line))
  {
    if (line.empty())
    {
      continue;
    }
    if (first)
    {
      first = false;
      if (line.find_first_not_of("0123456789+-.eE, \r") != std::string::npos)
      {
        continue;  // header row
      }
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
    {
      throw ConfigError("density CSV rows need two columns: " + path.string());
    }
    std::string cell = line.substr(comma + 1);
    if (const auto second = cell.find(','); second != std::string::npos)
    {
      cell = cell.substr(0, second);
    }
    double value = 0.0;
    const auto *begin = cell.data();
    const auto *end = cell.data() + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t'))
    {
      begin++;
    }
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc())
    {
      throw ConfigError("cannot parse density value '" + cell + "' in " + path.string());
    }
    values.push_back(value);
  }
  if (static_cast<int>(values.size()) != grid.n)
  {
    throw ConfigError("density CSV holds " + std::to_string(values.size()) +
                      " rows but the grid has " + std::to_string(grid.n));
  }
  return DensityField{Eigen::Map<const Field>(values.data(), grid.n)};
}

DensityField density_from(const RunContext &ctx, const Grid &grid, int N)
{
  if (!ctx.config.contains("density"))
  {
    throw ConfigError("missing required config key 'density'");
  }
  const json &j = ctx.config.at("density");
  require_keys(j, {"values", "file", "cosine", "normalize"}, "density");
  const int sources = static_cast<int>(j.contains("values")) +
                      static_cast<int>(j.contains("file")) +
                      static_cast<int>(j.contains("cosine"));
  if (sources != 1)
  {
    throw ConfigError("density needs exactly one of 'values', 'file', 'cosine'");
  }
  DensityField rho;
  if (j.contains("file"))
  {
    rho = density_from_csv(grid, get_field<std::string>(j, "file"));
  }
  else if (j.contains("cosine"))
  {
    Field f = cosine_sum(grid, mode_list(j.at("cosine"), "density.cosine"));
    rho.values = static_cast<double>(N) * (Field::Ones(grid.n) + f);
  }
  else
  {
    const auto values = get_field<std::vector<double>>(j, "values");
    if (static_cast<int>(values.size()) != grid.n)
    {
      throw ConfigError("density 'values' must hold one sample per node");
    }
    rho.values = Eigen::Map<const Field>(values.data(), grid.n);
  }
  if (get_field_or<bool>(j, "normalize", false))
  {
    const double mass = integrate(grid, rho.values);
    if (!(mass > 0.0))
    {
      throw ConfigError("cannot normalize a density with non-positive mass");
    }
    rho.values *= static_cast<double>(N) / mass;
  }
  return rho;
}

SolverOptions solver_options(const RunContext &ctx)
{
  SolverOptions opts;
  if (ctx.gap_floor.has_value())
  {
    opts.gap_floor = *ctx.gap_floor;
  }
  return opts;
}

InversionOptions inversion_options(const RunContext &ctx)
{
  InversionOptions opts;
  opts.tol = ctx.tol;
  opts.threads = ctx.threads;
  opts.solver = solver_options(ctx);
  return opts;
}

void emit(RunContext &ctx, const std::string &name, std::string_view content)
{
  atomic_write(ctx.out / name, content);
  ctx.files.push_back(name);
}

void emit_json(RunContext &ctx, const std::string &name, const json &doc)
{
  emit(ctx, name, doc.dump(2) + "\n");
}

void finish_run(RunContext &ctx, const std::string &command)
{
  json resolved = ctx.config;
  resolved["seed"] = ctx.seed;
  resolved["tol"] = ctx.tol;
  resolved["threads"] = ctx.threads;
  if (ctx.gap_floor.has_value())
  {
    resolved["gap_floor"] = *ctx.gap_floor;
  }
  emit_json(ctx, "resolved_config.json", resolved);
  json manifest = {{"version", kVersion}, {"command", command}, {"files", ctx.files}};
  atomic_write(ctx.out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "command=" << command << " seed=" << ctx.seed << " tol=" << format_double(ctx.tol)
            << " threads=" << ctx.threads << " out=" << ctx.out.string() << "\n";
}

void cmd_forward(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const double lambda = get_field_or<double>(ctx.config, "lambda", 0.0);
  const PotentialField v = potential_from(ctx, grid);

  const auto sol = ground_state(assemble_hamiltonian(grid, N, v, w, lambda, solver_options(ctx)),
                                solver_options(ctx), 1);
  const DensityField rho = dens(grid, *sol->ham().basis, sol->psi0().coeffs);

  emit(ctx, "density.csv", field_csv(grid, rho.values, "density"));
  emit(ctx, "state.bin", fermion_state_bytes(sol->psi0()));
  emit_json(ctx, "spectral.json", spectral_summary_json(*sol));
  if (N >= 2)
  {
    emit(ctx, "pair_density.csv",
         pair_density_csv(grid, pair_density(grid, *sol->ham().basis, sol->psi0().coeffs)));
  }
  finish_run(ctx, "forward");
}

void cmd_invert(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const double lambda = get_field_or<double>(ctx.config, "lambda", 0.0);
  const DensityField rho = density_from(ctx, grid, N);

  const InversionResult inv =
      invert_density(grid, N, rho, w, lambda, std::nullopt, inversion_options(ctx));

  emit(ctx, "potential.csv", field_csv(grid, inv.v.rep.smooth, "potential"));
  emit_json(ctx, "potential.json", potential_to_json(grid, inv.v.rep));
  emit(ctx, "residual_history.csv", history_csv("residual", inv.residual_history));
  emit(ctx, "gap_history.csv", history_csv("gap", inv.gap_history));
  emit(ctx, "density.csv", field_csv(grid, inv.final_density.values, "density"));
  emit_json(ctx, "result.json",
            {{"iterations", inv.iterations},
             {"final_residual", inv.residual_history.back()},
             {"final_gap", inv.gap_history.back()},
             {"halvings", inv.halvings}});
  finish_run(ctx, "invert");
}

void cmd_functionals(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const double lambda = get_field_or<double>(ctx.config, "lambda", 0.0);
  const DensityField rho = density_from(ctx, grid, N);

  FunctionalOptions opts;
  opts.inversion = inversion_options(ctx);
  opts.threads = ctx.threads;

  const LevyLiebResult ll = levy_lieb(grid, N, rho, w, lambda, opts);
  const double kinetic_ks = t_ks(grid, N, rho, opts);
  const double e_h = hartree_energy(grid, rho, w);
  const PotentialField vh = hartree_potential(grid, rho, w);
  const ExchangeReport ex = exchange_energy(grid, N, rho, w, opts);
  const QuotientPotential vx = exchange_potential(grid, N, rho, w, opts);

  emit(ctx, "hartree_potential.csv", field_csv(grid, vh.smooth, "hartree_potential"));
  emit(ctx, "exchange_potential.csv", field_csv(grid, vx.rep.smooth, "exchange_potential"));
  emit(ctx, "inverted_potential.csv", field_csv(grid, ll.v.rep.smooth, "potential"));
  emit_json(ctx, "result.json",
            {{"lambda", lambda},
             {"levy_lieb", {{"value", ll.value}, {"kinetic", ll.kinetic}, {"pair_term", ll.pair_term}}},
             {"t_ks", kinetic_ks},
             {"hartree_energy", e_h},
             {"exchange",
              {{"value", ex.value},
               {"pair_slope", ex.pair_slope},
               {"pair_slope_fd", ex.pair_slope_fd},
               {"fd_error_estimate", ex.fd_error_estimate}}},
             {"gap", ll.solution->gap()}});
  finish_run(ctx, "functionals");
}

void cmd_ac(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const auto lambda_grid = get_field<std::vector<double>>(ctx.config, "lambda_grid");
  const DensityField rho = density_from(ctx, grid, N);

  FunctionalOptions opts;
  opts.inversion = inversion_options(ctx);
  opts.threads = ctx.threads;
  const CouplingSweep sweep = ac_sweep(grid, N, rho, w, lambda_grid, opts);

  std::string csv = "lambda,f_ll,e_xc,e_h,gap\n";
  json errors = json::array();
  for (const CouplingSample &s : sweep.samples)
  {
    if (s.ok)
    {
      csv += format_double(s.lambda) + "," + format_double(s.f_value) + "," +
             format_double(s.e_xc) + "," + format_double(s.e_hartree) + "," +
             format_double(s.gap) + "\n";
    }
    else
    {
      errors.push_back({{"lambda", s.lambda}, {"error", s.error}});
    }
  }
  emit(ctx, "sweep.csv", csv);
  emit_json(ctx, "diagnostics.json",
            {{"t_ks", sweep.t_ks},
             {"hartree_energy", sweep.e_hartree},
             {"fit_degrees", sweep.fit_degrees},
             {"fit_rms", sweep.fit_rms},
             {"slope_defects", sweep.slope_defects},
             {"f_monotone", sweep.f_monotone},
             {"errors", errors}});
  finish_run(ctx, "ac");
}

void cmd_gl2(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const int n_states = get_field_or<int>(ctx.config, "n_states", 0);
  const DensityField rho = density_from(ctx, grid, N);

  FunctionalOptions opts;
  opts.inversion = inversion_options(ctx);
  opts.threads = ctx.threads;
  const Gl2Result gl2 = gl2_energy(grid, N, rho, w, n_states, opts);

  emit_json(ctx, "gl2.json",
            {{"value", gl2.value},
             {"terms", gl2.terms},
             {"partial_sums", gl2.partial_sums},
             {"tail_estimate", gl2.tail_estimate},
             {"states_used", gl2.states_used}});
  finish_run(ctx, "gl2");
}

void cmd_lipschitz(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const double lambda = get_field_or<double>(ctx.config, "lambda", 0.0);
  const DensityField rho = density_from(ctx, grid, N);

  LipschitzOptions opts;
  opts.ensemble = get_field_or<int>(ctx.config, "ensemble", opts.ensemble);
  opts.amplitudes = get_field_or<std::vector<double>>(ctx.config, "amplitudes", opts.amplitudes);
  opts.seed = ctx.seed;
  opts.threads = ctx.threads;
  opts.inversion = inversion_options(ctx);
  const LipschitzReport report = lipschitz_probe(grid, N, rho, w, lambda, opts);

  std::string csv = "sample,amplitude,ok,drho_h1,dv_quotient,ratio\n";
  json errors = json::array();
  for (const LipschitzSample &s : report.samples)
  {
    csv += std::to_string(s.sample) + "," + format_double(s.amplitude) + "," +
           (s.ok ? "1" : "0") + "," + format_double(s.drho_h1) + "," +
           format_double(s.dv_quotient) + "," + format_double(s.ratio) + "\n";
    if (!s.ok)
    {
      errors.push_back(
          {{"sample", s.sample}, {"amplitude", s.amplitude}, {"error", s.error}});
    }
  }
  emit(ctx, "samples.csv", csv);
  emit_json(ctx, "lipschitz.json",
            {{"amplitudes", report.amplitudes},
             {"max_ratio", report.max_ratio},
             {"min_ratio", report.min_ratio},
             {"stability", report.stability},
             {"norm_spread", report.norm_spread},
             {"rejected_draws", report.rejected_draws},
             {"errors", errors}});
  finish_run(ctx, "lipschitz");
}

Complex complex_from_config(const json &j, const std::string &key, Complex fallback)
{
  if (!j.contains(key))
  {
    return fallback;
  }
  const json &v = j.at(key);
  if (v.is_number())
  {
    return Complex(v.get<double>(), 0.0);
  }
  if (v.is_array() && v.size() == 2)
  {
    return Complex(v.at(0).get<double>(), v.at(1).get<double>());
  }
  throw ConfigError("config key '" + key + "' must be a number or an [re, im] pair");
}

void cmd_complex(RunContext &ctx)
{
  const Grid grid = grid_from(ctx);
  const int N = particles_from(ctx);
  const InteractionSpec w = interaction_from(ctx);
  const Complex lambda = complex_from_config(ctx.config, "lambda", Complex(0.0, 0.0));
  const PotentialField v_re = potential_from(ctx, grid);

  ComplexField smooth = v_re.smooth.cast<Complex>();
  std::vector<std::pair<int, Complex>> atoms;
  for (const auto &[idx, wgt] : v_re.atoms)
  {
    atoms.emplace_back(idx, Complex(wgt, 0.0));
  }
  if (ctx.config.contains("imag_potential"))
  {
    const json &ij = ctx.config.at("imag_potential");
    require_keys(ij, {"smooth", "cosine"}, "imag_potential");
    Field im;
    if (ij.contains("cosine"))
    {
      im = cosine_sum(grid, mode_list(ij.at("cosine"), "imag_potential.cosine"));
    }
    else
    {
      const auto values = get_field<std::vector<double>>(ij, "smooth");
      if (static_cast<int>(values.size()) != grid.n)
      {
        throw ConfigError("imag_potential 'smooth' must hold one sample per node");
      }
      im = Eigen::Map<const Field>(values.data(), grid.n);
    }
    smooth += Complex(0.0, 1.0) * im.cast<Complex>();
  }
  const ComplexPotential v = make_complex_potential(grid, std::move(smooth), std::move(atoms));

  ComplexGroundOptions ground;
  ground.solver = solver_options(ctx);
  const ComplexEigenSolution sol = complex_ground(grid, N, v, w, lambda, ground);
  const ComplexDensity rho = complex_density(grid, sol);

  ComplexInversionOptions copts;
  copts.tol = std::min(ctx.tol, copts.tol);
  copts.ground = ground;
  copts.real_start = inversion_options(ctx);
  copts.real_start.tol = 1e-9;
  const ComplexInversionResult roundtrip = complex_invert(grid, N, rho, w, lambda, std::nullopt, copts);
  const double distance =
      complex_quotient_distance(grid, roundtrip.v, complex_gauge_fix(grid, v));

  const EigenvaluePropertyReport eig_prop = eigenvalue_property_check(grid, sol, v);

  std::vector<std::pair<int, double>> dir_modes{{1, 1.0}};
  Complex dir_lambda(0.0, 0.0);
  std::vector<double> ladder{8e-3, 4e-3, 2e-3};
  if (ctx.config.contains("holomorphy"))
  {
    const json &hj = ctx.config.at("holomorphy");
    require_keys(hj, {"direction_cosine", "direction_lambda", "eps"}, "holomorphy");
    if (hj.contains("direction_cosine"))
    {
      dir_modes = mode_list(hj.at("direction_cosine"), "holomorphy.direction_cosine");
    }
    dir_lambda = complex_from_config(hj, "direction_lambda", dir_lambda);
    ladder = get_field_or<std::vector<double>>(hj, "eps", ladder);
  }
  const ComplexPotential dir =
      make_complex_potential(grid, cosine_sum(grid, dir_modes).cast<Complex>());
  HolomorphyOptions hopts;
  hopts.ground = ground;
  const HolomorphyReport holo =
      holomorphy_check(grid, N, v, w, lambda, dir, dir_lambda, ladder, hopts);
  hopts.conjugated_control = true;
  const HolomorphyReport control =
      holomorphy_check(grid, N, v, w, lambda, dir, dir_lambda, ladder, hopts);

  const auto holo_json = [](const HolomorphyReport &rep)
  {
    return json{{"eps", rep.eps},
                {"rho_residuals", rep.rho_residuals},
                {"f_residuals", rep.f_residuals},
                {"rho_orders", rep.rho_orders},
                {"f_orders", rep.f_orders},
                {"control", rep.control}};
  };
  const Complex mass = complex_integrate(grid, rho.values);
  emit(ctx, "complex_density.csv", complex_field_csv(grid, rho.values));
  emit_json(ctx, "complex_result.json",
            {{"energy", {sol.energy.real(), sol.energy.imag()}},
             {"realgap", sol.realgap},
             {"binorm_size", sol.binorm_size},
             {"binorm_defect", sol.binorm_defect},
             {"residual", sol.residual},
             {"density_mass", {mass.real(), mass.imag()}},
             {"roundtrip",
              {{"iterations", roundtrip.iterations},
               {"final_residual", roundtrip.residual_history.back()},
               {"distance_to_base", distance}}},
             {"eigenvalue_property",
              {{"bilinear", eig_prop.bilinear_residual},
               {"sesquilinear", eig_prop.sesquilinear_residual}}},
             {"holomorphy", holo_json(holo)},
             {"holomorphy_control", holo_json(control)}});
  finish_run(ctx, "complex");
}

const std::set<std::string> kKnownKeys = {
    "n",        "N",          "interaction", "lambda",        "lambda_grid", "potential",
    "density",  "n_states",   "ensemble",    "amplitudes",    "seed",        "tol",
    "threads",  "gap_floor",  "imag_potential", "holomorphy"};

RunContext make_context(const CliArgs &args)
{
  RunContext ctx;
  ctx.config = load_json_file(args.config_path);
  require_keys(ctx.config, kKnownKeys, "config");
  ctx.out = args.out_dir;
  ctx.seed = args.seed.value_or(get_field_or<std::uint64_t>(ctx.config, "seed", 0));
  ctx.tol = args.tol.value_or(get_field_or<double>(ctx.config, "tol", 1e-9));
  ctx.threads = static_cast<int>(
      args.threads.value_or(get_field_or<unsigned>(ctx.config, "threads", 1)));
  if (ctx.threads < 1)
  {
    throw ConfigError("threads must be at least 1");
  }
  if (!(ctx.tol > 0.0))
  {
    throw ConfigError("tol must be positive");
  }
  if (ctx.config.contains("gap_floor"))
  {
    ctx.gap_floor = get_field<double>(ctx.config, "gap_floor");
  }
  std::error_code ec;
  std::filesystem::create_directories(ctx.out, ec);
  if (ec)
  {
    throw ConfigError("cannot create output directory " + ctx.out.string() + ": " + ec.message());
  }
  return ctx;
}

void write_error_json(const CliArgs &args, const std::string &type, const std::string &message)
{
  if (args.out_dir.empty())
  {
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec)
  {
    return;
  }
  try
  {
    const json doc = {{"error", {{"type", type}, {"message", message}}}};
    atomic_write(std::filesystem::path(args.out_dir) / "error.json", doc.dump(2) + "\n");
  }
  catch (const std::exception &)
  {
    // Failure reporting is best effort; the exit code still carries the class.
  }
}

}  // namespace

int run_cli(int argc, const char *const *argv)
{
  CLI::App app{"One-dimensional few-fermion density-functional laboratory"};
  app.require_subcommand(1);

  CliArgs args;
  const auto add_common = [&](CLI::App *sub)
  {
    sub->add_option("--config", args.config_path, "JSON configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory")->required();
    sub->add_option("--seed", args.seed, "RNG seed override");
    sub->add_option("--tol", args.tol, "primary tolerance override");
    sub->add_option("--threads", args.threads, "worker thread override");
    return sub;
  };

  void (*handlers[])(RunContext &) = {cmd_forward, cmd_invert, cmd_functionals, cmd_ac,
                                      cmd_gl2,     cmd_lipschitz, cmd_complex};
  const char *names[] = {"forward", "invert", "functionals", "ac", "gl2", "lipschitz", "complex"};
  const char *descriptions[] = {
      "ground state and density of a given potential",
      "recover the potential of a target density",
      "energy functionals and exchange quantities of a density",
      "coupling-constant sweep with analyticity diagnostics",
      "second-order correlation energy series",
      "local stability probe of the density-to-potential map",
      "non-self-adjoint pipeline checks at a complex perturbation"};
  std::array<CLI::App *, 7> subs{};
  for (std::size_t k = 0; k < subs.size(); k++)
  {
    subs[k] = add_common(app.add_subcommand(names[k], descriptions[k]));
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::size_t selected = 0;
  for (std::size_t k = 0; k < subs.size(); k++)
  {
    if (subs[k]->parsed())
    {
      selected = k;
    }
  }

  try
  {
    RunContext ctx = make_context(args);
    handlers[selected](ctx);
    return 0;
  }
  catch (const ConfigError &e)
  {
    write_error_json(args, "config", e.what());
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  catch (const SolverError &e)
  {
    write_error_json(args, "solver", e.what());
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  }
  catch (const ConsistencyError &e)
  {
    write_error_json(args, "consistency", e.what());
    std::cerr << "consistency error: " << e.what() << "\n";
    return 4;
  }
  catch (const std::exception &e)
  {
    write_error_json(args, "internal", e.what());
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace ks1d
