#include "cqgrav/scenario.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cqgrav/newtonian.hpp"
#include "cqgrav/observables.hpp"
#include "cqgrav/tradeoff.hpp"

namespace cqgrav {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  fail(ErrorCode::SchemaError, where + ": " + what);
}

const json& get(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) schema_fail(where, "missing field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = get(j, key, where);
  if (!v.is_number()) schema_fail(where + "." + key, "expected a number");
  return v.get<double>();
}

/// Physical quantities are {"value": x, "units": "..."}; the units string is
/// checked verbatim (unit slips dominate order-of-magnitude reproduction bugs).
double quantity(const json& j, const std::string& key, const std::string& units,
                const std::string& where) {
  const json& v = get(j, key, where);
  if (v.is_number()) schema_fail(where + "." + key, "write {\"value\":..., \"units\":\"" + units + "\"}");
  if (!v.is_object()) schema_fail(where + "." + key, "expected a quantity object");
  std::string u = get(v, "units", where + "." + key).get<std::string>();
  if (u != units)
    schema_fail(where + "." + key, "expected units '" + units + "', got '" + u + "'");
  return number(v, "value", where + "." + key);
}

Constants read_constants(const json& root) {
  Constants pc;
  if (!root.contains("constants")) return pc;
  const json& c = root["constants"];
  if (c.contains("G")) pc.G = c["G"].get<double>();
  if (c.contains("c")) pc.c = c["c"].get<double>();
  if (c.contains("hbar")) pc.hbar = c["hbar"].get<double>();
  return pc;
}

SpatialGrid read_grid(const json& j, const std::string& where) {
  std::vector<double> ext;
  std::vector<int> sites;
  for (const auto& v : get(j, "extent_m", where)) ext.push_back(v.get<double>());
  for (const auto& v : get(j, "sites", where)) sites.push_back(v.get<int>());
  return SpatialGrid(std::move(ext), std::move(sites));
}

RealMatrix read_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_fail(where, "expected a non-empty matrix");
  std::size_t rows = j.size();
  std::size_t cols = j[0].size();
  RealMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) schema_fail(where, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json verdict_to_json(const TradeoffVerdict& v) {
  return json{{"satisfied", v.satisfied},
              {"min_eigenvalue", v.min_eigenvalue},
              {"schur_defect", v.schur_defect},
              {"support_defect", v.support_defect},
              {"scale", v.scale}};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  require(f.good(), ErrorCode::SchemaError, "cannot open output file " + p.string());
  f << content;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

KernelSpec read_kernel_spec(const json& j, const std::string& where) {
  KernelSpec spec;
  spec.family = family_from_name(get(j, "family", where).get<std::string>());
  spec.coupling = number(j, "coupling", where);
  if (j.contains("r0_m")) spec.r0 = j["r0_m"].get<double>();
  if (j.contains("units")) spec.units = j["units"].get<std::string>();
  return spec;
}

RealVector read_branch(const json& j, const SpatialGrid& grid, const std::string& where) {
  std::string kind = get(j, "kind", where).get<std::string>();
  if (kind == "none") return RealVector::Zero(grid.size());
  if (kind == "sphere") {
    std::array<double, 3> center{0, 0, 0};
    const json& c = get(j, "center_m", where);
    for (std::size_t i = 0; i < c.size() && i < 3; ++i) center[i] = c[i].get<double>();
    return sphere_mass_field(grid, center, number(j, "radius_m", where),
                             number(j, "mass_kg", where));
  }
  if (kind == "field") {
    const json& f = get(j, "values_kg_m3", where);
    if (f.size() != grid.size()) schema_fail(where, "field length does not match grid");
    RealVector m(grid.size());
    for (std::size_t i = 0; i < f.size(); ++i) m(i) = f[i].get<double>();
    return m;
  }
  schema_fail(where, "unknown branch kind '" + kind + "'");
}

int cmd_verify(const json& block, const Constants&, const RunOptions& opt, std::ostream& out) {
  TradeoffVerdict v;
  if (block.contains("matrices")) {
    const json& m = block["matrices"];
    Matrix D0 = read_matrix(get(m, "D0", "verify.matrices"), "verify.matrices.D0").cast<Complex>();
    Matrix D1 = read_matrix(get(m, "D1_br", "verify.matrices"), "verify.matrices.D1_br").cast<Complex>();
    Matrix D2 = read_matrix(get(m, "D2", "verify.matrices"), "verify.matrices.D2").cast<Complex>();
    v = check_coupling_tradeoff(D0, D1, D2);
  } else if (block.contains("kernels")) {
    const json& kb = block["kernels"];
    SpatialGrid grid = read_grid(get(kb, "grid", "verify.kernels"), "verify.kernels.grid");
    SaturatingPairOptions po;
    if (kb.contains("drift")) po.drift = kb["drift"].get<double>();
    if (kb.contains("gauss_order")) po.gauss_order = kb["gauss_order"].get<int>();
    KernelSpec d0 = read_kernel_spec(get(kb, "d0", "verify.kernels"), "verify.kernels.d0");
    DiscretizedKernel D0k, D2k;
    if (kb.contains("d2")) {
      D0k = discretize(d0, grid);
      D2k = discretize(read_kernel_spec(kb["d2"], "verify.kernels.d2"), grid);
    } else {
      auto pair = saturating_pair(d0, grid, po);
      D0k = pair.first;
      D2k = pair.second;
    }
    RealVector drift = RealVector::Constant(grid.size(), po.drift);
    v = check_kernel_tradeoff(D0k, drift, D2k);
  } else {
    schema_fail("verify", "need either 'matrices' or 'kernels'");
  }
  json rep = verdict_to_json(v);
  write_file(std::filesystem::path(opt.out_dir) / "verdict.json", rep.dump(2) + "\n");
  out << (v.satisfied ? "trade-off satisfied" : "trade-off violated")
      << "  min_eigenvalue=" << v.min_eigenvalue << " schur_defect=" << v.schur_defect
      << " support_defect=" << v.support_defect << "\n";
  return v.satisfied ? 0 : 2;
}

int cmd_squeeze(const json& block, const Constants& pc, const RunOptions& opt, std::ostream& out) {
  SqueezeScenario s;
  s.family = squeeze_family_from_name(get(block, "family", "squeeze").get<std::string>());
  s.sigma_a = quantity(block, "sigma_a", "m/s^2", "squeeze");
  s.T = quantity(block, "T", "s", "squeeze");
  s.N = quantity(block, "N", "1", "squeeze");
  s.r_N = quantity(block, "r_N", "m", "squeeze");
  s.M_lambda = quantity(block, "M_lambda", "kg", "squeeze");
  s.lambda = quantity(block, "lambda", "1/s", "squeeze");
  if (block.contains("V_b")) s.V_b = quantity(block, "V_b", "m^3", "squeeze");
  if (block.contains("V_lambda")) s.V_lambda = quantity(block, "V_lambda", "m^3", "squeeze");
  if (block.contains("R_lambda")) s.R_lambda = quantity(block, "R_lambda", "m", "squeeze");
  if (block.contains("m_N")) s.m_N = quantity(block, "m_N", "kg", "squeeze");
  BoundReport rep = squeeze(s, pc);
  json j{{"family", squeeze_family_name(s.family)},
         {"quantity", rep.quantity},
         {"units", rep.units},
         {"upper", rep.upper},
         {"lower", rep.lower},
         {"squeezed_out", rep.squeezed_out},
         {"inputs",
          {{"sigma_a", s.sigma_a},
           {"T", s.T},
           {"N", s.N},
           {"r_N", s.r_N},
           {"m_N", s.m_N},
           {"V_b", s.V_b},
           {"M_lambda", s.M_lambda},
           {"V_lambda", s.V_lambda},
           {"R_lambda", s.R_lambda},
           {"lambda", s.lambda}}},
         {"constants", {{"G", pc.G}, {"c", pc.c}, {"hbar", pc.hbar}}}};
  write_file(std::filesystem::path(opt.out_dir) / "squeeze.json", j.dump(2) + "\n");
  out << rep.quantity << " in [" << rep.lower << ", " << rep.upper << "] " << rep.units
      << (rep.squeezed_out ? "  (squeezed out)" : "") << "\n";
  return 0;
}

int cmd_decohere(const json& block, const Constants& pc, const RunOptions& opt,
                 std::ostream& out) {
  SpatialGrid grid = read_grid(get(block, "grid", "decohere"), "decohere.grid");
  KernelSpec spec = read_kernel_spec(get(block, "kernel", "decohere"), "decohere.kernel");
  DiscretizedKernel D0 = discretize(spec, grid, pc);
  RealVector mL = read_branch(get(block, "branch_left", "decohere"), grid, "decohere.branch_left");
  RealVector mR = read_branch(get(block, "branch_right", "decohere"), grid, "decohere.branch_right");
  double lambda = decoherence_rate(D0, mL, mR, opt.threads);
  json j{{"lambda_per_s", lambda},
         {"kernel", family_name(spec.family)},
         {"coupling", spec.coupling},
         {"grid_sites", grid.size()}};
  write_file(std::filesystem::path(opt.out_dir) / "decoherence.json", j.dump(2) + "\n");
  out << "decoherence rate lambda = " << lambda << " 1/s\n";
  return 0;
}

int cmd_energy(const json& block, const Constants& pc, const RunOptions& opt, std::ostream& out) {
  double mass = quantity(block, "mass", "kg", "energy");
  double volume = quantity(block, "volume", "m^3", "energy");
  double lambda = quantity(block, "lambda", "1/s", "energy");
  double age = quantity(block, "age", "s", "energy");
  std::optional<double> rho_ref;
  if (block.contains("reference_density"))
    rho_ref = quantity(block, "reference_density", "kg/m^3", "energy");
  EnergyReport rep = energy_production(mass / volume, volume, lambda, age, rho_ref, pc);
  json j{{"dEdt_W", rep.dEdt},
         {"rate_density_W_m3", rep.rate_density},
         {"accumulated_J_m3", rep.accumulated},
         {"age_s", age}};
  write_file(std::filesystem::path(opt.out_dir) / "energy.json", j.dump(2) + "\n");
  out << "dE/dt >= " << rep.dEdt << " W; rate density " << rep.rate_density
      << " W/m^3; accumulated " << rep.accumulated << " J/m^3\n";
  return 0;
}

int cmd_simulate(const json& block, const Constants& pc, const RunOptions& opt,
                 std::ostream& out) {
  SpatialGrid grid = read_grid(get(block, "grid", "simulate"), "simulate.grid");
  const std::size_t s = grid.size();

  RealVector mL = read_branch(get(block, "branch_left", "simulate"), grid, "simulate.branch_left");
  RealVector mR = read_branch(get(block, "branch_right", "simulate"), grid, "simulate.branch_right");

  FieldState init;
  init.grid = grid;
  init.phi = RealVector::Zero(s);
  init.pi = RealVector::Zero(s);
  init.rho = Matrix::Zero(2, 2);
  init.rho(0, 0) = 0.5;
  init.rho(1, 1) = 0.5;
  init.rho(0, 1) = 0.5;
  init.rho(1, 0) = 0.5;
  init.mass_ops.resize(s);
  for (std::size_t a = 0; a < s; ++a) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = mL(a);
    m(1, 1) = mR(a);
    init.mass_ops[a] = m;
  }
  if (block.contains("initial_phi") && block["initial_phi"].get<std::string>() == "poisson")
    init.phi = poisson_solve(init.mean_mass(), grid, pc, opt.threads).phi;

  NoiseConfig cfg;
  cfg.constants = pc;
  cfg.dt = number(block, "dt_s", "simulate");
  cfg.ensemble_size = block.contains("ensemble") ? block["ensemble"].get<int>() : 1;
  cfg.seed = opt.seed_override.value_or(
      block.contains("seed") ? block["seed"].get<std::uint64_t>() : 1);
  cfg.threads = opt.threads;
  if (block.contains("quasi_static")) cfg.quasi_static = block["quasi_static"].get<bool>();

  const json& pair = get(block, "pair", "simulate");
  std::string d2_mode = pair.contains("d2") ? pair["d2"].get<std::string>() : "grid_saturating";
  KernelSpec d0_spec = read_kernel_spec(get(pair, "d0", "simulate.pair"), "simulate.pair.d0");
  if (d0_spec.coupling == 0.0) {
    // noise-free configuration
    RealMatrix zero = RealMatrix::Zero(s, s);
    cfg.D0_kernel = DiscretizedKernel::dense_from(grid, zero, "");
    cfg.D2_kernel = DiscretizedKernel::dense_from(grid, zero, "");
  } else if (d2_mode == "analytic") {
    SaturatingPairOptions po;
    if (pair.contains("gauss_order")) po.gauss_order = pair["gauss_order"].get<int>();
    po.constants = pc;
    auto p = saturating_pair(d0_spec, grid, po);
    cfg.D0_kernel = p.first;
    cfg.D2_kernel = p.second;
  } else {
    // exact grid saturation: D2 = (1/8) pinv(D0_values)/vol^2
    cfg.D0_kernel = discretize(d0_spec, grid, pc);
    RealMatrix d0v = cfg.D0_kernel.materialize(4096);
    const double vol = grid.cell_volume();
    RealMatrix d2v = pseudo_inverse(d0v) / (8.0 * vol * vol);
    cfg.D2_kernel = DiscretizedKernel::dense_from(grid, d2v, "kg^2 s m^-3 kernel");
  }

  EnsembleOptions eopt;
  eopt.t_final = number(block, "t_final_s", "simulate");
  if (block.contains("snapshots")) eopt.snapshots = block["snapshots"].get<int>();
  if (block.contains("probe_site")) eopt.probe_site = block["probe_site"].get<std::size_t>();

  EnsembleSummary sum = run_ensemble(init, cfg, eopt);

  std::ostringstream csv;
  csv << "time_s,phi_mean,phi_var,pi_mean,pi_var,coherence_mean,coherence_var,"
         "ham_residual,mom_residual\r\n";
  for (std::size_t r = 0; r < sum.times.size(); ++r) {
    csv << format_double(sum.times[r]) << ',' << format_double(sum.phi_mean(r)) << ','
        << format_double(sum.phi_var(r)) << ',' << format_double(sum.pi_mean(r)) << ','
        << format_double(sum.pi_var(r)) << ',' << format_double(sum.coherence_mean(r)) << ','
        << format_double(sum.coherence_var(r)) << ',' << format_double(sum.ham_residual(r))
        << ',' << format_double(sum.mom_residual(r)) << "\r\n";
  }
  write_file(std::filesystem::path(opt.out_dir) / "trajectory.csv", csv.str());

  json manifest{{"command", "simulate"},
                {"config", block},
                {"constants", {{"G", pc.G}, {"c", pc.c}, {"hbar", pc.hbar}}},
                {"seed", cfg.seed},
                {"trajectory_seeds", sum.seeds},
                {"ensemble", cfg.ensemble_size},
                {"config_hash", sha1_hex(block.dump() + format_double(pc.G) +
                                         format_double(pc.c) + std::to_string(cfg.seed))}};
  write_file(std::filesystem::path(opt.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  out << "simulated " << cfg.ensemble_size << " trajectories, "
      << sum.times.size() << " snapshots -> trajectory.csv\n";
  return 0;
}

}  // namespace

int run_scenario_file(const std::string& command, const std::string& path,
                      const RunOptions& options, std::ostream& out, std::ostream& err) {
  json root;
  try {
    std::ifstream f(path);
    if (!f.good()) {
      err << "cannot open scenario file: " << path << "\n";
      return 1;
    }
    root = json::parse(f);
  } catch (const json::parse_error& e) {
    err << "scenario parse error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!root.contains("version")) schema_fail("scenario", "missing version tag");
    int n_blocks = 0;
    for (const char* name : {"verify", "simulate", "squeeze", "decohere", "energy"})
      if (root.contains(name)) ++n_blocks;
    if (n_blocks != 1) schema_fail("scenario", "exactly one command block is required");
    if (!root.contains(command))
      schema_fail("scenario", "file has no '" + command + "' block");

    std::filesystem::create_directories(options.out_dir);
    Constants pc = read_constants(root);
    const json& block = root[command];
    if (command == "verify") return cmd_verify(block, pc, options, out);
    if (command == "squeeze") return cmd_squeeze(block, pc, options, out);
    if (command == "decohere") return cmd_decohere(block, pc, options, out);
    if (command == "energy") return cmd_energy(block, pc, options, out);
    if (command == "simulate") return cmd_simulate(block, pc, options, out);
    err << "unknown command: " << command << "\n";
    return 1;
  } catch (const Error& e) {
    err << e.what() << "\n";
    if (e.code() == ErrorCode::InvalidPair) return 2;
    return 1;
  } catch (const json::exception& e) {
    err << "scenario error: " << e.what() << "\n";
    return 1;
  }
}

std::string sha1_hex(const std::string& data) {
  auto rol = [](std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); };
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  std::string msg = data;
  std::uint64_t bits = static_cast<std::uint64_t>(msg.size()) * 8;
  msg.push_back(static_cast<char>(0x80));
  while (msg.size() % 64 != 56) msg.push_back('\0');
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = 0;
      for (int b = 0; b < 4; ++b)
        w[i] = (w[i] << 8) | static_cast<unsigned char>(msg[chunk + 4 * i + b]);
    }
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) { f = (b & c) | ((~b) & d); k = 0x5A827999u; }
      else if (i < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1u; }
      else if (i < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDCu; }
      else { f = b ^ c ^ d; k = 0xCA62C1D6u; }
      std::uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d; d = c; c = rol(b, 30); b = a; a = t;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d; h[4] += e;
  }
  char buf[41];
  std::snprintf(buf, sizeof(buf), "%08x%08x%08x%08x%08x", h[0], h[1], h[2], h[3], h[4]);
  return buf;
}

}  // namespace cqgrav
