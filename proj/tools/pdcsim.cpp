// pdcsim: command-line front end for the photon-pair source toolkit.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "output.hpp"
#include "pdcsim/analysis.hpp"
#include "pdcsim/config.hpp"
#include "pdcsim/dispersion.hpp"
#include "pdcsim/interference.hpp"
#include "pdcsim/schmidt.hpp"

#ifndef PDC_DEFAULT_CRYSTAL_DB
#define PDC_DEFAULT_CRYSTAL_DB "data/crystals.db"
#endif

namespace fs = std::filesystem;
using pdc::out::num;
using pdc::out::ordered_json;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> grid_points;
  bool flat_phase = false;
  std::string crystal_db = PDC_DEFAULT_CRYSTAL_DB;
  std::vector<std::string> argv;
};

pdc::Ray parse_arm(const std::string& s) { return s == "e" ? pdc::Ray::e : pdc::Ray::o; }

pdc::RunConfig load_config(const Globals& g, const std::string& path) {
  if (path.empty()) throw pdc::ConfigError("this command needs --config PATH");
  auto cfg = pdc::load_run_config(path, g.crystal_db);
  if (g.grid_points) {
    if (*g.grid_points < 16) throw pdc::ConfigError("--grid-points must be >= 16");
    cfg.source.grid_points = *g.grid_points;
  }
  if (g.flat_phase) cfg.source.options.flat_phase = true;
  return cfg;
}

fs::path out_dir(const Globals& g, const std::optional<pdc::RunConfig>& cfg) {
  if (!g.out.empty()) return g.out;
  if (cfg && cfg->output_dir) return *cfg->output_dir;
  return ".";
}

ordered_json meta(const Globals& g, const std::string& command) { return pdc::out::metadata(command, g.argv); }

int cmd_gvm(const Globals& g, const std::string& crystal_name, double daughter_nm) {
  const auto db = pdc::CrystalDatabase::load(g.crystal_db);
  const auto crystal = db.at(crystal_name);
  const auto sol = pdc::gvm_pump_wavelength(crystal, daughter_nm);
  auto j = meta(g, "gvm");
  j["crystal"] = crystal.name;
  j["crystal_database"] = g.crystal_db;
  j["source_citation"] = crystal.source_citation;
  j["daughter_o_wavelength_nm"] = 2.0 * sol.pump_wavelength_nm;
  j["requested_daughter_o_wavelength_nm"] = daughter_nm;
  j["result"] = {{"pump_wavelength_nm", sol.pump_wavelength_nm},
                 {"phasematching_angle_deg", sol.phasematching_angle_deg},
                 {"group_index_pump_e", sol.group_index_pump_e},
                 {"group_index_daughter_o", sol.group_index_daughter_o},
                 {"residual", sol.residual},
                 {"tolerance", sol.tolerance}};
  const auto dir = out_dir(g, std::nullopt);
  pdc::out::write_json(dir / "gvm.json", j);
  std::cout << "crystal                  " << crystal.name << "\n"
            << "pump_wavelength_nm       " << num(sol.pump_wavelength_nm) << "\n"
            << "phasematching_angle_deg  " << num(sol.phasematching_angle_deg) << "\n"
            << "group_index_pump_e       " << num(sol.group_index_pump_e) << "\n"
            << "group_index_daughter_o   " << num(sol.group_index_daughter_o) << "\n"
            << "residual                 " << num(sol.residual) << "\n";
  return 0;
}

int cmd_jsa(const Globals& g) {
  const auto cfg = load_config(g, g.config);
  const auto filtered = pdc::source_amplitude(cfg.source);
  const auto& jsa = filtered.jsa;
  const auto me = pdc::marginal_spectrum(jsa, pdc::Ray::e);
  const auto mo = pdc::marginal_spectrum(jsa, pdc::Ray::o);
  const double r = pdc::pearson_correlation(jsa);
  const auto dir = out_dir(g, cfg);
  pdc::out::write_text(dir / "jsi.csv", pdc::out::jsi_csv(jsa));
  pdc::out::write_text(dir / "marginal_e.csv", pdc::out::spectrum_csv(me));
  pdc::out::write_text(dir / "marginal_o.csv", pdc::out::spectrum_csv(mo));
  auto j = meta(g, "jsa");
  j["config"] = pdc::out::config_json(cfg);
  const auto fe = pdc::fwhm(me);
  const auto fo = pdc::fwhm(mo);
  j["result"] = {{"pearson_correlation", r},
                 {"passed_fraction", filtered.passed_fraction},
                 {"marginal_fwhm_e_nm", fe ? ordered_json(*fe) : ordered_json(nullptr)},
                 {"marginal_fwhm_o_nm", fo ? ordered_json(*fo) : ordered_json(nullptr)},
                 {"grid_points_e", jsa.grid.e.size},
                 {"grid_points_o", jsa.grid.o.size}};
  pdc::out::write_json(dir / "jsa.json", j);
  std::cout << "pearson_correlation " << num(r) << "\n";
  if (fe) std::cout << "marginal_fwhm_e_nm  " << num(*fe) << "\n";
  if (fo) std::cout << "marginal_fwhm_o_nm  " << num(*fo) << "\n";
  return 0;
}

int cmd_schmidt(const Globals& g) {
  const auto cfg = load_config(g, g.config);
  const auto filtered = pdc::source_amplitude(cfg.source);
  const auto res = pdc::schmidt_decompose(filtered.jsa);
  const auto photon = pdc::other(cfg.herald_arm);
  const auto rho = pdc::heralded_density_matrix(filtered.jsa, photon);
  const auto dir = out_dir(g, cfg);
  pdc::out::write_text(dir / "schmidt.csv", pdc::out::schmidt_csv(res));
  pdc::out::write_text(dir / "density_matrix.csv", pdc::out::density_matrix_csv(rho));
  auto j = meta(g, "schmidt");
  j["config"] = pdc::out::config_json(cfg);
  j["result"] = {{"purity", res.purity},
                 {"schmidt_number", res.schmidt_number},
                 {"leading_coefficient", res.coefficients.front()},
                 {"herald_arm", std::string(pdc::to_string(cfg.herald_arm))},
                 {"heralded_state_purity", pdc::purity(rho)}};
  pdc::out::write_json(dir / "schmidt.json", j);
  std::cout << "purity         " << num(res.purity) << "\n"
            << "schmidt_number " << num(res.schmidt_number) << "\n";
  return 0;
}

struct SweepArgs {
  std::vector<double> bandwidths;
  std::string shape;
  std::optional<bool> symmetric;
  std::string herald_arm;
};

int cmd_sweep(const Globals& g, const SweepArgs& a) {
  const auto cfg = load_config(g, g.config);
  auto settings = cfg.sweep;
  if (!a.bandwidths.empty()) settings.bandwidths_nm = a.bandwidths;
  if (settings.bandwidths_nm.empty())
    for (int bw = 20; bw >= 1; --bw) settings.bandwidths_nm.push_back(bw);
  if (!a.shape.empty()) settings.shape = *pdc::parse_filter_shape(a.shape);
  if (a.symmetric) settings.symmetric = *a.symmetric;
  if (!a.herald_arm.empty()) settings.herald_arm = parse_arm(a.herald_arm);
  for (double bw : settings.bandwidths_nm)
    if (!(bw > 0.0)) throw pdc::ConfigError("sweep bandwidths must be > 0");

  const auto res = pdc::filter_sweep(cfg.source, settings.shape, settings.bandwidths_nm, settings.symmetric,
                                     settings.herald_arm);
  const auto unfiltered = pdc::schmidt_decompose(pdc::source_amplitude(cfg.source).jsa).purity;
  const auto dir = out_dir(g, cfg);
  pdc::out::write_text(dir / "sweep.csv", pdc::out::sweep_csv(res));
  auto j = meta(g, "sweep");
  j["config"] = pdc::out::config_json(cfg);
  ordered_json gaps = ordered_json::array();
  for (const auto& p : res.points)
    if (!p.gap.empty()) gaps.push_back({{"bandwidth_nm", p.bandwidth_nm}, {"reason", p.gap}});
  ordered_json result = {{"shape", std::string(pdc::to_string(settings.shape))},
                         {"symmetric", settings.symmetric},
                         {"herald_arm", std::string(pdc::to_string(settings.herald_arm))},
                         {"unfiltered_purity", unfiltered},
                         {"gaps", gaps}};
  if (const auto* p = res.first_reaching(0.95)) {
    result["first_bandwidth_purity_0_95_nm"] = p->bandwidth_nm;
    result["heralding_efficiency_there"] = *p->heralding_efficiency;
  }
  j["result"] = result;
  pdc::out::write_json(dir / "sweep.json", j);
  std::cout << "bandwidth_nm,purity,heralding_efficiency\n";
  for (const auto& p : res.points)
    std::cout << num(p.bandwidth_nm) << "," << pdc::out::opt_num(p.purity) << ","
              << pdc::out::opt_num(p.heralding_efficiency) << "\n";
  return 0;
}

struct HomArgs {
  std::string config_b;
  std::string herald_arm;
  std::optional<double> delay_min;
  std::optional<double> delay_max;
  std::optional<double> delay_step;
  std::optional<double> pairs_per_point;
};

int cmd_hom(const Globals& g, const HomArgs& a) {
  const auto cfg_a = load_config(g, g.config);
  const auto cfg_b = a.config_b.empty() ? cfg_a : load_config(g, a.config_b);
  const auto herald = a.herald_arm.empty() ? cfg_a.herald_arm : parse_arm(a.herald_arm);
  const double lo = a.delay_min.value_or(cfg_a.delays.min_fs);
  const double hi = a.delay_max.value_or(cfg_a.delays.max_fs);
  const double step = a.delay_step.value_or(cfg_a.delays.step_fs);
  const auto delays = pdc::delay_range(lo, hi, step);
  const auto scan = pdc::two_source_experiment(cfg_a.source, cfg_b.source, herald, delays);

  const auto dir = out_dir(g, cfg_a);
  pdc::out::write_text(dir / "hom.csv", pdc::out::hom_csv(scan));
  auto j = meta(g, "hom");
  j["config_a"] = pdc::out::config_json(cfg_a);
  j["config_b"] = pdc::out::config_json(cfg_b);
  j["result"] = {{"herald_arm", std::string(pdc::to_string(herald))},
                 {"interfering_arm", std::string(pdc::to_string(pdc::other(herald)))},
                 {"visibility", scan.visibility},
                 {"dip_fwhm_fs", scan.dip_fwhm_fs},
                 {"dip_center_fs", scan.dip_center_fs},
                 {"coherence_time_fs", pdc::coherence_time(scan.dip_fwhm_fs)}};
  if (a.pairs_per_point) {
    const auto counts = pdc::simulate_counts(scan, *a.pairs_per_point, g.seed);
    pdc::out::write_text(dir / "counts.csv", pdc::out::counts_csv(counts));
    j["counts"] = {{"file", "counts.csv"}, {"pairs_per_point", *a.pairs_per_point}, {"seed", g.seed}};
  }
  pdc::out::write_json(dir / "hom.json", j);
  std::cout << "visibility        " << num(scan.visibility) << "\n"
            << "dip_fwhm_fs       " << num(scan.dip_fwhm_fs) << "\n"
            << "coherence_time_fs " << num(pdc::coherence_time(scan.dip_fwhm_fs)) << "\n";
  return 0;
}

int cmd_fit(const Globals& g, const std::string& counts_path) {
  const auto record = pdc::out::read_counts_csv(counts_path);
  const auto fit = pdc::fit_gaussian_dip(record);
  const auto& p = fit.parameters;
  const auto& u = fit.uncertainties;
  auto j = meta(g, "fit");
  j["counts_file"] = counts_path;
  j["result"] = {{"baseline", p.baseline},
                 {"visibility", p.visibility},
                 {"center_fs", p.center_fs},
                 {"fwhm_fs", p.fwhm_fs},
                 {"uncertainties",
                  {{"baseline", u.baseline}, {"visibility", u.visibility}, {"center_fs", u.center_fs}, {"fwhm_fs", u.fwhm_fs}}},
                 {"chi2", fit.chi2},
                 {"chi2_reduced", fit.chi2_reduced},
                 {"converged", fit.converged},
                 {"iterations", fit.iterations}};
  // Infinite uncertainties (flat data) are not representable in JSON.
  for (auto& [k, v] : j["result"]["uncertainties"].items())
    if (!std::isfinite(v.get<double>())) v = nullptr;
  pdc::out::write_json(out_dir(g, std::nullopt) / "fit.json", j);
  std::cout << "baseline    " << num(p.baseline) << " +- " << num(u.baseline) << "\n"
            << "visibility  " << num(p.visibility) << " +- " << num(u.visibility) << "\n"
            << "center_fs   " << num(p.center_fs) << " +- " << num(u.center_fs) << "\n"
            << "fwhm_fs     " << num(p.fwhm_fs) << " +- " << num(u.fwhm_fs) << "\n"
            << "chi2_red    " << num(fit.chi2_reduced) << "\n"
            << "converged   " << (fit.converged ? "true" : "false") << "\n";
  if (!fit.converged) throw pdc::NumericalError("fit did not converge within the iteration cap");
  return 0;
}

struct ScanArgs {
  double resolution_nm = 0.2;
  double step_nm = 0.2;
  std::optional<std::uint64_t> budget;
};

int cmd_scan(const Globals& g, const ScanArgs& a) {
  const auto cfg = load_config(g, g.config);
  const auto jsa = pdc::source_amplitude(cfg.source).jsa;
  const auto scan = pdc::simulate_jsi_scan(jsa, a.resolution_nm, a.step_nm, a.budget, g.seed);
  const double p = pdc::purity_from_intensity(scan.expected, scan.lambda_e_nm, scan.lambda_o_nm, scan.step_nm);
  const double r = pdc::lattice_correlation(scan.expected, scan.lambda_e_nm, scan.lambda_o_nm);
  const auto dir = out_dir(g, cfg);
  pdc::out::write_text(dir / "scan_expected.csv", pdc::out::matrix_csv(scan.lambda_e_nm, scan.lambda_o_nm, scan.expected));
  auto j = meta(g, "scan");
  j["config"] = pdc::out::config_json(cfg);
  ordered_json result = {{"resolution_fwhm_nm", a.resolution_nm},
                         {"step_nm", a.step_nm},
                         {"lattice_e", scan.lambda_e_nm.size()},
                         {"lattice_o", scan.lambda_o_nm.size()},
                         {"purity_expected", p},
                         {"pearson_correlation_expected", r}};
  if (scan.counts) {
    pdc::out::write_text(dir / "scan_counts.csv", pdc::out::matrix_csv(scan.lambda_e_nm, scan.lambda_o_nm, *scan.counts));
    const Eigen::MatrixXd c = scan.counts->cast<double>();
    result["pairs_budget"] = *a.budget;
    result["seed"] = g.seed;
    result["purity_counts"] = pdc::purity_from_intensity(c, scan.lambda_e_nm, scan.lambda_o_nm, scan.step_nm);
  }
  j["result"] = result;
  pdc::out::write_json(dir / "scan.json", j);
  std::cout << "lattice          " << scan.lambda_e_nm.size() << " x " << scan.lambda_o_nm.size() << "\n"
            << "purity_expected  " << num(p) << "\n"
            << "pearson_expected " << num(r) << "\n";
  return 0;
}

const char* error_name(const pdc::Error& e) {
  if (dynamic_cast<const pdc::NoGvmPointError*>(&e)) return "NoGvmPointError";
  if (dynamic_cast<const pdc::NoPhasematchingError*>(&e)) return "NoPhasematchingError";
  if (dynamic_cast<const pdc::FilterSupportError*>(&e)) return "FilterSupportError";
  if (dynamic_cast<const pdc::RangeError*>(&e)) return "RangeError";
  if (dynamic_cast<const pdc::DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const pdc::ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const pdc::NumericalError*>(&e)) return "NumericalError";
  return "Error";
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  g.argv.assign(argv + 1, argv + argc);

  CLI::App app{"Simulation toolkit for spectrally engineered photon-pair sources"};
  app.set_version_flag("--version", pdc::out::tool_version);
  app.require_subcommand(1);
  app.add_option("--config", g.config, "Run configuration file");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Base seed for Poisson sampling");
  app.add_option("--grid-points", g.grid_points, "Points per frequency axis");
  app.add_flag("--flat-phase", g.flat_phase, "Drop the phasematching phase factor");
  app.add_option("--crystal-db", g.crystal_db, "Crystal database file");

  std::string crystal_name;
  double daughter_nm = 830.0;
  auto* gvm = app.add_subcommand("gvm", "Group-velocity-matched pump wavelength");
  gvm->add_option("--crystal", crystal_name, "Crystal name")->required();
  gvm->add_option("--daughter-nm", daughter_nm, "o-polarized daughter wavelength (nm)")->check(CLI::PositiveNumber);

  auto* jsa = app.add_subcommand("jsa", "Joint spectral intensity and marginals");
  auto* schmidt = app.add_subcommand("schmidt", "Schmidt decomposition and heralded state");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Purity and heralding efficiency versus filter bandwidth");
  sweep->add_option("--bandwidths", sweep_args.bandwidths, "Filter FWHM list (nm)")->delimiter(',');
  sweep->add_option("--shape", sweep_args.shape, "Filter shape")->check(CLI::IsMember({"gaussian", "rectangular"}));
  sweep->add_option("--symmetric", sweep_args.symmetric, "Filter both arms (true) or the herald arm only (false)");
  sweep->add_option("--herald-arm", sweep_args.herald_arm, "Herald arm")->check(CLI::IsMember({"e", "o"}));

  HomArgs hom_args;
  auto* hom = app.add_subcommand("hom", "Two-source Hong-Ou-Mandel scan");
  hom->add_option("--config-b", hom_args.config_b, "Configuration of the second source (default: same as --config)");
  hom->add_option("--herald-arm", hom_args.herald_arm, "Detected herald arm; the other arm interferes")
      ->check(CLI::IsMember({"e", "o"}));
  hom->add_option("--delay-min", hom_args.delay_min, "First delay (fs)");
  hom->add_option("--delay-max", hom_args.delay_max, "Last delay (fs)");
  hom->add_option("--delay-step", hom_args.delay_step, "Delay step (fs)");
  hom->add_option("--pairs-per-point", hom_args.pairs_per_point, "Also write Poisson counts with this mean baseline");

  std::string counts_path;
  auto* fit = app.add_subcommand("fit", "Weighted least-squares Gaussian dip fit");
  fit->add_option("--counts", counts_path, "delay_fs,counts CSV")->required();

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Simulated two-monochromator JSI scan");
  scan->add_option("--resolution-nm", scan_args.resolution_nm, "Passband FWHM (nm); 0 samples the JSI directly")
      ->check(CLI::NonNegativeNumber);
  scan->add_option("--step-nm", scan_args.step_nm, "Lattice step (nm)")->check(CLI::PositiveNumber);
  scan->add_option("--budget", scan_args.budget, "Total expected pairs; omit for noiseless expected values");

  for (auto* sub : {gvm, jsa, schmidt, sweep, hom, fit, scan}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pdc::ExitCode::config);
  }

  try {
    if (*gvm) return cmd_gvm(g, crystal_name, daughter_nm);
    if (*jsa) return cmd_jsa(g);
    if (*schmidt) return cmd_schmidt(g);
    if (*sweep) return cmd_sweep(g, sweep_args);
    if (*hom) return cmd_hom(g, hom_args);
    if (*fit) return cmd_fit(g, counts_path);
    if (*scan) return cmd_scan(g, scan_args);
  } catch (const pdc::Error& e) {
    std::cerr << "error: " << error_name(e) << ": " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(pdc::ExitCode::numerical);
  }
  return 0;
}
