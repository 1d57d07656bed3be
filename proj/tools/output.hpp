#pragma once

// CSV and JSON emission for the command-line tool. Numbers are printed with
// 17 significant digits so identical runs give identical bytes and values
// round-trip exactly.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pdcsim/analysis.hpp"
#include "pdcsim/config.hpp"
#include "pdcsim/errors.hpp"

namespace pdc::out {

using nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string row(const std::string& label, const std::vector<double>& values) {
  std::string s = label;
  for (double v : values) s += "," + num(v);
  return s + "\n";
}

inline std::vector<double> wavelengths(const Axis& axis) {
  std::vector<double> v(axis.size);
  for (std::size_t k = 0; k < axis.size; ++k) v[k] = nm_from_omega(axis[k]);
  return v;
}

/// Four labelled axis rows (e then o, rad/s and nm), then one row of |f|^2
/// per e index with one column per o index.
inline std::string jsi_csv(const JointAmplitude& jsa) {
  std::string s;
  s += row("omega_e_rad_s", jsa.grid.e.values());
  s += row("lambda_e_nm", wavelengths(jsa.grid.e));
  s += row("omega_o_rad_s", jsa.grid.o.values());
  s += row("lambda_o_nm", wavelengths(jsa.grid.o));
  const Eigen::MatrixXd jsi = jsa.intensity();
  for (Eigen::Index i = 0; i < jsi.rows(); ++i) {
    for (Eigen::Index j = 0; j < jsi.cols(); ++j) {
      if (j) s += ",";
      s += num(jsi(i, j));
    }
    s += "\n";
  }
  return s;
}

inline std::string spectrum_csv(const std::vector<SpectrumPoint>& spectrum) {
  std::string s = "wavelength_nm,intensity\n";
  for (const auto& p : spectrum) s += num(p.wavelength_nm) + "," + num(p.intensity) + "\n";
  return s;
}

inline std::string schmidt_csv(const SchmidtResult& r) {
  std::string s = "k,c_k,c_k_squared\n";
  for (std::size_t k = 0; k < r.coefficients.size(); ++k) {
    const double c = r.coefficients[k];
    s += std::to_string(k) + "," + num(c) + "," + num(c * c) + "\n";
  }
  return s;
}

/// Axis rows (rad/s, nm), then N rows of N (re, im) column pairs.
inline std::string density_matrix_csv(const ReducedDensityMatrix& rho) {
  std::string s;
  s += row("omega_rad_s", rho.axis.values());
  s += row("lambda_nm", wavelengths(rho.axis));
  for (Eigen::Index i = 0; i < rho.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.values.cols(); ++j) {
      if (j) s += ",";
      s += num(rho.values(i, j).real()) + "," + num(rho.values(i, j).imag());
    }
    s += "\n";
  }
  return s;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string sweep_csv(const SweepResult& r) {
  std::string s = "bandwidth_nm,purity,heralding_efficiency\n";
  for (const auto& p : r.points) s += num(p.bandwidth_nm) + "," + opt_num(p.purity) + "," + opt_num(p.heralding_efficiency) + "\n";
  return s;
}

inline std::string hom_csv(const HomScan& scan) {
  std::string s = "delay_fs,normalized_rate\n";
  for (std::size_t k = 0; k < scan.delays_fs.size(); ++k) s += num(scan.delays_fs[k]) + "," + num(scan.rates[k]) + "\n";
  return s;
}

inline std::string counts_csv(const CountRecord& r) {
  std::string s = "delay_fs,counts\n";
  for (std::size_t k = 0; k < r.delays_fs.size(); ++k) s += num(r.delays_fs[k]) + "," + std::to_string(r.counts[k]) + "\n";
  return s;
}

/// Reads a delay_fs,counts CSV. Lines starting with '#' are ignored.
inline CountRecord read_counts_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open counts file '" + path + "'");
  CountRecord r;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "delay_fs,counts")
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected header 'delay_fs,counts'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    auto bad = [&] { return ConfigError(path + ":" + std::to_string(line_no) + ": expected '<delay_fs>,<count>'"); };
    if (comma == std::string::npos) throw bad();
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    char* end = nullptr;
    const double delay = std::strtod(a.c_str(), &end);
    if (a.empty() || end != a.c_str() + a.size()) throw bad();
    if (b.empty() || b.find_first_not_of("0123456789") != std::string::npos) throw bad();
    r.delays_fs.push_back(delay);
    r.counts.push_back(std::stoull(b));
  }
  if (!header) throw ConfigError(path + ": empty counts file");
  return r;
}

template <typename M>
std::string matrix_csv(const std::vector<double>& lambda_e, const std::vector<double>& lambda_o, const M& m) {
  std::string s;
  s += row("lambda_e_nm", lambda_e);
  s += row("lambda_o_nm", lambda_o);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ",";
      if constexpr (std::is_floating_point_v<typename M::Scalar>) {
        s += num(m(i, j));
      } else {
        s += std::to_string(m(i, j));
      }
    }
    s += "\n";
  }
  return s;
}

inline ordered_json sellmeier_json(const SellmeierForm& f) {
  return {{"formula_id", std::string(to_string(f.formula()))},
          {"coefficients", f.coefficients()},
          {"valid_um_min", f.valid_um_min()},
          {"valid_um_max", f.valid_um_max()}};
}

inline ordered_json crystal_json(const CrystalSpec& c) {
  return {{"name", c.name},
          {"length_mm", c.length_mm},
          {"cut_angle_deg", c.cut_angle_deg},
          {"sellmeier_o", sellmeier_json(c.sellmeier_o)},
          {"sellmeier_e", sellmeier_json(c.sellmeier_e)},
          {"source_citation", c.source_citation}};
}

inline ordered_json filter_json(const FilterSpec& f) {
  return {{"shape", std::string(to_string(f.shape))},
          {"center_nm", f.center_wavelength_nm},
          {"fwhm_nm", f.fwhm_nm},
          {"arm", std::string(to_string(f.arm))}};
}

inline ordered_json source_json(const SourceSpec& s) {
  ordered_json filters = ordered_json::array();
  for (const auto& f : s.filters) filters.push_back(filter_json(f));
  return {{"crystal", crystal_json(s.crystal)},
          {"pump",
           {{"center_nm", s.pump.center_wavelength_nm}, {"fwhm_nm", s.pump.fwhm_bandwidth_nm}, {"eta", s.pump.eta}}},
          {"grid_points", s.grid_points},
          {"span_sigmas", s.span_sigmas},
          {"flat_phase", s.options.flat_phase},
          {"phasematching_shape", std::string(to_string(s.options.shape))},
          {"filters", filters}};
}

inline ordered_json config_json(const RunConfig& c) {
  return {{"path", c.path}, {"text", c.text}, {"cut_angle_auto", c.cut_angle_auto}, {"resolved_source", source_json(c.source)}};
}

/// Quantities the model does not simulate; reported so nobody compares them
/// against simulated output by accident.
inline ordered_json out_of_model() {
  return {{"absolute_pair_rate", "pair rate per pump power (reference point: 40 mW giving 6000 pairs/s) is not modeled; "
                                 "eta scales rates only"},
          {"heralding_efficiency_measured", "measured heralding efficiency (44%) includes detector and optical losses; "
                                            "simulated efficiencies are filter-limited with unit collection"},
          {"detection_efficiency_measured", "detection efficiency (25%) depends on detectors and losses and is not modeled"}};
}

inline ordered_json metadata(const std::string& command, const std::vector<std::string>& argv) {
  return {{"tool", "pdcsim"}, {"version", tool_version}, {"command", command}, {"arguments", argv}, {"out_of_model", out_of_model()}};
}

}  // namespace pdc::out
