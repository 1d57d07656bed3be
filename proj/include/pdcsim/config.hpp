#pragma once

// Run configuration: flat key-value text with section headers, parsed
// strictly. Units are fixed: nm, mm, fs, degrees.
//
//   [crystal]  name, length_mm, cut_angle_deg (number or "auto"), database,
//              and for an inline crystal: formula_id, coefficients_o,
//              coefficients_e, valid_um_min, valid_um_max, source_citation
//   [pump]     center_nm, fwhm_nm, eta
//   [grid]     n_points, span_sigmas
//   [filter]   shape, center_nm, fwhm_nm, arm            (repeatable)
//   [options]  flat_phase, phasematching_shape, herald_arm
//   [sweep]    bandwidths_nm, shape, symmetric, herald_arm
//   [hom]      delay_min_fs, delay_max_fs, delay_step_fs
//   [output]   dir

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdcsim/crystal.hpp"
#include "pdcsim/dispersion.hpp"
#include "pdcsim/errors.hpp"
#include "pdcsim/keyvalue.hpp"
#include "pdcsim/source.hpp"

namespace pdc {

struct SweepSettings {
  std::vector<double> bandwidths_nm;
  FilterShape shape = FilterShape::gaussian;
  bool symmetric = true;
  Ray herald_arm = Ray::o;
};

struct DelaySettings {
  double min_fs = -1500.0;
  double max_fs = 1500.0;
  double step_fs = 5.0;
};

struct RunConfig {
  std::string path;
  std::string text;  // verbatim config, echoed into output metadata
  std::string database_path;
  SourceSpec source;
  bool cut_angle_auto = false;
  Ray herald_arm = Ray::o;  // detected arm for hom
  SweepSettings sweep;
  DelaySettings delays;
  std::optional<std::string> output_dir;
};

namespace detail {

inline Ray read_ray(kv::Reader& r, std::string_view key, Ray fallback) {
  auto v = r.string_opt(key);
  if (!v) return fallback;
  if (*v == "e") return Ray::e;
  if (*v == "o") return Ray::o;
  throw r.error(key, "expected 'e' or 'o', got '" + *v + "'");
}

inline FilterShape read_shape(kv::Reader& r, std::string_view key, FilterShape fallback) {
  auto v = r.string_opt(key);
  if (!v) return fallback;
  auto s = parse_filter_shape(*v);
  if (!s) throw r.error(key, "expected none, gaussian or rectangular, got '" + *v + "'");
  return *s;
}

inline bool is_inline_crystal(const kv::Reader& r) {
  for (auto key : {"formula_id", "coefficients_o", "coefficients_e", "valid_um_min", "valid_um_max"})
    if (r.has(key)) return true;
  return false;
}

}  // namespace detail

/// Parses a configuration. `default_database` is used when the file names a
/// crystal without a [crystal] database key; relative database paths resolve
/// against the config file's directory.
inline RunConfig parse_run_config(std::string_view text, const std::string& source_name,
                                  const std::string& default_database) {
  const auto doc = kv::parse(text, source_name);
  RunConfig cfg;
  cfg.path = source_name;
  cfg.text = std::string(text);
  cfg.database_path = default_database;

  const kv::Section* crystal_section = nullptr;
  const kv::Section* pump_section = nullptr;
  bool saw_grid = false;
  bool saw_options = false;
  bool saw_sweep = false;
  bool saw_hom = false;
  bool saw_output = false;
  auto once = [&](bool& flag, const kv::Section& s) {
    if (flag) throw ConfigError(source_name + ":" + std::to_string(s.line) + ": duplicate section [" + s.name + "]");
    flag = true;
  };

  for (const auto& s : doc.sections) {
    kv::Reader r(doc, s);
    if (s.name == "crystal") {
      if (crystal_section)
        throw ConfigError(source_name + ":" + std::to_string(s.line) + ": duplicate section [crystal]");
      crystal_section = &s;
      continue;  // read after everything else is known
    }
    if (s.name == "pump") {
      if (pump_section) throw ConfigError(source_name + ":" + std::to_string(s.line) + ": duplicate section [pump]");
      pump_section = &s;
      auto& p = cfg.source.pump;
      p.center_wavelength_nm = r.number("center_nm");
      p.fwhm_bandwidth_nm = r.number("fwhm_nm");
      p.eta = r.number_opt("eta").value_or(1.0);
      if (!(p.center_wavelength_nm > 0.0)) throw r.error("center_nm", "must be > 0");
      if (!(p.fwhm_bandwidth_nm > 0.0)) throw r.error("fwhm_nm", "must be > 0");
    } else if (s.name == "grid") {
      once(saw_grid, s);
      if (auto n = r.integer_opt("n_points")) {
        if (*n < 16) throw r.error("n_points", "must be >= 16");
        cfg.source.grid_points = static_cast<std::size_t>(*n);
      }
      if (auto span = r.number_opt("span_sigmas")) {
        if (!(*span > 0.0)) throw r.error("span_sigmas", "must be > 0");
        cfg.source.span_sigmas = *span;
      }
    } else if (s.name == "filter") {
      FilterSpec f;
      f.shape = detail::read_shape(r, "shape", FilterShape::gaussian);
      f.arm = detail::read_ray(r, "arm", Ray::o);
      if (f.shape != FilterShape::none) {
        f.center_wavelength_nm = r.number("center_nm");
        f.fwhm_nm = r.number("fwhm_nm");
        if (!(f.fwhm_nm > 0.0)) throw r.error("fwhm_nm", "must be > 0");
        if (!(f.center_wavelength_nm > 0.0)) throw r.error("center_nm", "must be > 0");
      }
      cfg.source.filters.push_back(f);
    } else if (s.name == "options") {
      once(saw_options, s);
      cfg.source.options.flat_phase = r.boolean_opt("flat_phase").value_or(false);
      if (auto shape = r.string_opt("phasematching_shape")) {
        if (*shape == "sinc") {
          cfg.source.options.shape = PhasematchingShape::sinc;
        } else if (*shape == "gaussian") {
          cfg.source.options.shape = PhasematchingShape::gaussian;
        } else {
          throw r.error("phasematching_shape", "expected sinc or gaussian, got '" + *shape + "'");
        }
      }
      cfg.herald_arm = detail::read_ray(r, "herald_arm", Ray::o);
    } else if (s.name == "sweep") {
      once(saw_sweep, s);
      cfg.sweep.bandwidths_nm = r.list_opt("bandwidths_nm").value_or(std::vector<double>{});
      cfg.sweep.shape = detail::read_shape(r, "shape", FilterShape::gaussian);
      cfg.sweep.symmetric = r.boolean_opt("symmetric").value_or(true);
      cfg.sweep.herald_arm = detail::read_ray(r, "herald_arm", Ray::o);
    } else if (s.name == "hom") {
      once(saw_hom, s);
      cfg.delays.min_fs = r.number_opt("delay_min_fs").value_or(cfg.delays.min_fs);
      cfg.delays.max_fs = r.number_opt("delay_max_fs").value_or(cfg.delays.max_fs);
      cfg.delays.step_fs = r.number_opt("delay_step_fs").value_or(cfg.delays.step_fs);
      if (!(cfg.delays.max_fs > cfg.delays.min_fs)) throw r.error("delay_max_fs", "must exceed delay_min_fs");
      if (!(cfg.delays.step_fs > 0.0)) throw r.error("delay_step_fs", "must be > 0");
    } else if (s.name == "output") {
      once(saw_output, s);
      cfg.output_dir = r.string_opt("dir");
    } else {
      throw ConfigError(source_name + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
    r.finish();
  }

  if (!crystal_section) throw ConfigError(source_name + ": missing [crystal] section");
  if (!pump_section) throw ConfigError(source_name + ": missing [pump] section");

  kv::Reader r(doc, *crystal_section);
  if (auto db = r.string_opt("database")) {
    std::filesystem::path p(*db);
    if (p.is_relative()) p = std::filesystem::path(source_name).parent_path() / p;
    cfg.database_path = p.string();
  }
  const bool inline_crystal = detail::is_inline_crystal(r);
  CrystalSpec crystal;
  if (inline_crystal) {
    crystal = CrystalDatabase::read_record(r);
    if (!cfg.database_path.empty() && std::filesystem::exists(cfg.database_path)) {
      const auto db = CrystalDatabase::load(cfg.database_path);
      if (db.find(crystal.name))
        throw r.error("name", "inline crystal conflicts with database crystal '" + crystal.name + "'");
    }
  } else {
    const auto name = r.string("name");
    const auto db = CrystalDatabase::load(cfg.database_path);
    if (!db.find(name)) throw r.error("name", "unknown crystal '" + name + "'");
    crystal = db.at(name);
  }
  crystal.length_mm = r.number("length_mm");
  if (!(crystal.length_mm > 0.0)) throw r.error("length_mm", "must be > 0");
  const auto angle = r.string_opt("cut_angle_deg").value_or("auto");
  if (angle == "auto") {
    cfg.cut_angle_auto = true;
  } else {
    char* end = nullptr;
    const double v = std::strtod(angle.c_str(), &end);
    if (end != angle.c_str() + angle.size() || !(v >= 0.0 && v <= 90.0))
      throw r.error("cut_angle_deg", "expected 'auto' or a number in [0, 90], got '" + angle + "'");
    crystal.cut_angle_deg = v;
  }
  r.finish();

  if (cfg.cut_angle_auto) {
    const auto& p = cfg.source.pump;
    crystal.cut_angle_deg = phasematching_angle(crystal, p.center_wavelength_nm, p.degenerate_wavelength_nm());
  }
  cfg.source.crystal = crystal;
  return cfg;
}

inline RunConfig load_run_config(const std::string& path, const std::string& default_database) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path, default_database);
}

}  // namespace pdc
