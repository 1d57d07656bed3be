#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pdcsim/crystal.hpp"
#include "pdcsim/dispersion.hpp"
#include "pdcsim/jsa.hpp"
#include "pdcsim/source.hpp"

namespace pdc::test {

inline std::string data_dir() { return PDC_TEST_DATA_DIR; }
inline std::string crystal_db() { return PDC_DEFAULT_CRYSTAL_DB; }
inline std::string test_crystal_db() { return data_dir() + "/test_crystals.db"; }

inline const CrystalDatabase& shipped() {
  static const CrystalDatabase db = CrystalDatabase::load(crystal_db());
  return db;
}

inline const CrystalDatabase& synthetic() {
  static const CrystalDatabase db = CrystalDatabase::load(test_crystal_db());
  return db;
}

// Crystal cut for degenerate type-II at the given pump.
inline CrystalSpec cut(const std::string& name, double length_mm, double pump_nm) {
  CrystalSpec c = shipped().at(name);
  c.length_mm = length_mm;
  c.cut_angle_deg = phasematching_angle(c, pump_nm, 2.0 * pump_nm);
  return c;
}

inline SourceSpec kdp_source(std::size_t n = 512, bool flat_phase = true) {
  SourceSpec s;
  s.crystal = cut("KDP", 5.0, 415.0);
  s.pump = PumpSpec{415.0, 4.0, 1.0};
  s.grid_points = n;
  s.options.flat_phase = flat_phase;
  return s;
}

inline SourceSpec bbo_source(std::size_t n = 512, bool flat_phase = true) {
  SourceSpec s;
  s.crystal = cut("BBO", 2.0, 400.0);
  s.pump = PumpSpec{400.0, 4.0, 1.0};
  s.grid_points = n;
  s.options.flat_phase = flat_phase;
  return s;
}

// Square grid of n points around w0 with the given spacing.
inline FrequencyGrid square_grid(double w0, double step, std::size_t n) {
  const Axis a{w0, step, n};
  return FrequencyGrid{a, a};
}

template <typename F>
JointAmplitude tabulate(const FrequencyGrid& grid, F&& f) {
  JointAmplitude j;
  j.grid = grid;
  j.values.resize(static_cast<Eigen::Index>(grid.e.size), static_cast<Eigen::Index>(grid.o.size));
  for (std::size_t a = 0; a < grid.e.size; ++a)
    for (std::size_t b = 0; b < grid.o.size; ++b)
      j.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = f(grid.e[a], grid.o[b]);
  j.normalize();
  return j;
}

// Bivariate Gaussian in sum and difference coordinates (units of rad/s).
inline JointAmplitude two_gaussian(double sigma_plus, double sigma_minus, std::size_t n = 256) {
  const double w0 = 2.3e15;
  const double half = 7.0 * std::max(sigma_plus, sigma_minus);
  const auto grid = square_grid(w0, 2.0 * half / static_cast<double>(n), n);
  return tabulate(grid, [&](double we, double wo) {
    const double s = we + wo - 2.0 * w0;
    const double d = we - wo;
    return Complex{std::exp(-s * s / (4.0 * sigma_plus * sigma_plus) - d * d / (4.0 * sigma_minus * sigma_minus)), 0.0};
  });
}

inline double two_gaussian_purity(double ratio) { return 2.0 * ratio / (ratio * ratio + 1.0); }

inline JointAmplitude separable(std::size_t n = 128) {
  const double w0 = 2.3e15;
  const double sig = 1e12;
  const auto grid = square_grid(w0, 10.0 * sig / static_cast<double>(n), n);
  return tabulate(grid, [&](double we, double wo) {
    const double a = (we - w0) / sig;
    const double b = (wo - w0 - 0.3 * sig) / (1.7 * sig);
    return Complex{std::exp(-a * a / 2.0) * (1.0 + 0.3 * a), 0.0} * std::exp(-b * b / 2.0) * std::polar(1.0, 0.4 * b);
  });
}

}  // namespace pdc::test
