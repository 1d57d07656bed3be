#pragma once

// Joint spectral amplitude f(w_e, w_o) = alpha(w_e + w_o) * phi(w_e, w_o) on a
// uniform angular-frequency grid. All internal math is in rad/s; wavelengths
// appear only at the boundaries (specs, exported spectra).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pdcsim/crystal.hpp"
#include "pdcsim/dispersion.hpp"
#include "pdcsim/errors.hpp"
#include "pdcsim/units.hpp"

namespace pdc {

using Complex = std::complex<double>;

struct PumpSpec {
  double center_wavelength_nm = 415.0;
  double fwhm_bandwidth_nm = 4.0;  // intensity FWHM in wavelength
  double eta = 1.0;                // pair amplitude scale; rates only

  void validate() const {
    if (!(center_wavelength_nm > 0.0)) throw ConfigError("pump center wavelength must be > 0");
    if (!(fwhm_bandwidth_nm > 0.0)) throw ConfigError("pump FWHM bandwidth must be > 0");
  }

  double center_omega() const noexcept { return omega_from_nm(center_wavelength_nm); }

  // Intensity FWHM and rms width in angular frequency.
  double fwhm_omega() const noexcept { return omega_width_from_nm(center_wavelength_nm, fwhm_bandwidth_nm); }
  double sigma_omega() const noexcept { return fwhm_omega() / fwhm_per_sigma; }

  double degenerate_wavelength_nm() const noexcept { return 2.0 * center_wavelength_nm; }
};

/// Uniform axis: value(k) = center + (k - size/2) * step. Doubling the size at
/// half the step nests the coarse axis in the fine one.
struct Axis {
  double center = 0.0;
  double step = 0.0;
  std::size_t size = 0;

  double operator[](std::size_t k) const noexcept {
    return center + (static_cast<double>(k) - static_cast<double>(size / 2)) * step;
  }
  double front() const noexcept { return (*this)[0]; }
  double back() const noexcept { return (*this)[size - 1]; }

  std::vector<double> values() const {
    std::vector<double> v(size);
    for (std::size_t k = 0; k < size; ++k) v[k] = (*this)[k];
    return v;
  }

  bool operator==(const Axis&) const = default;
};

struct FrequencyGrid {
  Axis e;  // rows of a JointAmplitude
  Axis o;  // columns

  const Axis& axis(Ray r) const noexcept { return r == Ray::e ? e : o; }

  void validate() const {
    for (const Axis* a : {&e, &o}) {
      if (a->size < 16) throw DomainError("frequency grid needs at least 16 points per axis");
      if (!(a->step > 0.0)) throw DomainError("frequency grid spacing must be > 0");
    }
  }
};

enum class PhasematchingShape {
  sinc,      // sin(x)/x, exact for a uniform plane-wave crystal
  gaussian,  // exp(-0.193 x^2), the customary Gaussian stand-in for the sinc
};

inline std::string_view to_string(PhasematchingShape s) noexcept {
  return s == PhasematchingShape::sinc ? "sinc" : "gaussian";
}

struct JsaOptions {
  bool flat_phase = false;  // drop exp(i dk L/2)
  PhasematchingShape shape = PhasematchingShape::sinc;
};

struct JointAmplitude {
  FrequencyGrid grid;
  Eigen::MatrixXcd values;  // (e index, o index)
  bool normalized = false;  // sum |f|^2 dw_e dw_o == 1
  bool flat_phase = false;

  double measure() const noexcept { return grid.e.step * grid.o.step; }

  double norm_squared() const { return values.squaredNorm() * measure(); }

  void normalize() {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("joint amplitude has zero or non-finite norm");
    values /= std::sqrt(n2);
    normalized = true;
  }

  /// Joint spectral intensity |f|^2.
  Eigen::MatrixXd intensity() const { return values.cwiseAbs2(); }
};

enum class FilterShape { none, gaussian, rectangular };

inline std::string_view to_string(FilterShape s) noexcept {
  switch (s) {
    case FilterShape::none: return "none";
    case FilterShape::gaussian: return "gaussian";
    case FilterShape::rectangular: return "rectangular";
  }
  return "?";
}

inline std::optional<FilterShape> parse_filter_shape(std::string_view s) noexcept {
  if (s == "none") return FilterShape::none;
  if (s == "gaussian") return FilterShape::gaussian;
  if (s == "rectangular") return FilterShape::rectangular;
  return std::nullopt;
}

struct FilterSpec {
  FilterShape shape = FilterShape::none;
  double center_wavelength_nm = 0.0;
  double fwhm_nm = 0.0;  // intensity FWHM
  Ray arm = Ray::o;

  static FilterSpec none(Ray arm = Ray::o) { return FilterSpec{FilterShape::none, 0.0, 0.0, arm}; }

  void validate() const {
    if (shape == FilterShape::none) return;
    if (!(fwhm_nm > 0.0)) throw ConfigError("filter FWHM must be > 0");
    if (!(center_wavelength_nm > 0.0)) throw ConfigError("filter center wavelength must be > 0");
  }

  /// Intensity transmission T(w) in [0, 1].
  double transmission(double omega) const noexcept {
    if (shape == FilterShape::none) return 1.0;
    const double center = omega_from_nm(center_wavelength_nm);
    const double width = omega_width_from_nm(center_wavelength_nm, fwhm_nm);
    const double d = omega - center;
    if (shape == FilterShape::rectangular) return std::abs(d) <= 0.5 * width ? 1.0 : 0.0;
    const double sigma = width / fwhm_per_sigma;
    return std::exp(-d * d / (2.0 * sigma * sigma));
  }

  Eigen::VectorXd transmission(const Axis& axis) const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(axis.size));
    for (std::size_t k = 0; k < axis.size; ++k) t(static_cast<Eigen::Index>(k)) = transmission(axis[k]);
    return t;
  }
};

/// Pump spectral amplitude at the daughter-frequency sum: a Gaussian whose
/// intensity has the pump's FWHM, flat phase, unit peak.
inline Complex pump_envelope(const PumpSpec& pump, double omega_sum) {
  const double d = omega_sum - pump.center_omega();
  const double sigma = pump.sigma_omega();
  return {std::exp(-d * d / (4.0 * sigma * sigma)), 0.0};
}

inline double sinc(double x) noexcept {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

inline Complex phasematching_function(const CrystalSpec& crystal, double theta_deg, double omega_e, double omega_o,
                                      const JsaOptions& options = {}) {
  const double x = 0.5 * delta_k(crystal, theta_deg, omega_e, omega_o) * crystal.length_m();
  const double magnitude = options.shape == PhasematchingShape::sinc ? sinc(x) : std::exp(-0.193 * x * x);
  if (options.flat_phase) return {magnitude, 0.0};
  return magnitude * std::polar(1.0, x);
}

inline constexpr std::size_t default_grid_points = 512;
inline constexpr double default_span_sigmas = 4.0;

/// Square grid centred on the degenerate frequency w_p/2, with theta taken
/// from crystal.cut_angle_deg.
///
/// The half-width is span_sigmas times a width estimate: the pump amplitude
/// rms width plus 64 phasematching scales c/(L max|dn_g|). The sinc^2
/// sidelobes decay only as 1/x^2, so the phasematching term dominates for
/// group-velocity-matched crystals. The grid is clipped to the Sellmeier
/// validity range.
inline FrequencyGrid build_grid(const CrystalSpec& crystal, const PumpSpec& pump,
                                std::size_t n_points = default_grid_points,
                                double span_sigmas = default_span_sigmas) {
  if (n_points < 16) throw DomainError("build_grid: n_points must be >= 16");
  if (!(span_sigmas > 0.0)) throw DomainError("build_grid: span_sigmas must be > 0");
  pump.validate();
  const double theta = crystal.cut_angle_deg;
  const double lp = pump.center_wavelength_nm;
  const double ld = pump.degenerate_wavelength_nm();

  const double ng_p = group_index(crystal, Ray::e, lp, theta);
  const double ng_e = group_index(crystal, Ray::e, ld, theta);
  const double ng_o = group_index(crystal, Ray::o, ld, theta);
  const double mismatch = std::max(std::abs(ng_p - ng_e), std::abs(ng_p - ng_o));
  const double pm_scale = speed_of_light / (crystal.length_m() * mismatch);
  const double width = std::sqrt(2.0) * pump.sigma_omega() + 64.0 * pm_scale;
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw DomainError("build_grid: degenerate width estimate (no group-index mismatch or zero bandwidth)");
  }

  const double center = 0.5 * pump.center_omega();
  double half = span_sigmas * width;
  const auto& form = crystal.sellmeier_o;
  const double lowest = omega_from_nm(std::min(form.valid_um_max(), crystal.sellmeier_e.valid_um_max()) * 1e3);
  const double highest = 0.5 * omega_from_nm(std::max(form.valid_um_min(), crystal.sellmeier_e.valid_um_min()) * 1e3);
  const double room = std::min(center - lowest, highest - center) * (1.0 - 1e-9);
  if (!(room > 0.0)) throw RangeError("build_grid: degenerate frequency outside the crystal validity range");
  half = std::min(half, room);

  const Axis axis{center, 2.0 * half / static_cast<double>(n_points), n_points};
  return FrequencyGrid{axis, axis};
}

inline JointAmplitude joint_amplitude(const CrystalSpec& crystal, double theta_deg, const PumpSpec& pump,
                                      const FrequencyGrid& grid, const JsaOptions& options = {}) {
  grid.validate();
  pump.validate();
  JointAmplitude out;
  out.grid = grid;
  out.flat_phase = options.flat_phase;
  out.values.resize(static_cast<Eigen::Index>(grid.e.size), static_cast<Eigen::Index>(grid.o.size));
  for (std::size_t j = 0; j < grid.o.size; ++j) {
    const double wo = grid.o[j];
    for (std::size_t i = 0; i < grid.e.size; ++i) {
      const double we = grid.e[i];
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pump_envelope(pump, we + wo) * phasematching_function(crystal, theta_deg, we, wo, options);
    }
  }
  if (!out.values.allFinite()) throw NumericalError("joint amplitude contains non-finite values");
  out.normalize();
  return out;
}

struct FilteredAmplitude {
  JointAmplitude jsa;
  double passed_fraction = 1.0;  // sum |f|^2 T_e T_o before renormalization
};

/// Per-arm amplitude transmission sqrt(T) of a filter set; filters on the same
/// arm multiply.
inline Eigen::VectorXd arm_transmission(const std::vector<FilterSpec>& filters, const Axis& axis, Ray arm) {
  Eigen::VectorXd t = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(axis.size));
  for (const auto& f : filters) {
    if (f.shape == FilterShape::none || f.arm != arm) continue;
    t = t.cwiseProduct(f.transmission(axis));
  }
  return t;
}

inline void check_filter_center(const FilterSpec& f, const FrequencyGrid& grid) {
  if (f.shape == FilterShape::none) return;
  const auto& axis = grid.axis(f.arm);
  const double w = omega_from_nm(f.center_wavelength_nm);
  if (w < axis.front() || w > axis.back()) {
    throw DomainError("filter center " + std::to_string(f.center_wavelength_nm) + " nm lies outside the " +
                      std::string(to_string(f.arm)) + "-arm grid");
  }
}

inline FilteredAmplitude apply_filters(const JointAmplitude& jsa, const std::vector<FilterSpec>& filters) {
  for (const auto& f : filters) {
    f.validate();
    check_filter_center(f, jsa.grid);
  }
  const Eigen::VectorXd te = arm_transmission(filters, jsa.grid.e, Ray::e);
  const Eigen::VectorXd to = arm_transmission(filters, jsa.grid.o, Ray::o);

  FilteredAmplitude out{jsa, 1.0};
  if (te.minCoeff() == 1.0 && to.minCoeff() == 1.0) return out;
  const Eigen::VectorXd ae = te.cwiseSqrt();
  const Eigen::VectorXd ao = to.cwiseSqrt();
  out.jsa.values = ae.asDiagonal() * jsa.values * ao.asDiagonal();
  out.passed_fraction = out.jsa.norm_squared() / jsa.norm_squared();
  if (!(out.passed_fraction > 0.0)) throw FilterSupportError();
  out.jsa.normalize();
  return out;
}

struct SpectrumPoint {
  double wavelength_nm;
  double intensity;
};

/// Marginal spectrum of one arm per unit wavelength, peak-normalized, in
/// ascending wavelength.
inline std::vector<SpectrumPoint> marginal_spectrum(const JointAmplitude& jsa, Ray arm) {
  const Eigen::MatrixXd jsi = jsa.intensity();
  const Eigen::VectorXd per_omega =
      arm == Ray::e ? Eigen::VectorXd(jsi.rowwise().sum() * jsa.grid.o.step)
                    : Eigen::VectorXd(jsi.colwise().sum().transpose() * jsa.grid.e.step);
  const Axis& axis = jsa.grid.axis(arm);
  std::vector<SpectrumPoint> out(axis.size);
  double peak = 0.0;
  for (std::size_t k = 0; k < axis.size; ++k) {
    const double w = axis[k];
    // |dw/dlambda| = w^2 / (2 pi c)
    const double density = per_omega(static_cast<Eigen::Index>(k)) * w * w / (two_pi * speed_of_light);
    out[axis.size - 1 - k] = {nm_from_omega(w), density};
    peak = std::max(peak, density);
  }
  if (peak > 0.0)
    for (auto& p : out) p.intensity /= peak;
  return out;
}

/// Full width at half maximum of a sampled peak, by linear interpolation of
/// the half-level crossings nearest the maximum. Empty when a side never
/// drops below half.
inline std::optional<double> fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) return std::nullopt;
  const auto peak_it = std::max_element(y.begin(), y.end());
  const auto peak = static_cast<std::size_t>(peak_it - y.begin());
  const double half = 0.5 * *peak_it;
  auto cross = [&](std::size_t a, std::size_t b) { return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]); };
  std::optional<double> left;
  std::optional<double> right;
  for (std::size_t k = peak; k > 0; --k) {
    if (y[k - 1] < half) {
      left = cross(k - 1, k);
      break;
    }
  }
  for (std::size_t k = peak; k + 1 < y.size(); ++k) {
    if (y[k + 1] < half) {
      right = cross(k, k + 1);
      break;
    }
  }
  if (!left || !right) return std::nullopt;
  return std::abs(*right - *left);
}

inline std::optional<double> fwhm(const std::vector<SpectrumPoint>& spectrum) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : spectrum) {
    x.push_back(p.wavelength_nm);
    y.push_back(p.intensity);
  }
  return fwhm(x, y);
}

/// Pearson correlation between w_e and w_o under the JSI as a distribution.
inline double pearson_correlation(const Eigen::MatrixXd& weights, const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  const double total = weights.sum();
  double mx = 0.0;
  double my = 0.0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      mx += weights(i, j) * xs[static_cast<std::size_t>(i)];
      my += weights(i, j) * ys[static_cast<std::size_t>(j)];
    }
  mx /= total;
  my /= total;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const double dx = xs[static_cast<std::size_t>(i)] - mx;
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      const double dy = ys[static_cast<std::size_t>(j)] - my;
      sxx += weights(i, j) * dx * dx;
      syy += weights(i, j) * dy * dy;
      sxy += weights(i, j) * dx * dy;
    }
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double pearson_correlation(const JointAmplitude& jsa) {
  return pearson_correlation(jsa.intensity(), jsa.grid.e.values(), jsa.grid.o.values());
}

}  // namespace pdc
