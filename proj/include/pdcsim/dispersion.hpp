#pragma once

// Refractive, group and phasematching computations for uniaxial crystals in
// the collinear type-II configuration (e pump -> e + o daughters). Angles are
// measured from the optic axis. Wavelengths are vacuum wavelengths in nm.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "pdcsim/crystal.hpp"
#include "pdcsim/errors.hpp"
#include "pdcsim/units.hpp"

namespace pdc {

inline constexpr double default_fd_relative_step = 1e-4;

struct GvmSolution {
  double pump_wavelength_nm = 0.0;
  double phasematching_angle_deg = 0.0;
  double group_index_pump_e = 0.0;
  double group_index_daughter_o = 0.0;
  double residual = 0.0;   // group_index_pump_e - group_index_daughter_o
  double tolerance = 0.0;  // bound |residual| is checked against
};

namespace detail {

inline double checked_index(const CrystalSpec& crystal, const SellmeierForm& form, char which,
                            double wavelength_nm) {
  const double um = wavelength_nm * 1e-3;
  if (!form.covers(um)) {
    const bool low = um < form.valid_um_min();
    throw RangeError(std::string("crystal ") + crystal.name + ": wavelength " + std::to_string(wavelength_nm) +
                     " nm is " + (low ? "below" : "above") + " the n_" + which + " validity bound " +
                     std::to_string((low ? form.valid_um_min() : form.valid_um_max()) * 1e3) + " nm");
  }
  const double n = form.evaluate(um);
  if (!(n > 1.0) || !std::isfinite(n)) {
    throw RangeError("crystal " + crystal.name + ": dispersion form gives no physical index at " +
                     std::to_string(wavelength_nm) + " nm");
  }
  return n;
}

inline void check_angle(double theta_deg) {
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0))
    throw RangeError("propagation angle " + std::to_string(theta_deg) + " deg outside [0, 90]");
}

// Index-ellipsoid combination of the two principal indices.
inline double ellipsoid(double n_o, double n_e_principal, double theta_deg) {
  const double c = std::cos(radians(theta_deg));
  const double s = std::sin(radians(theta_deg));
  return 1.0 / std::sqrt(c * c / (n_o * n_o) + s * s / (n_e_principal * n_e_principal));
}

}  // namespace detail

inline double index_o(const CrystalSpec& crystal, double wavelength_nm) {
  return detail::checked_index(crystal, crystal.sellmeier_o, 'o', wavelength_nm);
}

/// Principal extraordinary index (theta = 90).
inline double index_e_principal(const CrystalSpec& crystal, double wavelength_nm) {
  return detail::checked_index(crystal, crystal.sellmeier_e, 'e', wavelength_nm);
}

inline double index_e(const CrystalSpec& crystal, double wavelength_nm, double theta_deg) {
  detail::check_angle(theta_deg);
  const double n_o = index_o(crystal, wavelength_nm);
  if (theta_deg == 0.0) return n_o;
  const double n_ep = index_e_principal(crystal, wavelength_nm);
  if (theta_deg == 90.0) return n_ep;
  return detail::ellipsoid(n_o, n_ep, theta_deg);
}

inline double index(const CrystalSpec& crystal, Ray ray, double wavelength_nm, double theta_deg) {
  return ray == Ray::o ? index_o(crystal, wavelength_nm) : index_e(crystal, wavelength_nm, theta_deg);
}

/// n_g = n - lambda dn/dlambda at fixed theta, central difference with step
/// relative_step * lambda.
inline double group_index(const CrystalSpec& crystal, Ray ray, double wavelength_nm, double theta_deg,
                          double relative_step = default_fd_relative_step) {
  const double h = relative_step * wavelength_nm;
  const double n = index(crystal, ray, wavelength_nm, theta_deg);
  const double up = index(crystal, ray, wavelength_nm + h, theta_deg);
  const double down = index(crystal, ray, wavelength_nm - h, theta_deg);
  // Exact zero slope for constant forms.
  if (up == down) return n;
  return n - wavelength_nm * (up - down) / (2.0 * h);
}

/// Collinear mismatch k_p(w_e + w_o) - k_e(w_e) - k_o(w_o) in rad/m with an
/// e-polarized pump.
inline double delta_k(const CrystalSpec& crystal, double theta_deg, double omega_e, double omega_o) {
  const double omega_p = omega_e + omega_o;
  const double n_p = index_e(crystal, nm_from_omega(omega_p), theta_deg);
  const double n_e = index_e(crystal, nm_from_omega(omega_e), theta_deg);
  const double n_o = index_o(crystal, nm_from_omega(omega_o));
  return (n_p * omega_p - n_e * omega_e - n_o * omega_o) / speed_of_light;
}

/// Type-II angle theta* in (0, 90) with delta_k(theta*, w0, w0) = 0 at the
/// degenerate frequency. Bisection down to a 1e-9 degree bracket followed by
/// one secant step inside it.
inline double phasematching_angle(const CrystalSpec& crystal, double pump_wavelength_nm,
                                  double degenerate_wavelength_nm) {
  if (std::abs(degenerate_wavelength_nm - 2.0 * pump_wavelength_nm) > 1e-9 * degenerate_wavelength_nm) {
    throw DomainError("degenerate wavelength must equal twice the pump wavelength");
  }
  const double w0 = omega_from_nm(degenerate_wavelength_nm);
  auto mismatch = [&](double theta) { return delta_k(crystal, theta, w0, w0); };

  double lo = 0.0;
  double hi = 90.0;
  double f_lo = mismatch(lo);
  double f_hi = mismatch(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (std::signbit(f_lo) == std::signbit(f_hi)) {
    throw NoPhasematchingError("no phasematching: crystal " + crystal.name + " has no type-II angle for a " +
                               std::to_string(pump_wavelength_nm) + " nm pump");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = mismatch(mid);
    if (f_mid == 0.0) return mid;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  return lo - f_lo * (hi - lo) / (f_hi - f_lo);
}

/// Pump wavelength at which the e-polarized pump and the o-polarized daughter
/// at twice its wavelength travel with equal group velocity. The phasematching
/// angle is re-solved at every trial wavelength.
inline GvmSolution gvm_pump_wavelength(const CrystalSpec& crystal, double daughter_o_wavelength_nm,
                                       double relative_step = default_fd_relative_step) {
  struct Trial {
    double theta;
    double ng_pump;
    double ng_daughter;
    double mismatch() const { return ng_pump - ng_daughter; }
  };
  auto trial = [&](double pump_nm) {
    Trial t{};
    t.theta = phasematching_angle(crystal, pump_nm, 2.0 * pump_nm);
    t.ng_pump = group_index(crystal, Ray::e, pump_nm, t.theta, relative_step);
    t.ng_daughter = group_index(crystal, Ray::o, 2.0 * pump_nm, t.theta, relative_step);
    return t;
  };

  // Coarse 1 nm pre-scan; pump wavelengths without a type-II angle are skipped
  // so the bracket only spans phasematchable pumps.
  const double start = 0.5 * daughter_o_wavelength_nm - 50.0;
  // (pump_nm, mismatch); a NaN pump marks "none yet".
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::pair<double, double> prev{nan, 0.0};
  std::pair<double, double> bracket_lo{nan, 0.0};
  std::pair<double, double> bracket_hi{nan, 0.0};
  std::string last_failure;
  int phasematched = 0;
  for (int k = 0; k <= 100 && std::isnan(bracket_hi.first); ++k) {
    const double pump_nm = start + k;
    double f = 0.0;
    try {
      f = trial(pump_nm).mismatch();
    } catch (const NoPhasematchingError& e) {
      last_failure = e.what();
      prev.first = nan;
      continue;
    }
    ++phasematched;
    if (!std::isnan(prev.first) && (f == 0.0 || std::signbit(f) != std::signbit(prev.second))) {
      bracket_lo = prev;
      bracket_hi = std::pair{pump_nm, f};
    }
    prev = std::pair{pump_nm, f};
  }
  if (std::isnan(bracket_hi.first)) {
    if (phasematched == 0) throw NoGvmPointError("no GVM point: " + last_failure);
    throw NoGvmPointError("no GVM point: pump/o-daughter group-index mismatch keeps its sign on [" +
                          std::to_string(start) + ", " + std::to_string(start + 100.0) + "] nm for " +
                          crystal.name);
  }
  auto [lo, f_lo] = bracket_lo;
  auto [hi, f_hi] = bracket_hi;
  while (hi - lo > 1e-4 && f_lo != 0.0 && f_hi != 0.0) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = trial(mid).mismatch();
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  double pump_nm = 0.0;
  if (f_lo == 0.0) {
    pump_nm = lo;
  } else if (f_hi == 0.0) {
    pump_nm = hi;
  } else {
    pump_nm = lo - f_lo * (hi - lo) / (f_hi - f_lo);
  }
  const Trial best = trial(pump_nm);
  return GvmSolution{pump_nm, best.theta, best.ng_pump, best.ng_daughter, best.mismatch(), 1e-9};
}

}  // namespace pdc
