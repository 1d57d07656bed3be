#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pdc {

inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

/// Polarization eigenmode of a uniaxial crystal. Also names the photon arm in
/// type-II downconversion, where each daughter occupies one eigenmode.
enum class Ray { e, o };

inline constexpr Ray other(Ray r) noexcept { return r == Ray::e ? Ray::o : Ray::e; }

inline std::string_view to_string(Ray r) noexcept { return r == Ray::e ? "e" : "o"; }

inline Ray parse_ray(std::string_view s) {
  if (s == "e") return Ray::e;
  if (s == "o") return Ray::o;
  throw std::invalid_argument("expected 'e' or 'o', got '" + std::string(s) + "'");
}

inline constexpr double omega_from_nm(double wavelength_nm) noexcept {
  return two_pi * speed_of_light / (wavelength_nm * 1e-9);
}

inline constexpr double nm_from_omega(double omega) noexcept {
  return two_pi * speed_of_light / omega * 1e9;
}

// Width in angular frequency of a band of width_nm centred on center_nm
// (first-order conversion).
inline constexpr double omega_width_from_nm(double center_nm, double width_nm) noexcept {
  return two_pi * speed_of_light * (width_nm * 1e-9) / ((center_nm * 1e-9) * (center_nm * 1e-9));
}

inline constexpr double radians(double degrees) noexcept {
  return degrees * std::numbers::pi / 180.0;
}

}  // namespace pdc
