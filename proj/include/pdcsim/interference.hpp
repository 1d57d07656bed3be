#pragma once

// Hong-Ou-Mandel interference of two heralded photons with slow (non
// time-resolved) detectors:
//
//   R(tau) = 1 - Re Tr[rho_a rho_b(tau)],
//   rho_b(tau)(w, w') = rho_b(w, w') exp(-i (w - w') tau).
//
// Rates are normalized to the large-delay baseline. Positive tau delays
// photon b.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdcsim/errors.hpp"
#include "pdcsim/schmidt.hpp"
#include "pdcsim/source.hpp"

namespace pdc {

struct HomScan {
  std::vector<double> delays_fs;
  std::vector<double> rates;
  double visibility = 0.0;
  double dip_fwhm_fs = 0.0;    // 0 when there is no dip
  double dip_center_fs = 0.0;
};

/// Overlap Re Tr[rho_a rho_b(tau)] as a function of delay. The trace is
/// collapsed onto the diagonals d = j - i once, so each delay costs O(N).
class HomOverlap {
 public:
  HomOverlap(const ReducedDensityMatrix& rho_a, const ReducedDensityMatrix& rho_b) {
    const auto& a = rho_a.axis;
    const auto& b = rho_b.axis;
    const bool same = a.size == b.size && std::abs(a.step - b.step) <= 1e-12 * a.step &&
                      std::abs(a.center - b.center) <= 1e-12 * a.center;
    if (!same) throw DomainError("hom_dip: density matrices live on different frequency axes");
    step_ = a.step;
    const auto n = rho_a.values.rows();
    diagonals_.assign(static_cast<std::size_t>(n), Complex{});
    for (Eigen::Index d = 0; d < n; ++d) {
      Complex acc{};
      for (Eigen::Index i = 0; i + d < n; ++i) acc += rho_a.values(i, i + d) * rho_b.values(i + d, i);
      diagonals_[static_cast<std::size_t>(d)] = acc;
    }
  }

  double operator()(double tau_fs) const {
    const double tau = tau_fs * 1e-15;
    // Hermiticity gives c_{-d} = conj(c_d).
    double s = diagonals_[0].real();
    for (std::size_t d = 1; d < diagonals_.size(); ++d) {
      const double phase = static_cast<double>(d) * step_ * tau;
      s += 2.0 * (diagonals_[d].real() * std::cos(phase) + diagonals_[d].imag() * std::sin(phase));
    }
    return s * step_ * step_;
  }

 private:
  double step_ = 0.0;
  std::vector<Complex> diagonals_;
};

inline constexpr std::size_t hom_refinement_points = 8193;
inline constexpr double no_dip_threshold = 1e-6;

/// Normalized coincidence rates at the requested delays. The visibility is the
/// peak overlap over a dense refinement of the delay range; the dip FWHM comes
/// from linear interpolation of the 1 - V/2 crossings on that refinement.
inline HomScan hom_dip(const ReducedDensityMatrix& rho_a, const ReducedDensityMatrix& rho_b,
                       const std::vector<double>& delays_fs) {
  if (delays_fs.size() < 2) throw DomainError("hom_dip: need at least two delays");
  const HomOverlap overlap(rho_a, rho_b);

  HomScan scan;
  scan.delays_fs = delays_fs;
  scan.rates.reserve(delays_fs.size());
  for (double t : delays_fs) scan.rates.push_back(1.0 - overlap(t));

  const auto [lo_it, hi_it] = std::minmax_element(delays_fs.begin(), delays_fs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DomainError("hom_dip: delay range is empty");
  const std::size_t m = hom_refinement_points;
  const double h = (hi - lo) / static_cast<double>(m - 1);
  std::vector<double> dense_t(m);
  std::vector<double> dense_s(m);
  for (std::size_t k = 0; k < m; ++k) {
    dense_t[k] = lo + static_cast<double>(k) * h;
    dense_s[k] = overlap(dense_t[k]);
  }
  const auto best = static_cast<std::size_t>(std::max_element(dense_s.begin(), dense_s.end()) - dense_s.begin());

  // Golden-section polish of the peak inside the neighbouring cells.
  double a = std::max(lo, dense_t[best] - h);
  double b = std::min(hi, dense_t[best] + h);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = overlap(x1);
  double f2 = overlap(x2);
  for (int it = 0; it < 80 && b - a > 1e-9; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = overlap(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = overlap(x1);
    }
  }
  double peak_t = dense_t[best];
  double peak_s = dense_s[best];
  for (const auto& [t, s] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (s > peak_s) {
      peak_s = s;
      peak_t = t;
    }
  }

  scan.visibility = std::max(0.0, peak_s);
  if (scan.visibility < no_dip_threshold) return scan;
  scan.dip_center_fs = peak_t;

  const double level = 0.5 * scan.visibility;  // overlap at half depth
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double s0 = dense_s[inside];
    const double s1 = dense_s[outside];
    return dense_t[inside] + (level - s0) * (dense_t[outside] - dense_t[inside]) / (s1 - s0);
  };
  std::optional<double> left;
  std::optional<double> right;
  for (std::size_t k = best; k > 0; --k) {
    if (dense_s[k - 1] <= level) {
      left = crossing(k, k - 1);
      break;
    }
  }
  for (std::size_t k = best; k + 1 < m; ++k) {
    if (dense_s[k + 1] <= level) {
      right = crossing(k, k + 1);
      break;
    }
  }
  if (!left || !right) throw DomainError("hom_dip: dip half-depth not bracketed; widen delay range");
  scan.dip_fwhm_fs = *right - *left;
  return scan;
}

/// Coherence time from the HOM dip width, tau_c = FWHM / sqrt(2).
inline double coherence_time(double dip_fwhm_fs) {
  if (dip_fwhm_fs < 0.0) throw DomainError("coherence_time: dip FWHM must be >= 0");
  return dip_fwhm_fs / std::numbers::sqrt2;
}

/// Interferes the heralded photons of two independent sources. `herald_arm` is
/// the arm whose detection announces the partner: heralding on o interferes
/// the e-rays and vice versa. Both heralded states are sampled on one common
/// axis.
inline HomScan two_source_experiment(const SourceSpec& source_a, const SourceSpec& source_b, Ray herald_arm,
                                     const std::vector<double>& delays_fs) {
  const Ray photon = other(herald_arm);
  const Axis axis = common_axis(source_grid(source_a).axis(photon), source_grid(source_b).axis(photon));
  const auto rho_a = heralded_state(source_a, photon, axis);
  const auto rho_b = heralded_state(source_b, photon, axis);
  return hom_dip(rho_a, rho_b, delays_fs);
}

/// Delay list lo, lo + step, ..., up to and including hi.
inline std::vector<double> delay_range(double lo_fs, double hi_fs, double step_fs) {
  if (!(step_fs > 0.0) || !(hi_fs > lo_fs)) throw DomainError("delay range must satisfy lo < hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi_fs - lo_fs) / step_fs + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = lo_fs + static_cast<double>(k) * step_fs;
  return out;
}

}  // namespace pdc
