#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "pdcsim/crystal.hpp"
#include "pdcsim/jsa.hpp"
#include "pdcsim/schmidt.hpp"

namespace pdc {

/// Everything needed to reproduce one downconversion source. The crystal's
/// cut angle is the propagation angle used for the amplitude.
struct SourceSpec {
  CrystalSpec crystal;
  PumpSpec pump;
  std::size_t grid_points = default_grid_points;
  double span_sigmas = default_span_sigmas;
  JsaOptions options;
  std::vector<FilterSpec> filters;
};

inline FrequencyGrid source_grid(const SourceSpec& source) {
  return build_grid(source.crystal, source.pump, source.grid_points, source.span_sigmas);
}

/// Filtered, normalized amplitude of a source on the given grid.
inline FilteredAmplitude source_amplitude(const SourceSpec& source, const FrequencyGrid& grid) {
  source.crystal.validate();
  const auto jsa = joint_amplitude(source.crystal, source.crystal.cut_angle_deg, source.pump, grid, source.options);
  return apply_filters(jsa, source.filters);
}

inline FilteredAmplitude source_amplitude(const SourceSpec& source) {
  return source_amplitude(source, source_grid(source));
}

/// Smallest even-sized axis at the finer of the two steps covering both.
inline Axis common_axis(const Axis& a, const Axis& b) {
  if (a == b) return a;
  const double lo = std::min(a.front(), b.front());
  const double hi = std::max(a.back(), b.back());
  const double step = std::min(a.step, b.step);
  const auto half_count = static_cast<std::size_t>(std::ceil(0.5 * (hi - lo) / step)) + 1;
  return Axis{0.5 * (lo + hi), step, 2 * half_count};
}

/// Heralded single-photon state of a source, with the heralded arm sampled on
/// `heralded_axis` when given. Source filters are applied to both arms before
/// tracing out the herald.
inline ReducedDensityMatrix heralded_state(const SourceSpec& source, Ray heralded_arm,
                                           const std::optional<Axis>& heralded_axis = std::nullopt) {
  FrequencyGrid grid = source_grid(source);
  if (heralded_axis) (heralded_arm == Ray::e ? grid.e : grid.o) = *heralded_axis;
  const auto filtered = source_amplitude(source, grid);
  return heralded_density_matrix(filtered.jsa, heralded_arm);
}

}  // namespace pdc
