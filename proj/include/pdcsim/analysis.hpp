#pragma once

// Experiment-level drivers: filter-bandwidth sweeps, synthetic Poisson counts,
// weighted least-squares fits of Gaussian HOM dips and simulated
// monochromator scans of the joint spectral intensity.
//
// Random numbers: each sample point k draws from its own std::mt19937_64
// seeded with (seed + k) through std::poisson_distribution, so serial and
// parallel evaluation agree bit for bit on a given standard library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdcsim/errors.hpp"
#include "pdcsim/interference.hpp"
#include "pdcsim/jsa.hpp"
#include "pdcsim/schmidt.hpp"
#include "pdcsim/source.hpp"

namespace pdc {

// ---------------------------------------------------------------------------
// Filter sweep

struct SweepPoint {
  double bandwidth_nm = 0.0;
  std::optional<double> purity;
  std::optional<double> heralding_efficiency;
  std::string gap;  // reason when the point could not be evaluated
};

struct SweepResult {
  FilterShape shape = FilterShape::gaussian;
  bool symmetric = true;
  Ray herald_arm = Ray::o;
  std::vector<SweepPoint> points;

  /// First point (in sweep order) whose purity reaches `threshold`.
  const SweepPoint* first_reaching(double threshold) const {
    for (const auto& p : points)
      if (p.purity && *p.purity >= threshold) return &p;
    return nullptr;
  }
};

/// For every bandwidth, filters the herald arm (and the signal arm when
/// symmetric) with filters centred on the degenerate wavelength, then records
/// the Schmidt purity of the filtered amplitude and the heralding efficiency.
/// The source's own filters are ignored; a shape of none evaluates the
/// unfiltered source at every point.
inline SweepResult filter_sweep(const SourceSpec& source, FilterShape shape, const std::vector<double>& bandwidths_nm,
                                bool symmetric, Ray herald_arm = Ray::o) {
  SourceSpec bare = source;
  bare.filters.clear();
  const auto jsa = source_amplitude(bare).jsa;
  const double center_nm = source.pump.degenerate_wavelength_nm();

  SweepResult out{shape, symmetric, herald_arm, {}};
  out.points.reserve(bandwidths_nm.size());
  for (double bw : bandwidths_nm) {
    SweepPoint point;
    point.bandwidth_nm = bw;
    try {
      if (shape != FilterShape::none && !(bw > 0.0)) throw DomainError("bandwidth must be > 0");
      const FilterSpec herald{shape, center_nm, bw, herald_arm};
      const FilterSpec signal = symmetric ? FilterSpec{shape, center_nm, bw, other(herald_arm)}
                                          : FilterSpec::none(other(herald_arm));
      const auto filtered = apply_filters(jsa, {herald, signal});
      point.purity = schmidt_decompose(filtered.jsa).purity;
      point.heralding_efficiency = heralding_efficiency(jsa, herald, signal);
    } catch (const DomainError& e) {
      point.purity.reset();
      point.heralding_efficiency.reset();
      point.gap = e.what();
    }
    out.points.push_back(std::move(point));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Poisson counts

struct CountRecord {
  std::vector<double> delays_fs;
  std::vector<std::uint64_t> counts;
  double pairs_per_point = 0.0;
  std::uint64_t seed = 0;
};

inline std::uint64_t poisson_draw(double mean, std::uint64_t seed) {
  if (!(mean > 0.0)) return 0;
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::int64_t> dist(mean);
  return static_cast<std::uint64_t>(dist(rng));
}

inline CountRecord simulate_counts(const HomScan& scan, double pairs_per_point, std::uint64_t seed) {
  if (!(pairs_per_point > 0.0)) throw DomainError("simulate_counts: pairs_per_point must be > 0");
  CountRecord out{scan.delays_fs, {}, pairs_per_point, seed};
  out.counts.resize(scan.rates.size());
  for (std::size_t k = 0; k < scan.rates.size(); ++k)
    out.counts[k] = poisson_draw(pairs_per_point * std::max(0.0, scan.rates[k]), seed + k);
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian dip fit

struct DipParameters {
  double baseline = 0.0;
  double visibility = 0.0;
  double center_fs = 0.0;
  double fwhm_fs = 0.0;
};

/// N(tau) = B [1 - V exp(-4 ln2 (tau - tau0)^2 / w^2)]
inline double dip_model(const DipParameters& p, double tau_fs) {
  const double x = (tau_fs - p.center_fs) / p.fwhm_fs;
  return p.baseline * (1.0 - p.visibility * std::exp(-4.0 * std::numbers::ln2 * x * x));
}

struct FitResult {
  DipParameters parameters;
  DipParameters uncertainties;  // one standard deviation
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  int max_iterations = 200;
  double parameter_tolerance = 1e-10;  // relative step size
  double gradient_tolerance = 1e-8;    // scaled gradient, relative to 1 + chi2
};

namespace detail {

inline std::array<double, 4> to_array(const DipParameters& p) {
  return {p.baseline, p.visibility, p.center_fs, p.fwhm_fs};
}

inline DipParameters from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

// Data-driven start: baseline from the 20% largest-|tau| points, centre at
// the lowest count, depth from min/baseline, width from half-depth crossings.
inline DipParameters initial_guess(const std::vector<double>& delays_fs, const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(delays_fs[a]) > std::abs(delays_fs[b]); });
  const std::size_t wings = std::max<std::size_t>(1, n / 5);
  double baseline = 0.0;
  for (std::size_t k = 0; k < wings; ++k) baseline += y[order[k]];
  baseline /= static_cast<double>(wings);

  const auto min_k = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  const double min_count = y[min_k];
  const double vis = baseline > 0.0 ? std::clamp(1.0 - min_count / baseline, 0.0, 1.0) : 0.0;

  std::vector<std::size_t> by_delay(n);
  std::iota(by_delay.begin(), by_delay.end(), 0);
  std::stable_sort(by_delay.begin(), by_delay.end(),
                   [&](std::size_t a, std::size_t b) { return delays_fs[a] < delays_fs[b]; });
  std::size_t pos = 0;
  while (by_delay[pos] != min_k) ++pos;
  const double level = baseline * (1.0 - 0.5 * vis);
  auto value = [&](std::size_t k) { return y[by_delay[k]]; };
  auto delay = [&](std::size_t k) { return delays_fs[by_delay[k]]; };
  auto interp = [&](std::size_t a, std::size_t b) {
    const double va = value(a);
    const double vb = value(b);
    return vb == va ? delay(a) : delay(a) + (level - va) * (delay(b) - delay(a)) / (vb - va);
  };
  std::optional<double> left;
  std::optional<double> right;
  for (std::size_t k = pos; k > 0; --k)
    if (value(k - 1) >= level) {
      left = interp(k, k - 1);
      break;
    }
  for (std::size_t k = pos; k + 1 < n; ++k)
    if (value(k + 1) >= level) {
      right = interp(k, k + 1);
      break;
    }
  const double span = delay(n - 1) - delay(0);
  double width = (left && right) ? *right - *left : 0.25 * span;
  if (!(width > 0.0)) width = 0.25 * span;
  return {baseline, vis, delays_fs[min_k], width};
}

}  // namespace detail

/// Weighted least squares with Poisson weights 1/max(y, 1), minimized by
/// damped Gauss-Newton (Levenberg-Marquardt). Uncertainties come from the
/// inverse of J^T W J at the optimum. Observations may be non-integer
/// (expected counts); the count overload below is the usual entry point.
inline FitResult fit_gaussian_dip(const std::vector<double>& delays_fs, const std::vector<double>& y,
                                  const FitOptions& options = {}) {
  const std::size_t n = y.size();
  if (n < 6 || delays_fs.size() != n) throw DomainError("fit_gaussian_dip: need at least 6 points");
  for (double v : y)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("fit_gaussian_dip: observations must be finite and >= 0");

  FitResult out;
  const bool flat = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::max(y[k], 1.0);
  const double inf = std::numeric_limits<double>::infinity();

  if (flat) {
    // No dip: only the baseline is identifiable.
    const double b = y.front();
    double sw = 0.0;
    double swg = 0.0;
    double sgg = 0.0;
    const double span = *std::max_element(delays_fs.begin(), delays_fs.end()) -
                        *std::min_element(delays_fs.begin(), delays_fs.end());
    const double tau0 = 0.5 * (*std::max_element(delays_fs.begin(), delays_fs.end()) +
                               *std::min_element(delays_fs.begin(), delays_fs.end()));
    const DipParameters p{b, 0.0, tau0, 0.25 * span};
    for (std::size_t k = 0; k < n; ++k) {
      const double x = (delays_fs[k] - p.center_fs) / p.fwhm_fs;
      const double gv = -b * std::exp(-4.0 * std::numbers::ln2 * x * x);
      sw += w[k];
      swg += w[k] * gv;
      sgg += w[k] * gv * gv;
    }
    const double det = sw * sgg - swg * swg;
    out.parameters = p;
    out.uncertainties = {det > 0.0 ? std::sqrt(sgg / det) : inf, det > 0.0 ? std::sqrt(sw / det) : inf, inf, inf};
    out.converged = true;
    out.chi2_reduced = 0.0;
    return out;
  }

  using Vec4 = Eigen::Vector4d;
  using Mat4 = Eigen::Matrix4d;
  auto evaluate = [&](const std::array<double, 4>& p, Mat4& jtj, Vec4& jtr) {
    const auto dp = detail::from_array(p);
    double chi2 = 0.0;
    jtj.setZero();
    jtr.setZero();
    for (std::size_t k = 0; k < n; ++k) {
      const double dt = delays_fs[k] - dp.center_fs;
      const double x = dt / dp.fwhm_fs;
      const double g = std::exp(-4.0 * std::numbers::ln2 * x * x);
      const double model = dp.baseline * (1.0 - dp.visibility * g);
      const double r = y[k] - model;
      Vec4 j;
      j(0) = 1.0 - dp.visibility * g;
      j(1) = -dp.baseline * g;
      // d/dtau0 and d/dw of -B V g
      j(2) = -dp.baseline * dp.visibility * g * (8.0 * std::numbers::ln2 * dt / (dp.fwhm_fs * dp.fwhm_fs));
      j(3) = -dp.baseline * dp.visibility * g * (8.0 * std::numbers::ln2 * dt * dt / std::pow(dp.fwhm_fs, 3));
      chi2 += w[k] * r * r;
      jtj.noalias() += w[k] * j * j.transpose();
      jtr.noalias() += w[k] * r * j;
    }
    return chi2;
  };

  std::array<double, 4> p = detail::to_array(detail::initial_guess(delays_fs, y));
  Mat4 jtj;
  Vec4 jtr;
  double chi2 = evaluate(p, jtj, jtr);
  double lambda = 1e-3;
  auto scales = [&](const std::array<double, 4>& q) {
    // tau0 may sit at zero; measure its steps against the width.
    return std::array<double, 4>{std::max(std::abs(q[0]), 1e-300), std::max(std::abs(q[1]), 1e-12),
                                 std::max(std::abs(q[3]), 1e-300), std::max(std::abs(q[3]), 1e-300)};
  };
  auto gradient_small = [&](const Vec4& g, const std::array<double, 4>& q) {
    const auto s = scales(q);
    double norm2 = 0.0;
    for (int i = 0; i < 4; ++i) norm2 += (g(i) * s[static_cast<std::size_t>(i)]) * (g(i) * s[static_cast<std::size_t>(i)]);
    return std::sqrt(norm2) < options.gradient_tolerance * (1.0 + chi2);
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (gradient_small(jtr, p) && it > 0) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    double rel_step = inf;
    while (lambda < 1e20) {
      Mat4 a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      const Vec4 delta = a.ldlt().solve(jtr);
      std::array<double, 4> trial = p;
      for (int i = 0; i < 4; ++i) trial[static_cast<std::size_t>(i)] += delta(i);
      if (!(trial[3] > 0.0) || !delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Mat4 jtj_t;
      Vec4 jtr_t;
      const double chi2_t = evaluate(trial, jtj_t, jtr_t);
      // Near the optimum the decrease drops below rounding; accept steps
      // that do not raise chi2 beyond it so the iteration can finish.
      if (chi2_t <= chi2 + 1e-12 * (1.0 + chi2)) {
        const auto s = scales(p);
        rel_step = 0.0;
        for (int i = 0; i < 4; ++i)
          rel_step = std::max(rel_step, std::abs(delta(i)) / s[static_cast<std::size_t>(i)]);
        p = trial;
        chi2 = chi2_t;
        jtj = jtj_t;
        jtr = jtr_t;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // Damping exhausted: no downhill step exists at working precision.
      out.converged = gradient_small(jtr, p);
      break;
    }
    if (rel_step < options.parameter_tolerance && gradient_small(jtr, p)) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.parameters = detail::from_array(p);
  out.chi2 = chi2;
  out.chi2_reduced = n > 4 ? chi2 / static_cast<double>(n - 4) : 0.0;

  const Eigen::FullPivLU<Mat4> lu(jtj);
  if (lu.isInvertible()) {
    const Mat4 cov = lu.inverse();
    std::array<double, 4> sd{};
    for (int i = 0; i < 4; ++i) sd[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i, i)));
    out.uncertainties = detail::from_array(sd);
  } else {
    out.uncertainties = {inf, inf, inf, inf};
  }
  return out;
}

inline FitResult fit_gaussian_dip(const CountRecord& record, const FitOptions& options = {}) {
  if (record.delays_fs.size() != record.counts.size()) throw DomainError("fit_gaussian_dip: delays and counts differ in length");
  std::vector<double> y(record.counts.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = static_cast<double>(record.counts[k]);
  return fit_gaussian_dip(record.delays_fs, y, options);
}

// ---------------------------------------------------------------------------
// Monochromator scan

struct JsiScan {
  std::vector<double> lambda_e_nm;  // lattice rows
  std::vector<double> lambda_o_nm;  // lattice columns
  Eigen::MatrixXd expected;         // expected counts; unit sum for an unlimited budget
  std::optional<Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>> counts;
  double resolution_fwhm_nm = 0.0;
  double step_nm = 0.0;
  std::optional<std::uint64_t> pairs_budget;
  std::uint64_t seed = 0;
};

namespace detail {

// Wavelength lattice on multiples of step covering the part of the marginal
// above `floor` of its peak.
inline std::vector<double> scan_lattice(const std::vector<SpectrumPoint>& marginal, double step_nm, double floor) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : marginal) {
    if (p.intensity >= floor) {
      lo = std::min(lo, p.wavelength_nm);
      hi = std::max(hi, p.wavelength_nm);
    }
  }
  std::vector<double> out;
  for (auto k = static_cast<long long>(std::ceil(lo / step_nm)); static_cast<double>(k) * step_nm <= hi; ++k)
    out.push_back(static_cast<double>(k) * step_nm);
  return out;
}

// Rows: lattice points; columns: grid frequencies. Each row is the
// instrument's Gaussian passband (FWHM in wavelength) normalized to unit
// integral over omega, so the scan reads out a smoothed frequency density.
inline Eigen::MatrixXd instrument_matrix(const std::vector<double>& lattice_nm, const Axis& axis,
                                         double resolution_fwhm_nm) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lattice_nm.size()), static_cast<Eigen::Index>(axis.size));
  const double sigma = resolution_fwhm_nm / fwhm_per_sigma;
  for (std::size_t a = 0; a < lattice_nm.size(); ++a) {
    for (std::size_t k = 0; k < axis.size; ++k) {
      const double d = (nm_from_omega(axis[k]) - lattice_nm[a]) / sigma;
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = std::exp(-0.5 * d * d);
    }
    const double row = m.row(static_cast<Eigen::Index>(a)).sum() * axis.step;
    if (row > 0.0) m.row(static_cast<Eigen::Index>(a)) /= row;
  }
  return m;
}

// Linear interpolation weights of the lattice points on the grid (delta
// instrument).
inline Eigen::MatrixXd sampling_matrix(const std::vector<double>& lattice_nm, const Axis& axis) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lattice_nm.size()),
                                            static_cast<Eigen::Index>(axis.size));
  for (std::size_t a = 0; a < lattice_nm.size(); ++a) {
    const double pos = (omega_from_nm(lattice_nm[a]) - axis.front()) / axis.step;
    if (pos < 0.0 || pos > static_cast<double>(axis.size - 1)) continue;
    const auto k = std::min(static_cast<std::size_t>(pos), axis.size - 2);
    const double t = pos - static_cast<double>(k);
    m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = 1.0 - t;
    m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k + 1)) = t;
  }
  return m;
}

}  // namespace detail

inline constexpr double scan_support_floor = 1e-3;

/// Simulated scan with two monochromators of Gaussian passband
/// `resolution_fwhm_nm` stepped on a `step_nm` lattice over the support of
/// each marginal (above 1e-3 of peak). A resolution of 0 samples the JSI
/// directly; an empty budget returns only the expected grid at unit sum.
inline JsiScan simulate_jsi_scan(const JointAmplitude& jsa, double resolution_fwhm_nm, double step_nm,
                                 std::optional<std::uint64_t> pairs_budget, std::uint64_t seed) {
  if (!(step_nm > 0.0)) throw DomainError("simulate_jsi_scan: step must be > 0");
  if (!(resolution_fwhm_nm >= 0.0)) throw DomainError("simulate_jsi_scan: resolution must be >= 0");
  if (pairs_budget && *pairs_budget == 0) throw DomainError("simulate_jsi_scan: pairs budget must be > 0");

  JsiScan out;
  out.resolution_fwhm_nm = resolution_fwhm_nm;
  out.step_nm = step_nm;
  out.pairs_budget = pairs_budget;
  out.seed = seed;
  out.lambda_e_nm = detail::scan_lattice(marginal_spectrum(jsa, Ray::e), step_nm, scan_support_floor);
  out.lambda_o_nm = detail::scan_lattice(marginal_spectrum(jsa, Ray::o), step_nm, scan_support_floor);
  if (out.lambda_e_nm.empty() || out.lambda_o_nm.empty())
    throw DomainError("simulate_jsi_scan: step larger than the spectral support");

  const bool delta = resolution_fwhm_nm == 0.0;
  const Eigen::MatrixXd ke = delta ? detail::sampling_matrix(out.lambda_e_nm, jsa.grid.e)
                                   : detail::instrument_matrix(out.lambda_e_nm, jsa.grid.e, resolution_fwhm_nm);
  const Eigen::MatrixXd ko = delta ? detail::sampling_matrix(out.lambda_o_nm, jsa.grid.o)
                                   : detail::instrument_matrix(out.lambda_o_nm, jsa.grid.o, resolution_fwhm_nm);
  const double measure = delta ? 1.0 : jsa.measure();
  Eigen::MatrixXd rate = ke * jsa.intensity() * ko.transpose() * measure;
  rate = rate.cwiseMax(0.0);
  const double total = rate.sum();
  if (!(total > 0.0)) throw DomainError("simulate_jsi_scan: no signal on the scan lattice");

  if (!pairs_budget) {
    out.expected = rate / total;
    return out;
  }
  out.expected = rate * (static_cast<double>(*pairs_budget) / total);
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts(out.expected.rows(), out.expected.cols());
  std::uint64_t k = 0;
  for (Eigen::Index a = 0; a < counts.rows(); ++a)
    for (Eigen::Index b = 0; b < counts.cols(); ++b) counts(a, b) = poisson_draw(out.expected(a, b), seed + k++);
  out.counts = std::move(counts);
  return out;
}

/// Schmidt purity of an intensity map on a wavelength lattice, taking the
/// amplitude as sqrt(I) with flat phase. Rows and columns are weighted by the
/// frequency width of their lattice cell.
inline double purity_from_intensity(const Eigen::MatrixXd& intensity, const std::vector<double>& lambda_e_nm,
                                    const std::vector<double>& lambda_o_nm, double step_nm) {
  Eigen::MatrixXcd amp(intensity.rows(), intensity.cols());
  for (Eigen::Index a = 0; a < intensity.rows(); ++a) {
    const double we = omega_width_from_nm(lambda_e_nm[static_cast<std::size_t>(a)], step_nm);
    for (Eigen::Index b = 0; b < intensity.cols(); ++b) {
      const double wo = omega_width_from_nm(lambda_o_nm[static_cast<std::size_t>(b)], step_nm);
      amp(a, b) = std::sqrt(std::max(0.0, intensity(a, b)) * we * wo);
    }
  }
  return schmidt_decompose(amp).purity;
}

inline double lattice_correlation(const Eigen::MatrixXd& intensity, const std::vector<double>& lambda_e_nm,
                                  const std::vector<double>& lambda_o_nm) {
  return pearson_correlation(intensity, lambda_e_nm, lambda_o_nm);
}

}  // namespace pdc
