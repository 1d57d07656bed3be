#pragma once

// Correlation measures of a joint spectral amplitude: Schmidt decomposition,
// heralded reduced density matrix, purity and heralding efficiency.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pdcsim/errors.hpp"
#include "pdcsim/jsa.hpp"

namespace pdc {

struct SchmidtModes {
  Eigen::MatrixXcd e;  // column k: k-th mode on the e axis, unit norm with grid measure
  Eigen::MatrixXcd o;
};

struct SchmidtResult {
  std::vector<double> coefficients;  // descending, sum c_k^2 == 1
  double purity = 1.0;               // sum c_k^4
  double schmidt_number = 1.0;       // 1 / purity
  std::optional<SchmidtModes> modes;
};

/// Schmidt coefficients from the singular values of f * sqrt(dw_e dw_o), so
/// results converge under grid refinement.
inline SchmidtResult schmidt_decompose(const Eigen::MatrixXcd& weighted, bool with_modes = false) {
  if (!weighted.allFinite()) throw NumericalError("schmidt_decompose: non-finite amplitude");
  const unsigned options = with_modes ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(weighted, options);
  if (svd.info() != Eigen::Success) throw NumericalError("schmidt_decompose: SVD failed");
  const Eigen::VectorXd s = svd.singularValues();
  const double total = s.squaredNorm();
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("schmidt_decompose: zero amplitude");

  SchmidtResult out;
  out.coefficients.resize(static_cast<std::size_t>(s.size()));
  double p = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double c = s(k) / std::sqrt(total);
    out.coefficients[static_cast<std::size_t>(k)] = c;
    p += c * c * c * c;
  }
  out.purity = p;
  out.schmidt_number = 1.0 / p;
  if (with_modes) out.modes = SchmidtModes{svd.matrixU(), svd.matrixV().conjugate()};
  return out;
}

inline SchmidtResult schmidt_decompose(const JointAmplitude& jsa, bool with_modes = false) {
  auto out = schmidt_decompose(jsa.values * std::sqrt(jsa.measure()), with_modes);
  if (out.modes) {
    out.modes->e /= std::sqrt(jsa.grid.e.step);
    out.modes->o /= std::sqrt(jsa.grid.o.step);
  }
  return out;
}

struct ReducedDensityMatrix {
  Axis axis;
  Ray arm = Ray::e;
  Eigen::MatrixXcd values;  // unit trace with measure: sum rho_ii dw == 1

  double trace() const { return values.diagonal().real().sum() * axis.step; }

  /// Eigenvalues of the operator (rho * dw), ascending.
  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(values * axis.step, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
};

/// rho(w, w') = sum_h f(w, w_h) f*(w', w_h) T_h(w_h) dw_h on the heralded arm,
/// unit trace.
inline ReducedDensityMatrix heralded_density_matrix(const JointAmplitude& jsa, Ray heralded_arm,
                                                    const FilterSpec& herald_filter = FilterSpec::none()) {
  const Ray herald_arm = other(heralded_arm);
  if (herald_filter.shape != FilterShape::none) {
    if (herald_filter.arm != herald_arm)
      throw DomainError("herald filter must act on the herald (" + std::string(to_string(herald_arm)) + ") arm");
    herald_filter.validate();
    check_filter_center(herald_filter, jsa.grid);
  }
  const Axis& herald_axis = jsa.grid.axis(herald_arm);
  const Eigen::VectorXd amp = herald_filter.transmission(herald_axis).cwiseSqrt();

  // Rows index the heralded frequency.
  const Eigen::MatrixXcd g =
      heralded_arm == Ray::e ? Eigen::MatrixXcd(jsa.values * amp.asDiagonal())
                             : Eigen::MatrixXcd(jsa.values.transpose() * amp.asDiagonal());

  ReducedDensityMatrix rho;
  rho.axis = jsa.grid.axis(heralded_arm);
  rho.arm = heralded_arm;
  const auto n = g.rows();
  rho.values = Eigen::MatrixXcd::Zero(n, n);
  rho.values.selfadjointView<Eigen::Lower>().rankUpdate(g, herald_axis.step);
  // Mirror so the stored matrix is exactly Hermitian.
  rho.values.triangularView<Eigen::StrictlyUpper>() = rho.values.adjoint();
  rho.values.diagonal() = rho.values.diagonal().real().cast<Complex>();

  const double tr = rho.trace();
  if (!(tr > 0.0)) throw FilterSupportError();
  rho.values /= tr;
  return rho;
}

/// Tr rho^2 = sum |rho_ij|^2 dw^2.
inline double purity(const ReducedDensityMatrix& rho) {
  return rho.values.squaredNorm() * rho.axis.step * rho.axis.step;
}

/// P(signal passes | herald passes) for a pure two-photon state with ideal
/// detection: sum |f|^2 T_h T_s / sum |f|^2 T_h.
inline double heralding_efficiency(const JointAmplitude& jsa, const FilterSpec& herald_filter,
                                   const FilterSpec& signal_filter) {
  if (herald_filter.shape != FilterShape::none && signal_filter.shape != FilterShape::none &&
      herald_filter.arm == signal_filter.arm) {
    throw DomainError("herald and signal filters must act on opposite arms");
  }
  for (const auto* f : {&herald_filter, &signal_filter}) {
    f->validate();
    check_filter_center(*f, jsa.grid);
  }
  const std::vector<FilterSpec> herald_only{herald_filter};
  const Eigen::VectorXd he = arm_transmission(herald_only, jsa.grid.e, Ray::e);
  const Eigen::VectorXd ho = arm_transmission(herald_only, jsa.grid.o, Ray::o);
  const std::vector<FilterSpec> signal_only{signal_filter};
  const Eigen::VectorXd se = arm_transmission(signal_only, jsa.grid.e, Ray::e);
  const Eigen::VectorXd so = arm_transmission(signal_only, jsa.grid.o, Ray::o);

  const Eigen::MatrixXd jsi = jsa.intensity();
  const double heralds = (he.asDiagonal() * jsi * ho.asDiagonal()).sum();
  if (!(heralds > 0.0)) throw FilterSupportError("herald filter passes nothing");
  const double both = (he.cwiseProduct(se).asDiagonal() * jsi * ho.cwiseProduct(so).asDiagonal()).sum();
  return both / heralds;
}

}  // namespace pdc
