#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "pdcsim/schmidt.hpp"
#include "pdcsim/source.hpp"
#include "support.hpp"

namespace {

using namespace pdc;
using pdc::test::bbo_source;
using pdc::test::kdp_source;
using pdc::test::two_gaussian;
using pdc::test::two_gaussian_purity;

void expect_valid(const SchmidtResult& r) {
  double sum = 0.0;
  for (std::size_t k = 0; k < r.coefficients.size(); ++k) {
    EXPECT_GE(r.coefficients[k], 0.0);
    if (k) {
      EXPECT_LE(r.coefficients[k], r.coefficients[k - 1]);
    }
    sum += r.coefficients[k] * r.coefficients[k];
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_GT(r.purity, 0.0);
  EXPECT_LE(r.purity, 1.0 + 1e-12);
  EXPECT_GE(r.schmidt_number, 1.0 - 1e-12);
  EXPECT_NEAR(r.purity * r.schmidt_number, 1.0, 1e-9);
}

void expect_valid(const ReducedDensityMatrix& rho) {
  EXPECT_LT((rho.values - rho.values.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(rho.trace(), 1.0, 1e-9);
  EXPECT_GE(rho.eigenvalues().minCoeff(), -1e-10);
}

TEST(Schmidt, SeparableIsPure) {
  const auto r = schmidt_decompose(pdc::test::separable());
  expect_valid(r);
  EXPECT_NEAR(r.purity, 1.0, 1e-9);
  EXPECT_NEAR(r.coefficients.front(), 1.0, 1e-9);
}

TEST(Schmidt, TwoGaussianClosedForm) {
  for (double ratio : {0.2, 1.0, 5.0}) {
    const auto r = schmidt_decompose(two_gaussian(ratio * 1e12, 1e12));
    expect_valid(r);
    EXPECT_NEAR(r.purity, two_gaussian_purity(ratio), 1e-4) << ratio;
  }
}

TEST(Schmidt, TwoGaussianPurityFallsAwayFromBalance) {
  double last = 1.0 + 1e-12;
  for (double ratio : {1.0, 1.5, 2.0, 3.0, 5.0, 8.0}) {
    const double p = schmidt_decompose(two_gaussian(ratio * 1e12, 1e12, 192)).purity;
    EXPECT_LT(p, last) << ratio;
    last = p;
  }
  last = 1.0 + 1e-12;
  for (double ratio : {1.0, 0.7, 0.5, 0.3, 0.2}) {
    const double p = schmidt_decompose(two_gaussian(ratio * 1e12, 1e12, 192)).purity;
    EXPECT_LT(p, last) << ratio;
    last = p;
  }
}

TEST(Schmidt, ModesAreOrthonormalWithGridMeasure) {
  const auto jsa = two_gaussian(3e12, 1e12, 128);
  const auto r = schmidt_decompose(jsa, true);
  ASSERT_TRUE(r.modes);
  const Eigen::MatrixXcd ge = r.modes->e.leftCols(4).adjoint() * r.modes->e.leftCols(4) * jsa.grid.e.step;
  const Eigen::MatrixXcd go = r.modes->o.leftCols(4).adjoint() * r.modes->o.leftCols(4) * jsa.grid.o.step;
  EXPECT_LT((ge - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((go - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
  // f = sum_k c_k u_k(we) v_k(wo)
  Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(jsa.values.rows(), jsa.values.cols());
  for (std::size_t k = 0; k < r.coefficients.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    rebuilt += r.coefficients[k] * r.modes->e.col(i) * r.modes->o.col(i).transpose();
  }
  EXPECT_LT((rebuilt - jsa.values).cwiseAbs().maxCoeff(), 1e-9 * jsa.values.cwiseAbs().maxCoeff());
}

TEST(Schmidt, KdpFlatPhaseIsNearlyFactorable) {
  const auto r = schmidt_decompose(source_amplitude(kdp_source(512, true)).jsa);
  expect_valid(r);
  EXPECT_GE(r.purity, 0.95) << "purity " << r.purity;
}

TEST(Schmidt, NonFiniteInputFails) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(4, 4);
  m(1, 2) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EXPECT_THROW(schmidt_decompose(m), NumericalError);
}

TEST(Schmidt, PurityInvariantUnderPhaseAndAxisReversal) {
  const auto jsa = source_amplitude(bbo_source(128, false)).jsa;
  const double p = schmidt_decompose(jsa).purity;
  auto rotated = jsa;
  rotated.values *= std::polar(1.0, 0.7);
  EXPECT_NEAR(schmidt_decompose(rotated).purity, p, 1e-12);
  auto reversed = jsa;
  reversed.values = jsa.values.colwise().reverse();
  EXPECT_NEAR(schmidt_decompose(reversed).purity, p, 1e-12);
}

TEST(HeraldedState, SeparableGivesRankOne) {
  const auto rho = heralded_density_matrix(pdc::test::separable(), Ray::e);
  expect_valid(rho);
  EXPECT_NEAR(rho.eigenvalues().maxCoeff(), 1.0, 1e-9);
  EXPECT_NEAR(purity(rho), 1.0, 1e-9);
}

TEST(HeraldedState, PurityEqualsSchmidtPurity) {
  for (const auto& s : {kdp_source(256, false), bbo_source(256, false), kdp_source(256, true)}) {
    const auto jsa = source_amplitude(s).jsa;
    const double p = schmidt_decompose(jsa).purity;
    for (Ray arm : {Ray::e, Ray::o}) {
      const auto rho = heralded_density_matrix(jsa, arm);
      expect_valid(rho);
      EXPECT_NEAR(purity(rho), p, 1e-9);
    }
  }
}

TEST(HeraldedState, NarrowHeraldFilterPurifiesBbo) {
  const auto jsa = source_amplitude(bbo_source(256)).jsa;
  double last = 0.0;
  for (double bw : {10.0, 8.0, 6.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.75, 0.5}) {
    const FilterSpec f{FilterShape::gaussian, 800.0, bw, Ray::o};
    const auto rho = heralded_density_matrix(jsa, Ray::e, f);
    expect_valid(rho);
    const double p = purity(rho);
    EXPECT_GE(p, last) << bw;
    last = p;
  }
  EXPECT_GT(last, 0.9);
}

TEST(HeraldedState, HeraldFilterMustSitOnHeraldArm) {
  const auto jsa = source_amplitude(bbo_source(64)).jsa;
  EXPECT_THROW(heralded_density_matrix(jsa, Ray::e, FilterSpec{FilterShape::gaussian, 800.0, 2.0, Ray::e}),
               DomainError);
}

TEST(HeraldedState, EmptyHeraldFilterIsAnError) {
  const auto jsa = source_amplitude(bbo_source(64)).jsa;
  const double mid = 0.5 * (jsa.grid.o[20] + jsa.grid.o[21]);
  const FilterSpec sliver{FilterShape::rectangular, nm_from_omega(mid), 1e-6, Ray::o};
  EXPECT_THROW(heralded_density_matrix(jsa, Ray::e, sliver), FilterSupportError);
}

TEST(Purity, ProjectorAndMaximallyMixed) {
  const Axis axis{2e15, 1e11, 16};
  ReducedDensityMatrix rho{axis, Ray::e, Eigen::MatrixXcd::Zero(16, 16)};
  Eigen::VectorXcd v = Eigen::VectorXcd::Random(16);
  v /= std::sqrt(v.squaredNorm() * axis.step);
  rho.values = v * v.adjoint();
  EXPECT_NEAR(purity(rho), 1.0, 1e-12);
  rho.values = Eigen::MatrixXcd::Identity(16, 16) / (16.0 * axis.step);
  EXPECT_NEAR(purity(rho), 1.0 / 16.0, 1e-12);
}

TEST(Purity, MatchesEigenvalueRoute) {
  const auto jsa = source_amplitude(bbo_source(256, false)).jsa;
  for (Ray arm : {Ray::e, Ray::o}) {
    const auto rho = heralded_density_matrix(jsa, arm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.values * rho.axis.step);
    EXPECT_NEAR(purity(rho), es.eigenvalues().squaredNorm(), 1e-9);
  }
}

TEST(HeraldingEfficiency, Trivial) {
  const auto jsa = source_amplitude(bbo_source(128)).jsa;
  EXPECT_DOUBLE_EQ(heralding_efficiency(jsa, FilterSpec::none(Ray::o), FilterSpec::none(Ray::e)), 1.0);
  const auto sep = pdc::test::separable();
  const double center = nm_from_omega(sep.grid.o.center);
  for (double bw : {0.5, 2.0, 10.0}) {
    const FilterSpec herald{FilterShape::gaussian, center, bw, Ray::o};
    EXPECT_NEAR(heralding_efficiency(sep, herald, FilterSpec::none(Ray::e)), 1.0, 1e-12);
  }
}

TEST(HeraldingEfficiency, BoundedAndFallsAsSignalNarrows) {
  const auto jsa = source_amplitude(bbo_source(256)).jsa;
  const FilterSpec herald{FilterShape::gaussian, 800.0, 3.0, Ray::o};
  double last = 1.0 + 1e-15;
  for (double bw : {20.0, 10.0, 5.0, 3.0, 2.0, 1.0, 0.5}) {
    const double eta = heralding_efficiency(jsa, herald, FilterSpec{FilterShape::gaussian, 800.0, bw, Ray::e});
    EXPECT_LE(eta, last) << bw;
    EXPECT_GE(eta, 0.0);
    last = eta;
  }
}

TEST(HeraldingEfficiency, Errors) {
  const auto jsa = source_amplitude(bbo_source(64)).jsa;
  const FilterSpec a{FilterShape::gaussian, 800.0, 3.0, Ray::o};
  EXPECT_THROW(heralding_efficiency(jsa, a, a), DomainError);
  const double mid = 0.5 * (jsa.grid.o[20] + jsa.grid.o[21]);
  const FilterSpec sliver{FilterShape::rectangular, nm_from_omega(mid), 1e-6, Ray::o};
  EXPECT_THROW(heralding_efficiency(jsa, sliver, FilterSpec::none(Ray::e)), FilterSupportError);
}

}  // namespace
