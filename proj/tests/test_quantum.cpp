#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kpo/quantum.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace kpo;
using namespace kpo::quantum;

namespace {

NetworkParams dimer(double delta, double g) {
  return NetworkParams::identical(2, delta, 1.0, g, chain_coupling(2, -0.25), 0.1);
}

MatrixXcd random_hermitian(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cd(d(gen), d(gen));
  return m + m.adjoint();
}

}  // namespace

TEST_CASE("Fock indexing puts site 0 first") {
  const FockSpace s{2, 4};
  CHECK(s.dim() == 16);
  CHECK(s.index({1, 2}) == 6);
  CHECK(s.occupations(6) == std::vector<std::size_t>{1, 2});
  const MatrixXcd a0 = MatrixXcd(annihilator(s, 0));
  // a_0 |1, 2> = |0, 2>
  CHECK(std::abs(a0(2, 6) - 1.0) < 1e-15);
}

TEST_CASE("Liouvillian preserves the trace") {
  const auto l = build_liouvillian(dimer(0.3, 0.4), FockSpace{2, 5});
  const MatrixXcd rho = random_hermitian(25, 1);
  CHECK(std::abs(quantum::apply(l, rho).trace()) < 1e-12 * rho.norm());
}

TEST_CASE("vacuum is annihilated without drive and interactions") {
  auto p = NetworkParams::identical(2, 0.3, 0.0, 0.0, MatrixXd::Zero(2, 2), 0.1);
  const auto l = build_liouvillian(p, FockSpace{2, 4});
  MatrixXcd vac = MatrixXcd::Zero(16, 16);
  vac(0, 0) = 1.0;
  CHECK(quantum::apply(l, vac).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("undriven steady state is the vacuum") {
  const auto l = build_liouvillian(dimer(0.3, 0.0), FockSpace{2, 6});
  const QuantumSteadyState s = steady_state(l);
  CHECK(std::abs(s.rho(0, 0) - 1.0) < 1e-10);
  CHECK(s.mean_photons.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("damped cavity decays exponentially") {
  const double gamma = 0.2, n0 = 3.0, t = 5.0;
  const auto p = NetworkParams::identical(1, 0.4, 0.0, 0.0, MatrixXd::Zero(1, 1), gamma);
  const auto l = build_liouvillian(p, FockSpace{1, 6});
  MatrixXcd rho = MatrixXcd::Zero(6, 6);
  rho(3, 3) = 1.0;
  const MatrixXcd out = evolve(l, rho, t, 1e-12);
  double n = 0.0;
  for (int k = 0; k < 6; ++k) n += k * out(k, k).real();
  CHECK(n == doctest::Approx(n0 * std::exp(-gamma * t)).epsilon(1e-8));
}

TEST_CASE("symmetry-reduced solve matches the full solve") {
  const auto l = build_liouvillian(dimer(0.5, 0.4), FockSpace{2, 7});
  CHECK(l.symmetries.size() == 2);
  SteadyStateOptions full;
  full.reduce_symmetry = false;
  const QuantumSteadyState a = steady_state(l, full);
  const QuantumSteadyState b = steady_state(l);
  CHECK(a.method == "direct");
  CHECK(b.method == "direct-reduced");
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("propagation fallback agrees with the direct solve") {
  const auto l = build_liouvillian(dimer(1.0, 0.2), FockSpace{2, 5});
  SteadyStateOptions opt;
  opt.direct_dim_limit = 1;
  const QuantumSteadyState a = steady_state(l, opt);
  const QuantumSteadyState b = steady_state(l);
  CHECK(a.method == "propagation");
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("steady-state invariants below threshold") {
  const ConvergedSteadyState c = converged_steady_state(dimer(1.0, 0.2), 20);
  CHECK(c.converged);
  REQUIRE(c.cutoffs.size() >= 2);
  CHECK(c.cutoffs[0] == 9);
  CHECK(c.cutoffs[1] == 13);
  const QuantumSteadyState& s = c.state;
  CHECK(s.mean_amplitudes.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(s.trace_error < 1e-12);
  CHECK(s.hermiticity_error < 1e-12);
  CHECK(s.min_eigenvalue > -1e-10);
  CHECK(s.parity_commutator < 1e-8);
  CHECK(s.residual < 1e-10);

  // A single hot spot at the origin.
  const auto dist = quadrature_distribution(s, Eigen::VectorXd::LinSpaced(121, -6.0, 6.0));
  const auto spots = local_maxima(dist);
  REQUIRE(spots.size() == 1);
  CHECK(std::abs(spots[0].x[0]) < 1e-12);
  CHECK(std::abs(spots[0].x[1]) < 1e-12);
}

TEST_CASE("Hermite functions are orthonormal") {
  const std::size_t n = 60;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6001, -15.0, 15.0);
  const double h = x(1) - x(0);
  MatrixXd gram = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const Eigen::VectorXd psi = hermite_functions(n, x(k));
    gram += h * psi * psi.transpose();
  }
  CHECK((gram - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(hermite_functions(1, 0.0)(0) == doctest::Approx(std::pow(std::numbers::pi, -0.25)));
}

TEST_CASE("vacuum distribution is a Gaussian") {
  const auto l = build_liouvillian(dimer(0.3, 0.0), FockSpace{2, 4});
  const QuantumSteadyState s = steady_state(l);
  const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(81, -5.0, 5.0);
  const auto dist = quadrature_distribution(s, axis);
  double err = 0.0;
  for (Eigen::Index i = 0; i < 81; ++i)
    for (Eigen::Index j = 0; j < 81; ++j) {
      const double ref = std::exp(-axis(i) * axis(i) - axis(j) * axis(j)) / std::numbers::pi;
      err = std::max(err, std::abs(dist.p(i * 81 + j) - ref));
    }
  CHECK(err < 1e-6);
  CHECK(dist.raw_integral == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("displaced vacuum is centred at sqrt(2) alpha") {
  const std::size_t nm = 30;
  const double alpha = 1.3;
  const VectorXcd c = coherent_state(alpha, nm);
  VectorXcd psi = VectorXcd::Zero(static_cast<Eigen::Index>(nm * nm));
  for (std::size_t m = 0; m < nm; ++m) psi(static_cast<Eigen::Index>(m * nm)) = c(static_cast<Eigen::Index>(m));
  const auto l = build_liouvillian(dimer(0.3, 0.0), FockSpace{2, nm});
  const QuantumSteadyState s = describe(l, psi * psi.adjoint(), "manual");
  const auto dist = quadrature_distribution(s, Eigen::VectorXd::LinSpaced(161, -8.0, 8.0));
  const auto spots = local_maxima(dist);
  REQUIRE(spots.size() == 1);
  CHECK(std::abs(spots[0].x[0] - std::sqrt(2.0) * alpha) < 0.1);
  CHECK(std::abs(spots[0].x[1]) < 1e-12);
  CHECK(std::abs(s.mean_amplitudes(0) - alpha) < 1e-10);
}

TEST_CASE("grid too small is rejected") {
  const std::size_t nm = 30;
  const VectorXcd c = coherent_state(3.0, nm);
  VectorXcd psi = VectorXcd::Zero(static_cast<Eigen::Index>(nm));
  psi = c;
  const auto l = build_liouvillian(NetworkParams::identical(1, 0.3, 1.0, 0.0, MatrixXd::Zero(1, 1), 0.1), FockSpace{1, nm});
  const QuantumSteadyState s = describe(l, psi * psi.adjoint(), "manual");
  CHECK_THROWS(quadrature_distribution(s, Eigen::VectorXd::LinSpaced(41, -2.0, 2.0)));
}

TEST_CASE("cat states") {
  const double a = 1.5;
  const std::size_t nm = 25;  // >= |a|^2 + 8|a| + 10
  const VectorXcd plus = coherent_state(a, nm), minus = coherent_state(-a, nm);
  CHECK(std::abs(plus.dot(minus) - std::exp(-2.0 * a * a)) < 1e-10);
  for (int parity : {1, -1}) {
    const CatState cat = cat_state(a, parity, nm);
    CHECK(cat.norm_const == doctest::Approx(1.0 / std::sqrt(2.0 * (1.0 + parity * std::exp(-2.0 * a * a)))));
    CHECK(cat.vector.norm() == doctest::Approx(1.0).epsilon(1e-10));
    // Only photon numbers of matching parity.
    for (Eigen::Index k = parity > 0 ? 1 : 0; k < cat.vector.size(); k += 2) CHECK(std::abs(cat.vector(k)) < 1e-12);
  }
  const CatState zero = cat_state(0.0, 1, 5);
  CHECK(std::abs(zero.vector(0) - 1.0) < 1e-15);
  CHECK_THROWS(cat_state(0.0, -1, 5));
}

TEST_CASE("ensemble mean amplitude") {
  const cd alpha(1.2, 0.5);
  CHECK(ensemble_mean_amplitude(1, alpha, 1000, 3).rms == doctest::Approx(std::abs(alpha)));
  CHECK(ensemble_mean_amplitude(100, alpha, 4000, 3).rms == doctest::Approx(std::abs(alpha) / 10.0).epsilon(0.1));
  CHECK(ensemble_mean_amplitude(100, 0.0, 1000, 3).rms == 0.0);
}
