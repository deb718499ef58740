#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kpo/labframe.hpp"

#include <cmath>
#include <numbers>

using namespace kpo;

namespace {

LabParams oscillator(double omega, double gamma) {
  LabParams lab;
  lab.omega = VectorXd::Constant(1, omega);
  lab.lambda = VectorXd::Zero(1);
  lab.duffing = VectorXd::Zero(1);
  lab.coupling = MatrixXd::Zero(1, 1);
  lab.damping = VectorXd::Constant(1, gamma);
  lab.drive_freq = 2.0 * omega;
  return lab;
}

}  // namespace

TEST_CASE("parameter mapping") {
  NetworkParams p;
  p.n_sites = 2;
  p.omega = Eigen::Vector2d(1.0, 1.2);
  p.kerr = Eigen::Vector2d(0.01, 0.02);
  p.drive = Eigen::Vector2d(0.03, 0.05);
  p.damping = Eigen::Vector2d(0.004, 0.004);
  p.coupling = chain_coupling(2, -0.02);
  p.drive_freq = 2.2;
  const LabParams lab = lab_params(p, 2.0);
  CHECK(lab.lambda(0) == doctest::Approx(0.12));
  CHECK(lab.lambda(1) == doctest::Approx(4.0 * 0.05 / 1.2));
  CHECK(lab.duffing(1) == doctest::Approx(4.0 * 1.44 * 0.02 / 6.0));
  CHECK(lab.coupling(0, 1) == doctest::Approx(2.0 * -0.02 * std::sqrt(1.2)));
  CHECK(lab.coupling(0, 0) == 0.0);
  CHECK(lab.drive_freq == 2.2);
  p.omega(0) = 0.0;
  CHECK_THROWS_AS(lab_params(p), std::invalid_argument);
}

TEST_CASE("free damped oscillator") {
  const double omega = 1.0, gamma = 0.05;
  const LabParams lab = oscillator(omega, gamma);
  const double dt = max_lab_step(lab) / 16.0;
  const LabTrajectory tr = integrate_lab(lab, VectorXd::Ones(1), VectorXd::Zero(1), dt, 50.0, 40);
  const double wd = std::sqrt(omega * omega - gamma * gamma / 4.0);
  double err = 0.0;
  for (Eigen::Index k = 0; k < tr.x.cols(); ++k) {
    const double t = tr.t0 + tr.dt * static_cast<double>(k);
    const double ref = std::exp(-gamma * t / 2.0) * (std::cos(wd * t) + gamma / (2.0 * wd) * std::sin(wd * t));
    err = std::max(err, std::abs(tr.x(0, k) - ref));
  }
  INFO("max error ", err);
  CHECK(err < 1e-8);
  CHECK(tr.x(0, 0) == 1.0);
}

TEST_CASE("step bound") {
  const LabParams lab = oscillator(1.0, 0.05);
  CHECK(max_lab_step(lab) == doctest::Approx(2.0 * std::numbers::pi / 40.0));
  CHECK_THROWS_AS(integrate_lab(lab, VectorXd::Ones(1), VectorXd::Zero(1), 0.2, 10.0), std::invalid_argument);
}

TEST_CASE("lock-in recovers the quadratures") {
  // x = A cos(nu t) + B sin(nu t) demodulates to A - i B.
  const double nu = 1.0, a = 0.7, b = -0.3, dt = 2.0 * std::numbers::pi / 400.0;
  const Eigen::Index n = 400 * 400;
  MatrixXd x(1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    x(0, k) = a * std::cos(nu * t) + b * std::sin(nu * t);
  }
  const MatrixXcd z = demodulate(x, dt, 0.0, nu, nu / 40.0);
  const VectorXcd avg = period_average(z, dt, 2.0 * nu, 4);
  CHECK(std::abs(avg(0) - std::complex<double>(a, -b)) < 1e-6);
  CHECK_THROWS(demodulate(x, dt, 0.0, nu, nu));
}

TEST_CASE("Floquet multipliers of the undriven oscillator") {
  const double omega = 1.0, gamma = 0.02;
  const LabParams lab = oscillator(omega, gamma);
  const double period = 2.0 * std::numbers::pi / lab.drive_freq;
  CHECK(floquet_radius(lab) == doctest::Approx(std::exp(-gamma * period / 2.0)).epsilon(1e-9));
}

TEST_CASE("parametric threshold at weak damping") {
  // Lowest-order lobe: lambda omega / 4 = gamma / 2 on resonance.
  const double omega = 1.0, gamma = 0.004;
  const LabParams lab = oscillator(omega, gamma);
  const double th = lab_threshold(lab, 0.0, 0.1);
  CHECK(th == doctest::Approx(2.0 * gamma / omega).epsilon(0.01));
  LabParams above = lab;
  above.lambda(0) = 1.1 * th;
  CHECK(floquet_radius(above) > 1.0);
}
