#pragma once

#include "kpo/model.hpp"

#include <Eigen/Dense>

namespace kpo {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Lab-frame parametric Duffing network
///   x_j'' + gamma_j x_j' + omega_j^2 (1 - lambda_j cos(omega_G t)) x_j + A_j x_j^3 + sum_k K_jk x_k = 0.
struct LabParams {
  VectorXd omega;
  VectorXd lambda;
  VectorXd duffing;
  MatrixXd coupling;  // K_jk
  VectorXd damping;
  double drive_freq = 0.0;
  double hbar = 1.0;

  std::size_t n_sites() const { return static_cast<std::size_t>(omega.size()); }
  void validate() const;
};

/// lambda = 4 G / omega, A = 4 omega^2 V / (3 hbar), K_jk = 2 J_jk sqrt(omega_j omega_k).
LabParams lab_params(const NetworkParams& params, double hbar = 1.0);

struct LabTrajectory {
  double dt = 0.0;  // sample spacing
  double t0 = 0.0;  // time of the first sample
  MatrixXd x;       // n_sites x samples
  MatrixXd v;
};

/// Largest step accepted by integrate_lab: 40 steps per fastest period.
double max_lab_step(const LabParams& lab);

/// Fixed-step RK4. Samples are stored every `stride` steps starting at t = 0.
LabTrajectory integrate_lab(const LabParams& lab, const VectorXd& x0, const VectorXd& v0, double dt, double duration,
                            std::size_t stride = 1);

/// Lock-in: u + i v = lowpass[2 x(t) e^{-i ref t}] with a single-pole filter
/// of angular bandwidth `bandwidth`, started from zero. Row j holds site j.
MatrixXcd demodulate(const MatrixXd& x, double dt, double t0, double ref_freq, double bandwidth);

/// Average of the demodulated signal over the last `periods` drive periods.
/// The 2*ref ripple left by the filter cancels over whole periods.
VectorXcd period_average(const MatrixXcd& z, double dt, double drive_freq, std::size_t periods = 1);

/// Largest Floquet multiplier modulus of the linearized (A = 0) lab equations
/// over one drive period.
double floquet_radius(const LabParams& lab, std::size_t steps_per_period = 4000);

/// Modulation depth at which the origin loses stability, by bisection on
/// floquet_radius between lo (stable) and hi (unstable). Every lambda_j is set
/// to the same value.
double lab_threshold(const LabParams& lab, double lo, double hi, double rel_tol = 1e-6);

}  // namespace kpo
