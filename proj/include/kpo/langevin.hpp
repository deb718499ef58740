#pragma once

#include "kpo/meanfield.hpp"
#include "kpo/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kpo {

using Eigen::MatrixXcd;

struct NoiseSpec {
  double psd = 0.0;  // two-sided white-noise PSD per real quadrature
  std::uint64_t seed = 0;
};

struct Trajectory {
  double dt = 0.0;          // spacing between stored samples
  double step_dt = 0.0;     // integrator step
  double t0 = 0.0;
  std::size_t steps = 0;    // floor(duration / step_dt)
  MatrixXcd samples;        // n_sites x n_samples, sample k taken after (k+1)*stride steps
  VectorXcd final_state;
};

struct IntegrateOptions {
  std::size_t stride = 1;        // keep every stride-th state
  std::uint64_t stream = 0;      // RNG stream; 0 uses the noise seed directly
  std::uint64_t step_offset = 0; // first step counter, for continuing a stream
  double t0 = 0.0;
};

/// Largest Euler-Maruyama step allowed for a trajectory reaching |alpha| ~ max_amplitude.
double max_stable_step(const NetworkParams& params, double max_amplitude);

/// Euler-Maruyama integration of the mean-field equation with additive
/// white noise of PSD noise.psd on every real quadrature.
Trajectory integrate(const NetworkParams& params, const NoiseSpec& noise, const VectorXcd& alpha0, double dt,
                     double duration, const IntegrateOptions& opt = {});

struct ProbeOptions {
  double settle_time = 0.0;
  double record_time = 0.0;
  double dt = 0.0;                 // 0 picks 0.01 / max rate at each point
  std::size_t stride = 1;
  double segment_fraction = 1.0 / 16.0;
  double overlap = 0.5;
  Window window = Window::Hann;
  SolverOptions solver;
  VectorXcd initial;               // empty means the origin
};

struct ProbePoint {
  double sweep_value = 0.0;
  double noise_psd = 0.0;
  VectorXd omega;
  std::vector<VectorXd> psd_site;
  VectorXd psd_s, psd_a;           // two-site runs only
  VectorXcd mean_amplitudes;
  double fluctuation_rms = 0.0;
  SteadyState attractor;           // fixed point nearest to the recorded mean
  double attractor_distance = 0.0;
  bool jump_flag = false;          // attractor escape detected during recording
};

struct ProbeResult {
  std::vector<ProbePoint> points;
  std::vector<std::string> warnings;
};

/// Pump-noisy-probe sweep: at each sweep value settle under noise from the
/// previous final state, record, subtract the record mean and estimate the
/// site and S/A fluctuation spectra.
ProbeResult pump_noisy_probe(const NetworkParams& params, const NoiseSpec& noise, SweepAxis axis,
                             std::span<const double> grid, const ProbeOptions& opt);

}  // namespace kpo
