#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>

namespace kpo {

enum class Window { Hann, Rectangular };

Window parse_window(std::string_view name);

struct PsdEstimate {
  Eigen::VectorXd omega;  // angular frequencies 0 .. pi/dt
  Eigen::VectorXd psd;    // two-sided density: white noise of PSD s2 reads s2
  std::size_t segments = 0;
};

/// Welch estimate of a real series sampled every `dt`. The series is used
/// as given (no detrending).
PsdEstimate welch_psd(std::span<const double> series, double dt, std::size_t segment_len,
                      double overlap_frac = 0.5, Window window = Window::Hann);

struct PeakFit {
  double decay_rate = 0.0;  // Gamma = -Re mu
  double frequency = 0.0;   // |Im mu| when underdamped, 0 otherwise
  double omega0_sq = 0.0;   // |mu|^2
  bool converged = false;
};

/// Least-squares fit (in log space) of (a + b w^2) / ((w0^2 - w^2)^2 + 4 Gamma^2 w^2),
/// the Re+Im quadrature PSD of a damped two-dimensional linear mode, on
/// grid points with 0 <= omega <= omega_max.
PeakFit fit_mode_psd(const Eigen::VectorXd& omega, const Eigen::VectorXd& psd, double omega_max);

}  // namespace kpo
