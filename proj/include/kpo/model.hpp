#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kpo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown when a numerical routine cannot reach its accuracy target.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Model constants of a network of coupled Kerr parametric oscillators.
///
/// All rates are angular (rad/s, or units of V in dimensionless runs). The
/// two-photon drive is real and nonnegative; any drive phase is absorbed
/// into the phase of the mean-field amplitudes.
struct NetworkParams {
  std::size_t n_sites = 1;
  VectorXd omega;     // natural frequency per site
  VectorXd kerr;      // Kerr coefficient V_j
  VectorXd drive;     // two-photon drive G_j
  double drive_freq = 0.0;
  MatrixXd coupling;  // symmetric, zero diagonal
  VectorXd damping;   // gamma_j

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Rotating-frame detunings Delta_j = omega_G/2 - omega_j - V_j.
  VectorXd detunings() const;

  /// Same network with a different drive frequency.
  NetworkParams with_drive_freq(double omega_g) const;

  /// Shift the drive frequency so that the mean detuning equals `delta`.
  NetworkParams with_mean_detuning(double delta) const;

  /// Same network with every G_j set to `g`.
  NetworkParams with_drive(double g) const;

  double max_rate() const;
  double amplitude_scale() const;

  /// N identical sites with detuning `delta`, Kerr `kerr`, drive `drive`,
  /// damping `damping`, and the given coupling matrix. The drive frequency
  /// is fixed at zero so that omega_j = -V - delta.
  static NetworkParams identical(std::size_t n, double delta, double kerr, double drive,
                                 const MatrixXd& coupling, double damping);
};

/// Open nearest-neighbour chain coupling with hopping `j`.
MatrixXd chain_coupling(std::size_t n, double j);
/// All-to-all coupling with hopping `j`.
MatrixXd all_to_all_coupling(std::size_t n, double j);

VectorXd detunings(const VectorXd& omega, const VectorXd& kerr, double drive_freq);

struct NormalModeBasis {
  VectorXd eigen_detunings;  // ascending
  MatrixXd transform;        // columns are the normal modes in the site basis
  MatrixXd mode_drives;      // filled by normal_mode_drives
};

/// Diagonalizes the single-particle matrix with diagonal -Delta_j and
/// off-diagonal J_jk. Modes are ordered by ascending eigen-detuning and each
/// eigenvector's largest-magnitude component is made positive.
NormalModeBasis normal_mode_basis(const VectorXd& detunings, const MatrixXd& coupling);

/// G~ = U^T diag(G) U. Diagonal entries are eigenmode squeezing amplitudes,
/// off-diagonal entries two-mode squeezing amplitudes.
MatrixXd normal_mode_drives(const NormalModeBasis& basis, const VectorXd& drive);

/// Normal-mode basis with mode_drives already filled in.
NormalModeBasis normal_modes(const NetworkParams& params);

/// Site transpositions (and, for N > 2, the reversal) that leave every site
/// parameter and the coupling matrix invariant.
std::vector<std::vector<Eigen::Index>> site_symmetries(const NetworkParams& params);

/// Parametric instability threshold sqrt(Delta~^2 + (gamma/2)^2) of one mode.
double lobe_threshold(double eigen_detuning, double damping);

struct CalibrationInputs {
  double u_drive = 0.0;       // V
  double u_threshold = 1.0;   // V
  double gamma0 = 0.0;        // rad/s
  double noise_psd_in = 0.0;  // V^2/Hz
  double coupling_const = 0.0035;  // Hz^4/V^2

  void validate() const;
};

/// G = gamma0 * U_d / (2 U_th).
double calibrate_drive(const CalibrationInputs& cal);

struct NoiseCalibration {
  double varsigma2 = 0.0;  // in-coupled noise strength
  double sigma2 = 0.0;     // rotating-frame quadrature PSD
};

/// varsigma^2 = coupling_const * S_n and sigma^2 = varsigma^2 / (2 (omega_G/2)^2).
NoiseCalibration calibrate_noise(const CalibrationInputs& cal, double drive_freq);

}  // namespace kpo
