#pragma once

#include "kpo/meanfield.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kpo {

using Eigen::MatrixXcd;

/// Bilinear fluctuation generator around a mean-field state:
///   d(da)/dt = -i (Omega da + S da^*) - (gamma/2) da.
struct BdgBlocks {
  MatrixXcd omega_block;    // Hermitian
  MatrixXcd squeeze_block;  // symmetric
};

/// Rejects amplitudes whose normalized drift residual exceeds `residual_tol`.
BdgBlocks bdg_matrix(const NetworkParams& params, const VectorXcd& amplitudes, double residual_tol = 1e-8);

/// 2N x 2N complex generator acting on (da, da^*).
MatrixXcd bdg_generator(const NetworkParams& params, const BdgBlocks& blocks);

enum class Channel { S, A };

/// One complex-conjugate exponent pair of a factorized two-site spectrum.
struct ModeParameters {
  Channel channel = Channel::S;
  std::complex<double> mu;                // the member with Im mu >= 0
  std::optional<std::complex<double>> e;  // absent when the pair is real
};

enum class PsdMethod { C3, Transfer };

std::string_view to_string(PsdMethod m);

struct FluctuationSpectrum {
  VectorXcd exponents;
  bool factorized = false;             // M_J splits into S/A blocks (two identical sites)
  std::vector<ModeParameters> modes;   // S then A, only when factorized
  VectorXd freq_grid;
  std::vector<VectorXd> psd_site;      // Re + Im quadrature PSD per site (transfer function)
  VectorXd psd_s, psd_a;               // preferred method, two-site only
  VectorXd psd_s_transfer, psd_a_transfer;
  PsdMethod method = PsdMethod::Transfer;
};

/// Closed-form PSD (Re + Im quadratures) of one exponent pair with eigenvector
/// parameter e, for white noise of PSD sigma2 on each quadrature.
double analytic_psd(std::complex<double> mu, std::complex<double> e, double sigma2, double omega);
VectorXd analytic_psd(std::complex<double> mu, std::complex<double> e, double sigma2, const VectorXd& grid);

/// sigma2 * || P (i omega - M)^{-1} ||_F^2 per grid point.
VectorXd transfer_psd(const MatrixXd& jac, double sigma2, const VectorXd& grid, const MatrixXd& projector);

/// 2048 points on [0, 4 max(|Im mu|, gamma)].
VectorXd default_frequency_grid(const VectorXcd& exponents, double gamma, int points = 2048);

/// Requires a linearly stable state.
FluctuationSpectrum fluctuation_spectrum(const NetworkParams& params, const VectorXcd& amplitudes, double sigma2,
                                         std::optional<VectorXd> grid = std::nullopt);

struct SaSeries {
  VectorXcd symmetric;
  VectorXcd antisymmetric;
};

/// (z1 +- z2)/sqrt(2) elementwise, with z = dRe + i dIm.
SaSeries sa_transform(std::span<const std::complex<double>> site1, std::span<const std::complex<double>> site2);

/// Orthogonal 4x4 map from (Re1, Im1, Re2, Im2) to (ReS, ImS, ReA, ImA).
MatrixXd sa_matrix();

/// (1/2pi) * integral over the full axis of a PSD sampled on a nonnegative
/// grid, assuming even symmetry. The part beyond the last grid point is added
/// from the asymptotic c/omega^2 tail when `tail` is set.
double integrated_power(const VectorXd& omega, const VectorXd& psd, bool tail = true);

}  // namespace kpo
