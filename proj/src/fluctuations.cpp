#include "kpo/fluctuations.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kpo {

using cd = std::complex<double>;

std::string_view to_string(PsdMethod m) { return m == PsdMethod::C3 ? "c3" : "transfer"; }

BdgBlocks bdg_matrix(const NetworkParams& p, const VectorXcd& a, double residual_tol) {
  const double res = normalized_residual(p, a);
  if (!(res <= residual_tol)) {
    std::ostringstream msg;
    msg << "amplitudes are not a mean-field fixed point (residual " << res << ")";
    throw std::invalid_argument(msg.str());
  }
  const VectorXd delta = p.detunings();
  const Eigen::Index n = a.size();
  BdgBlocks b;
  b.omega_block = p.coupling.cast<cd>();
  b.squeeze_block = MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    b.omega_block(j, j) = -delta(j) + 2.0 * p.kerr(j) * std::norm(a(j));
    b.squeeze_block(j, j) = p.kerr(j) * a(j) * a(j) - p.drive(j);
  }
  return b;
}

MatrixXcd bdg_generator(const NetworkParams& p, const BdgBlocks& b) {
  const Eigen::Index n = b.omega_block.rows();
  const cd i(0.0, 1.0);
  MatrixXcd k(2 * n, 2 * n);
  const MatrixXcd damp = (0.5 * p.damping).cast<cd>().asDiagonal();
  k.topLeftCorner(n, n) = -i * b.omega_block - damp;
  k.topRightCorner(n, n) = -i * b.squeeze_block;
  k.bottomLeftCorner(n, n) = i * b.squeeze_block.conjugate();
  k.bottomRightCorner(n, n) = i * b.omega_block.conjugate() - damp;
  return k;
}

double analytic_psd(cd mu, cd e, double sigma2, double omega) {
  const double mr = mu.real();
  const double mi = mu.imag();
  const double er = e.real();
  const double ei = e.imag();
  if (ei == 0.0) throw std::invalid_argument("closed-form PSD is singular for real eigenvector parameter");
  const double w2 = omega * omega;
  const double num = sigma2 * (mi * mi * (2.0 * ei * ei * er * er + ei * ei * ei * ei + (er * er + 1.0) * (er * er + 1.0)) +
                               2.0 * ei * ei * (mr * mr + w2));
  const double den = ei * ei * ((mi * mi - w2) * (mi * mi - w2) + mr * mr * (2.0 * mi * mi + mr * mr + 2.0 * w2));
  return num / den;
}

VectorXd analytic_psd(cd mu, cd e, double sigma2, const VectorXd& grid) {
  VectorXd out(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) out(k) = analytic_psd(mu, e, sigma2, grid(k));
  return out;
}

VectorXd transfer_psd(const MatrixXd& jac, double sigma2, const VectorXd& grid, const MatrixXd& projector) {
  const Eigen::Index n = jac.rows();
  const MatrixXcd m = jac.cast<cd>();
  const MatrixXcd proj = projector.cast<cd>();
  VectorXd out(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    MatrixXcd a = cd(0.0, grid(k)) * MatrixXcd::Identity(n, n) - m;
    const MatrixXcd h = a.partialPivLu().inverse();
    out(k) = sigma2 * (proj * h).squaredNorm();
  }
  return out;
}

VectorXd default_frequency_grid(const VectorXcd& exponents, double gamma, int points) {
  double top = gamma;
  for (Eigen::Index k = 0; k < exponents.size(); ++k) top = std::max(top, std::abs(exponents(k).imag()));
  if (!(top > 0.0)) top = 1.0;
  return VectorXd::LinSpaced(points, 0.0, 4.0 * top);
}

MatrixXd sa_matrix() {
  const double s = 1.0 / std::numbers::sqrt2;
  MatrixXd t(4, 4);
  t << s, 0, s, 0,
       0, s, 0, s,
       s, 0, -s, 0,
       0, s, 0, -s;
  return t;
}

namespace {

// Returns the pair member with Im >= 0 and its eigenvector parameter e, where
// the eigenvector is proportional to (e, 1).
ModeParameters block_mode(const MatrixXd& block, Channel ch) {
  Eigen::EigenSolver<MatrixXd> solver(block);
  ModeParameters mode;
  mode.channel = ch;
  const VectorXcd mu = solver.eigenvalues();
  const Eigen::Index pick = mu(0).imag() >= mu(1).imag() ? 0 : 1;
  mode.mu = mu(pick);
  const double scale = std::max(block.cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(mode.mu.imag()) > 1e-12 * scale) {
    const VectorXcd v = solver.eigenvectors().col(pick);
    if (std::abs(v(1)) > 0.0) {
      const cd e = v(0) / v(1);
      if (e.imag() != 0.0) mode.e = e;
    }
  }
  return mode;
}

}  // namespace

FluctuationSpectrum fluctuation_spectrum(const NetworkParams& p, const VectorXcd& a, double sigma2,
                                         std::optional<VectorXd> grid) {
  if (sigma2 < 0.0) throw std::invalid_argument("noise PSD must be nonnegative");
  bdg_matrix(p, a);  // stationarity check
  const MatrixXd jac = jacobian(p, a);
  FluctuationSpectrum fs;
  fs.exponents = characteristic_exponents(jac);
  if (!(fs.exponents(0).real() < 0.0)) throw std::invalid_argument("fluctuation spectrum requires a stable state");
  fs.freq_grid = grid ? *grid : default_frequency_grid(fs.exponents, p.damping.maxCoeff());

  const Eigen::Index n = a.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    MatrixXd proj = MatrixXd::Zero(2, 2 * n);
    proj(0, 2 * j) = 1.0;
    proj(1, 2 * j + 1) = 1.0;
    fs.psd_site.push_back(transfer_psd(jac, sigma2, fs.freq_grid, proj));
  }
  if (n != 2) return fs;

  const MatrixXd t = sa_matrix();
  fs.psd_s_transfer = transfer_psd(jac, sigma2, fs.freq_grid, t.topRows(2));
  fs.psd_a_transfer = transfer_psd(jac, sigma2, fs.freq_grid, t.bottomRows(2));

  const MatrixXd rotated = t * jac * t.transpose();
  const double off = std::max(rotated.topRightCorner(2, 2).cwiseAbs().maxCoeff(),
                              rotated.bottomLeftCorner(2, 2).cwiseAbs().maxCoeff());
  fs.factorized = off <= 1e-12 * std::max(jac.cwiseAbs().maxCoeff(), 1e-300);
  fs.psd_s = fs.psd_s_transfer;
  fs.psd_a = fs.psd_a_transfer;
  if (!fs.factorized) return fs;

  fs.modes.push_back(block_mode(rotated.topLeftCorner(2, 2), Channel::S));
  fs.modes.push_back(block_mode(rotated.bottomRightCorner(2, 2), Channel::A));
  if (fs.modes[0].e && fs.modes[1].e) {
    fs.method = PsdMethod::C3;
    fs.psd_s = analytic_psd(fs.modes[0].mu, *fs.modes[0].e, sigma2, fs.freq_grid);
    fs.psd_a = analytic_psd(fs.modes[1].mu, *fs.modes[1].e, sigma2, fs.freq_grid);
  }
  return fs;
}

SaSeries sa_transform(std::span<const cd> site1, std::span<const cd> site2) {
  if (site1.size() != site2.size()) throw std::invalid_argument("S/A transform needs equal-length series");
  const double s = 1.0 / std::numbers::sqrt2;
  SaSeries out;
  const auto n = static_cast<Eigen::Index>(site1.size());
  out.symmetric.resize(n);
  out.antisymmetric.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cd z1 = site1[static_cast<std::size_t>(k)];
    const cd z2 = site2[static_cast<std::size_t>(k)];
    out.symmetric(k) = s * (z1 + z2);
    out.antisymmetric(k) = s * (z1 - z2);
  }
  return out;
}

double integrated_power(const VectorXd& omega, const VectorXd& psd, bool tail) {
  if (omega.size() != psd.size() || omega.size() < 2) throw std::invalid_argument("grid and PSD size mismatch");
  double sum = 0.0;
  for (Eigen::Index k = 1; k < omega.size(); ++k)
    sum += 0.5 * (psd(k) + psd(k - 1)) * (omega(k) - omega(k - 1));
  const double w = omega(omega.size() - 1);
  if (tail && w > 0.0) sum += psd(psd.size() - 1) * w;  // integral of c/x^2 from w to inf with c = psd(w) w^2
  return 2.0 * sum / (2.0 * std::numbers::pi);
}

}  // namespace kpo
