#include "kpo/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace kpo {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void NetworkParams::validate() const {
  const auto n = static_cast<Eigen::Index>(n_sites);
  require(n_sites >= 1, "n_sites must be at least 1");
  require(omega.size() == n, "omega must have n_sites entries");
  require(kerr.size() == n, "kerr must have n_sites entries");
  require(drive.size() == n, "drive must have n_sites entries");
  require(damping.size() == n, "damping must have n_sites entries");
  require(coupling.rows() == n && coupling.cols() == n, "coupling must be n_sites x n_sites");
  require(omega.allFinite() && kerr.allFinite() && drive.allFinite() && damping.allFinite() &&
              coupling.allFinite() && std::isfinite(drive_freq),
          "model parameters must be finite");
  require((damping.array() >= 0.0).all(), "damping must be nonnegative");
  require((drive.array() >= 0.0).all(), "drive amplitudes are real and nonnegative");
  for (Eigen::Index j = 0; j < n; ++j) {
    require(coupling(j, j) == 0.0, "coupling diagonal must be exactly zero");
    for (Eigen::Index k = j + 1; k < n; ++k)
      require(coupling(j, k) == coupling(k, j), "coupling must be symmetric");
  }
}

VectorXd NetworkParams::detunings() const { return kpo::detunings(omega, kerr, drive_freq); }

NetworkParams NetworkParams::with_drive_freq(double omega_g) const {
  NetworkParams p = *this;
  p.drive_freq = omega_g;
  return p;
}

NetworkParams NetworkParams::with_mean_detuning(double delta) const {
  const double base = (omega + kerr).mean();
  return with_drive_freq(2.0 * (delta + base));
}

NetworkParams NetworkParams::with_drive(double g) const {
  NetworkParams p = *this;
  p.drive.setConstant(g);
  return p;
}

double NetworkParams::max_rate() const {
  const VectorXd delta = detunings();
  double rate = 0.0;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    const double hop = coupling.row(j).cwiseAbs().sum();
    rate = std::max(rate, std::abs(delta(j)) + drive(j) + hop + damping(j));
  }
  return rate > 0.0 ? rate : 1.0;
}

double NetworkParams::amplitude_scale() const {
  const double g = drive.maxCoeff();
  const double v = kerr.cwiseAbs().minCoeff();
  if (g <= 0.0 || v <= 0.0) return 1.0;
  return std::sqrt(g / v);
}

NetworkParams NetworkParams::identical(std::size_t n, double delta, double kerr_v, double drive_g,
                                       const MatrixXd& coupling, double damping) {
  NetworkParams p;
  const auto size = static_cast<Eigen::Index>(n);
  p.n_sites = n;
  p.kerr = VectorXd::Constant(size, kerr_v);
  p.drive = VectorXd::Constant(size, drive_g);
  p.damping = VectorXd::Constant(size, damping);
  p.drive_freq = 0.0;
  p.omega = VectorXd::Constant(size, -kerr_v - delta);
  p.coupling = coupling;
  p.validate();
  return p;
}

MatrixXd chain_coupling(std::size_t n, double j) {
  const auto size = static_cast<Eigen::Index>(n);
  MatrixXd c = MatrixXd::Zero(size, size);
  for (Eigen::Index k = 0; k + 1 < size; ++k) c(k, k + 1) = c(k + 1, k) = j;
  return c;
}

MatrixXd all_to_all_coupling(std::size_t n, double j) {
  const auto size = static_cast<Eigen::Index>(n);
  MatrixXd c = MatrixXd::Constant(size, size, j);
  c.diagonal().setZero();
  return c;
}

VectorXd detunings(const VectorXd& omega, const VectorXd& kerr, double drive_freq) {
  if (omega.size() != kerr.size()) throw std::invalid_argument("omega and kerr sizes differ");
  return (VectorXd::Constant(omega.size(), 0.5 * drive_freq) - omega - kerr).eval();
}

NormalModeBasis normal_mode_basis(const VectorXd& detunings, const MatrixXd& coupling) {
  const Eigen::Index n = detunings.size();
  if (coupling.rows() != n || coupling.cols() != n)
    throw std::invalid_argument("coupling shape does not match detunings");
  MatrixXd single = coupling;
  single.diagonal() = -detunings;

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(single);
  // Eigenvalues come out ascending; Delta~ = -eigenvalue, so reverse.
  NormalModeBasis basis;
  basis.eigen_detunings.resize(n);
  basis.transform.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;
    basis.eigen_detunings(k) = -solver.eigenvalues()(src);
    VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0.0) v = -v;
    basis.transform.col(k) = v;
  }
  basis.mode_drives = MatrixXd::Zero(n, n);
  return basis;
}

MatrixXd normal_mode_drives(const NormalModeBasis& basis, const VectorXd& drive) {
  if (drive.size() != basis.transform.rows())
    throw std::invalid_argument("drive size does not match the normal-mode basis");
  MatrixXd g = basis.transform.transpose() * drive.asDiagonal() * basis.transform;
  return (0.5 * (g + g.transpose())).eval();
}

NormalModeBasis normal_modes(const NetworkParams& params) {
  NormalModeBasis basis = normal_mode_basis(params.detunings(), params.coupling);
  basis.mode_drives = normal_mode_drives(basis, params.drive);
  return basis;
}

std::vector<std::vector<Eigen::Index>> site_symmetries(const NetworkParams& p) {
  const auto n = static_cast<Eigen::Index>(p.n_sites);
  std::vector<std::vector<Eigen::Index>> candidates;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
      for (Eigen::Index k = 0; k < n; ++k) perm[static_cast<std::size_t>(k)] = k;
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      candidates.push_back(perm);
    }
  if (n > 2) {
    std::vector<Eigen::Index> rev(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) rev[static_cast<std::size_t>(k)] = n - 1 - k;
    candidates.push_back(rev);
  }
  std::vector<std::vector<Eigen::Index>> out;
  for (const auto& perm : candidates) {
    bool ok = true;
    for (Eigen::Index k = 0; k < n && ok; ++k) {
      const Eigen::Index q = perm[static_cast<std::size_t>(k)];
      ok = p.omega(k) == p.omega(q) && p.kerr(k) == p.kerr(q) && p.drive(k) == p.drive(q) &&
           p.damping(k) == p.damping(q);
      for (Eigen::Index l = 0; l < n && ok; ++l)
        ok = p.coupling(k, l) == p.coupling(q, perm[static_cast<std::size_t>(l)]);
    }
    if (ok) out.push_back(perm);
  }
  return out;
}

double lobe_threshold(double eigen_detuning, double damping) {
  if (damping < 0.0) throw std::invalid_argument("damping must be nonnegative");
  return std::hypot(eigen_detuning, 0.5 * damping);
}

void CalibrationInputs::validate() const {
  require(u_threshold > 0.0, "u_threshold must be positive");
  require(noise_psd_in >= 0.0, "noise_psd_in must be nonnegative");
}

double calibrate_drive(const CalibrationInputs& cal) {
  if (!(cal.u_threshold > 0.0)) throw std::invalid_argument("u_threshold must be positive");
  return cal.gamma0 * cal.u_drive / (2.0 * cal.u_threshold);
}

NoiseCalibration calibrate_noise(const CalibrationInputs& cal, double drive_freq) {
  if (!(drive_freq > 0.0)) throw std::invalid_argument("drive frequency must be positive");
  if (cal.noise_psd_in < 0.0) throw std::invalid_argument("noise_psd_in must be nonnegative");
  NoiseCalibration out;
  out.varsigma2 = cal.coupling_const * cal.noise_psd_in;
  const double half = 0.5 * drive_freq;
  out.sigma2 = out.varsigma2 / (2.0 * half * half);
  return out;
}

}  // namespace kpo
