#include "kpo/labframe.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace kpo {

using cd = std::complex<double>;

void LabParams::validate() const {
  const Eigen::Index n = omega.size();
  if (n == 0) throw std::invalid_argument("lab network needs at least one site");
  if (lambda.size() != n || duffing.size() != n || damping.size() != n || coupling.rows() != n || coupling.cols() != n)
    throw std::invalid_argument("lab parameter sizes disagree");
  if (!(omega.array() > 0.0).all()) throw std::invalid_argument("lab frequencies must be positive");
  if (!(lambda.array() >= 0.0).all()) throw std::invalid_argument("modulation depth must be nonnegative");
  if (!(damping.array() >= 0.0).all()) throw std::invalid_argument("damping must be nonnegative");
  if (!(drive_freq > 0.0)) throw std::invalid_argument("drive frequency must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
}

LabParams lab_params(const NetworkParams& p, double hbar) {
  p.validate();
  if (!(p.omega.array() > 0.0).all()) throw std::invalid_argument("lab mapping needs positive natural frequencies");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  LabParams lab;
  lab.omega = p.omega;
  lab.lambda = 4.0 * p.drive.cwiseQuotient(p.omega);
  lab.duffing = 4.0 * p.omega.cwiseAbs2().cwiseProduct(p.kerr) / (3.0 * hbar);
  const VectorXd s = p.omega.cwiseSqrt();
  lab.coupling = 2.0 * p.coupling.cwiseProduct(s * s.transpose());
  lab.damping = p.damping;
  lab.drive_freq = p.drive_freq;
  lab.hbar = hbar;
  return lab;
}

double max_lab_step(const LabParams& lab) { return 2.0 * std::numbers::pi / (40.0 * lab.omega.maxCoeff()); }

namespace {

void lab_rhs(const LabParams& lab, double t, const VectorXd& x, const VectorXd& v, VectorXd& dx, VectorXd& dv) {
  const double c = std::cos(lab.drive_freq * t);
  dx = v;
  dv = -lab.damping.cwiseProduct(v) - lab.coupling * x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double w2 = lab.omega(j) * lab.omega(j);
    dv(j) -= w2 * (1.0 - lab.lambda(j) * c) * x(j) + lab.duffing(j) * x(j) * x(j) * x(j);
  }
}

void rk4_step(const LabParams& lab, double t, double h, VectorXd& x, VectorXd& v) {
  VectorXd k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
  lab_rhs(lab, t, x, v, k1x, k1v);
  lab_rhs(lab, t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v, k2x, k2v);
  lab_rhs(lab, t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v, k3x, k3v);
  lab_rhs(lab, t + h, x + h * k3x, v + h * k3v, k4x, k4v);
  x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

}  // namespace

LabTrajectory integrate_lab(const LabParams& lab, const VectorXd& x0, const VectorXd& v0, double dt, double duration,
                            std::size_t stride) {
  lab.validate();
  const Eigen::Index n = lab.omega.size();
  if (x0.size() != n || v0.size() != n) throw std::invalid_argument("initial state size mismatch");
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  if (!(dt > 0.0) || duration < 0.0) throw std::invalid_argument("need dt > 0 and duration >= 0");
  const double bound = max_lab_step(lab);
  if (dt > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "lab step " << dt << " exceeds 2 pi / (40 omega_max) = " << bound;
    throw std::invalid_argument(msg.str());
  }
  const auto steps = static_cast<std::size_t>(std::floor(duration / dt * (1.0 + 1e-12)));
  const std::size_t kept = steps / stride + 1;
  LabTrajectory tr;
  tr.dt = dt * static_cast<double>(stride);
  tr.x.resize(n, static_cast<Eigen::Index>(kept));
  tr.v.resize(n, static_cast<Eigen::Index>(kept));
  VectorXd x = x0;
  VectorXd v = v0;
  tr.x.col(0) = x;
  tr.v.col(0) = v;
  Eigen::Index col = 1;
  for (std::size_t s = 0; s < steps; ++s) {
    rk4_step(lab, dt * static_cast<double>(s), dt, x, v);
    if (!x.allFinite() || !v.allFinite()) {
      std::ostringstream msg;
      msg << "lab-frame trajectory diverged at t = " << dt * static_cast<double>(s + 1);
      throw NumericalError(msg.str());
    }
    if ((s + 1) % stride == 0) {
      tr.x.col(col) = x;
      tr.v.col(col) = v;
      ++col;
    }
  }
  return tr;
}

MatrixXcd demodulate(const MatrixXd& x, double dt, double t0, double ref_freq, double bandwidth) {
  if (!(ref_freq > 0.0)) throw std::invalid_argument("reference frequency must be positive");
  if (!(bandwidth > 0.0) || !(bandwidth < ref_freq / 5.0))
    throw std::invalid_argument("demodulation bandwidth must lie in (0, ref_freq / 5)");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double k = -std::expm1(-bandwidth * dt);
  MatrixXcd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    cd y(0.0, 0.0);
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
      const double t = t0 + dt * static_cast<double>(s);
      const cd in = 2.0 * x(j, s) * std::polar(1.0, -ref_freq * t);
      y += k * (in - y);
      out(j, s) = y;
    }
  }
  return out;
}

VectorXcd period_average(const MatrixXcd& z, double dt, double drive_freq, std::size_t periods) {
  if (!(drive_freq > 0.0) || !(dt > 0.0) || periods == 0) throw std::invalid_argument("bad averaging window");
  const double span = 2.0 * std::numbers::pi / drive_freq * static_cast<double>(periods);
  const auto len = static_cast<Eigen::Index>(std::llround(span / dt));
  if (len < 1 || len > z.cols()) throw std::invalid_argument("series shorter than the averaging window");
  return z.rightCols(len).rowwise().mean();
}

double floquet_radius(const LabParams& lab, std::size_t steps_per_period) {
  lab.validate();
  const Eigen::Index n = lab.omega.size();
  LabParams lin = lab;
  lin.duffing.setZero();
  const double period = 2.0 * std::numbers::pi / lab.drive_freq;
  const double h = period / static_cast<double>(steps_per_period);
  MatrixXd mono(2 * n, 2 * n);
  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    VectorXd x = VectorXd::Zero(n);
    VectorXd v = VectorXd::Zero(n);
    if (c < n) x(c) = 1.0;
    else v(c - n) = 1.0;
    for (std::size_t s = 0; s < steps_per_period; ++s) rk4_step(lin, h * static_cast<double>(s), h, x, v);
    mono.col(c) << x, v;
  }
  Eigen::EigenSolver<MatrixXd> es(mono, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double lab_threshold(const LabParams& lab, double lo, double hi, double rel_tol) {
  auto radius = [&](double lambda) {
    LabParams q = lab;
    q.lambda.setConstant(lambda);
    return floquet_radius(q);
  };
  if (!(lo >= 0.0 && hi > lo)) throw std::invalid_argument("need 0 <= lo < hi");
  if (radius(lo) > 1.0) throw std::invalid_argument("origin already unstable at the lower bracket");
  if (radius(hi) <= 1.0) throw std::invalid_argument("origin still stable at the upper bracket");
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (radius(mid) > 1.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace kpo
