#include "kpo/spectral.hpp"

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpo {

Window parse_window(std::string_view name) {
  if (name == "hann") return Window::Hann;
  if (name == "rectangular" || name == "boxcar") return Window::Rectangular;
  throw std::invalid_argument("unknown window: " + std::string(name));
}

PsdEstimate welch_psd(std::span<const double> x, double dt, std::size_t seg, double overlap, Window window) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (seg < 2) throw std::invalid_argument("segment length must be at least 2");
  if (seg > x.size()) throw std::invalid_argument("segment longer than series");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("overlap must lie in [0, 1)");

  std::vector<double> w(seg, 1.0);
  if (window == Window::Hann)
    for (std::size_t k = 0; k < seg; ++k)
      w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(seg));
  double wsum = 0.0;
  for (double v : w) wsum += v * v;

  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(seg) * (1.0 - overlap))));
  const std::size_t bins = seg / 2 + 1;
  PsdEstimate out;
  out.psd = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins));
  out.omega.resize(static_cast<Eigen::Index>(bins));
  for (std::size_t k = 0; k < bins; ++k)
    out.omega(static_cast<Eigen::Index>(k)) = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(seg) * dt);

  Eigen::FFT<double> fft;
  std::vector<double> buf(seg);
  std::vector<std::complex<double>> spec;
  for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
    for (std::size_t k = 0; k < seg; ++k) buf[k] = w[k] * x[start + k];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < bins; ++k) out.psd(static_cast<Eigen::Index>(k)) += std::norm(spec[k]);
    ++out.segments;
  }
  out.psd *= dt / (wsum * static_cast<double>(out.segments));
  return out;
}

namespace {

struct ModeModel {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  Eigen::VectorXd w;
  Eigen::VectorXd logp;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(w.size()); }

  static double eval(const Eigen::VectorXd& p, double x) {
    const double a = std::exp(p(0));
    const double b = std::exp(p(1));
    const double w0 = p(2);
    const double g = std::exp(p(3));
    const double d = (w0 - x * x) * (w0 - x * x) + 4.0 * g * g * x * x;
    return (a + b * x * x) / d;
  }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double m = eval(p, w(k));
      r(k) = (m > 0.0 && std::isfinite(m)) ? std::log(m) - logp(k) : 1e3;
    }
    return 0;
  }
};

}  // namespace

PeakFit fit_mode_psd(const Eigen::VectorXd& omega, const Eigen::VectorXd& psd, double omega_max) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < omega.size(); ++k)
    if (omega(k) >= 0.0 && omega(k) <= omega_max && psd(k) > 0.0) idx.push_back(k);
  if (idx.size() < 8) throw std::invalid_argument("too few PSD points to fit");

  ModeModel model;
  model.w.resize(static_cast<Eigen::Index>(idx.size()));
  model.logp.resize(model.w.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    model.w(static_cast<Eigen::Index>(k)) = omega(idx[k]);
    model.logp(static_cast<Eigen::Index>(k)) = std::log(psd(idx[k]));
  }

  // Initial guess from the peak and its half-maximum width.
  Eigen::Index peak = 0;
  Eigen::VectorXd vals(model.w.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) vals(k) = psd(idx[static_cast<std::size_t>(k)]);
  vals.maxCoeff(&peak);
  const double wp = model.w(peak);
  const double half = 0.5 * vals(peak);
  Eigen::Index lo = peak;
  Eigen::Index hi = peak;
  while (lo > 0 && vals(lo) > half) --lo;
  while (hi + 1 < vals.size() && vals(hi) > half) ++hi;
  double fwhm = model.w(hi) - model.w(lo);
  if (lo == peak || model.w(lo) <= 0.0) fwhm = 2.0 * (model.w(hi) - wp);
  const double g0 = std::max(0.5 * fwhm, 1e-6 * std::max(omega_max, 1e-300));
  const double w0sq = wp * wp + g0 * g0;
  const double wl = model.w(model.w.size() - 1);
  const double b0 = std::max(vals(vals.size() - 1) * wl * wl, 1e-300);
  const double den_p = (w0sq - wp * wp) * (w0sq - wp * wp) + 4.0 * g0 * g0 * wp * wp;
  const double a0 = std::max(vals(peak) * den_p - b0 * wp * wp, 1e-3 * vals(peak) * den_p);

  Eigen::VectorXd p(4);
  p << std::log(a0), std::log(b0), w0sq, std::log(g0);
  Eigen::NumericalDiff<ModeModel> numdiff(model);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ModeModel>> lm(numdiff);
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(p);

  PeakFit fit;
  fit.decay_rate = std::exp(p(3));
  fit.omega0_sq = p(2);
  fit.frequency = std::sqrt(std::max(0.0, p(2) - fit.decay_rate * fit.decay_rate));
  fit.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation && std::isfinite(fit.decay_rate);
  return fit;
}

}  // namespace kpo
