#include "kpo/langevin.hpp"

#include "kpo/fluctuations.hpp"
#include "kpo/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace kpo {

using cd = std::complex<double>;

double max_stable_step(const NetworkParams& p, double max_amplitude) {
  const VectorXd delta = p.detunings();
  double rate = 0.0;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    rate = std::max(rate, p.damping(j));
    rate = std::max(rate, std::abs(delta(j)) + 2.0 * p.drive(j) + 2.0 * std::abs(p.kerr(j)) * max_amplitude * max_amplitude);
    rate = std::max(rate, p.coupling.row(j).cwiseAbs().sum());
  }
  return rate > 0.0 ? 0.05 / rate : 0.05;
}

Trajectory integrate(const NetworkParams& p, const NoiseSpec& noise, const VectorXcd& alpha0, double dt,
                     double duration, const IntegrateOptions& opt) {
  p.validate();
  const auto n = static_cast<Eigen::Index>(p.n_sites);
  if (alpha0.size() != n) throw std::invalid_argument("initial state size mismatch");
  if (noise.psd < 0.0) throw std::invalid_argument("noise PSD must be nonnegative");
  if (!(dt > 0.0) || duration < dt) throw std::invalid_argument("need 0 < dt <= duration");
  if (opt.stride == 0) throw std::invalid_argument("stride must be positive");
  const double bound = max_stable_step(p, alpha0.cwiseAbs().maxCoeff());
  if (dt > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step " << dt << " exceeds the stability bound " << bound;
    throw std::invalid_argument(msg.str());
  }

  Trajectory tr;
  tr.step_dt = dt;
  tr.dt = dt * static_cast<double>(opt.stride);
  tr.t0 = opt.t0;
  tr.steps = static_cast<std::size_t>(std::floor(duration / dt * (1.0 + 1e-12)));
  const std::size_t kept = tr.steps / opt.stride;
  tr.samples.resize(n, static_cast<Eigen::Index>(kept));

  const VectorXd delta = p.detunings();
  const CounterNormal normal(opt.stream == 0 ? noise.seed : opt.stream);
  const double kick = std::sqrt(noise.psd * dt);
  VectorXcd a = alpha0;
  VectorXcd f(n);
  const cd i(0.0, 1.0);
  std::size_t col = 0;
  for (std::size_t step = 0; step < tr.steps; ++step) {
    const VectorXcd hop = p.coupling.cast<cd>() * a;
    for (Eigen::Index j = 0; j < n; ++j) {
      const cd aj = a(j);
      f(j) = i * (delta(j) * aj - p.kerr(j) * std::norm(aj) * aj + p.drive(j) * std::conj(aj) - hop(j)) -
             0.5 * p.damping(j) * aj;
    }
    a += dt * f;
    if (kick > 0.0) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto [re, im] = normal(static_cast<std::uint64_t>(j), opt.step_offset + step);
        a(j) += cd(kick * re, kick * im);
      }
    }
    if (!a.allFinite()) {
      std::ostringstream msg;
      msg << "trajectory diverged at step " << step << " (t = " << opt.t0 + dt * static_cast<double>(step + 1) << ")";
      throw NumericalError(msg.str());
    }
    if ((step + 1) % opt.stride == 0 && col < kept) tr.samples.col(static_cast<Eigen::Index>(col++)) = a;
  }
  tr.final_state = a;
  return tr;
}

namespace {

VectorXd quadrature_psd(const VectorXcd& z, double dt, std::size_t seg, const ProbeOptions& opt, VectorXd& omega) {
  std::vector<double> re(static_cast<std::size_t>(z.size()));
  std::vector<double> im(re.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    re[static_cast<std::size_t>(k)] = z(k).real();
    im[static_cast<std::size_t>(k)] = z(k).imag();
  }
  const PsdEstimate pr = welch_psd(re, dt, seg, opt.overlap, opt.window);
  const PsdEstimate pi = welch_psd(im, dt, seg, opt.overlap, opt.window);
  omega = pr.omega;
  return pr.psd + pi.psd;
}

}  // namespace

ProbeResult pump_noisy_probe(const NetworkParams& params, const NoiseSpec& noise, SweepAxis axis,
                             std::span<const double> grid, const ProbeOptions& opt) {
  params.validate();
  const double gmin = params.damping.minCoeff();
  if (!(gmin > 0.0)) throw std::invalid_argument("pump-noisy-probe needs positive damping");
  if (opt.settle_time < 10.0 / gmin) throw std::invalid_argument("settle_time must be at least 10/gamma");
  if (opt.record_time < 100.0 / gmin) throw std::invalid_argument("record_time must be at least 100/gamma");

  const auto n = static_cast<Eigen::Index>(params.n_sites);
  ProbeResult result;
  VectorXcd state = opt.initial.size() == n ? opt.initial : VectorXcd::Zero(n);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const NetworkParams q = apply_sweep(params, axis, grid[idx]);
    std::vector<VectorXcd> seeds{state};
    const std::vector<SteadyState> fixed = find_steady_states(q, seeds, opt.solver);
    double amp = state.cwiseAbs().maxCoeff();
    for (const auto& s : fixed) amp = std::max(amp, s.amplitudes.cwiseAbs().maxCoeff());
    const double bound = max_stable_step(q, 1.2 * amp);
    const double dt = opt.dt > 0.0 ? std::min(opt.dt, bound) : 0.2 * bound;

    const std::uint64_t stream = derive_stream(noise.seed, idx);
    IntegrateOptions settle_opt;
    settle_opt.stream = derive_stream(stream, 0);
    settle_opt.stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(opt.settle_time / dt)));
    const Trajectory settle = integrate(q, noise, state, dt, opt.settle_time, settle_opt);

    IntegrateOptions rec_opt;
    rec_opt.stream = derive_stream(stream, 1);
    rec_opt.stride = opt.stride;
    rec_opt.t0 = opt.settle_time;
    const Trajectory rec = integrate(q, noise, settle.final_state, dt, opt.record_time, rec_opt);
    state = rec.final_state;

    ProbePoint pt;
    pt.sweep_value = grid[idx];
    pt.noise_psd = noise.psd;
    const Eigen::Index ns = rec.samples.cols();
    pt.mean_amplitudes = rec.samples.rowwise().mean();
    const MatrixXcd fluct = rec.samples.colwise() - pt.mean_amplitudes;
    pt.fluctuation_rms = std::sqrt(fluct.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(ns, 1)));

    // Escape detection: a window mean far outside the fluctuation scale.
    constexpr Eigen::Index kWindows = 8;
    const Eigen::Index wlen = ns / kWindows;
    if (wlen > 0) {
      for (Eigen::Index w = 0; w < kWindows; ++w) {
        const VectorXcd wm = rec.samples.middleCols(w * wlen, wlen).rowwise().mean();
        if ((wm - pt.mean_amplitudes).norm() > 3.0 * pt.fluctuation_rms && pt.fluctuation_rms > 0.0) {
          pt.jump_flag = true;
          break;
        }
      }
    }
    if (pt.jump_flag) {
      std::ostringstream msg;
      msg << "attractor escape during recording at sweep value " << grid[idx];
      result.warnings.push_back(msg.str());
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : fixed) {
      const double d = (s.amplitudes - pt.mean_amplitudes).norm();
      if (d < best) {
        best = d;
        pt.attractor = s;
      }
    }
    pt.attractor_distance = best;

    // Power-of-two segments keep the FFT fast; large prime factors make it quadratic.
    const auto seg = std::bit_floor(
        std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(static_cast<double>(ns) * opt.segment_fraction))));
    for (Eigen::Index j = 0; j < n; ++j)
      pt.psd_site.push_back(quadrature_psd(fluct.row(j).transpose(), rec.dt, seg, opt, pt.omega));
    if (n == 2) {
      const VectorXcd z1 = fluct.row(0).transpose();
      const VectorXcd z2 = fluct.row(1).transpose();
      const SaSeries sa = sa_transform(std::span<const cd>(z1.data(), static_cast<std::size_t>(z1.size())),
                                       std::span<const cd>(z2.data(), static_cast<std::size_t>(z2.size())));
      pt.psd_s = quadrature_psd(sa.symmetric, rec.dt, seg, opt, pt.omega);
      pt.psd_a = quadrature_psd(sa.antisymmetric, rec.dt, seg, opt, pt.omega);
    }
    result.points.push_back(std::move(pt));
  }
  return result;
}

}  // namespace kpo
