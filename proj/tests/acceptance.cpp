// Acceptance suite: one PASS/FAIL line per criterion.

#include "kpo/fluctuations.hpp"
#include "kpo/labframe.hpp"
#include "kpo/langevin.hpp"
#include "kpo/meanfield.hpp"
#include "kpo/quantum.hpp"
#include "kpo/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace kpo;
namespace fs = std::filesystem;
using cd = std::complex<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

NetworkParams fig2_dimer(double delta, double g) {
  return NetworkParams::identical(2, delta, 1.0, g, chain_coupling(2, -0.25), 0.1);
}

// Experimental dimer in units of gamma0: f0 = 2.603 MHz, Q = 233,
// J = 2 pi 84 kHz, V0 = 2 pi 2.56 uHz.
constexpr double kGamma0 = 2.0 * std::numbers::pi * 2.603e6 / 233.0;
constexpr double kJ = 2.0 * std::numbers::pi * 0.084e6 / kGamma0;
constexpr double kV = 2.0 * std::numbers::pi * 2.56e-6 / kGamma0;

NetworkParams experiment_dimer(double delta, double g) {
  return NetworkParams::identical(2, delta, kV, g, chain_coupling(2, kJ), 1.0);
}

VectorXd moving_average(const VectorXd& v, Eigen::Index half) {
  VectorXd out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, k - half), hi = std::min<Eigen::Index>(v.size() - 1, k + half);
    out(k) = v.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

double peak_location(const VectorXd& omega, const VectorXd& psd) {
  Eigen::Index k = 0;
  psd.maxCoeff(&k);
  return omega(k);
}

Outcome threshold_law() {
  Timer timer;
  double worst = 0.0;
  const int points = 50;
  for (int k = 0; k < points; ++k) {
    const double delta = -1.5 + 3.0 * k / (points - 1);
    const NetworkParams p = fig2_dimer(delta, 0.0);
    const double j = -0.25;
    const double expected = std::min(std::hypot(delta - j, 0.05), std::hypot(delta + j, 0.05));
    worst = std::max(worst, std::abs(origin_instability_drive(p) - expected) / expected);
  }
  const double t = timer.seconds();
  return {worst <= 1e-6 && t < 10.0, "max rel err " + num(worst) + " over 50 points, " + num(t, 3) + " s"};
}

Outcome phase_state_amplitude() {
  Timer timer;
  const double v = 1.0, g = 0.7;
  const auto p = NetworkParams::identical(1, 0.0, v, g, MatrixXd::Zero(1, 1), 1e-4 * v);
  const auto states = find_steady_states(p);
  double worst = 0.0;
  int stable = 0;
  for (const auto& s : states) {
    if (!s.stable) continue;
    ++stable;
    worst = std::max(worst, std::abs(std::abs(s.amplitudes(0)) / std::sqrt(g / v) - 1.0));
  }
  const double t = timer.seconds();
  return {stable == 2 && worst <= 1e-3 && t < 1.0,
          std::to_string(stable) + " phase states, max rel dev " + num(worst) + ", " + num(t, 3) + " s"};
}

Outcome psd_consistency() {
  Timer timer;
  // U_d = 1.5 V, U_th = 1.95 V, f_d = 2.605 MHz.
  const double g = 1.5 / (2.0 * 1.95);
  const double delta = 2.0 * std::numbers::pi * 2.0e3 / kGamma0 - kV;
  const NetworkParams p = experiment_dimer(delta, g);
  const double s2 = 1e-2;

  // Euler-Maruyama inflates the variance by about w^2 dt / gamma; at 0.2 of the bound that is ~8% here.
  const double dt = 0.05 * max_stable_step(p, 0.0);
  ProbeOptions opt;
  opt.settle_time = 20.0;
  opt.record_time = 1e7 * dt;
  opt.dt = dt;
  opt.stride = 10;
  opt.segment_fraction = 1.0 / 64.0;
  const ProbeResult res = pump_noisy_probe(p, NoiseSpec{s2, 17}, SweepAxis::MeanDetuning, std::vector<double>{delta}, opt);
  const ProbePoint& pt = res.points.front();

  const FluctuationSpectrum on_grid = fluctuation_spectrum(p, VectorXcd::Zero(2), s2, pt.omega);
  const VectorXd dense = VectorXd::LinSpaced(400001, 0.0, pt.omega(pt.omega.size() - 1));
  const FluctuationSpectrum fine = fluctuation_spectrum(p, VectorXcd::Zero(2), s2, dense);

  double peak_err = 0.0, power_err = 0.0;
  std::string detail;
  const std::pair<const char*, std::pair<const VectorXd*, const VectorXd*>> channels[] = {
      {"S", {&pt.psd_s, &fine.psd_s}}, {"A", {&pt.psd_a, &fine.psd_a}}};
  for (const auto& [name, series] : channels) {
    const double w_est = peak_location(pt.omega, moving_average(*series.first, 2));
    const double w_ref = peak_location(dense, *series.second);
    const double p_est = integrated_power(pt.omega, *series.first);
    const double p_ref = integrated_power(dense, *series.second);
    peak_err = std::max(peak_err, std::abs(w_est - w_ref) / w_ref);
    power_err = std::max(power_err, std::abs(p_est - p_ref) / p_ref);
    detail += std::string(name) + " peak " + num(w_est) + "/" + num(w_ref) + " power " + num(p_est) + "/" + num(p_ref) + "; ";
  }
  const double t = timer.seconds();
  const bool c3 = on_grid.method == PsdMethod::C3;
  return {c3 && peak_err <= 0.02 && power_err <= 0.10 && t < 120.0,
          detail + "peak err " + num(peak_err) + ", power err " + num(power_err) + ", method " +
              std::string(to_string(on_grid.method)) + ", " + num(t, 3) + " s"};
}

Outcome decay_plateau() {
  Timer timer;
  // Single resonator: Q = 295, f0 = 2.6733 MHz, U_th = 1.35 V, U_d = 1.3 V.
  const double gamma0 = 2.0 * std::numbers::pi * 2.6733e6 / 295.0;
  const double g = 1.3 / (2.0 * 1.35);
  double worst = 0.0;
  std::string detail;
  for (double fd : {2.684e6, 2.688e6, 2.693e6}) {
    const double delta = 2.0 * std::numbers::pi * (fd - 2.6733e6) / gamma0;
    const auto p = NetworkParams::identical(1, delta, 1e-9, g, MatrixXd::Zero(1, 1), 1.0);
    ProbeOptions opt;
    opt.settle_time = 20.0;
    opt.record_time = 5000.0;
    opt.stride = 10;
    opt.segment_fraction = 1.0 / 32.0;
    const ProbeResult res = pump_noisy_probe(p, NoiseSpec{1e-2, 23}, SweepAxis::MeanDetuning, std::vector<double>{delta}, opt);
    const ProbePoint& pt = res.points.front();
    const double wmax = 3.0 * std::sqrt(delta * delta + 1.0);
    const PeakFit fit = fit_mode_psd(pt.omega, pt.psd_site[0], wmax);
    const double err = fit.converged ? std::abs(fit.decay_rate / 0.5 - 1.0) : 1.0;
    worst = std::max(worst, err);
    detail += "Delta=" + num(delta) + " Gamma=" + num(fit.decay_rate) + "; ";
  }
  return {worst <= 0.05, detail + "max rel err " + num(worst) + ", " + num(timer.seconds(), 3) + " s"};
}

Outcome exceptional_point() {
  Timer timer;
  const double g = 1.5 / (2.0 * 1.95);
  auto exps = [&](double delta) { return characteristic_exponents(jacobian(experiment_dimer(delta, g), VectorXcd::Zero(2))); };
  auto real_count = [&](double delta) {
    const VectorXcd mu = exps(delta);
    int n = 0;
    for (Eigen::Index k = 0; k < mu.size(); ++k) n += std::abs(mu(k).imag()) < 1e-12;
    return n;
  };

  // Scan across the symmetric lobe, centred at Delta = J.
  const int points = 2001;
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) grid[k] = kJ - 1.0 + 2.0 * k / (points - 1);
  std::vector<double> eps;
  double max_re = -1.0;
  for (int k = 1; k < points; ++k) {
    if (real_count(grid[k]) != real_count(grid[k - 1])) {
      double lo = grid[k - 1], hi = grid[k];
      const int c_lo = real_count(lo);
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (real_count(mid) == c_lo ? lo : hi) = mid;
      }
      eps.push_back(0.5 * (lo + hi));
    }
    max_re = std::max(max_re, exps(grid[k]).real().maxCoeff());
  }

  // Oracle: the S-channel pair coalesces where |Delta - J| = G.
  bool located = eps.size() == 2;
  double pos_err = 0.0, im_gap = 0.0, re_gap = 0.0;
  if (located) {
    pos_err = std::max(std::abs(eps[0] - (kJ - g)), std::abs(eps[1] - (kJ + g)));
    for (double e : eps) {
      // Im mu -> 0 from the complex side and the real parts split continuously.
      const double outward = e < kJ ? -1.0 : 1.0;
      const VectorXcd out = exps(e + outward * 1e-9);
      const VectorXcd in = exps(e - outward * 1e-9);
      double im_small = 1e300;
      for (Eigen::Index k = 0; k < out.size(); ++k) im_small = std::min(im_small, std::abs(out(k).imag()));
      im_gap = std::max(im_gap, im_small);
      std::vector<double> reals;
      for (Eigen::Index k = 0; k < in.size(); ++k)
        if (std::abs(in(k).imag()) < 1e-12) reals.push_back(in(k).real());
      if (reals.size() == 2) re_gap = std::max(re_gap, std::abs(reals[0] - reals[1]));
      else located = false;
    }
  }
  // Between the two points the pair must be real and distinct.
  const VectorXcd centre = exps(kJ);
  std::vector<double> reals;
  for (Eigen::Index k = 0; k < centre.size(); ++k)
    if (std::abs(centre(k).imag()) < 1e-12) reals.push_back(centre(k).real());
  const bool split = reals.size() == 2 && std::abs(reals[0] - reals[1]) > 0.1;
  const bool pass = located && split && pos_err < 1e-9 && im_gap < 1e-3 && re_gap < 1e-3 && max_re < 0.0;
  return {pass, std::to_string(eps.size()) + " exceptional points, position err " + num(pos_err) + ", Im mu at EP " +
                    num(im_gap) + ", Re split at EP " + num(re_gap) + ", centre split " +
                    (reals.size() == 2 ? num(std::abs(reals[0] - reals[1])) : std::string("none")) + ", " +
                    num(timer.seconds(), 3) + " s"};
}

Outcome quantum_correspondence() {
  Timer timer;
  const double radius = 1.5 / std::numbers::sqrt2;  // 1.5 vacuum widths
  bool pass = true;
  std::string detail;
  for (auto [delta, g] : {std::pair{-0.75, 0.75}, std::pair{0.5, 0.4}}) {
    const NetworkParams p = fig2_dimer(delta, g);
    const quantum::ConvergedSteadyState c = quantum::converged_steady_state(p, 20);
    const quantum::QuantumSteadyState& s = c.state;

    std::vector<Eigen::Vector2d> mf;
    double amax = 0.0;
    for (const auto& st : find_steady_states(p)) {
      if (!st.stable) continue;
      mf.push_back(std::numbers::sqrt2 * Eigen::Vector2d(st.amplitudes(0).real(), st.amplitudes(1).real()));
      amax = std::max(amax, st.amplitudes.cwiseAbs().maxCoeff());
    }
    const double extent = std::numbers::sqrt2 * amax + 4.0;
    const auto dist = quantum::quadrature_distribution(s, Eigen::VectorXd::LinSpaced(241, -extent, extent));
    const auto spots = quantum::local_maxima(dist);

    double spot_to_mf = 0.0, mf_to_spot = 0.0;
    for (const auto& h : spots) {
      double best = 1e300;
      for (const auto& m : mf) best = std::min(best, (Eigen::Vector2d(h.x[0], h.x[1]) - m).norm());
      spot_to_mf = std::max(spot_to_mf, best);
    }
    for (const auto& m : mf) {
      double best = 1e300;
      for (const auto& h : spots) best = std::min(best, (Eigen::Vector2d(h.x[0], h.x[1]) - m).norm());
      mf_to_spot = std::max(mf_to_spot, best);
    }
    const double mean_a = s.mean_amplitudes.cwiseAbs().maxCoeff();
    const bool invariants = s.trace_error < 1e-10 && s.hermiticity_error < 1e-10 && s.min_eigenvalue > -1e-9 &&
                            s.parity_commutator < 1e-8;
    const bool ok = c.converged && s.space.n_max <= 20 && !spots.empty() && spot_to_mf <= radius &&
                    mf_to_spot <= radius && mean_a < 1e-6 && invariants;
    pass = pass && ok;
    detail += "(" + num(delta) + "," + num(g) + "): n_max " + std::to_string(s.space.n_max) + ", " +
              std::to_string(spots.size()) + " maxima vs " + std::to_string(mf.size()) + " stable points, dist " +
              num(spot_to_mf, 3) + "/" + num(mf_to_spot, 3) + ", |<a>| " + num(mean_a, 2) + ", min eig " +
              num(s.min_eigenvalue, 2) + ", photon change " + num(c.photon_change, 2) + "; ";
  }
  const double t = timer.seconds();
  return {pass && t <= 600.0, detail + num(t, 3) + " s"};
}

struct RwaCase {
  double th_err = 1.0, amp_err = 1.0, drift = 1.0;
  std::string detail;
};

// Q = 233 network in units of omega, tuned so that the symmetric mode sits on resonance.
RwaCase rwa_case(int n, double j) {
  const double omega = 1.0, gamma = omega / 233.0, v = 1e-4 * gamma;
  const double g = gamma;
  NetworkParams p = NetworkParams::identical(n, j, v, g, chain_coupling(n, j), gamma);
  p.omega.setConstant(omega);
  p.drive_freq = 2.0 * (j + omega + v);

  // Threshold: Floquet analysis of the lab equations against the RWA lobe.
  const double g_rwa = origin_instability_drive(p);
  const LabParams lab = lab_params(p);
  const double lambda_rwa = 4.0 * g_rwa / omega;
  const double lambda_lab = lab_threshold(lab, 0.5 * lambda_rwa, 2.0 * lambda_rwa);

  // Amplitude: integrate from a small seed, demodulate at omega_G / 2. The seed grows along the
  // symmetric mode, so that is the state to compare with.
  VectorXcd target;
  for (const auto& s : find_steady_states(p))
    if (s.stable && s.amplitudes.norm() > 1e-6 && (n == 1 || s.symmetry == Symmetry::S) &&
        (!target.size() || std::abs(s.amplitudes(0)) > std::abs(target(0))))
      target = s.amplitudes;
  const double nu = 0.5 * lab.drive_freq;
  const double period = 2.0 * std::numbers::pi / lab.drive_freq;
  const double dt = period / 40.0;
  const double duration = 40.0 / gamma;
  VectorXd x0 = VectorXd::Zero(n);
  x0(0) = 1e-2;
  const LabTrajectory tr = integrate_lab(lab, x0, VectorXd::Zero(n), dt, duration);
  const MatrixXcd z = demodulate(tr.x, tr.dt, tr.t0, nu, nu / 40.0);
  const VectorXcd last = period_average(z, tr.dt, lab.drive_freq, 4);
  const double amp_lab = last.cwiseAbs().maxCoeff() / std::sqrt(2.0 / omega);
  const double amp_rwa = target.size() ? target.cwiseAbs().maxCoeff() : 0.0;

  // Phase lock: the demodulated response is stationary from period to period.
  const auto per = static_cast<Eigen::Index>(std::llround(period / tr.dt));
  RwaCase c;
  c.drift = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const Eigen::Index end = z.cols() - (k - 1) * per;
    const VectorXcd a = z.middleCols(end - per, per).rowwise().mean();
    const VectorXcd b = z.middleCols(end - 2 * per, per).rowwise().mean();
    c.drift = std::max(c.drift, (a - b).norm() / a.norm());
  }
  c.th_err = std::abs(lambda_lab / lambda_rwa - 1.0);
  c.amp_err = amp_rwa > 0.0 ? std::abs(amp_lab / amp_rwa - 1.0) : 1.0;
  c.detail = "N=" + std::to_string(n) + " J/gamma=" + num(j / gamma, 3) + ": threshold " + num(lambda_lab, 6) + "/" +
             num(lambda_rwa, 6) + " (err " + num(c.th_err) + "), amplitude " + num(amp_lab) + "/" + num(amp_rwa) +
             " (err " + num(c.amp_err) + "), drift " + num(c.drift);
  return c;
}

Outcome rwa_validation() {
  Timer timer;
  const double gamma = 1.0 / 233.0;
  bool pass = true;
  std::string detail;
  for (const auto& [n, j] : {std::pair{1, 0.0}, std::pair{2, gamma}}) {
    const RwaCase c = rwa_case(n, j);
    pass = pass && c.th_err <= 0.03 && c.amp_err <= 0.05 && c.drift < 1e-3;
    detail += c.detail + "; ";
  }
  // At the experimental coupling J/omega ~ 0.03 the rotating-wave model itself is off at first
  // order in J/omega; reported for reference, not graded.
  detail += "[reference] " + rwa_case(2, kJ * gamma).detail + "; ";
  return {pass, detail + num(timer.seconds(), 3) + " s"};
}

Outcome bifurcation_jumps() {
  Timer timer;
  const NetworkParams p = fig2_dimer(0.0, 0.3);
  std::vector<double> grid;
  for (int k = 0; k <= 60; ++k) grid.push_back(1.5 - 0.05 * k);  // downward sweep

  const SweepResult tree = bifurcation_sweep(p, SweepAxis::MeanDetuning, grid);
  ProbeOptions opt;
  opt.settle_time = 500.0;
  opt.record_time = 1000.0;
  const ProbeResult probe = pump_noisy_probe(p, NoiseSpec{1e-5, 99}, SweepAxis::MeanDetuning, grid, opt);

  std::vector<std::size_t> jumps;
  for (std::size_t i = 1; i < probe.points.size(); ++i) {
    const auto& a = probe.points[i - 1];
    const auto& b = probe.points[i];
    const double step = (b.mean_amplitudes - a.mean_amplitudes).norm();
    if (a.attractor.symmetry != b.attractor.symmetry || step > 0.2 || b.jump_flag) jumps.push_back(i);
  }
  int matched = 0;
  std::string where;
  for (std::size_t i : jumps) {
    const bool hit = std::find(tree.bifurcation_index.begin(), tree.bifurcation_index.end(), i) != tree.bifurcation_index.end();
    matched += hit;
    where += num(0.5 * (grid[i - 1] + grid[i])) + (hit ? "*" : "") + " ";
  }
  return {matched >= 1, std::to_string(jumps.size()) + " jumps at " + where + "(* = at a bifurcation, " +
                            std::to_string(tree.bifurcations.size()) + " bifurcations), " + num(timer.seconds(), 3) +
                            " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism() {
  Timer timer;
  const fs::path root = fs::temp_directory_path() / "kpo_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = std::string(KPO_SOURCE_DIR) + "/configs/dimer.json";
  const std::vector<std::pair<std::string, std::vector<std::string>>> jobs{
      {"phase-diagram", {"--phase_diagram.detuning.points=25", "--phase_diagram.drive.points=9"}},
      {"sweep", {"--sweep.grid.points=41"}},
      {"probe", {"--probe.sweep.grid.points=3", "--probe.record_time=1000"}},
      {"psd", {}},
      {"lindblad", {"--lindblad.n_max=10"}},
      {"states", {}}};
  int compared = 0, differing = 0;
  bool ok = true;
  for (const auto& [sub, overrides] : jobs) {
    std::vector<fs::path> dirs;
    for (unsigned threads : {1u, 8u}) {
      RunOptions o;
      o.subcommand = sub;
      o.config_path = config;
      o.out_dir = (root / (sub + "_" + std::to_string(threads))).string();
      o.overrides = overrides;
      o.threads = threads;
      o.quiet = true;
      const int code = run(o);
      if (code != kExitOk) {
        ok = false;
        std::cerr << sub << " exited with " << code << "\n";
      }
      dirs.emplace_back(o.out_dir);
    }
    if (!fs::exists(dirs[0])) continue;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const std::string name = entry.path().filename().string();
      if (name == "run_log.json") continue;  // timestamps
      ++compared;
      if (!fs::exists(dirs[1] / name) || slurp(entry.path()) != slurp(dirs[1] / name)) ++differing;
    }
  }
  fs::remove_all(root);
  return {ok && compared >= 6 && differing == 0, std::to_string(compared) + " files compared across 1 and 8 threads, " +
                                                      std::to_string(differing) + " differ, " +
                                                      num(timer.seconds(), 3) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"threshold law", threshold_law},
      {"phase-state amplitude", phase_state_amplitude},
      {"PSD consistency", psd_consistency},
      {"decay-rate plateau", decay_plateau},
      {"exceptional points", exceptional_point},
      {"quantum-classical correspondence", quantum_correspondence},
      {"RWA validation", rwa_validation},
      {"bifurcation-tree jumps", bifurcation_jumps},
      {"determinism", determinism}};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
