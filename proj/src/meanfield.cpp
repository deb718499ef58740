#include "kpo/meanfield.hpp"

#include "kpo/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <numbers>
#include <sstream>

namespace kpo {

using cd = std::complex<double>;

std::string_view to_string(Symmetry s) {
  switch (s) {
    case Symmetry::Zero: return "0";
    case Symmetry::S: return "S";
    case Symmetry::A: return "A";
    case Symmetry::M: return "M";
  }
  return "?";
}

VectorXcd drift(const NetworkParams& p, const VectorXcd& a) {
  const VectorXd delta = p.detunings();
  const Eigen::Index n = a.size();
  if (n != static_cast<Eigen::Index>(p.n_sites)) throw std::invalid_argument("amplitude size mismatch");
  const cd i(0.0, 1.0);
  const VectorXcd hop = p.coupling.cast<cd>() * a;
  VectorXcd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cd aj = a(j);
    out(j) = i * (delta(j) * aj - p.kerr(j) * std::norm(aj) * aj + p.drive(j) * std::conj(aj) - hop(j)) -
             0.5 * p.damping(j) * aj;
  }
  return out;
}

VectorXd to_real(const VectorXcd& a) {
  VectorXd y(2 * a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    y(2 * j) = a(j).real();
    y(2 * j + 1) = a(j).imag();
  }
  return y;
}

VectorXcd to_complex(const VectorXd& y) {
  VectorXcd a(y.size() / 2);
  for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = cd(y(2 * j), y(2 * j + 1));
  return a;
}

VectorXd drift_real(const NetworkParams& p, const VectorXd& y) { return to_real(drift(p, to_complex(y))); }

MatrixXd jacobian(const NetworkParams& p, const VectorXcd& a) {
  const VectorXd delta = p.detunings();
  const Eigen::Index n = a.size();
  MatrixXd m = MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = a(j).real();
    const double y = a(j).imag();
    const double r2 = x * x + y * y;
    const double v = p.kerr(j);
    const double g = p.drive(j);
    const double half_gamma = 0.5 * p.damping(j);
    m(2 * j, 2 * j) = 2.0 * v * x * y - half_gamma;
    m(2 * j, 2 * j + 1) = -delta(j) + v * r2 + 2.0 * v * y * y + g;
    m(2 * j + 1, 2 * j) = delta(j) - v * r2 - 2.0 * v * x * x + g;
    m(2 * j + 1, 2 * j + 1) = -2.0 * v * x * y - half_gamma;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      m(2 * j, 2 * k + 1) = p.coupling(j, k);
      m(2 * j + 1, 2 * k) = -p.coupling(j, k);
    }
  }
  return m;
}

VectorXcd characteristic_exponents(const MatrixXd& jac) {
  if (jac.rows() != jac.cols() || jac.rows() % 2 != 0)
    throw std::invalid_argument("Jacobian must be square with even dimension");
  Eigen::EigenSolver<MatrixXd> solver(jac, false);
  VectorXcd mu = solver.eigenvalues();
  std::vector<cd> sorted(mu.data(), mu.data() + mu.size());
  std::sort(sorted.begin(), sorted.end(), [](const cd& l, const cd& r) {
    if (l.real() != r.real()) return l.real() > r.real();
    return l.imag() < r.imag();
  });
  for (Eigen::Index k = 0; k < mu.size(); ++k) mu(k) = sorted[static_cast<std::size_t>(k)];
  return mu;
}

double normalized_residual(const NetworkParams& p, const VectorXcd& a) {
  const VectorXcd f = drift(p, a);
  const double amp = std::max(a.cwiseAbs().maxCoeff(), p.amplitude_scale());
  const double vmax = p.kerr.cwiseAbs().maxCoeff();
  const double scale = p.max_rate() * amp + vmax * amp * amp * amp;
  return f.cwiseAbs().maxCoeff() / scale;
}

Symmetry classify_state(const VectorXcd& a, double tol, double zero_scale) {
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() < tol * zero_scale) return Symmetry::Zero;
  if (a.size() != 2) return Symmetry::M;
  const double diff = std::abs(a(0) - a(1));
  const double sum = std::abs(a(0) + a(1));
  if (diff < tol * sum) return Symmetry::S;
  if (sum < tol * diff) return Symmetry::A;
  return Symmetry::M;
}

SteadyState describe_state(const NetworkParams& p, const VectorXcd& a, const SolverOptions& opt) {
  SteadyState s;
  s.amplitudes = a;
  s.exponents = characteristic_exponents(jacobian(p, a));
  const double margin = opt.stability_margin * p.max_rate();
  const double lead = s.exponents(0).real();
  s.stable = lead < -margin;
  s.marginal = std::abs(lead) <= margin;
  s.symmetry = classify_state(a, opt.classify_tol, p.amplitude_scale());
  s.residual = normalized_residual(p, a);
  return s;
}

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                     59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};

// Permutations of sites under which the model is invariant.
class RootFinder {
public:
  RootFinder(const NetworkParams& p, const SolverOptions& opt)
      : p_(p), opt_(opt), scale_(p.amplitude_scale()), symmetries_(site_symmetries(p)) {
    const NormalModeBasis basis = normal_modes(p);
    const double vmin = p.kerr.cwiseAbs().minCoeff();
    const double sign = p.kerr.mean() >= 0.0 ? 1.0 : -1.0;
    const double g = p.drive.maxCoeff();
    double reach = g;
    for (Eigen::Index k = 0; k < basis.eigen_detunings.size(); ++k)
      reach = std::max(reach, std::max(0.0, sign * basis.eigen_detunings(k)) + g);
    radius_ = vmin > 0.0 ? 2.0 * std::sqrt(reach / vmin) : 2.0 * scale_;
    if (!(radius_ > 0.0)) radius_ = 1.0;
  }

  void run(std::span<const VectorXcd> seeds) {
    const auto n = static_cast<Eigen::Index>(p_.n_sites);
    attempt(VectorXd::Zero(2 * n), false);
    for (const auto& s : seeds) {
      if (s.size() != n) throw std::invalid_argument("seed size mismatch");
      attempt(to_real(s), true);
    }
    const auto dims = static_cast<std::size_t>(2 * n);
    for (int k = 0; k < opt_.random_starts; ++k) {
      VectorXd start(2 * n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto idx = static_cast<std::uint64_t>(k + 1);
        const double u = radical_inverse(idx, kPrimes[(2 * static_cast<std::size_t>(j)) % std::size(kPrimes)]);
        const double v = radical_inverse(idx, kPrimes[(2 * static_cast<std::size_t>(j) + 1) % std::size(kPrimes)]);
        const double r = radius_ * std::sqrt(u);
        const double phi = 2.0 * std::numbers::pi * v;
        start(2 * j) = r * std::cos(phi);
        start(2 * j + 1) = r * std::sin(phi);
      }
      (void)dims;
      attempt(start, true);
    }
  }

  std::vector<VectorXd> roots() const { return roots_; }

private:
  void attempt(const VectorXd& start, bool deflate) {
    VectorXd y = start;
    if (!newton(y, deflate)) return;
    if (!polish(y)) return;
    if (!add(y)) return;
    std::deque<VectorXd> images{y};
    while (!images.empty()) {
      const VectorXd r = images.front();
      images.pop_front();
      std::vector<VectorXd> candidates{-r};
      for (const auto& perm : symmetries_) {
        VectorXd q(r.size());
        for (std::size_t k = 0; k < perm.size(); ++k) {
          q(2 * static_cast<Eigen::Index>(k)) = r(2 * perm[k]);
          q(2 * static_cast<Eigen::Index>(k) + 1) = r(2 * perm[k] + 1);
        }
        candidates.push_back(q);
      }
      for (auto& c : candidates) {
        if (!polish(c)) continue;
        if (add(c)) images.push_back(c);
      }
    }
  }

  double residual(const VectorXd& y) const { return normalized_residual(p_, to_complex(y)); }

  bool newton(VectorXd& y, bool deflate) const {
    const double power = 2.0;
    const double shift = 1.0;
    for (int it = 0; it < opt_.max_iterations; ++it) {
      const VectorXd f = drift_real(p_, y);
      if (residual(y) < 1e-12) return true;
      Eigen::FullPivLU<MatrixXd> lu(jacobian(p_, to_complex(y)));
      if (!lu.isInvertible()) return false;
      VectorXd step = lu.solve(-f);
      if (deflate && !roots_.empty()) {
        VectorXd grad = VectorXd::Zero(y.size());
        for (const auto& r : roots_) {
          const VectorXd d = (y - r) / scale_;
          const double dist = d.norm();
          if (dist == 0.0) return false;
          const double inv = std::pow(dist, -power);
          grad += (-power * inv / (dist * dist) / (inv + shift)) * d / scale_;
        }
        const double denom = 1.0 - grad.dot(step);
        if (std::abs(denom) > 1e-12) step /= denom;
      }
      const double limit = radius_;
      const double len = step.norm();
      if (!std::isfinite(len)) return false;
      if (len > limit) step *= limit / len;
      y += step;
      if (y.norm() > 20.0 * radius_ * std::sqrt(static_cast<double>(p_.n_sites))) return false;
    }
    return residual(y) < 1e-8;
  }

  bool polish(VectorXd& y) const {
    double best = residual(y);
    for (int it = 0; it < 30 && best > 1e-15; ++it) {
      Eigen::FullPivLU<MatrixXd> lu(jacobian(p_, to_complex(y)));
      if (!lu.isInvertible()) break;
      const VectorXd next = y + lu.solve(-drift_real(p_, y));
      const double r = residual(next);
      if (!(r < best)) break;
      y = next;
      best = r;
    }
    return best <= opt_.residual_tol;
  }

  bool add(const VectorXd& y) {
    for (const auto& r : roots_)
      if ((y - r).cwiseAbs().maxCoeff() <= opt_.merge_distance * scale_) return false;
    roots_.push_back(y);
    return true;
  }

  const NetworkParams& p_;
  SolverOptions opt_;
  double scale_;
  double radius_ = 1.0;
  std::vector<std::vector<Eigen::Index>> symmetries_;
  std::vector<VectorXd> roots_;
};

}  // namespace

std::vector<SteadyState> find_steady_states(const NetworkParams& p, std::span<const VectorXcd> seeds,
                                            const SolverOptions& opt) {
  p.validate();
  if ((p.kerr.array() == 0.0).any()) throw std::invalid_argument("steady-state search requires nonzero Kerr");
  RootFinder finder(p, opt);
  finder.run(seeds);
  std::vector<VectorXd> roots = finder.roots();
  std::sort(roots.begin(), roots.end(), [](const VectorXd& l, const VectorXd& r) {
    const double nl = l.squaredNorm();
    const double nr = r.squaredNorm();
    if (std::abs(nl - nr) > 1e-9 * std::max(1.0, std::max(nl, nr))) return nl < nr;
    for (Eigen::Index k = 0; k < l.size(); ++k)
      if (std::abs(l(k) - r(k)) > 1e-9 * std::max(1.0, std::abs(l(k)))) return l(k) < r(k);
    return false;
  });
  std::vector<SteadyState> out;
  out.reserve(roots.size());
  for (const auto& r : roots) out.push_back(describe_state(p, to_complex(r), opt));
  return out;
}

double origin_instability_drive(const NetworkParams& params, int unstable_modes, double rel_tol) {
  const auto n = static_cast<Eigen::Index>(params.n_sites);
  if (unstable_modes < 1 || unstable_modes > n) throw std::invalid_argument("unstable_modes out of range");
  const VectorXcd origin = VectorXcd::Zero(n);
  auto unstable = [&](double g) {
    const VectorXcd mu = characteristic_exponents(jacobian(params.with_drive(g), origin));
    int count = 0;
    for (Eigen::Index k = 0; k < mu.size(); ++k) count += mu(k).real() > 0.0 ? 1 : 0;
    return count >= unstable_modes;
  };
  double lo = 0.0;
  double hi = params.max_rate();
  int grow = 0;
  while (!unstable(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) throw NumericalError("origin never destabilizes");
  }
  if (unstable(lo)) return lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (unstable(mid) ? hi : lo) = mid;
  }
  return hi;
}

NetworkParams apply_sweep(const NetworkParams& params, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::MeanDetuning: return params.with_mean_detuning(value);
    case SweepAxis::HalfDriveFrequencyHz: return params.with_drive_freq(4.0 * std::numbers::pi * value);
    case SweepAxis::Drive: return params.with_drive(value);
  }
  return params;
}

SweepResult bifurcation_sweep(const NetworkParams& params, SweepAxis axis, std::span<const double> grid,
                              const SolverOptions& opt) {
  SweepResult result;
  if (grid.empty()) return result;
  bool up = true;
  bool down = true;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    up = up && grid[k] > grid[k - 1];
    down = down && grid[k] < grid[k - 1];
  }
  if (!(up || down)) throw std::invalid_argument("sweep grid must be strictly monotone");

  const double scale = params.amplitude_scale();
  int next_id = 0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const NetworkParams q = apply_sweep(params, axis, grid[idx]);
    std::vector<VectorXcd> seeds;
    if (idx > 0)
      for (const auto& s : result.points.back().states) seeds.push_back(s.amplitudes);
    BranchPoint bp;
    bp.sweep_value = grid[idx];
    bp.states = find_steady_states(q, seeds, opt);
    bp.branch_ids.assign(bp.states.size(), -1);
    bp.match_distances.assign(bp.states.size(), -1.0);
    for (const auto& s : bp.states) (s.stable ? bp.n_stable : bp.n_unstable)++;

    if (idx > 0) {
      const BranchPoint& prev = result.points.back();
      struct Pair {
        double dist;
        std::size_t cur, old;
      };
      std::vector<Pair> pairs;
      for (std::size_t c = 0; c < bp.states.size(); ++c)
        for (std::size_t o = 0; o < prev.states.size(); ++o)
          pairs.push_back({(bp.states[c].amplitudes - prev.states[o].amplitudes).norm(), c, o});
      std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) { return l.dist < r.dist; });
      std::vector<bool> old_used(prev.states.size(), false);
      for (const auto& pr : pairs) {
        if (bp.branch_ids[pr.cur] >= 0 || old_used[pr.old]) continue;
        const double amp = std::max({prev.states[pr.old].amplitudes.norm(), bp.states[pr.cur].amplitudes.norm(),
                                     0.05 * scale});
        if (pr.dist > 0.5 * amp) continue;
        bp.branch_ids[pr.cur] = prev.branch_ids[pr.old];
        bp.match_distances[pr.cur] = pr.dist;
        old_used[pr.old] = true;
        if (pr.dist > 0.1 * amp) {
          std::ostringstream msg;
          msg << "branch " << prev.branch_ids[pr.old] << " jumped by " << pr.dist << " between sweep values "
              << prev.sweep_value << " and " << bp.sweep_value << " (possible missed fold)";
          result.warnings.push_back(msg.str());
        }
      }
      if (bp.n_stable != prev.n_stable || bp.n_unstable != prev.n_unstable) {
        result.bifurcations.push_back(0.5 * (prev.sweep_value + bp.sweep_value));
        result.bifurcation_index.push_back(idx);
      }
    }
    for (auto& id : bp.branch_ids)
      if (id < 0) id = next_id++;
    result.points.push_back(std::move(bp));
  }
  return result;
}

int phase_color(const std::vector<Symmetry>& labels) {
  auto has = [&](Symmetry s) { return std::find(labels.begin(), labels.end(), s) != labels.end(); };
  const bool zero = has(Symmetry::Zero);
  const bool s = has(Symmetry::S);
  const bool a = has(Symmetry::A);
  const bool m = has(Symmetry::M);
  if (!s && !a && !m) return White;
  int base = Other;
  if (s && !a && !m) base = Blue;
  else if (s && a && !m) base = Red;
  else if (s && !a && m) base = Purple;
  else if (s && a && m) base = DarkRed;
  return zero ? base + kBrighterOffset : base;
}

std::string phase_color_name(int code) {
  const bool bright = code >= kBrighterOffset;
  const int base = bright ? code - kBrighterOffset : code;
  std::string name;
  switch (base) {
    case White: name = "white"; break;
    case Blue: name = "blue"; break;
    case Red: name = "red"; break;
    case Purple: name = "purple"; break;
    case DarkRed: name = "dark_red"; break;
    default: name = "other"; break;
  }
  return bright ? "bright_" + name : name;
}

PhaseDiagram phase_diagram(const NetworkParams& params, std::span<const double> delta_grid,
                           std::span<const double> drive_grid, const SolverOptions& opt, unsigned threads) {
  PhaseDiagram pd;
  pd.deltas.assign(delta_grid.begin(), delta_grid.end());
  pd.drives.assign(drive_grid.begin(), drive_grid.end());
  const std::size_t nd = pd.deltas.size();
  pd.cells.resize(nd * pd.drives.size());
  parallel_for(pd.cells.size(), threads, [&](std::size_t idx) {
    PhaseCell cell;
    cell.delta = pd.deltas[idx % nd];
    cell.drive = pd.drives[idx / nd];
    const NetworkParams q = params.with_mean_detuning(cell.delta).with_drive(std::abs(cell.drive));
    for (const auto& s : find_steady_states(q, {}, opt)) {
      if (!s.stable) continue;
      if (std::find(cell.stable_labels.begin(), cell.stable_labels.end(), s.symmetry) == cell.stable_labels.end())
        cell.stable_labels.push_back(s.symmetry);
      if (s.symmetry == Symmetry::Zero) cell.origin_stable = true;
    }
    std::sort(cell.stable_labels.begin(), cell.stable_labels.end());
    cell.flagged = cell.stable_labels.empty();
    cell.color_code = phase_color(cell.stable_labels);
    pd.cells[idx] = std::move(cell);
  });
  return pd;
}

}  // namespace kpo
