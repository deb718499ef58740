#include "kpo/quantum.hpp"

#include "kpo/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#ifdef KPO_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace kpo::quantum {

namespace {

SparseMatrix identity(std::size_t n) {
  SparseMatrix id(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  id.setIdentity();
  return id;
}

SparseMatrix single_site_annihilator(std::size_t n_max) {
  std::vector<Eigen::Triplet<cd>> t;
  for (std::size_t k = 1; k < n_max; ++k)
    t.emplace_back(static_cast<int>(k - 1), static_cast<int>(k), std::sqrt(static_cast<double>(k)));
  SparseMatrix a(static_cast<Eigen::Index>(n_max), static_cast<Eigen::Index>(n_max));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < exp; ++k) r *= base;
  return r;
}

VectorXcd to_vec(const MatrixXcd& rho) { return Eigen::Map<const VectorXcd>(rho.data(), rho.size()); }

MatrixXcd from_vec(const VectorXcd& v, Eigen::Index dim) { return Eigen::Map<const MatrixXcd>(v.data(), dim, dim); }

// Closure of the parameter-preserving site permutations under composition.
std::vector<std::vector<std::size_t>> permutation_group(const NetworkParams& p) {
  std::vector<std::size_t> id(p.n_sites);
  for (std::size_t s = 0; s < id.size(); ++s) id[s] = s;
  std::vector<std::vector<std::size_t>> gens;
  for (const auto& g : site_symmetries(p)) gens.emplace_back(g.begin(), g.end());
  std::vector<std::vector<std::size_t>> group{id};
  for (std::size_t k = 0; k < group.size(); ++k) {
    for (const auto& g : gens) {
      std::vector<std::size_t> c(id.size());
      for (std::size_t s = 0; s < c.size(); ++s) c[s] = g[group[k][s]];
      if (std::find(group.begin(), group.end(), c) == group.end()) group.push_back(std::move(c));
    }
  }
  return group;
}

}  // namespace

std::size_t FockSpace::dim() const { return ipow(n_max, n_sites); }

std::size_t FockSpace::index(const std::vector<std::size_t>& occ) const {
  if (occ.size() != n_sites) throw std::invalid_argument("occupation list has wrong length");
  std::size_t idx = 0;
  for (std::size_t s = 0; s < n_sites; ++s) {
    if (occ[s] >= n_max) throw std::out_of_range("occupation exceeds the Fock cutoff");
    idx = idx * n_max + occ[s];
  }
  return idx;
}

std::vector<std::size_t> FockSpace::occupations(std::size_t idx) const {
  std::vector<std::size_t> occ(n_sites);
  for (std::size_t s = n_sites; s-- > 0;) {
    occ[s] = idx % n_max;
    idx /= n_max;
  }
  return occ;
}

SparseMatrix annihilator(const FockSpace& space, std::size_t site) {
  if (site >= space.n_sites) throw std::out_of_range("site index out of range");
  const SparseMatrix left = identity(ipow(space.n_max, site));
  const SparseMatrix right = identity(ipow(space.n_max, space.n_sites - site - 1));
  const SparseMatrix a = single_site_annihilator(space.n_max);
  SparseMatrix la = Eigen::kroneckerProduct(left, a);
  return Eigen::kroneckerProduct(la, right);
}

SparseMatrix hamiltonian(const NetworkParams& p, const FockSpace& space) {
  p.validate();
  if (space.n_sites != p.n_sites) throw std::invalid_argument("Fock space and network disagree on the number of sites");
  if (space.n_max < 2) throw std::invalid_argument("Fock cutoff must be at least 2");
  const VectorXd delta = p.detunings();
  const auto dim = static_cast<Eigen::Index>(space.dim());
  std::vector<SparseMatrix> a;
  for (std::size_t s = 0; s < space.n_sites; ++s) a.push_back(annihilator(space, s));
  SparseMatrix h(dim, dim);
  for (std::size_t j = 0; j < space.n_sites; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const SparseMatrix ad = a[j].adjoint();
    const SparseMatrix n = ad * a[j];
    const SparseMatrix adad = ad * ad;
    const SparseMatrix aa = a[j] * a[j];
    h += cd(-delta(jj)) * n;
    h += cd(0.5 * p.kerr(jj)) * SparseMatrix(adad * aa);
    h += cd(-0.5 * p.drive(jj)) * SparseMatrix(adad + aa);
    for (std::size_t k = j + 1; k < space.n_sites; ++k) {
      const double jk = p.coupling(jj, static_cast<Eigen::Index>(k));
      if (jk == 0.0) continue;
      const SparseMatrix hop = ad * a[k];
      h += cd(jk) * SparseMatrix(hop + SparseMatrix(hop.adjoint()));
    }
  }
  h.prune(cd(0.0));
  return h;
}

Liouvillian build_liouvillian(const NetworkParams& p, const FockSpace& space) {
  const SparseMatrix h = hamiltonian(p, space);
  const std::size_t dim = space.dim();
  const SparseMatrix id = identity(dim);
  const cd i(0.0, 1.0);
  Liouvillian l;
  l.space = space;
  const SparseMatrix ht = h.transpose();
  l.matrix = SparseMatrix(Eigen::kroneckerProduct(id, h)) - SparseMatrix(Eigen::kroneckerProduct(ht, id));
  l.matrix *= -i;
  for (std::size_t j = 0; j < space.n_sites; ++j) {
    const double g = p.damping(static_cast<Eigen::Index>(j));
    if (g == 0.0) continue;
    const SparseMatrix a = annihilator(space, j);
    const SparseMatrix n = SparseMatrix(a.adjoint()) * a;
    const SparseMatrix nt = n.transpose();
    // vec(a rho a^+) = (conj(a) kron a) vec(rho)
    const SparseMatrix ac = a.conjugate();
    l.matrix += cd(g) * SparseMatrix(Eigen::kroneckerProduct(ac, a));
    l.matrix -= cd(0.5 * g) * SparseMatrix(SparseMatrix(Eigen::kroneckerProduct(id, n)) + SparseMatrix(Eigen::kroneckerProduct(nt, id)));
  }
  l.matrix.prune(cd(0.0));
  l.matrix.makeCompressed();
  l.symmetries = permutation_group(p);

  const double gmax = p.drive.maxCoeff();
  const double vmin = p.kerr.cwiseAbs().minCoeff();
  if (vmin > 0.0 && static_cast<double>(space.n_max) < 3.0 * gmax / vmin + 5.0) {
    std::ostringstream msg;
    msg << "Fock cutoff " << space.n_max << " is below 3 G/V + 5 = " << 3.0 * gmax / vmin + 5.0;
    l.warnings.push_back(msg.str());
  }
  return l;
}

MatrixXcd apply(const Liouvillian& l, const MatrixXcd& rho) {
  const auto dim = static_cast<Eigen::Index>(l.space.dim());
  if (rho.rows() != dim || rho.cols() != dim) throw std::invalid_argument("density matrix has wrong dimension");
  const VectorXcd out = l.matrix * to_vec(rho);
  return from_vec(out, dim);
}

QuantumSteadyState describe(const Liouvillian& l, MatrixXcd rho, std::string method) {
  const FockSpace& space = l.space;
  const auto dim = static_cast<Eigen::Index>(space.dim());
  QuantumSteadyState st;
  st.space = space;
  st.method = std::move(method);
  st.trace_error = std::abs(rho.trace() - cd(1.0));
  st.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  st.residual = (l.matrix * to_vec(rho)).cwiseAbs().maxCoeff();

  const auto n = static_cast<Eigen::Index>(space.n_sites);
  st.mean_amplitudes.resize(n);
  st.mean_photons.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const SparseMatrix a = annihilator(space, static_cast<std::size_t>(j));
    const MatrixXcd ar = a * rho;
    st.mean_amplitudes(j) = ar.trace();
    st.mean_photons(j) = (SparseMatrix(a.adjoint()) * ar).trace().real();
  }

  Eigen::VectorXd parity(dim);
  std::vector<double> top(space.n_sites, 0.0);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const auto occ = space.occupations(static_cast<std::size_t>(k));
    std::size_t total = 0;
    for (std::size_t s = 0; s < occ.size(); ++s) {
      total += occ[s];
      if (occ[s] + 1 == space.n_max) top[s] += rho(k, k).real();
    }
    parity(k) = total % 2 == 0 ? 1.0 : -1.0;
  }
  st.leakage = *std::max_element(top.begin(), top.end());
  double comm = 0.0;
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r)
      if (parity(r) != parity(c)) comm = std::max(comm, 2.0 * std::abs(rho(r, c)));
  st.parity_commutator = comm;

  if (dim <= 2500) {
    const MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    st.min_eigenvalue = es.eigenvalues()(0);
  } else {
    st.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  }
  st.rho = std::move(rho);
  return st;
}

namespace {

template <class Solver>
VectorXcd solve_with(Solver& solver, const SparseMatrix& a, const VectorXcd& b) {
  solver.compute(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Liouvillian factorization failed (degenerate steady-state nullspace?)");
  VectorXcd x = solver.solve(b);
  if (solver.info() != Eigen::Success || !x.allFinite())
    throw NumericalError("Liouvillian solve failed (degenerate steady-state nullspace?)");
  // One step of iterative refinement.
  const VectorXcd r = b - a * x;
  x += solver.solve(r);
  return x;
}

}  // namespace

QuantumSteadyState steady_state(const Liouvillian& l, const SteadyStateOptions& opt) {
  const std::size_t dim = l.space.dim();
  const auto d = static_cast<Eigen::Index>(dim);
  if (dim > opt.direct_dim_limit) {
    double gmin = std::numeric_limits<double>::infinity();
    // Smallest decay rate from the dissipator diagonal on the one-photon states.
    for (std::size_t s = 0; s < l.space.n_sites; ++s) {
      std::vector<std::size_t> occ(l.space.n_sites, 0);
      occ[s] = 1;
      const auto k = static_cast<Eigen::Index>(l.space.index(occ));
      const double rate = -2.0 * l.matrix.coeff(k * d + k, k * d + k).real();
      if (rate > 0.0) gmin = std::min(gmin, rate);
    }
    if (!std::isfinite(gmin)) throw NumericalError("propagation fallback needs positive damping");
    const double t = opt.propagation_time > 0.0 ? opt.propagation_time : 50.0 / gmin;
    MatrixXcd rho0 = MatrixXcd::Zero(d, d);
    rho0(0, 0) = 1.0;
    MatrixXcd rho = evolve(l, rho0, t, opt.propagation_tol);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    return describe(l, std::move(rho), "propagation");
  }

  // Orthonormal basis B of the sector holding the unique steady state: rho
  // commutes with total parity and with every site permutation symmetry.
  const bool reduce = opt.reduce_symmetry;
  std::vector<std::vector<std::size_t>> perm_index;
  std::vector<int> parity(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    const auto occ = l.space.occupations(r);
    std::size_t total = 0;
    for (std::size_t q : occ) total += q;
    parity[r] = static_cast<int>(total % 2);
  }
  const auto& group = reduce ? l.symmetries : std::vector<std::vector<std::size_t>>{};
  for (const auto& g : group) {
    std::vector<std::size_t> map(dim);
    for (std::size_t r = 0; r < dim; ++r) {
      const auto occ = l.space.occupations(r);
      std::vector<std::size_t> moved(occ.size());
      for (std::size_t s = 0; s < occ.size(); ++s) moved[g[s]] = occ[s];
      map[r] = l.space.index(moved);
    }
    perm_index.push_back(std::move(map));
  }
  std::vector<Eigen::Triplet<cd>> basis;
  std::vector<char> seen(dim * dim, 0);
  int cols = 0;
  std::vector<std::size_t> orbit;
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t r = 0; r < dim; ++r) {
      const std::size_t q = r + c * dim;
      if (seen[q] || (reduce && parity[r] != parity[c])) continue;
      orbit.clear();
      orbit.push_back(q);
      seen[q] = 1;
      for (const auto& map : perm_index) {
        const std::size_t qq = map[r] + map[c] * dim;
        if (!seen[qq]) {
          seen[qq] = 1;
          orbit.push_back(qq);
        }
      }
      const double w = 1.0 / std::sqrt(static_cast<double>(orbit.size()));
      for (std::size_t qq : orbit) basis.emplace_back(static_cast<int>(qq), cols, cd(w));
      ++cols;
    }
  }
  SparseMatrix b(d * d, cols);
  b.setFromTriplets(basis.begin(), basis.end());
  const SparseMatrix bt = b.transpose();
  SparseMatrix a = bt * (l.matrix * b);

  // Column 0 is the orbit of |0..0><0..0|; its row is redundant by trace
  // preservation and is replaced by the trace constraint.
  a.prune([](Eigen::Index row, Eigen::Index, const cd&) { return row != 0; });
  SparseMatrix trace_full(1, d * d);
  {
    std::vector<Eigen::Triplet<cd>> t;
    for (Eigen::Index k = 0; k < d; ++k) t.emplace_back(0, static_cast<int>(k * d + k), cd(1.0));
    trace_full.setFromTriplets(t.begin(), t.end());
  }
  const SparseMatrix trace_red = trace_full * b;
  std::vector<Eigen::Triplet<cd>> t;
  for (int k = 0; k < trace_red.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(trace_red, k); it; ++it) t.emplace_back(0, static_cast<int>(it.col()), it.value());
  SparseMatrix tr(a.rows(), a.cols());
  tr.setFromTriplets(t.begin(), t.end());
  a += tr;
  a.makeCompressed();
  VectorXcd rhs = VectorXcd::Zero(a.rows());
  rhs(0) = 1.0;

#ifdef KPO_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> solver;
  solver.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> solver;
#endif
  const VectorXcd x = b * solve_with(solver, a, rhs);
  MatrixXcd rho = from_vec(x, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  QuantumSteadyState st = describe(l, std::move(rho), reduce ? "direct-reduced" : "direct");
  if (!(st.residual <= 1e-6)) {
    std::ostringstream msg;
    msg << "steady-state residual " << st.residual << " too large; the nullspace may be degenerate";
    throw NumericalError(msg.str());
  }
  return st;
}

ConvergedSteadyState converged_steady_state(const NetworkParams& p, std::size_t limit, std::optional<std::size_t> start,
                                            double rel_tol, const SteadyStateOptions& opt) {
  p.validate();
  const double vmin = p.kerr.cwiseAbs().minCoeff();
  std::size_t n = 8;
  if (start) {
    n = *start;
  } else if (vmin > 0.0) {
    n = static_cast<std::size_t>(std::ceil(3.0 * p.drive.maxCoeff() / vmin + 8.0));
  }
  n = std::max<std::size_t>(2, std::min(n, limit));

  ConvergedSteadyState out;
  const FockSpace space0{p.n_sites, n};
  QuantumSteadyState prev = steady_state(build_liouvillian(p, space0), opt);
  out.cutoffs.push_back(n);
  while (n + 4 <= limit) {
    n += 4;
    QuantumSteadyState next = steady_state(build_liouvillian(p, FockSpace{p.n_sites, n}), opt);
    out.cutoffs.push_back(n);
    double change = 0.0;
    for (Eigen::Index j = 0; j < next.mean_photons.size(); ++j) {
      const double ref = std::max(std::abs(next.mean_photons(j)), 1e-300);
      change = std::max(change, std::abs(next.mean_photons(j) - prev.mean_photons(j)) / ref);
    }
    out.photon_change = change;
    prev = std::move(next);
    if (change < rel_tol && prev.leakage < 1e-6) {
      out.converged = true;
      break;
    }
  }
  out.state = std::move(prev);
  return out;
}

MatrixXcd evolve(const Liouvillian& l, const MatrixXcd& rho0, double t, double tol) {
  const auto d = static_cast<Eigen::Index>(l.space.dim());
  if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("density matrix has wrong dimension");
  if (t < 0.0) throw std::invalid_argument("evolution time must be nonnegative");
  // Dormand-Prince 5(4) tableau.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  VectorXcd y = to_vec(rho0);
  if (t == 0.0) return rho0;
  const SparseMatrix& m = l.matrix;
  VectorXcd k1 = m * y;
  double norm = 1.0;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) col += std::abs(it.value());
    norm = std::max(norm, col);
  }
  double h = std::min(t, 0.1 / norm);
  double time = 0.0;
  std::size_t steps = 0;
  while (time < t) {
    if (++steps > 50'000'000) throw NumericalError("Lindblad propagation exceeded the step budget");
    h = std::min(h, t - time);
    const VectorXcd k2 = m * (y + h * a21 * k1);
    const VectorXcd k3 = m * (y + h * (a31 * k1 + a32 * k2));
    const VectorXcd k4 = m * (y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const VectorXcd k5 = m * (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const VectorXcd k6 = m * (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const VectorXcd yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const VectorXcd k7 = m * yn;
    const VectorXcd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = err.cwiseAbs().maxCoeff() / tol;
    if (!std::isfinite(en)) throw NumericalError("Lindblad propagation diverged");
    if (en <= 1.0) {
      time += h;
      y = yn;
      k1 = k7;
    }
    const double factor = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
  }
  return from_vec(y, d);
}

Eigen::VectorXd hermite_functions(std::size_t n, double x) {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n == 0) return psi;
  psi(0) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (n > 1) psi(1) = std::numbers::sqrt2 * x * psi(0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double kd = static_cast<double>(k);
    psi(kk + 1) = std::sqrt(2.0 / (kd + 1.0)) * x * psi(kk) - std::sqrt(kd / (kd + 1.0)) * psi(kk - 1);
  }
  return psi;
}

namespace {

// Contracts the leading site of `m` (blocks of size `block`) against psi at
// every grid point, recursing until a scalar remains.
void contract(const MatrixXcd& m, std::size_t n_max, std::size_t remaining, const Eigen::MatrixXd& psi,
              Eigen::Index offset, Eigen::Index stride, Eigen::VectorXd& out) {
  if (remaining == 0) {
    out(offset) = m(0, 0).real();
    return;
  }
  const Eigen::Index block = m.rows() / static_cast<Eigen::Index>(n_max);
  const Eigen::Index points = psi.rows();
  const Eigen::Index sub_stride = stride / points;
  for (Eigen::Index g = 0; g < points; ++g) {
    MatrixXcd red = MatrixXcd::Zero(block, block);
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(n_max); ++a) {
      const double pa = psi(g, a);
      if (pa == 0.0) continue;
      for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(n_max); ++b) {
        const double w = pa * psi(g, b);
        if (w == 0.0) continue;
        red += w * m.block(a * block, b * block, block, block);
      }
    }
    contract(red, n_max, remaining - 1, psi, offset + g * sub_stride, sub_stride, out);
  }
}

}  // namespace

QuadratureDistribution quadrature_distribution(const QuantumSteadyState& st, const Eigen::VectorXd& axis) {
  const std::size_t n = st.space.n_sites;
  const std::size_t n_max = st.space.n_max;
  if (axis.size() < 3) throw std::invalid_argument("quadrature grid needs at least 3 points");
  for (Eigen::Index k = 1; k < axis.size(); ++k)
    if (!(axis(k) > axis(k - 1))) throw std::invalid_argument("quadrature grid must be strictly increasing");
  const Eigen::Index points = axis.size();
  Eigen::MatrixXd psi(points, static_cast<Eigen::Index>(n_max));
  for (Eigen::Index g = 0; g < points; ++g) psi.row(g) = hermite_functions(n_max, axis(g)).transpose();

  QuadratureDistribution out;
  out.n_sites = n;
  out.axis = axis;
  const auto total = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(points), n));
  out.p.resize(total);
  contract(st.rho, n_max, n, psi, 0, total, out.p);

  // Trapezoid weights per axis.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(points);
  for (Eigen::Index k = 1; k < points; ++k) {
    const double h = 0.5 * (axis(k) - axis(k - 1));
    w(k - 1) += h;
    w(k) += h;
  }
  double integral = 0.0;
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    double weight = 1.0;
    Eigen::Index rem = idx;
    for (std::size_t s = 0; s < n; ++s) {
      weight *= w(rem % points);
      rem /= points;
    }
    integral += weight * out.p(idx);
  }
  out.raw_integral = integral;
  if (!(1.0 - integral <= 1e-3)) {
    std::ostringstream msg;
    msg << "quadrature grid misses " << 1.0 - integral << " of the probability; widen the grid";
    throw std::invalid_argument(msg.str());
  }
  out.p /= integral;
  return out;
}

std::vector<HotSpot> local_maxima(const QuadratureDistribution& dist, double rel_threshold) {
  const Eigen::Index m = dist.axis.size();
  const double peak = dist.p.maxCoeff();
  std::vector<HotSpot> out;
  if (dist.n_sites == 1) {
    for (Eigen::Index i = 1; i + 1 < m; ++i) {
      const double v = dist.p(i);
      if (v > dist.p(i - 1) && v > dist.p(i + 1) && v >= rel_threshold * peak) out.push_back({{dist.axis(i)}, v});
    }
    return out;
  }
  if (dist.n_sites != 2) throw std::invalid_argument("local maxima are implemented for one or two sites");
  auto at = [&](Eigen::Index i, Eigen::Index j) { return dist.p(i * m + j); };
  for (Eigen::Index i = 1; i + 1 < m; ++i) {
    for (Eigen::Index j = 1; j + 1 < m; ++j) {
      const double v = at(i, j);
      if (v < rel_threshold * peak) continue;
      bool is_max = true;
      for (Eigen::Index di = -1; di <= 1 && is_max; ++di)
        for (Eigen::Index dj = -1; dj <= 1; ++dj)
          if ((di != 0 || dj != 0) && !(v > at(i + di, j + dj))) {
            is_max = false;
            break;
          }
      if (is_max) out.push_back({{dist.axis(i), dist.axis(j)}, v});
    }
  }
  return out;
}

VectorXcd coherent_state(cd alpha, std::size_t n_max) {
  VectorXcd v(static_cast<Eigen::Index>(n_max));
  if (n_max == 0) return v;
  v(0) = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t k = 1; k < n_max; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    v(kk) = v(kk - 1) * alpha / std::sqrt(static_cast<double>(k));
  }
  return v;
}

CatState cat_state(cd alpha, int parity, std::size_t n_max) {
  if (parity != 1 && parity != -1) throw std::invalid_argument("cat parity must be +1 or -1");
  const double overlap = std::exp(-2.0 * std::norm(alpha));
  const double norm2 = 2.0 * (1.0 + parity * overlap);
  if (!(norm2 > 1e-300)) throw std::invalid_argument("odd cat state at alpha = 0 has zero norm");
  CatState c;
  c.alpha = alpha;
  c.parity = parity;
  c.norm_const = 1.0 / std::sqrt(norm2);
  const VectorXcd plus = coherent_state(alpha, n_max);
  const VectorXcd minus = coherent_state(-alpha, n_max);
  c.vector = c.norm_const * (plus + static_cast<double>(parity) * minus);
  return c;
}

EnsembleStats ensemble_mean_amplitude(std::size_t n_modes, cd alpha, std::size_t trials, std::uint64_t seed) {
  if (n_modes == 0) throw std::invalid_argument("ensemble needs at least one mode");
  if (trials == 0) throw std::invalid_argument("ensemble needs at least one trial");
  EnsembleStats s;
  const double a = std::abs(alpha);
  for (std::size_t t = 0; t < trials; ++t) {
    long long sum = 0;
    for (std::size_t i = 0; i < n_modes; ++i) {
      const std::uint64_t bits = splitmix64(derive_stream(seed, t) + i);
      sum += (bits >> 63) ? 1 : -1;
    }
    const double v = a * static_cast<double>(std::llabs(sum)) / static_cast<double>(n_modes);
    s.mean += v;
    s.rms += v * v;
  }
  s.mean /= static_cast<double>(trials);
  s.rms = std::sqrt(s.rms / static_cast<double>(trials));
  return s;
}

}  // namespace kpo::quantum
