#pragma once

#include "kpo/model.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kpo::quantum {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cd>;

/// Product Fock space with occupations 0 .. n_max-1 per site. Site 0 is the
/// most significant digit of the basis index.
struct FockSpace {
  std::size_t n_sites = 1;
  std::size_t n_max = 2;

  std::size_t dim() const;
  std::size_t index(const std::vector<std::size_t>& occupations) const;
  std::vector<std::size_t> occupations(std::size_t index) const;
};

/// Annihilation operator of `site` on the full space.
SparseMatrix annihilator(const FockSpace& space, std::size_t site);

/// Rotating-frame Hamiltonian (hbar = 1).
SparseMatrix hamiltonian(const NetworkParams& params, const FockSpace& space);

struct Liouvillian {
  FockSpace space;
  SparseMatrix matrix;  // acts on column-major vec(rho)
  // Group of site permutations commuting with L (identity first). perm[s] is
  // the image of site s.
  std::vector<std::vector<std::size_t>> symmetries;
  std::vector<std::string> warnings;
};

/// Generator -i[H, rho] + sum_j (gamma_j / 2) (2 a rho a^+ - {a^+ a, rho}).
Liouvillian build_liouvillian(const NetworkParams& params, const FockSpace& space);

/// Applies the Liouvillian to a density matrix.
MatrixXcd apply(const Liouvillian& l, const MatrixXcd& rho);

struct SteadyStateOptions {
  std::size_t direct_dim_limit = 4096;  // Hilbert-space dimension for the sparse direct solve
  bool reduce_symmetry = true;          // solve in the parity-diagonal, permutation-invariant sector
  double propagation_time = 0.0;       // 0 means 50 / min(gamma)
  double propagation_tol = 1e-10;
};

struct QuantumSteadyState {
  FockSpace space;
  MatrixXcd rho;
  VectorXcd mean_amplitudes;
  Eigen::VectorXd mean_photons;
  double leakage = 0.0;             // largest top-level population over sites
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  double residual = 0.0;            // max |L rho|
  double parity_commutator = 0.0;   // max |[P, rho]|
  std::string method;               // "direct", "direct-reduced" or "propagation"
};

/// Unique unit-trace null vector of L. Throws NumericalError on a degenerate
/// or failed solve.
QuantumSteadyState steady_state(const Liouvillian& l, const SteadyStateOptions& opt = {});

/// Observables, invariant diagnostics and residual for a given rho.
QuantumSteadyState describe(const Liouvillian& l, MatrixXcd rho, std::string method);

struct ConvergedSteadyState {
  QuantumSteadyState state;          // at the largest cutoff tried
  std::vector<std::size_t> cutoffs;  // every cutoff solved
  double photon_change = 0.0;        // max relative <n_j> change between the last two cutoffs
  bool converged = false;
};

/// Starts at ceil(3 G/V + 8) (or `start`), grows the cutoff by 4 until the
/// photon numbers change by less than `rel_tol` and leakage < 1e-6, or the
/// cutoff would exceed `limit`.
ConvergedSteadyState converged_steady_state(const NetworkParams& params, std::size_t limit,
                                            std::optional<std::size_t> start = std::nullopt, double rel_tol = 1e-4,
                                            const SteadyStateOptions& opt = {});

/// Adaptive Dormand-Prince propagation of rho' = L rho to time t.
MatrixXcd evolve(const Liouvillian& l, const MatrixXcd& rho0, double t, double tol = 1e-10);

/// Normalized Hermite functions psi_0 .. psi_{n-1} at x for x = (a + a^+)/sqrt(2),
/// by the three-term recurrence on psi_n.
Eigen::VectorXd hermite_functions(std::size_t n, double x);

struct QuadratureDistribution {
  std::size_t n_sites = 0;
  Eigen::VectorXd axis;   // same samples on every axis
  Eigen::VectorXd p;      // row-major over (x_1, ..., x_N); normalized to unit integral
  double raw_integral = 0.0;  // before normalization
};

/// Joint distribution <x_1..x_N| rho |x_1..x_N>. Throws when more than 1e-3
/// of the probability lies outside the grid.
QuadratureDistribution quadrature_distribution(const QuantumSteadyState& state, const Eigen::VectorXd& axis);

struct HotSpot {
  std::vector<double> x;
  double p = 0.0;
};

/// Strict local maxima of a two-dimensional distribution above
/// rel_threshold * global maximum.
std::vector<HotSpot> local_maxima(const QuadratureDistribution& dist, double rel_threshold = 1e-3);

/// Truncated coherent state |alpha>.
VectorXcd coherent_state(cd alpha, std::size_t n_max);

struct CatState {
  cd alpha;
  int parity = 1;
  VectorXcd vector;
  double norm_const = 0.0;
};

/// c (|alpha> + parity |-alpha>) with c = [2 (1 + parity e^{-2|alpha|^2})]^{-1/2}.
CatState cat_state(cd alpha, int parity, std::size_t n_max);

struct EnsembleStats {
  double mean = 0.0;
  double rms = 0.0;
};

/// Monte-Carlo statistics of |sum_i s_i alpha| / n_modes over random signs s_i.
EnsembleStats ensemble_mean_amplitude(std::size_t n_modes, cd alpha, std::size_t trials, std::uint64_t seed);

}  // namespace kpo::quantum
