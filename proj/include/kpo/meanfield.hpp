#pragma once

#include "kpo/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kpo {

using Eigen::VectorXcd;

enum class Symmetry { Zero, S, A, M };

std::string_view to_string(Symmetry s);

struct SteadyState {
  VectorXcd amplitudes;
  bool stable = false;
  bool marginal = false;  // max Re mu within the stability margin of zero
  VectorXcd exponents;    // sorted by (Re desc, Im asc)
  Symmetry symmetry = Symmetry::Zero;
  double residual = 0.0;  // normalized max |drift|
};

struct SolverOptions {
  int random_starts = 64;
  int max_iterations = 100;
  double residual_tol = 1e-10;
  double merge_distance = 1e-6;    // in units of sqrt(G/V)
  double stability_margin = 1e-9;  // relative to the largest model rate
  double classify_tol = 1e-3;
};

/// Deterministic part of the mean-field equation of motion.
VectorXcd drift(const NetworkParams& params, const VectorXcd& amplitudes);

/// Same drift in real coordinates (Re a1, Im a1, Re a2, ...).
VectorXd drift_real(const NetworkParams& params, const VectorXd& y);

/// d(Re a', Im a')/d(Re a, Im a) in the interleaved ordering of drift_real.
MatrixXd jacobian(const NetworkParams& params, const VectorXcd& amplitudes);

VectorXcd characteristic_exponents(const MatrixXd& jac);

/// max |drift| divided by the rate * amplitude + |V| amplitude^3 scale.
double normalized_residual(const NetworkParams& params, const VectorXcd& amplitudes);

Symmetry classify_state(const VectorXcd& amplitudes, double tol, double zero_scale);

VectorXd to_real(const VectorXcd& amplitudes);
VectorXcd to_complex(const VectorXd& y);

/// Evaluates exponents, stability and symmetry of a known fixed point.
SteadyState describe_state(const NetworkParams& params, const VectorXcd& amplitudes,
                           const SolverOptions& opt = {});

/// All isolated fixed points reachable from the origin, the seeds, and
/// quasi-random starts, via Newton with deflation. Always contains the origin.
std::vector<SteadyState> find_steady_states(const NetworkParams& params,
                                            std::span<const VectorXcd> seeds = {},
                                            const SolverOptions& opt = {});

/// Smallest G at which at least `unstable_modes` exponent pairs of the origin
/// have positive real part, located by bisection on the origin Jacobian.
double origin_instability_drive(const NetworkParams& params, int unstable_modes = 1,
                                double rel_tol = 1e-13);

enum class SweepAxis { MeanDetuning, HalfDriveFrequencyHz, Drive };

NetworkParams apply_sweep(const NetworkParams& params, SweepAxis axis, double value);

struct BranchPoint {
  double sweep_value = 0.0;
  std::vector<SteadyState> states;
  std::vector<int> branch_ids;          // parallel to states
  std::vector<double> match_distances;  // to the matched predecessor, -1 for new branches
  int n_stable = 0;
  int n_unstable = 0;
};

struct SweepResult {
  std::vector<BranchPoint> points;
  std::vector<double> bifurcations;            // midpoints of intervals where counts change
  std::vector<std::size_t> bifurcation_index;  // i such that the change is between i-1 and i
  std::vector<std::string> warnings;
};

/// Sequential continuation along a monotone grid.
SweepResult bifurcation_sweep(const NetworkParams& params, SweepAxis axis,
                              std::span<const double> grid, const SolverOptions& opt = {});

enum PhaseColor : int { White = 0, Blue = 1, Red = 2, Purple = 3, DarkRed = 4, Other = 5 };

/// Added to the base color when the origin is stable as well.
inline constexpr int kBrighterOffset = 10;

struct PhaseCell {
  double delta = 0.0;
  double drive = 0.0;
  std::vector<Symmetry> stable_labels;  // unique, sorted
  int color_code = White;
  bool origin_stable = false;
  bool flagged = false;  // no stable state found
};

struct PhaseDiagram {
  std::vector<double> deltas;
  std::vector<double> drives;
  std::vector<PhaseCell> cells;  // drive-major: index = i_drive * deltas.size() + i_delta
};

int phase_color(const std::vector<Symmetry>& stable_labels);
std::string phase_color_name(int code);

PhaseDiagram phase_diagram(const NetworkParams& params, std::span<const double> delta_grid,
                           std::span<const double> drive_grid, const SolverOptions& opt = {},
                           unsigned threads = 1);

}  // namespace kpo
