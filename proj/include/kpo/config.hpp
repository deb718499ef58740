#pragma once

#include "kpo/langevin.hpp"
#include "kpo/meanfield.hpp"
#include "kpo/model.hpp"
#include "kpo/spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpo {

inline constexpr int kSchemaVersion = 1;

/// Config problems. what() joins every message; errors() keeps them apart.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

private:
  std::vector<std::string> errors_;
};

struct Grid {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 1;
  std::vector<double> values() const;
};

struct SweepTask {
  SweepAxis axis = SweepAxis::MeanDetuning;
  Grid grid;
};

struct PhaseDiagramTask {
  Grid detuning;
  Grid drive;
};

struct PsdTask {
  std::string state = "origin";  // "origin" or "stable:<k>" (k-th stable state in solver order)
  std::size_t points = 2048;
  double omega_max = 0.0;        // 0 picks 4 max(|Im mu|, gamma)
  std::optional<double> noise_psd;
};

struct ProbeTask {
  std::optional<double> noise_psd;
  SweepTask sweep;
  ProbeOptions options;
};

struct LindbladTask {
  std::optional<std::size_t> n_max;  // fixed cutoff; otherwise auto-selected
  std::size_t n_max_limit = 20;
  double rel_tol = 1e-4;
  std::size_t grid_points = 241;
  double grid_extent = 0.0;  // 0 picks sqrt(2) max mean-field |alpha| + 4
  std::size_t direct_dim_limit = 4096;
};

struct LabTask {
  double dt = 0.0;  // 0 picks 2 pi / (80 omega_max)
  double duration = 0.0;
  double bandwidth = 0.0;  // 0 picks omega_G / 40
  std::size_t stride = 1;
  double hbar = 1.0;
  std::vector<double> x0;
  std::vector<double> v0;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  NetworkParams model;
  std::optional<CalibrationInputs> calibration;
  std::optional<NoiseCalibration> noise_calibration;
  SolverOptions solver;
  std::uint64_t seed = 0;
  std::optional<SweepTask> sweep;
  std::optional<PhaseDiagramTask> phase_diagram;
  PsdTask psd;
  std::optional<ProbeTask> probe;
  LindbladTask lindblad;
  std::optional<LabTask> labframe;

  nlohmann::json resolved;  // input document after overrides
  std::string hash;         // FNV-1a of resolved.dump()
};

/// Applies `--a.b.c=value` overrides; values parse as JSON when possible and
/// as strings otherwise. Throws ConfigError on malformed overrides.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Strict parse of an already-loaded document. Throws ConfigError listing
/// every offending key.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads `path`, applies overrides and an optional seed, then parses.
RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed = std::nullopt);

std::uint64_t fnv1a64(std::string_view data);
std::string config_hash(const nlohmann::json& doc);

}  // namespace kpo
