#include "kpo/runner.hpp"

#include "kpo/config.hpp"
#include "kpo/fluctuations.hpp"
#include "kpo/labframe.hpp"
#include "kpo/langevin.hpp"
#include "kpo/meanfield.hpp"
#include "kpo/quantum.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace kpo {

using nlohmann::json;
namespace fs = std::filesystem;
using cd = std::complex<double>;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"states", "sweep", "phase-diagram", "psd", "probe", "lindblad", "labframe",
                                              "normal-modes"};
  return names;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

json vector_json(const VectorXcd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(complex_json(v(k)));
  return a;
}

json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json matrix_json(const MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(VectorXd(m.row(r).transpose())));
  return a;
}

json state_json(const SteadyState& s) {
  return json{{"amplitudes", vector_json(s.amplitudes)}, {"stable", s.stable},     {"marginal", s.marginal},
              {"symmetry", std::string(to_string(s.symmetry))},   {"residual", s.residual}, {"exponents", vector_json(s.exponents)}};
}

class Output {
public:
  Output(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {}

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back(name);
  }

  void write_json(const std::string& name, json doc) {
    doc["config_hash"] = hash_;
    write(name, doc.dump(2) + "\n");
  }

  // CSV with '#'-prefixed metadata lines before the column header.
  class Csv {
  public:
    explicit Csv(const std::string& hash) { out_ << "# config_hash=" << hash << "\n"; }
    void meta(const std::string& key, const std::string& value) { out_ << "# " << key << "=" << value << "\n"; }
    void header(const std::vector<std::string>& cols) { row_strings(cols); }
    void row_strings(const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
      out_ << "\n";
    }
    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
  };

  Csv csv() const { return Csv(hash_); }
  const std::vector<std::string>& files() const { return files_; }

private:
  fs::path dir_;
  std::string hash_;
  std::vector<std::string> files_;
};

std::string fmt(double x) { return format_double(x); }

std::vector<std::string> site_columns(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t j = 1; j <= n; ++j) out.push_back(prefix + std::to_string(j));
  return out;
}

struct Context {
  const RunConfig& cfg;
  const RunOptions& opt;
  Output& out;
  std::vector<std::string>& warnings;
};

double noise_psd(const Context& c, std::optional<double> explicit_psd, bool& defaulted) {
  defaulted = false;
  if (explicit_psd) return *explicit_psd;
  if (c.cfg.noise_calibration) return c.cfg.noise_calibration->sigma2;
  defaulted = true;
  return 1.0;
}

void run_states(Context& c) {
  const auto states = find_steady_states(c.cfg.model, {}, c.cfg.solver);
  json doc;
  doc["n_states"] = states.size();
  doc["states"] = json::array();
  for (const auto& s : states) doc["states"].push_back(state_json(s));
  c.out.write_json("states.json", doc);
}

void run_sweep(Context& c) {
  if (!c.cfg.sweep) throw std::invalid_argument("sweep subcommand needs a sweep block");
  const auto grid = c.cfg.sweep->grid.values();
  const SweepResult res = bifurcation_sweep(c.cfg.model, c.cfg.sweep->axis, grid, c.cfg.solver);
  for (const auto& w : res.warnings) c.warnings.push_back(w);
  const std::size_t n = c.cfg.model.n_sites;
  auto csv = c.out.csv();
  std::string bif;
  for (std::size_t k = 0; k < res.bifurcations.size(); ++k) bif += (k ? ";" : "") + fmt(res.bifurcations[k]);
  csv.meta("bifurcations", bif);
  std::vector<std::string> cols{"sweep_value", "branch_id", "stable", "marginal", "symmetry", "match_distance"};
  for (std::size_t j = 1; j <= n; ++j) {
    cols.push_back("re_alpha" + std::to_string(j));
    cols.push_back("im_alpha" + std::to_string(j));
  }
  for (std::size_t k = 1; k <= 2 * n; ++k) {
    cols.push_back("re_mu" + std::to_string(k));
    cols.push_back("im_mu" + std::to_string(k));
  }
  csv.header(cols);
  for (const auto& pt : res.points) {
    for (std::size_t s = 0; s < pt.states.size(); ++s) {
      const SteadyState& st = pt.states[s];
      std::vector<std::string> row{fmt(pt.sweep_value), std::to_string(pt.branch_ids[s]), st.stable ? "1" : "0",
                                   st.marginal ? "1" : "0", std::string(to_string(st.symmetry)), fmt(pt.match_distances[s])};
      for (Eigen::Index j = 0; j < st.amplitudes.size(); ++j) {
        row.push_back(fmt(st.amplitudes(j).real()));
        row.push_back(fmt(st.amplitudes(j).imag()));
      }
      for (Eigen::Index k = 0; k < st.exponents.size(); ++k) {
        row.push_back(fmt(st.exponents(k).real()));
        row.push_back(fmt(st.exponents(k).imag()));
      }
      csv.row_strings(row);
    }
  }
  c.out.write("branches.csv", csv.str());
}

void run_phase_diagram(Context& c) {
  if (!c.cfg.phase_diagram) throw std::invalid_argument("phase-diagram subcommand needs a phase_diagram block");
  const auto deltas = c.cfg.phase_diagram->detuning.values();
  const auto drives = c.cfg.phase_diagram->drive.values();
  const PhaseDiagram pd = phase_diagram(c.cfg.model, deltas, drives, c.cfg.solver, c.opt.threads);
  auto csv = c.out.csv();
  csv.header({"delta", "drive", "color_code", "color_name", "origin_stable", "stable_labels", "flagged"});
  for (const auto& cell : pd.cells) {
    std::string labels;
    for (std::size_t k = 0; k < cell.stable_labels.size(); ++k)
      labels += (k ? "+" : "") + std::string(to_string(cell.stable_labels[k]));
    csv.row_strings({fmt(cell.delta), fmt(cell.drive), std::to_string(cell.color_code), phase_color_name(cell.color_code),
                     cell.origin_stable ? "1" : "0", labels, cell.flagged ? "1" : "0"});
    if (cell.flagged)
      c.warnings.push_back("no stable state at delta=" + fmt(cell.delta) + ", drive=" + fmt(cell.drive));
  }
  c.out.write("phase_diagram.csv", csv.str());
}

SteadyState pick_state(const Context& c) {
  const auto states = find_steady_states(c.cfg.model, {}, c.cfg.solver);
  const std::string& sel = c.cfg.psd.state;
  if (sel == "origin") return states.front().symmetry == Symmetry::Zero ? states.front() : describe_state(c.cfg.model, VectorXcd::Zero(static_cast<Eigen::Index>(c.cfg.model.n_sites)), c.cfg.solver);
  const std::size_t k = std::stoul(sel.substr(7));
  std::size_t seen = 0;
  for (const auto& s : states)
    if (s.stable && seen++ == k) return s;
  throw std::invalid_argument("psd.state " + sel + " does not exist (" + std::to_string(seen) + " stable states)");
}

void run_psd(Context& c) {
  const SteadyState st = pick_state(c);
  bool defaulted = false;
  const double sigma2 = noise_psd(c, c.cfg.psd.noise_psd, defaulted);
  if (defaulted) c.warnings.push_back("no noise PSD configured; spectra use sigma^2 = 1");
  std::optional<VectorXd> grid;
  if (c.cfg.psd.omega_max > 0.0)
    grid = VectorXd::LinSpaced(static_cast<Eigen::Index>(c.cfg.psd.points), 0.0, c.cfg.psd.omega_max);
  else
    grid = default_frequency_grid(st.exponents, c.cfg.model.damping.maxCoeff(), static_cast<int>(c.cfg.psd.points));
  const FluctuationSpectrum fs = fluctuation_spectrum(c.cfg.model, st.amplitudes, sigma2, grid);
  const std::size_t n = c.cfg.model.n_sites;
  auto csv = c.out.csv();
  csv.meta("method", std::string(to_string(fs.method)));
  csv.meta("sigma2", fmt(sigma2));
  csv.meta("state_symmetry", std::string(to_string(st.symmetry)));
  std::string mus;
  for (Eigen::Index k = 0; k < fs.exponents.size(); ++k)
    mus += (k ? ";" : "") + fmt(fs.exponents(k).real()) + (fs.exponents(k).imag() < 0 ? "" : "+") + fmt(fs.exponents(k).imag()) + "i";
  csv.meta("exponents", mus);
  std::vector<std::string> cols{"omega"};
  for (const auto& s : site_columns("psd_site", n)) cols.push_back(s);
  const bool sa = n == 2;
  if (sa) {
    for (const char* s : {"psd_s", "psd_a", "psd_s_transfer", "psd_a_transfer"}) cols.push_back(s);
  }
  csv.header(cols);
  for (Eigen::Index k = 0; k < fs.freq_grid.size(); ++k) {
    std::vector<std::string> row{fmt(fs.freq_grid(k))};
    for (const auto& p : fs.psd_site) row.push_back(fmt(p(k)));
    if (sa) {
      row.push_back(fmt(fs.psd_s(k)));
      row.push_back(fmt(fs.psd_a(k)));
      row.push_back(fmt(fs.psd_s_transfer(k)));
      row.push_back(fmt(fs.psd_a_transfer(k)));
    }
    csv.row_strings(row);
  }
  c.out.write("psd.csv", csv.str());
}

void run_probe(Context& c) {
  if (!c.cfg.probe) throw std::invalid_argument("probe subcommand needs a probe block");
  const ProbeTask& t = *c.cfg.probe;
  bool defaulted = false;
  NoiseSpec noise;
  noise.psd = noise_psd(c, t.noise_psd, defaulted);
  noise.seed = c.cfg.seed;
  if (defaulted) c.warnings.push_back("no noise PSD configured; probe uses sigma^2 = 1");
  const auto grid = t.sweep.grid.values();
  const ProbeResult res = pump_noisy_probe(c.cfg.model, noise, t.sweep.axis, grid, t.options);
  for (const auto& w : res.warnings) c.warnings.push_back(w);
  const std::size_t n = c.cfg.model.n_sites;
  auto csv = c.out.csv();
  csv.meta("noise_psd", fmt(noise.psd));
  csv.meta("seed", std::to_string(noise.seed));
  std::vector<std::string> cols{"sweep_value", "jump_flag", "attractor", "attractor_distance", "fluctuation_rms"};
  for (const auto& s : site_columns("abs_mean_alpha", n)) cols.push_back(s);
  cols.push_back("omega");
  for (const auto& s : site_columns("psd_site", n)) cols.push_back(s);
  if (n == 2) {
    cols.push_back("psd_s");
    cols.push_back("psd_a");
  }
  csv.header(cols);
  for (const auto& pt : res.points) {
    std::vector<std::string> fixed{fmt(pt.sweep_value), pt.jump_flag ? "1" : "0",
                                   std::string(to_string(pt.attractor.symmetry)) + (pt.attractor.stable ? "" : "-unstable"),
                                   fmt(pt.attractor_distance), fmt(pt.fluctuation_rms)};
    for (Eigen::Index j = 0; j < pt.mean_amplitudes.size(); ++j) fixed.push_back(fmt(std::abs(pt.mean_amplitudes(j))));
    for (Eigen::Index k = 0; k < pt.omega.size(); ++k) {
      std::vector<std::string> row = fixed;
      row.push_back(fmt(pt.omega(k)));
      for (const auto& p : pt.psd_site) row.push_back(fmt(p(k)));
      if (n == 2) {
        row.push_back(fmt(pt.psd_s(k)));
        row.push_back(fmt(pt.psd_a(k)));
      }
      csv.row_strings(row);
    }
  }
  c.out.write("probe.csv", csv.str());
}

bool run_lindblad(Context& c) {
  const LindbladTask& t = c.cfg.lindblad;
  const NetworkParams& p = c.cfg.model;
  quantum::SteadyStateOptions sopt;
  sopt.direct_dim_limit = t.direct_dim_limit;
  quantum::ConvergedSteadyState res;
  if (t.n_max) {
    res.state = quantum::steady_state(quantum::build_liouvillian(p, {p.n_sites, *t.n_max}), sopt);
    res.cutoffs = {*t.n_max};
    res.converged = res.state.leakage < 1e-6;
  } else {
    res = quantum::converged_steady_state(p, t.n_max_limit, std::nullopt, t.rel_tol, sopt);
  }
  const auto l = quantum::build_liouvillian(p, res.state.space);
  for (const auto& w : l.warnings) c.warnings.push_back(w);
  if (!res.converged)
    c.warnings.push_back("Fock cutoff not converged (leakage " + fmt(res.state.leakage) + ", photon change " +
                         fmt(res.photon_change) + ")");

  const auto mf = find_steady_states(p, {}, c.cfg.solver);
  double amax = 0.0;
  json stable = json::array();
  for (const auto& s : mf) {
    if (!s.stable) continue;
    amax = std::max(amax, s.amplitudes.cwiseAbs().maxCoeff());
    json pt = json::array();
    for (Eigen::Index j = 0; j < s.amplitudes.size(); ++j) pt.push_back(std::numbers::sqrt2 * s.amplitudes(j).real());
    stable.push_back(json{{"x", pt}, {"symmetry", std::string(to_string(s.symmetry))}});
  }

  json doc;
  const auto& st = res.state;
  doc["n_max"] = st.space.n_max;
  doc["cutoffs"] = res.cutoffs;
  doc["converged"] = res.converged;
  doc["photon_change"] = res.photon_change;
  doc["method"] = st.method;
  doc["mean_photons"] = vector_json(st.mean_photons);
  doc["mean_amplitudes"] = vector_json(st.mean_amplitudes);
  doc["leakage"] = st.leakage;
  doc["residual"] = st.residual;
  doc["trace_error"] = st.trace_error;
  doc["hermiticity_error"] = st.hermiticity_error;
  doc["min_eigenvalue"] = std::isnan(st.min_eigenvalue) ? json(nullptr) : json(st.min_eigenvalue);
  doc["parity_commutator"] = st.parity_commutator;
  doc["stable_mean_field_points"] = stable;

  if (p.n_sites <= 2) {
    const double extent = t.grid_extent > 0.0 ? t.grid_extent : std::numbers::sqrt2 * amax + 4.0;
    const VectorXd axis = VectorXd::LinSpaced(static_cast<Eigen::Index>(t.grid_points), -extent, extent);
    const auto dist = quantum::quadrature_distribution(st, axis);
    json spots = json::array();
    for (const auto& h : quantum::local_maxima(dist)) spots.push_back(json{{"x", h.x}, {"p", h.p}});
    doc["hot_spots"] = spots;
    doc["grid"] = json{{"start", -extent}, {"stop", extent}, {"points", t.grid_points}};

    auto csv = c.out.csv();
    csv.meta("grid", fmt(-extent) + "," + fmt(extent) + "," + std::to_string(t.grid_points));
    csv.meta("normalization", "unit integral; raw integral " + fmt(dist.raw_integral));
    std::vector<std::string> cols = site_columns("x", p.n_sites);
    cols.push_back("p");
    csv.header(cols);
    const auto m = axis.size();
    for (Eigen::Index idx = 0; idx < dist.p.size(); ++idx) {
      std::vector<std::string> row;
      if (p.n_sites == 2) {
        row.push_back(fmt(axis(idx / m)));
        row.push_back(fmt(axis(idx % m)));
      } else {
        row.push_back(fmt(axis(idx)));
      }
      row.push_back(fmt(dist.p(idx)));
      csv.row_strings(row);
    }
    c.out.write_json("rho_observables.json", doc);
    c.out.write("quad_dist.csv", csv.str());
  } else {
    c.warnings.push_back("quadrature distribution skipped for more than two sites");
    c.out.write_json("rho_observables.json", doc);
  }
  return res.converged;
}

void run_labframe(Context& c) {
  if (!c.cfg.labframe) throw std::invalid_argument("labframe subcommand needs a labframe block");
  const LabTask& t = *c.cfg.labframe;
  const LabParams lab = lab_params(c.cfg.model, t.hbar);
  const Eigen::Index n = lab.omega.size();
  const double dt = t.dt > 0.0 ? t.dt : 2.0 * std::numbers::pi / (80.0 * lab.omega.maxCoeff());
  const double bw = t.bandwidth > 0.0 ? t.bandwidth : lab.drive_freq / 40.0;
  VectorXd x0 = VectorXd::Constant(n, 1e-2);
  VectorXd v0 = VectorXd::Zero(n);
  if (!t.x0.empty()) x0 = Eigen::Map<const VectorXd>(t.x0.data(), n);
  if (!t.v0.empty()) v0 = Eigen::Map<const VectorXd>(t.v0.data(), n);
  const LabTrajectory tr = integrate_lab(lab, x0, v0, dt, t.duration, t.stride);
  const MatrixXcd z = demodulate(tr.x, tr.dt, tr.t0, 0.5 * lab.drive_freq, bw);
  auto csv = c.out.csv();
  csv.meta("dt", fmt(dt));
  csv.meta("bandwidth", fmt(bw));
  csv.meta("ref_freq", fmt(0.5 * lab.drive_freq));
  std::vector<std::string> cols{"t"};
  for (const auto& s : site_columns("x", static_cast<std::size_t>(n))) cols.push_back(s);
  for (const auto& s : site_columns("v", static_cast<std::size_t>(n))) cols.push_back(s);
  for (const auto& s : site_columns("u", static_cast<std::size_t>(n))) cols.push_back(s);
  for (const auto& s : site_columns("v_quad", static_cast<std::size_t>(n))) cols.push_back(s);
  csv.header(cols);
  for (Eigen::Index k = 0; k < tr.x.cols(); ++k) {
    std::vector<std::string> row{fmt(tr.t0 + tr.dt * static_cast<double>(k))};
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(fmt(tr.x(j, k)));
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(fmt(tr.v(j, k)));
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(fmt(z(j, k).real()));
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(fmt(z(j, k).imag()));
    csv.row_strings(row);
  }
  c.out.write("labframe.csv", csv.str());
}

json modes_json(const NetworkParams& p) {
  const NormalModeBasis b = normal_modes(p);
  json thresholds = json::array();
  for (Eigen::Index k = 0; k < b.eigen_detunings.size(); ++k) {
    const double gamma = p.damping.mean();
    thresholds.push_back(lobe_threshold(b.eigen_detunings(k), gamma));
  }
  const VectorXcd mu = characteristic_exponents(jacobian(p, VectorXcd::Zero(static_cast<Eigen::Index>(p.n_sites))));
  return json{{"eigen_detunings", vector_json(b.eigen_detunings)},
              {"transform", matrix_json(b.transform)},
              {"mode_drives", matrix_json(b.mode_drives)},
              {"lobe_thresholds", thresholds},
              {"origin_exponents", vector_json(mu)}};
}

void run_normal_modes(Context& c) {
  json doc = modes_json(c.cfg.model);
  if (c.cfg.sweep) {
    json sweep = json::array();
    for (double v : c.cfg.sweep->grid.values()) {
      json e = modes_json(apply_sweep(c.cfg.model, c.cfg.sweep->axis, v));
      e["sweep_value"] = v;
      sweep.push_back(e);
    }
    doc["sweep"] = sweep;
  }
  c.out.write_json("modes.json", doc);
}

}  // namespace

int run(const RunOptions& opt) {
  const std::string started = utc_now();
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), opt.subcommand) == names.end()) {
    if (!opt.quiet) std::cerr << "unknown subcommand: " << opt.subcommand << "\n";
    return kExitConfig;
  }
  RunConfig cfg;
  try {
    cfg = resolve_config(opt.config_path, opt.overrides, opt.seed);
  } catch (const ConfigError& e) {
    if (!opt.quiet) std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  Output out(opt.out_dir, cfg.hash);
  std::vector<std::string> warnings;
  Context ctx{cfg, opt, out, warnings};
  int code = kExitOk;
  std::string error;
  try {
    const std::string& s = opt.subcommand;
    if (s == "states") run_states(ctx);
    else if (s == "sweep") run_sweep(ctx);
    else if (s == "phase-diagram") run_phase_diagram(ctx);
    else if (s == "psd") run_psd(ctx);
    else if (s == "probe") run_probe(ctx);
    else if (s == "lindblad") code = run_lindblad(ctx) ? kExitOk : kExitNumerical;
    else if (s == "labframe") run_labframe(ctx);
    else if (s == "normal-modes") run_normal_modes(ctx);
  } catch (const NumericalError& e) {
    code = kExitNumerical;
    error = e.what();
  } catch (const std::invalid_argument& e) {
    code = kExitConfig;
    error = e.what();
  } catch (const std::out_of_range& e) {
    code = kExitConfig;
    error = e.what();
  }

  json log;
  log["subcommand"] = opt.subcommand;
  log["config_path"] = opt.config_path;
  log["config_hash"] = cfg.hash;
  log["resolved_config"] = cfg.resolved;
  log["threads"] = opt.threads;
  log["started"] = started;
  log["finished"] = utc_now();
  log["exit_code"] = code;
  log["warnings"] = warnings;
  log["files"] = out.files();
  if (!error.empty()) log["error"] = error;
  fs::create_directories(opt.out_dir);
  std::ofstream(fs::path(opt.out_dir) / "run_log.json") << log.dump(2) << "\n";

  if (!opt.quiet) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (!error.empty()) std::cerr << "error: " << error << "\n";
  }
  return code;
}

}  // namespace kpo
