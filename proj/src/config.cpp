#include "kpo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace kpo {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string out = "invalid config:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

// Walks the document, collecting every problem instead of stopping at the first.
class Reader {
public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) fail(join_path(path, it.key()), "unknown key");
  }

  static std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const json* object(const json& parent, const std::string& path, const std::string& key, bool required) {
    const std::string p = join_path(path, key);
    if (!parent.contains(key)) {
      if (required) fail(p, "missing");
      return nullptr;
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
      fail(p, "must be an object");
      return nullptr;
    }
    return &v;
  }

  std::optional<double> number(const json& parent, const std::string& path, const std::string& key, bool required) {
    const std::string p = join_path(path, key);
    if (!parent.contains(key)) {
      if (required) fail(p, "missing");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_number()) {
      fail(p, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      fail(p, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::uint64_t> count(const json& parent, const std::string& path, const std::string& key, bool required) {
    const std::string p = join_path(path, key);
    if (!parent.contains(key)) {
      if (required) fail(p, "missing");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned())) {
      fail(p, "must be a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const json& parent, const std::string& path, const std::string& key, bool required) {
    const std::string p = join_path(path, key);
    if (!parent.contains(key)) {
      if (required) fail(p, "missing");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_string()) {
      fail(p, "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<bool> boolean(const json& parent, const std::string& path, const std::string& key) {
    if (!parent.contains(key)) return std::nullopt;
    const json& v = parent.at(key);
    if (!v.is_boolean()) {
      fail(join_path(path, key), "must be a boolean");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  // {"value": x | [x...] | [[...]], "unit": "Hz" | "rad_s" | "V_units"}.
  std::optional<json> quantity(const json& parent, const std::string& path, const std::string& key, bool required,
                               double& factor, bool topology = false) {
    const json* q = object(parent, path, key, required);
    if (!q) return std::nullopt;
    const std::string p = join_path(path, key);
    if (topology) check_keys(*q, p, {"value", "unit", "topology"});
    else check_keys(*q, p, {"value", "unit"});
    const auto unit = string(*q, p, "unit", true);
    factor = 1.0;
    if (unit) {
      if (*unit == "Hz") factor = 2.0 * std::numbers::pi;
      else if (*unit != "rad_s" && *unit != "V_units") fail(join_path(p, "unit"), "must be Hz, rad_s or V_units");
    }
    if (!q->contains("value")) {
      fail(join_path(p, "value"), "missing");
      return std::nullopt;
    }
    return q->at("value");
  }

  std::optional<VectorXd> per_site(const json& parent, const std::string& path, const std::string& key, bool required,
                                   std::size_t n) {
    double factor = 1.0;
    const auto v = quantity(parent, path, key, required, factor);
    if (!v) return std::nullopt;
    const std::string p = join_path(join_path(path, key), "value");
    VectorXd out(static_cast<Eigen::Index>(n));
    if (v->is_number()) {
      out.setConstant(v->get<double>() * factor);
    } else if (v->is_array() && v->size() == n) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!(*v)[k].is_number()) {
          fail(p, "entries must be numbers");
          return std::nullopt;
        }
        out(static_cast<Eigen::Index>(k)) = (*v)[k].get<double>() * factor;
      }
    } else {
      fail(p, "must be a number or an array of n_sites numbers");
      return std::nullopt;
    }
    if (!out.allFinite()) {
      fail(p, "must be finite");
      return std::nullopt;
    }
    return out;
  }

  std::optional<double> scalar_quantity(const json& parent, const std::string& path, const std::string& key,
                                        bool required) {
    double factor = 1.0;
    const auto v = quantity(parent, path, key, required, factor);
    if (!v) return std::nullopt;
    if (!v->is_number() || !std::isfinite(v->get<double>())) {
      fail(join_path(join_path(path, key), "value"), "must be a finite number");
      return std::nullopt;
    }
    return v->get<double>() * factor;
  }

  std::optional<Grid> grid(const json& parent, const std::string& path, const std::string& key, bool required,
                           bool allow_unit) {
    const json* g = object(parent, path, key, required);
    if (!g) return std::nullopt;
    const std::string p = join_path(path, key);
    if (allow_unit) check_keys(*g, p, {"start", "stop", "points", "unit"});
    else check_keys(*g, p, {"start", "stop", "points"});
    Grid out;
    const auto a = number(*g, p, "start", true);
    const auto b = number(*g, p, "stop", true);
    const auto n = count(*g, p, "points", true);
    double factor = 1.0;
    if (allow_unit && g->contains("unit")) {
      const auto unit = string(*g, p, "unit", true);
      if (unit && *unit == "Hz") factor = 2.0 * std::numbers::pi;
      else if (unit && *unit != "rad_s" && *unit != "V_units") fail(join_path(p, "unit"), "must be Hz, rad_s or V_units");
    }
    if (!a || !b || !n) return std::nullopt;
    if (*n < 1) {
      fail(join_path(p, "points"), "must be at least 1");
      return std::nullopt;
    }
    if (*n > 1 && *a == *b) {
      fail(p, "start and stop must differ when points > 1");
      return std::nullopt;
    }
    out.start = *a * factor;
    out.stop = *b * factor;
    out.points = static_cast<std::size_t>(*n);
    return out;
  }

  std::optional<SweepTask> sweep(const json& parent, const std::string& path, const std::string& key, bool required) {
    const json* s = object(parent, path, key, required);
    if (!s) return std::nullopt;
    const std::string p = join_path(path, key);
    check_keys(*s, p, {"axis", "grid"});
    SweepTask task;
    const auto axis = string(*s, p, "axis", true);
    bool hz_axis = false;
    if (axis) {
      if (*axis == "detuning") task.axis = SweepAxis::MeanDetuning;
      else if (*axis == "drive") task.axis = SweepAxis::Drive;
      else if (*axis == "half_drive_frequency_hz") {
        task.axis = SweepAxis::HalfDriveFrequencyHz;
        hz_axis = true;
      } else {
        fail(join_path(p, "axis"), "must be detuning, drive or half_drive_frequency_hz");
      }
    }
    const auto g = grid(*s, p, "grid", true, !hz_axis);
    if (!axis || !g) return std::nullopt;
    task.grid = *g;
    return task;
  }
};

VectorXd linspace(const Grid& g) {
  if (g.points == 1) return VectorXd::Constant(1, g.start);
  return VectorXd::LinSpaced(static_cast<Eigen::Index>(g.points), g.start, g.stop);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors) : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

std::vector<double> Grid::values() const {
  const VectorXd v = linspace(*this);
  return {v.data(), v.data() + v.size()};
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  std::vector<std::string> errors;
  for (const auto& raw : overrides) {
    std::string arg = raw;
    if (arg.rfind("--", 0) == 0) arg = arg.substr(2);
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0) {
      errors.push_back(raw + ": override must look like --path.to.key=value");
      continue;
    }
    const std::string path = arg.substr(0, eq);
    const std::string text = arg.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    bool ok = true;
    for (std::size_t k = 0; k < parts.size() && ok; ++k) {
      const std::string& key = parts[k];
      const bool last = k + 1 == parts.size();
      if (node->is_array()) {
        char* end = nullptr;
        const unsigned long idx = std::strtoul(key.c_str(), &end, 10);
        if (key.empty() || *end != '\0' || idx >= node->size()) {
          errors.push_back(raw + ": bad array index '" + key + "'");
          ok = false;
          break;
        }
        node = &(*node)[idx];
      } else {
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) {
          errors.push_back(raw + ": '" + key + "' descends into a non-object");
          ok = false;
          break;
        }
        node = &(*node)[key];
      }
      if (last) *node = value;
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
}

RunConfig parse_config(const json& doc) {
  Reader r;
  RunConfig cfg;
  if (!doc.is_object()) throw ConfigError({"<root>: must be a JSON object"});
  r.check_keys(doc, "", {"schema_version", "seed", "model", "calibration", "solver", "sweep", "phase_diagram", "psd",
                         "probe", "lindblad", "labframe"});

  if (!doc.contains("schema_version")) {
    r.fail("schema_version", "missing");
  } else if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion) {
    r.fail("schema_version", "must equal " + std::to_string(kSchemaVersion));
  }
  if (const auto s = r.count(doc, "", "seed", false)) cfg.seed = *s;

  // Calibration first: it can supply the drive.
  if (const json* c = r.object(doc, "", "calibration", false)) {
    r.check_keys(*c, "calibration", {"u_drive", "u_threshold", "gamma0", "noise_psd_in", "coupling_const"});
    CalibrationInputs cal;
    if (const auto v = r.number(*c, "calibration", "u_drive", true)) cal.u_drive = *v;
    if (const auto v = r.number(*c, "calibration", "u_threshold", true)) cal.u_threshold = *v;
    if (const auto v = r.scalar_quantity(*c, "calibration", "gamma0", true)) cal.gamma0 = *v;
    if (const auto v = r.number(*c, "calibration", "noise_psd_in", false)) cal.noise_psd_in = *v;
    if (const auto v = r.number(*c, "calibration", "coupling_const", false)) cal.coupling_const = *v;
    try {
      cal.validate();
      cfg.calibration = cal;
    } catch (const std::invalid_argument& e) {
      r.fail("calibration", e.what());
    }
  }

  if (const json* m = r.object(doc, "", "model", true)) {
    r.check_keys(*m, "model", {"n_sites", "omega", "kerr", "drive", "drive_freq", "detuning", "coupling", "damping"});
    const auto n = r.count(*m, "model", "n_sites", true);
    if (n && *n == 0) r.fail("model.n_sites", "must be at least 1");
    if (n && *n > 0) {
      const std::size_t ns = *n;
      NetworkParams& p = cfg.model;
      p.n_sites = ns;
      const auto omega = r.per_site(*m, "model", "omega", true, ns);
      const auto kerr = r.per_site(*m, "model", "kerr", true, ns);
      const auto damping = r.per_site(*m, "model", "damping", true, ns);
      auto drive = r.per_site(*m, "model", "drive", !cfg.calibration, ns);
      if (!drive && cfg.calibration) drive = VectorXd::Constant(static_cast<Eigen::Index>(ns), calibrate_drive(*cfg.calibration));
      p.coupling = MatrixXd::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
      double factor = 1.0;
      if (const auto c = r.quantity(*m, "model", "coupling", false, factor, true)) {
        const json& cobj = m->at("coupling");
        const std::string topo = cobj.contains("topology") && cobj["topology"].is_string() ? cobj["topology"].get<std::string>() : "";
        if (topo == "chain" || topo == "all_to_all") {
          if (!c->is_number()) r.fail("model.coupling.value", "must be a number for topology " + topo);
          else p.coupling = topo == "chain" ? chain_coupling(ns, c->get<double>() * factor) : all_to_all_coupling(ns, c->get<double>() * factor);
        } else if (topo == "matrix") {
          bool ok = c->is_array() && c->size() == ns;
          for (std::size_t i = 0; ok && i < ns; ++i) {
            ok = (*c)[i].is_array() && (*c)[i].size() == ns;
            for (std::size_t j = 0; ok && j < ns; ++j) {
              ok = (*c)[i][j].is_number();
              if (ok) p.coupling(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*c)[i][j].get<double>() * factor;
            }
          }
          if (!ok) r.fail("model.coupling.value", "must be an n_sites x n_sites numeric matrix");
        } else {
          r.fail("model.coupling.topology", "must be chain, all_to_all or matrix");
        }
      }
      if (omega) p.omega = *omega;
      if (kerr) p.kerr = *kerr;
      if (damping) p.damping = *damping;
      if (drive) p.drive = *drive;
      const bool has_freq = m->contains("drive_freq");
      const bool has_det = m->contains("detuning");
      if (has_freq == has_det) r.fail("model", "exactly one of drive_freq and detuning must be given");
      std::optional<double> freq;
      std::optional<double> det;
      if (has_freq) freq = r.scalar_quantity(*m, "model", "drive_freq", true);
      if (has_det) det = r.scalar_quantity(*m, "model", "detuning", true);
      if (omega && kerr && damping && drive) {
        if (freq) p.drive_freq = *freq;
        if (det) p.drive_freq = 2.0 * (*det + (p.omega + p.kerr).mean());
        try {
          p.validate();
        } catch (const std::invalid_argument& e) {
          r.fail("model", e.what());
        }
      }
    }
  }

  if (cfg.calibration && r.errors.empty() && cfg.model.drive_freq > 0.0)
    cfg.noise_calibration = calibrate_noise(*cfg.calibration, cfg.model.drive_freq);

  if (const json* s = r.object(doc, "", "solver", false)) {
    r.check_keys(*s, "solver", {"random_starts", "max_iterations", "residual_tol", "merge_distance", "stability_margin",
                                "classify_tol"});
    if (const auto v = r.count(*s, "solver", "random_starts", false)) cfg.solver.random_starts = static_cast<int>(*v);
    if (const auto v = r.count(*s, "solver", "max_iterations", false)) cfg.solver.max_iterations = static_cast<int>(*v);
    if (const auto v = r.number(*s, "solver", "residual_tol", false)) cfg.solver.residual_tol = *v;
    if (const auto v = r.number(*s, "solver", "merge_distance", false)) cfg.solver.merge_distance = *v;
    if (const auto v = r.number(*s, "solver", "stability_margin", false)) cfg.solver.stability_margin = *v;
    if (const auto v = r.number(*s, "solver", "classify_tol", false)) cfg.solver.classify_tol = *v;
  }

  if (doc.contains("sweep")) cfg.sweep = r.sweep(doc, "", "sweep", true);

  if (const json* s = r.object(doc, "", "phase_diagram", false)) {
    r.check_keys(*s, "phase_diagram", {"detuning", "drive"});
    const auto d = r.grid(*s, "phase_diagram", "detuning", true, true);
    const auto g = r.grid(*s, "phase_diagram", "drive", true, true);
    if (d && g) cfg.phase_diagram = PhaseDiagramTask{*d, *g};
  }

  if (const json* s = r.object(doc, "", "psd", false)) {
    r.check_keys(*s, "psd", {"state", "points", "omega_max", "noise_psd"});
    if (const auto v = r.string(*s, "psd", "state", false)) {
      if (*v != "origin" && v->rfind("stable:", 0) != 0) r.fail("psd.state", "must be origin or stable:<k>");
      cfg.psd.state = *v;
    }
    if (const auto v = r.count(*s, "psd", "points", false)) {
      if (*v < 2) r.fail("psd.points", "must be at least 2");
      cfg.psd.points = *v;
    }
    if (const auto v = r.number(*s, "psd", "omega_max", false)) cfg.psd.omega_max = *v;
    if (const auto v = r.number(*s, "psd", "noise_psd", false)) {
      if (*v < 0.0) r.fail("psd.noise_psd", "must be nonnegative");
      cfg.psd.noise_psd = *v;
    }
  }

  if (const json* s = r.object(doc, "", "probe", false)) {
    r.check_keys(*s, "probe", {"noise_psd", "sweep", "settle_time", "record_time", "dt", "stride", "segment_fraction",
                               "overlap", "window"});
    ProbeTask t;
    if (const auto v = r.number(*s, "probe", "noise_psd", false)) t.noise_psd = *v;
    const auto sw = r.sweep(*s, "probe", "sweep", true);
    if (const auto v = r.number(*s, "probe", "settle_time", true)) t.options.settle_time = *v;
    if (const auto v = r.number(*s, "probe", "record_time", true)) t.options.record_time = *v;
    if (const auto v = r.number(*s, "probe", "dt", false)) t.options.dt = *v;
    if (const auto v = r.count(*s, "probe", "stride", false)) t.options.stride = std::max<std::uint64_t>(1, *v);
    if (const auto v = r.number(*s, "probe", "segment_fraction", false)) t.options.segment_fraction = *v;
    if (const auto v = r.number(*s, "probe", "overlap", false)) t.options.overlap = *v;
    if (const auto v = r.string(*s, "probe", "window", false)) {
      try {
        t.options.window = parse_window(*v);
      } catch (const std::invalid_argument& e) {
        r.fail("probe.window", e.what());
      }
    }
    if (!t.noise_psd && !cfg.noise_calibration && !cfg.calibration)
      r.fail("probe.noise_psd", "missing (and no calibration block to derive it)");
    t.options.solver = cfg.solver;
    if (sw) {
      t.sweep = *sw;
      cfg.probe = t;
    }
  }

  if (const json* s = r.object(doc, "", "lindblad", false)) {
    r.check_keys(*s, "lindblad", {"n_max", "n_max_limit", "rel_tol", "grid_points", "grid_extent", "direct_dim_limit"});
    if (const auto v = r.count(*s, "lindblad", "n_max", false)) {
      if (*v < 2) r.fail("lindblad.n_max", "must be at least 2");
      cfg.lindblad.n_max = *v;
    }
    if (const auto v = r.count(*s, "lindblad", "n_max_limit", false)) cfg.lindblad.n_max_limit = *v;
    if (const auto v = r.number(*s, "lindblad", "rel_tol", false)) cfg.lindblad.rel_tol = *v;
    if (const auto v = r.count(*s, "lindblad", "grid_points", false)) {
      if (*v < 3) r.fail("lindblad.grid_points", "must be at least 3");
      cfg.lindblad.grid_points = *v;
    }
    if (const auto v = r.number(*s, "lindblad", "grid_extent", false)) cfg.lindblad.grid_extent = *v;
    if (const auto v = r.count(*s, "lindblad", "direct_dim_limit", false)) cfg.lindblad.direct_dim_limit = *v;
  }

  if (const json* s = r.object(doc, "", "labframe", false)) {
    r.check_keys(*s, "labframe", {"dt", "duration", "bandwidth", "stride", "hbar", "x0", "v0"});
    LabTask t;
    if (const auto v = r.number(*s, "labframe", "dt", false)) t.dt = *v;
    if (const auto v = r.number(*s, "labframe", "duration", true)) t.duration = *v;
    if (const auto v = r.number(*s, "labframe", "bandwidth", false)) t.bandwidth = *v;
    if (const auto v = r.count(*s, "labframe", "stride", false)) t.stride = std::max<std::uint64_t>(1, *v);
    if (const auto v = r.number(*s, "labframe", "hbar", false)) t.hbar = *v;
    for (const char* key : {"x0", "v0"}) {
      if (!s->contains(key)) continue;
      const json& a = s->at(key);
      std::vector<double>& dst = std::string(key) == "x0" ? t.x0 : t.v0;
      if (!a.is_array() || a.size() != cfg.model.n_sites) {
        r.fail(std::string("labframe.") + key, "must be an array of n_sites numbers");
        continue;
      }
      for (const auto& e : a) {
        if (!e.is_number()) {
          r.fail(std::string("labframe.") + key, "entries must be numbers");
          break;
        }
        dst.push_back(e.get<double>());
      }
    }
    cfg.labframe = t;
  }

  if (!r.errors.empty()) throw ConfigError(r.errors);
  cfg.resolved = doc;
  cfg.hash = config_hash(doc);
  return cfg;
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open config file"});
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError({path + ": not valid JSON"});
  apply_overrides(doc, overrides);
  if (seed) doc["seed"] = *seed;
  return parse_config(doc);
}

}  // namespace kpo
