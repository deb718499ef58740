#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kpo/config.hpp"
#include "kpo/fluctuations.hpp"
#include "kpo/meanfield.hpp"
#include "kpo/model.hpp"
#include "kpo/runner.hpp"

namespace py = pybind11;
using namespace kpo;

PYBIND11_MODULE(_kpo, m) {
  m.doc() = "Coupled Kerr parametric oscillator networks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<NetworkParams>(m, "NetworkParams")
      .def(py::init<>())
      .def_readwrite("n_sites", &NetworkParams::n_sites)
      .def_readwrite("omega", &NetworkParams::omega)
      .def_readwrite("kerr", &NetworkParams::kerr)
      .def_readwrite("drive", &NetworkParams::drive)
      .def_readwrite("drive_freq", &NetworkParams::drive_freq)
      .def_readwrite("coupling", &NetworkParams::coupling)
      .def_readwrite("damping", &NetworkParams::damping)
      .def("validate", &NetworkParams::validate)
      .def("detunings", &NetworkParams::detunings)
      .def("with_mean_detuning", &NetworkParams::with_mean_detuning, py::arg("delta"))
      .def("with_drive", &NetworkParams::with_drive, py::arg("g"))
      .def_static("identical", &NetworkParams::identical, py::arg("n"), py::arg("delta"), py::arg("kerr"),
                  py::arg("drive"), py::arg("coupling"), py::arg("damping"));

  m.def("chain_coupling", &chain_coupling, py::arg("n"), py::arg("j"));
  m.def("all_to_all_coupling", &all_to_all_coupling, py::arg("n"), py::arg("j"));
  m.def("lobe_threshold", &lobe_threshold, py::arg("eigen_detuning"), py::arg("damping"));

  py::class_<NormalModeBasis>(m, "NormalModeBasis")
      .def_readonly("eigen_detunings", &NormalModeBasis::eigen_detunings)
      .def_readonly("transform", &NormalModeBasis::transform)
      .def_readonly("mode_drives", &NormalModeBasis::mode_drives);
  m.def("normal_modes", &normal_modes, py::arg("params"));

  py::class_<SteadyState>(m, "SteadyState")
      .def_readonly("amplitudes", &SteadyState::amplitudes)
      .def_readonly("stable", &SteadyState::stable)
      .def_readonly("marginal", &SteadyState::marginal)
      .def_readonly("exponents", &SteadyState::exponents)
      .def_readonly("residual", &SteadyState::residual)
      .def_property_readonly("symmetry", [](const SteadyState& s) { return std::string(to_string(s.symmetry)); })
      .def("__repr__", [](const SteadyState& s) {
        return "<SteadyState " + std::string(to_string(s.symmetry)) + (s.stable ? " stable>" : " unstable>");
      });

  m.def("find_steady_states", [](const NetworkParams& p) { return find_steady_states(p); }, py::arg("params"),
        py::call_guard<py::gil_scoped_release>());
  m.def("origin_instability_drive", &origin_instability_drive, py::arg("params"), py::arg("unstable_modes") = 1,
        py::arg("rel_tol") = 1e-13);

  py::class_<FluctuationSpectrum>(m, "FluctuationSpectrum")
      .def_readonly("exponents", &FluctuationSpectrum::exponents)
      .def_readonly("factorized", &FluctuationSpectrum::factorized)
      .def_readonly("freq_grid", &FluctuationSpectrum::freq_grid)
      .def_readonly("psd_site", &FluctuationSpectrum::psd_site)
      .def_readonly("psd_s", &FluctuationSpectrum::psd_s)
      .def_readonly("psd_a", &FluctuationSpectrum::psd_a)
      .def_property_readonly("method", [](const FluctuationSpectrum& f) { return std::string(to_string(f.method)); });
  m.def("fluctuation_spectrum", &fluctuation_spectrum, py::arg("params"), py::arg("amplitudes"), py::arg("sigma2"),
        py::arg("grid") = py::none());
  m.def("integrated_power", &integrated_power, py::arg("omega"), py::arg("psd"), py::arg("tail") = true);

  m.def(
      "load_config",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        const RunConfig cfg = resolve_config(path, overrides);
        return py::make_tuple(cfg.model, cfg.hash);
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{},
      "Returns (NetworkParams, config hash) for a run configuration file.");

  m.def("subcommands", &subcommands);
  m.def(
      "run",
      [](const std::string& subcommand, const std::string& config, const std::string& out,
         const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed, unsigned threads, bool quiet) {
        RunOptions o;
        o.subcommand = subcommand;
        o.config_path = config;
        o.out_dir = out;
        o.overrides = overrides;
        o.seed = seed;
        o.threads = threads;
        o.quiet = quiet;
        py::gil_scoped_release release;
        return run(o);
      },
      py::arg("subcommand"), py::arg("config"), py::arg("out") = ".", py::arg("overrides") = std::vector<std::string>{},
      py::arg("seed") = py::none(), py::arg("threads") = 1, py::arg("quiet") = true,
      "Runs a subcommand exactly like the kpo tool and returns its exit code.");
}
