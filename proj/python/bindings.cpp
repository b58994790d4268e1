#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crnscope/pipeline.hpp"
#include "crnscope/report.hpp"

namespace py = pybind11;
using namespace crnscope;

namespace {

py::object to_py(const nlohmann::json& j) {
  // no static cache: its destructor would run after the interpreter is gone
  return py::module_::import("json").attr("loads")(emit_canonical(j));
}

RunConfig make_config(double radius, std::uint64_t seed, double t_end, double tol_ode, double eps) {
  RunConfig cfg;
  cfg.radius = radius;
  cfg.seed = seed;
  cfg.t_end = t_end;
  cfg.ode.abs_tol = cfg.ode.rel_tol = tol_ode;
  cfg.eps = eps;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "crnscope core";
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DecompositionFormatError>(m, "DecompositionFormatError", PyExc_ValueError);

  py::class_<MassActionSystem>(m, "Network")
      .def_property_readonly("species", &MassActionSystem::species)
      .def_property_readonly("num_species", &MassActionSystem::num_species)
      .def_property_readonly("num_reactions", &MassActionSystem::num_reactions)
      .def_property_readonly("rates",
                             [](const MassActionSystem& mas) {
                               std::vector<double> k;
                               for (const auto& r : mas.reactions()) k.push_back(r.k);
                               return k;
                             })
      .def("reaction_text",
           [](const MassActionSystem& mas, std::size_t i) { return format_reaction(mas.reaction(i), mas.species()); })
      .def("ode_rhs", [](const MassActionSystem& mas, std::vector<double> x) { return ode_rhs(mas, x); })
      .def("to_text", [](const MassActionSystem& mas) { return print_network(mas); })
      .def("fingerprint", [](const MassActionSystem& mas) { return network_fingerprint(mas); })
      .def("__repr__", [](const MassActionSystem& mas) {
        return "<Network " + std::to_string(mas.num_species()) + " species, " + std::to_string(mas.num_reactions()) +
               " reactions>";
      });

  py::class_<LyapunovCertificate>(m, "Certificate")
      .def_property_readonly("kind", [](const LyapunovCertificate& c) { return to_string(c.kind); })
      .def_property_readonly("theorem", [](const LyapunovCertificate& c) { return c.theorem; })
      .def_property_readonly("x_star", [](const LyapunovCertificate& c) { return c.x_star; })
      .def("evaluate", [](const LyapunovCertificate& c, std::vector<double> x) { return c.evaluate(x); })
      .def("gradient", [](const LyapunovCertificate& c, std::vector<double> x) { return c.gradient(x); })
      .def("fdot", [](const LyapunovCertificate& c, const MassActionSystem& mas,
                      std::vector<double> x) { return dissipation_check(c, mas, x); })
      .def("to_json", [](const LyapunovCertificate& c) { return emit_canonical(nlohmann::json(c)); });

  m.def("parse_network", [](const std::string& text) { return parse_network(text).network; }, py::arg("text"));
  m.def("load_network", [](const std::string& path) { return parse_network(read_file(path)).network; },
        py::arg("path"));
  m.def("declared_equilibrium", [](const std::string& text) { return parse_network(text).equilibrium_guess; },
        py::arg("text"));
  m.def("certificate_from_json",
        [](const std::string& text) { return certificate_from_json(nlohmann::json::parse(text)); }, py::arg("text"));

  m.def("analyze", [](const MassActionSystem& mas) { return to_py(structure_json(mas)); }, py::arg("network"));

  m.def(
      "find_equilibrium",
      [](const MassActionSystem& mas, std::vector<double> guess, std::optional<std::vector<double>> levels) {
        return find_equilibrium(mas, guess, levels).x_star;
      },
      py::arg("network"), py::arg("guess"), py::arg("levels") = py::none());

  m.def(
      "balance",
      [](const MassActionSystem& mas, std::vector<double> x) {
        return to_py(nlohmann::json(certify_balance(mas, x)));
      },
      py::arg("network"), py::arg("x"));

  m.def(
      "certify",
      [](const MassActionSystem& mas, std::vector<double> x_star, std::optional<std::string> decomposition,
         double radius, std::uint64_t seed) {
        std::optional<DecompositionDocument> dcmp;
        if (decomposition) dcmp = parse_decomposition(*decomposition, mas, true);
        const auto cfg = make_config(radius, seed, 50.0, 1e-9, 1e-4);
        auto out = certify(mas, x_star, dcmp, cfg);
        return py::make_tuple(to_py(certify_json(mas, out)), out.certificate ? py::cast(*out.certificate) : py::none());
      },
      py::arg("network"), py::arg("x_star"), py::arg("decomposition") = py::none(), py::arg("radius") = 0.1,
      py::arg("seed") = 1);

  m.def(
      "decompose",
      [](const MassActionSystem& mas, std::vector<double> x_star) {
        std::vector<std::string> out;
        for (const auto& d : decompose(mas, x_star, RunConfig{})) out.push_back(print_decomposition(d.document(), mas));
        return out;
      },
      py::arg("network"), py::arg("x_star"));

  m.def(
      "simulate",
      [](const MassActionSystem& mas, std::vector<double> x0, double t_end, double tol,
         const LyapunovCertificate* cert) {
        IntegrateOptions opts;
        opts.abs_tol = opts.rel_tol = tol;
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = integrate(mas, x0, t_end, opts, cert);
        }
        py::dict d;
        d["times"] = t.times;
        d["states"] = t.states;
        d["halted"] = t.halted;
        d["conservation_drift"] = t.conservation_drift;
        if (t.lyapunov_values) d["lyapunov"] = *t.lyapunov_values;
        d["csv"] = trajectory_csv(t);
        return d;
      },
      py::arg("network"), py::arg("x0"), py::arg("t_end") = 50.0, py::arg("tol") = 1e-9,
      py::arg("certificate") = nullptr);

  m.def(
      "sample_perturbations",
      [](const MassActionSystem& mas, std::vector<double> x_star, double radius, std::size_t count,
         std::uint64_t seed) { return sample_perturbations(x_star, stoichiometric_basis(mas), radius, count, seed); },
      py::arg("network"), py::arg("x_star"), py::arg("radius"), py::arg("count"), py::arg("seed") = 1);
}
