#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "horizonsim/horizon.hpp"
#include "horizonsim/report.hpp"
#include "horizonsim/scenario.hpp"
#include "horizonsim/sim.hpp"

namespace py = pybind11;
using namespace horizonsim;

namespace {

Group group_from_list(const std::vector<ProcessId>& ids) { return Group(ids); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "simulator for fault-aware MPI session-model initialisation";

    py::class_<Group>(m, "Group")
        .def(py::init(&group_from_list), py::arg("members") = std::vector<ProcessId>{})
        .def_property_readonly("members", &Group::members)
        .def("includes", &Group::includes)
        .def("intersects", &Group::intersects)
        .def("contains", &Group::contains)
        .def("__len__", &Group::size)
        .def("__eq__", [](const Group& a, const Group& b) { return a == b; })
        .def("__repr__", [](const Group& g) { return "Group" + g.str(); });

    py::class_<Communicator>(m, "Communicator")
        .def_readonly("cid", &Communicator::cid)
        .def_readonly("group", &Communicator::group)
        .def("__repr__", [](const Communicator& c) {
            return "Communicator(#" + std::to_string(c.cid) + ", " + c.group.str() + ")";
        });

    py::class_<HorizonSet>(m, "HorizonSet")
        .def(py::init<>())
        .def("insert",
             [](HorizonSet& h, CommId cid, const Group& g) {
                 h.insert(Communicator{cid, g, CommStatus::Live});
             },
             py::arg("cid"), py::arg("group"))
        .def("covering",
             [](const HorizonSet& h, const Group& g) -> py::object {
                 auto c = h.covering(g);
                 if (!c) return py::none();
                 return py::cast(*c);
             })
        .def("evict", &HorizonSet::evict)
        .def("entry_groups", &HorizonSet::entry_groups)
        .def("__len__", &HorizonSet::size);

    m.def("group_includes", &group_includes);
    m.def("group_intersects", &group_intersects);

    m.def("validate_scenario", [](const std::string& text) {
        parse_scenario(text);
        return true;
    });
    m.def("gen_ep", [](ProcessId n, ProcessId groups_of) {
        return serialize_scenario(gen_ep_like(n, groups_of));
    });
    m.def("gen_dt", [](ProcessId n) { return serialize_scenario(gen_dt_like(n)); });

    m.def(
        "run_scenario_json",
        [](const std::string& text, const std::string& mode, std::uint64_t seed,
           std::uint64_t max_events) {
            ScenarioPlan plan = parse_scenario(text);
            FtMode m_ = mode.empty() ? plan.mode : ft_mode_from_string(mode);
            RunReport report = run_scenario(plan, m_, seed, max_events);
            return emit_report(report, ReportFormat::Machine);
        },
        py::arg("text"), py::arg("mode") = "", py::arg("seed") = 0,
        py::arg("max_events") = 1000000);

    py::register_exception<ParseError>(m, "ScenarioParseError");
    py::register_exception<InvalidScenario>(m, "InvalidScenarioError");
}
