#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "coarsekit/ball.hpp"
#include "coarsekit/catalog.hpp"
#include "coarsekit/complexes.hpp"
#include "coarsekit/ends.hpp"
#include "coarsekit/errors.hpp"
#include "coarsekit/gog.hpp"
#include "coarsekit/homology.hpp"
#include "coarsekit/tasks.hpp"

namespace py = pybind11;
using namespace coarsekit;

namespace {

py::int_ to_py(const mpz_class& z) { return py::int_(py::str(z.get_str())); }

mpz_class from_py(const py::handle& h) {
  if (!py::isinstance<py::int_>(h)) throw py::type_error("matrix entries must be integers");
  return mpz_class(py::str(h).cast<std::string>());
}

BigMatrix big_matrix(const py::sequence& rows) {
  BigMatrix m;
  for (const auto& row : rows) {
    std::vector<mpz_class> r;
    for (const auto& x : row.cast<py::sequence>()) r.push_back(from_py(x));
    if (!m.empty() && r.size() != m.front().size()) throw py::value_error("rows must have equal length");
    m.push_back(std::move(r));
  }
  return m;
}

SparseMatrix sparse(const std::vector<std::vector<std::int64_t>>& rows, std::size_t cols) {
  return SparseMatrix::from_dense(rows, cols);
}

// Thin wrapper so Python sees one object per group.
struct PyGroup {
  MarkedGroup g;

  std::vector<std::int64_t> normal_form(const std::string& word) const { return g->evaluate(g->parse_word(word)); }
  bool equal(const std::string& u, const std::string& v) const { return normal_form(u) == normal_form(v); }
  std::string canonical_word(const std::string& word) const {
    const std::string w = g->format(normal_form(word));
    return w.empty() ? "e" : w;
  }
  std::optional<std::int64_t> word_length(const std::string& word, int budget) const {
    return coarsekit::word_length(*g, normal_form(word), budget);
  }
  std::vector<std::size_t> sphere_sizes(int radius, std::size_t budget) const {
    const Ball b = ball(g, radius, budget);
    std::vector<std::size_t> out;
    for (int r = 0; r <= radius; ++r) out.push_back(b.sphere_size(r));
    return out;
  }
};

GraphWindow window_by_kind(const std::string& kind, int radius, int degree) {
  if (kind == "path") return path_window(radius);
  if (kind == "grid") return grid_window(radius);
  if (kind == "tree") return tree_window(degree, radius);
  throw py::value_error("window kind must be path, grid or tree");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coarse invariants of finitely generated groups";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<WindowError>(m, "WindowError", PyExc_RuntimeError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);
  py::register_exception<Refusal>(m, "Refusal", PyExc_RuntimeError);

  m.def("version", &version);
  m.def("task_names", &task_names);
  m.def(
      "run_task",
      [](const std::string& config, std::optional<std::string> task, std::optional<std::uint64_t> seed,
         std::optional<std::uint64_t> budget, std::optional<std::string> format) {
        TaskOverrides o{std::move(task), seed, budget, std::move(format)};
        TaskOutcome out;
        {
          py::gil_scoped_release release;
          out = run_task(config, o);
        }
        return std::make_tuple(out.exit_code, out.report);
      },
      py::arg("config"), py::kw_only(), py::arg("task") = py::none(), py::arg("seed") = py::none(),
      py::arg("budget") = py::none(), py::arg("format") = py::none(),
      "Run one task from a JSON config; returns (exit_code, report text).");

  py::class_<PyGroup>(m, "Group")
      .def(py::init([](const std::string& spec) { return PyGroup{parse_group(spec)}; }), py::arg("spec"))
      .def_property_readonly("id", [](const PyGroup& g) { return g.g->id(); })
      .def_property_readonly("generators", [](const PyGroup& g) { return g.g->generator_names(); })
      .def("normal_form", &PyGroup::normal_form, py::arg("word"))
      .def("equal", &PyGroup::equal, py::arg("u"), py::arg("v"))
      .def("canonical_word", &PyGroup::canonical_word, py::arg("word"))
      .def("word_length", &PyGroup::word_length, py::arg("word"), py::arg("budget") = 64)
      .def("sphere_sizes", &PyGroup::sphere_sizes, py::arg("radius"), py::arg("budget") = kDefaultNodeBudget)
      .def("__repr__", [](const PyGroup& g) { return "Group('" + g.g->id() + "')"; });

  m.def(
      "smith_normal_form",
      [](const py::sequence& rows) {
        const auto res = smith_normal_form(big_matrix(rows));
        py::list diag;
        for (const auto& d : res.diagonal) diag.append(to_py(d));
        return diag;
      },
      py::arg("matrix"), "Invariant-factor diagonal of an integer matrix.");

  m.def(
      "homology",
      [](const std::vector<std::size_t>& ranks, const std::vector<std::vector<std::vector<std::int64_t>>>& boundaries,
         const std::string& ring) {
        if (ranks.empty() || boundaries.size() + 1 != ranks.size())
          throw py::value_error("need one boundary matrix per degree 1..n");
        std::vector<SparseMatrix> mats;
        for (std::size_t k = 0; k < boundaries.size(); ++k) mats.push_back(sparse(boundaries[k], ranks[k + 1]));
        const auto c = algebraic_complex(ranks, mats);
        py::list out;
        for (const auto& h : coarsekit::homology(c, RingSpec::parse(ring))) {
          py::list torsion;
          for (const auto& t : h.torsion) torsion.append(to_py(t));
          out.append(py::make_tuple(h.free_rank, torsion));
        }
        return out;
      },
      py::arg("ranks"), py::arg("boundaries"), py::arg("ring") = "Z",
      "Homology of a complex given by ranks and dense boundary matrices; [(free_rank, torsion), ...].");

  m.def(
      "ends_estimate",
      [](const std::string& kind, int radius, const std::vector<int>& schedule, int degree) {
        const auto rep = coarsekit::ends_estimate(window_by_kind(kind, radius, degree), schedule);
        py::list counts;
        for (const auto& e : rep.schedule) counts.append(py::make_tuple(e.r, e.count, e.reliable));
        py::dict d;
        d["verdict"] = to_string(rep.verdict);
        d["value"] = rep.value;
        d["summary"] = rep.describe();
        d["schedule"] = counts;
        return d;
      },
      py::arg("kind"), py::arg("radius"), py::arg("schedule") = std::vector<int>{1, 2, 3, 4, 5, 6},
      py::arg("degree") = 3, "Ends of a path, grid or tree window.");

  m.def(
      "one_relator_chi", [](std::int64_t n, std::int64_t k) { return to_string(one_relator_chi(n, k).chi); },
      py::arg("n"), py::arg("m"), "1 - n + 1/m as a fraction string.");
  m.def(
      "chi_amalgam",
      [](const std::string& a, const std::string& b, const std::string& c) {
        return to_string(chi_amalgam(parse_rational(a), parse_rational(b), parse_rational(c)));
      },
      py::arg("a"), py::arg("b"), py::arg("c"));
  m.def(
      "chi_hnn",
      [](const std::string& a, const std::string& c) { return to_string(chi_hnn(parse_rational(a), parse_rational(c))); },
      py::arg("a"), py::arg("c"));
}
