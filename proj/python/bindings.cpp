#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "laclab/cli.hpp"
#include "laclab/discrepancy.hpp"
#include "laclab/error.hpp"
#include "laclab/limits.hpp"
#include "laclab/seqgen.hpp"

namespace py = pybind11;
using namespace laclab;

namespace {

// Big integers cross the boundary as decimal strings; the Python side turns them into int.
std::vector<std::string> terms_as_text(const IntegerSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& t : seq.terms()) out.push_back(t.get_str());
  return out;
}

IntegerSequence from_text(const std::vector<std::string>& terms) {
  std::vector<BigInt> values;
  values.reserve(terms.size());
  for (const auto& t : terms) values.emplace_back(t);
  return IntegerSequence(values, SequenceSpec::explicit_list(values));
}

}  // namespace

PYBIND11_MODULE(_laclab, m) {
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<GuardError>(m, "GuardError", PyExc_ValueError);

  m.attr("version") = cli::kVersion;
  m.def("command_names", &cli::command_names);
  m.def("run", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });

  m.def("sequence_terms", [](const std::string& kind, std::int64_t theta, std::size_t length, double gamma) {
    SequenceSpec spec;
    switch (parse_sequence_kind(kind)) {
      case SequenceKind::geometric: spec = SequenceSpec::geometric(theta, length); break;
      case SequenceKind::geometric_minus_one: spec = SequenceSpec::geometric_minus_one(theta, length); break;
      case SequenceKind::power_gap: spec = SequenceSpec::power_gap(gamma, 1, length); break;
      case SequenceKind::superlacunary_square: spec = SequenceSpec::superlacunary_square(theta, length); break;
      default: throw DomainError("sequence kind '" + kind + "' needs explicit terms");
    }
    return terms_as_text(generate(spec));
  }, py::arg("kind"), py::arg("theta") = 2, py::arg("length") = 10, py::arg("gamma") = 1.0);

  m.def("gcd_sum", [](const std::vector<std::string>& terms) {
    const Rational g = gcd_sum(from_text(terms));
    return py::make_tuple(g.get_num().get_str(), g.get_den().get_str());
  });

  m.def("discrepancy", [](const std::vector<double>& x) { return discrepancy(x); });
  m.def("star_discrepancy", [](const std::vector<double>& x) { return star_discrepancy(x); });
  m.def("fukuyama_constant", &fukuyama_constant);
  m.def("kolmogorov_cdf", &kolmogorov_K);
  m.def("normal_cdf", &normal_cdf);
  m.def("frechet_cdf", &frechet_cdf);
  m.def("erdos_fortet_cdf", [](double x) { return erdos_fortet_cdf(x); });
}
