#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "adamf/cli.hpp"
#include "adamf/config.hpp"
#include "adamf/evaluation.hpp"
#include "adamf/fixtures.hpp"
#include "adamf/io.hpp"

namespace py = pybind11;

namespace {

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"adamf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = adamf::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

py::dict result_dict(const adamf::GradCheckResult& r) {
  py::dict d;
  d["max_relative_error"] = r.max_relative_error;
  d["worst_parameter"] = r.worst_parameter;
  d["worst_index"] = r.worst_index;
  d["probes"] = r.probes;
  return d;
}

py::dict gradcheck(std::uint64_t seed, double adv_lambda) {
  adamf::GradcheckSettings settings;
  settings.seed = seed;
  settings.adv_lambda = adv_lambda;
  const auto report = adamf::run_gradcheck_fixture(settings);
  py::dict d;
  d["kgc"] = result_dict(report.kgc);
  d["adv_discriminator"] = result_dict(report.adv_discriminator);
  d["generator"] = report.generator ? py::object(result_dict(*report.generator)) : py::none();
  d["tolerance"] = report.tolerance;
  d["passed"] = report.passed();
  return d;
}

void write_toy(const std::filesystem::path& dir, std::size_t entities, std::uint64_t seed) {
  adamf::write_toy_kg(adamf::make_toy_kg(entities, seed), dir);
  adamf::write_file_atomic(dir / "toy.conf", adamf::toy_config_text());
}

py::dict metrics(const std::vector<std::pair<std::size_t, std::size_t>>& ranks,
                 const std::vector<std::size_t>& ks) {
  std::vector<adamf::RankedTriple> rows;
  for (auto [h, t] : ranks) rows.push_back({{}, h, t});
  const auto m = adamf::aggregate_metrics(rows, ks);
  py::dict d;
  d["mrr"] = m.mrr;
  d["hits"] = m.hits;
  d["count"] = m.count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal knowledge graph completion: C++ core";
  m.def("run_cli", &run_cli, py::arg("args"),
        "Run the command-line interface in-process; returns (exit_code, stdout, stderr).");
  m.def("gradcheck", &gradcheck, py::arg("seed") = 0, py::arg("adv_lambda") = 0.01,
        "Finite-difference gradient check on the built-in fixture.");
  m.def("write_toy_kg", &write_toy, py::arg("dir"), py::arg("entities") = 50,
        py::arg("seed") = 0, "Write the synthetic toy KG and a matching toy.conf.");
  m.def("toy_config", &adamf::toy_config_text, "Config text for the toy KG.");
  m.def(
      "resolved_config",
      [](const std::filesystem::path& path) {
        return adamf::format_run_config(adamf::load_run_config(path));
      },
      py::arg("path"), "Load a config file and return it with every key resolved.");
  m.def("metrics", &metrics, py::arg("ranks"), py::arg("ks") = std::vector<std::size_t>{1, 3, 10},
        "MRR and Hit@K from (head_rank, tail_rank) pairs.");
}
