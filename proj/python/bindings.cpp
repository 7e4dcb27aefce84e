// Copyright 2026 The RAGMan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ragman/analytics.hpp"
#include "ragman/cli.hpp"
#include "ragman/embedding.hpp"
#include "ragman/error.hpp"
#include "ragman/gradestats.hpp"
#include "ragman/guardrail.hpp"
#include "ragman/tutor.hpp"
#include "ragman/vectorstore.hpp"

namespace py = pybind11;
using namespace ragman;

namespace {

grades::TestResult ks(const std::vector<double>& x, const std::vector<double>& y) {
  return grades::ks_two_sample(x, y);
}

vectorstore::VectorIndex build_local_index(const std::vector<std::pair<std::string, std::string>>& items,
                                           std::size_t dim) {
  std::vector<corpus::Chunk> chunks;
  chunks.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    corpus::Chunk c;
    c.chunk_id = items[i].first;
    c.doc_id = items[i].first;
    c.text = items[i].second;
    c.ordinal = i;
    chunks.push_back(std::move(c));
  }
  return vectorstore::build_index(chunks, embedding::LocalHashProvider(dim));
}

embedding::EmbeddingVector as_vector(std::vector<float> v) { return embedding::EmbeddingVector{std::move(v)}; }

}  // namespace

PYBIND11_MODULE(_ragman, m) {
  m.doc() = "Retrieval, guardrail and statistics core of the ragman tutor.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<CorruptionError>(m, "CorruptionError", base.ptr());
  py::register_exception<NotFound>(m, "NotFound", base.ptr());
  py::register_exception<ProviderError>(m, "ProviderError", base.ptr());

  // Grade statistics.
  py::class_<grades::GradeDistribution>(m, "GradeDistribution")
      .def(py::init<>())
      .def_readwrite("cohort", &grades::GradeDistribution::cohort)
      .def_readwrite("counts", &grades::GradeDistribution::counts, "Counts indexed F, D, C, B, A.")
      .def("total", &grades::GradeDistribution::total)
      .def("ordinal_values", &grades::GradeDistribution::ordinal_values)
      .def("__eq__", [](const grades::GradeDistribution& a, const grades::GradeDistribution& b) { return a == b; });

  m.def("load_grades", &grades::load_grades, py::arg("path"));
  m.def("parse_grades", &grades::parse_grades, py::arg("json_text"));
  m.def(
      "truncate_grades",
      [](const grades::GradeDistribution& d, const std::string& max_letter) {
        return grades::truncate_grades(d, grades::letter_from_string(max_letter));
      },
      py::arg("dist"), py::arg("max_letter"));

  py::class_<grades::TestResult>(m, "TestResult")
      .def_readonly("statistic", &grades::TestResult::statistic)
      .def_readonly("p_value", &grades::TestResult::p_value)
      .def_readonly("exact", &grades::TestResult::exact)
      .def_property_readonly("method", [](const grades::TestResult& r) { return std::string(to_string(r.method)); })
      .def("__repr__", [](const grades::TestResult& r) {
        std::ostringstream s;
        s << "TestResult(method=" << to_string(r.method) << ", statistic=" << r.statistic
          << ", p_value=" << r.p_value << ", exact=" << (r.exact ? "True" : "False") << ")";
        return s.str();
      });

  m.def("kolmogorov_q", &grades::kolmogorov_q, py::arg("lam"));
  m.def("ks_two_sample", &ks, py::arg("x"), py::arg("y"));
  m.def(
      "wmw_test", [](const std::vector<double>& x, const std::vector<double>& y) { return grades::wmw_test(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "ad_two_sample",
      [](const std::vector<double>& x, const std::vector<double>& y, int permutations, std::uint64_t seed) {
        return grades::ad_two_sample(x, y, permutations, seed);
      },
      py::arg("x"), py::arg("y"), py::arg("permutations") = 999, py::arg("seed") = 0);
  m.def(
      "venter_mode",
      [](const std::vector<double>& s, std::optional<std::size_t> window) {
        return grades::venter_mode(s, window);
      },
      py::arg("sample"), py::arg("window") = py::none());

  py::class_<grades::McResult>(m, "McResult")
      .def_readonly("p_values", &grades::McResult::p_values)
      .def_readonly("mode_p", &grades::McResult::mode_p)
      .def_readonly("window", &grades::McResult::window);

  m.def(
      "mc_letter_grade_test",
      [](const grades::GradeDistribution& a, const grades::GradeDistribution& b, int resamples,
         std::int64_t sample_size, std::uint64_t seed, std::optional<std::size_t> window) {
        grades::McConfig cfg;
        cfg.resamples = resamples;
        cfg.sample_size = sample_size;
        cfg.seed = seed;
        cfg.window = window;
        py::gil_scoped_release release;
        return grades::mc_letter_grade_test(a, b, cfg);
      },
      py::arg("a"), py::arg("b"), py::arg("resamples") = 1000, py::arg("sample_size") = 359, py::arg("seed") = 0,
      py::arg("window") = py::none());

  // Sampling and labels.
  py::class_<analytics::SampleSizePlan>(m, "SampleSizePlan")
      .def_readonly("z", &analytics::SampleSizePlan::z)
      .def_readonly("n0", &analytics::SampleSizePlan::n0)
      .def_readonly("corrected", &analytics::SampleSizePlan::corrected)
      .def_readonly("n", &analytics::SampleSizePlan::n);
  m.def("plan_sample_size", &analytics::plan_sample_size, py::arg("population"), py::arg("confidence") = 0.95,
        py::arg("margin") = 0.05);
  m.def("sample_size", &analytics::sample_size, py::arg("population"), py::arg("confidence") = 0.95,
        py::arg("margin") = 0.05);
  m.def(
      "allocate_proportional",
      [](const std::vector<std::int64_t>& counts, std::int64_t total) {
        return analytics::allocate_proportional(counts, total);
      },
      py::arg("strata_counts"), py::arg("total"));
  m.def(
      "sample_conversations",
      [](const std::vector<std::vector<std::string>>& strata, const std::vector<std::int64_t>& allocation,
         std::uint64_t seed) { return analytics::sample_conversations(strata, allocation, seed); },
      py::arg("strata"), py::arg("allocation"), py::arg("seed") = 0);

  py::class_<analytics::LabelStats>(m, "LabelStats")
      .def_readonly("n_pairs", &analytics::LabelStats::n_pairs)
      .def_readonly("n_in_scope", &analytics::LabelStats::n_in_scope)
      .def_readonly("n_good", &analytics::LabelStats::n_good)
      .def_readonly("in_scope_rate", &analytics::LabelStats::in_scope_rate)
      .def_readonly("good_rate_overall", &analytics::LabelStats::good_rate_overall)
      .def_readonly("good_rate_in_scope", &analytics::LabelStats::good_rate_in_scope)
      .def_readonly("good_rate_out_scope", &analytics::LabelStats::good_rate_out_scope);
  m.def(
      "aggregate_labels",
      [](const std::vector<std::pair<std::string, std::string>>& labels) {
        std::vector<tutor::PairLabels> v;
        v.reserve(labels.size());
        for (const auto& [scope, quality] : labels) {
          v.push_back({tutor::scope_from_string(scope), tutor::quality_from_string(quality)});
        }
        return analytics::aggregate_labels(v);
      },
      py::arg("labels"), "labels: sequence of (scope, quality) such as (\"in\", \"good\").");

  // Guardrail.
  m.attr("CODE_REMOVED_MARKER") = std::string(guardrail::kCodeRemovedMarker);
  m.def(
      "contains_code",
      [](const std::string& text, double threshold) {
        const auto d = guardrail::contains_code(text, threshold);
        py::dict out;
        out["flagged"] = d.flagged;
        out["score"] = d.score;
        py::list reasons;
        for (auto r : d.reasons) reasons.append(std::string(guardrail::to_string(r)));
        out["reasons"] = reasons;
        return out;
      },
      py::arg("text"), py::arg("threshold") = guardrail::kDefaultThreshold);
  m.def("redact_code", [](const std::string& text) { return guardrail::redact_code(text); }, py::arg("text"));

  // Embedding and retrieval.
  m.def(
      "local_hash_embed",
      [](const std::string& text, std::size_t dim) { return embedding::local_hash_embed(text, dim).values; },
      py::arg("text"), py::arg("dim") = 256);

  py::class_<vectorstore::RetrievalResult>(m, "RetrievalResult")
      .def_readonly("chunk_id", &vectorstore::RetrievalResult::chunk_id)
      .def_readonly("score", &vectorstore::RetrievalResult::score)
      .def_readonly("text", &vectorstore::RetrievalResult::text);

  py::class_<vectorstore::VectorIndex>(m, "VectorIndex")
      .def_property_readonly("dim", &vectorstore::VectorIndex::dim)
      .def_property_readonly("provider_fingerprint", &vectorstore::VectorIndex::provider_fingerprint)
      .def("__len__", &vectorstore::VectorIndex::size)
      .def("__contains__", &vectorstore::VectorIndex::contains)
      .def(
          "search",
          [](const vectorstore::VectorIndex& idx, std::vector<float> query, std::size_t k) {
            return idx.search(as_vector(std::move(query)), k);
          },
          py::arg("query"), py::arg("k"))
      .def(
          "search_text",
          [](const vectorstore::VectorIndex& idx, const std::string& text, std::size_t k) {
            return idx.search(embedding::local_hash_embed(text, idx.dim()), k);
          },
          py::arg("text"), py::arg("k"), "Embeds text with the local hash embedder, then searches.")
      .def("__eq__", [](const vectorstore::VectorIndex& a, const vectorstore::VectorIndex& b) { return a == b; });

  m.def("build_local_index", &build_local_index, py::arg("items"), py::arg("dim") = 256,
        "items: sequence of (chunk_id, text).");
  m.def("save_index", &vectorstore::save_index, py::arg("index"), py::arg("path"));
  m.def("load_index", &vectorstore::load_index, py::arg("path"));

  // Command line.
  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "ragman");
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a ragman subcommand; returns (exit_code, stdout, stderr).");
}
