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

#include "ragman/cli.hpp"

#include <csignal>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragman/analytics.hpp"
#include "ragman/chat_log.hpp"
#include "ragman/chat_service.hpp"
#include "ragman/corpus.hpp"
#include "ragman/embedding.hpp"
#include "ragman/error.hpp"
#include "ragman/gradestats.hpp"
#include "ragman/text.hpp"
#include "ragman/vectorstore.hpp"

namespace ragman::cli {
namespace {

using nlohmann::ordered_json;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.emplace_back(t);
  }
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

ordered_json report_json(const analytics::CleaningReport& r) {
  ordered_json j;
  j["pairs_in"] = r.pairs_in;
  j["pairs_removed_dup"] = r.pairs_removed_dup;
  j["pairs_removed_blocklist"] = r.pairs_removed_blocklist;
  j["pairs_out"] = r.pairs_out;
  j["conversations_out"] = r.conversations_out;
  return j;
}

ordered_json optional_rate(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string corpus;
  std::string out;
  std::string names;
  std::string tag;
  std::string source;
  std::size_t max_units = corpus::ChunkingOptions{}.max_units;
  std::size_t overlap = corpus::ChunkingOptions{}.overlap_units;
};

int do_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  auto loaded = corpus::load_corpus(a.corpus);
  for (const auto& d : loaded.diagnostics) err << a.corpus << ":" << d.line << ": " << d.message << "\n";
  corpus::ScrubRules rules;
  if (!a.names.empty()) rules.names = read_lines(a.names);

  auto docs = a.tag.empty() ? loaded.documents : corpus::filter_by_tag(loaded.documents, a.tag);
  std::optional<corpus::Source> source;
  if (!a.source.empty()) source = corpus::source_from_string(a.source);

  std::vector<corpus::Chunk> chunks;
  std::size_t used = 0;
  for (const auto& doc : docs) {
    if (source && doc.source != *source) continue;
    ++used;
    auto part = corpus::chunk_document(corpus::scrub_pii(doc, rules), a.max_units, a.overlap);
    chunks.insert(chunks.end(), part.begin(), part.end());
  }
  corpus::write_chunks(a.out, chunks);

  ordered_json j;
  j["documents_read"] = loaded.documents.size();
  j["documents_rejected"] = loaded.diagnostics.size();
  j["documents_used"] = used;
  j["chunks_written"] = chunks.size();
  j["max_units"] = a.max_units;
  j["overlap_units"] = a.overlap;
  j["output"] = a.out;
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------- build-index

struct BuildIndexArgs {
  std::string chunks;
  std::string out;
  std::string provider = "local_hash";
  std::size_t dim = 0;
  std::string base_url;
  std::string model;
  std::string api_key_env;
  std::string source;
  std::string tag;
};

int do_build_index(const BuildIndexArgs& a, std::ostream& out, std::ostream&) {
  embedding::EmbeddingProviderConfig cfg;
  if (a.provider == "local_hash") {
    cfg = embedding::EmbeddingProviderConfig::local(a.dim == 0 ? 256 : a.dim);
  } else if (a.provider == "remote") {
    if (a.base_url.empty() || a.model.empty()) {
      throw InvalidArgument("--provider remote requires --base-url and --model");
    }
    cfg = embedding::EmbeddingProviderConfig::remote(a.base_url, a.model, a.dim == 0 ? 1536 : a.dim,
                                                     a.api_key_env);
  } else {
    throw InvalidArgument("unknown provider '" + a.provider + "'");
  }

  auto chunks = corpus::read_chunks(a.chunks);
  std::optional<corpus::Source> source;
  if (!a.source.empty()) source = corpus::source_from_string(a.source);
  std::erase_if(chunks, [&](const corpus::Chunk& c) {
    if (source && c.source != *source) return true;
    return !a.tag.empty() && c.wp_tag != a.tag;
  });
  if (chunks.empty()) throw InvalidArgument("no chunks selected for the index");

  const auto index = vectorstore::build_index(chunks, cfg);
  vectorstore::save_index(index, a.out);

  ordered_json j;
  j["chunks_indexed"] = index.size();
  j["dim"] = index.dim();
  j["fingerprint"] = index.provider_fingerprint();
  j["output"] = a.out;
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------------- serve

int do_serve(const std::string& config_path, std::ostream& out, std::ostream& err) {
  const auto config = chat::load_service_config(config_path);
  auto service = chat::make_service(config);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  chat::HttpServer server(*service, config.server);
  const int port = server.start_background();
  out << "listening on " << config.server.host << ":" << port << " with " << service->list_tutors().size()
      << " tutors" << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  err << "received signal " << sig << ", shutting down" << std::endl;
  server.stop();
  return 0;
}

// ----------------------------------------------------------------- clean

struct CleanArgs {
  std::string log;
  std::string out;
  std::string blocklist;
  std::size_t max_repeat = 3;
};

int do_clean(const CleanArgs& a, std::ostream& out, std::ostream& err) {
  auto log = chat::read_log(a.log);
  for (auto line : log.bad_lines) err << a.log << ":" << line << ": malformed record skipped\n";
  std::vector<analytics::BlockPattern> patterns;
  if (!a.blocklist.empty()) patterns = analytics::load_blocklist(a.blocklist);
  const auto cleaned = analytics::clean_pairs(log.records, patterns, a.max_repeat);

  std::string lines;
  for (const auto& r : cleaned.pairs) lines += chat::to_json_line(r) + "\n";
  write_text(a.out, lines);

  ordered_json j = report_json(cleaned.report);
  j["malformed_lines"] = log.bad_lines.size();
  j["blocklist_patterns"] = patterns.size();
  j["max_repeat"] = a.max_repeat;
  j["output"] = a.out;
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------- sample-plan

struct SamplePlanArgs {
  std::vector<std::int64_t> counts;
  std::int64_t total = -1;
  double confidence = 0.95;
  double margin = 0.05;
  std::int64_t population = -1;
  std::string log;
  std::string out;
  std::uint64_t seed = 0;
};

int do_sample_plan(SamplePlanArgs a, std::ostream& out, std::ostream&) {
  std::vector<std::string> stratum_names;
  std::vector<std::vector<std::string>> strata;
  if (!a.log.empty()) {
    if (!a.counts.empty()) throw InvalidArgument("--counts and --log are mutually exclusive");
    std::map<std::string, std::set<std::string>> by_tutor;
    std::map<std::string, std::vector<std::string>> ordered;
    for (const auto& r : chat::read_log(a.log).records) {
      if (by_tutor[r.tutor_id].insert(r.conversation_id).second) ordered[r.tutor_id].push_back(r.conversation_id);
    }
    for (auto& [tutor_id, ids] : ordered) {
      stratum_names.push_back(tutor_id);
      a.counts.push_back(static_cast<std::int64_t>(ids.size()));
      strata.push_back(std::move(ids));
    }
  }
  if (a.counts.empty()) throw InvalidArgument("one of --counts or --log is required");

  std::int64_t population = 0;
  for (auto c : a.counts) population += c;
  if (a.population > 0) population = a.population;

  const auto plan = analytics::plan_sample_size(population, a.confidence, a.margin);
  const std::int64_t total = a.total >= 0 ? a.total : plan.n;
  const auto allocation = analytics::allocate_proportional(a.counts, total);

  ordered_json j;
  j["population"] = population;
  j["confidence"] = a.confidence;
  j["margin"] = a.margin;
  j["z"] = plan.z;
  j["n0"] = plan.n0;
  j["n_corrected"] = plan.corrected;
  j["formula_sample_size"] = plan.n;
  j["total"] = total;
  j["total_overridden"] = a.total >= 0;
  if (a.total >= 0 && a.total != plan.n) {
    j["note"] = "allocation uses --total " + std::to_string(a.total) + "; the finite-population formula gives " +
                std::to_string(plan.n);
  }
  j["strata_counts"] = a.counts;
  if (!stratum_names.empty()) j["strata"] = stratum_names;
  j["allocation"] = allocation;

  if (!strata.empty()) {
    const auto sample = analytics::sample_conversations(strata, allocation, a.seed);
    j["seed"] = a.seed;
    ordered_json chosen = ordered_json::object();
    for (std::size_t s = 0; s < sample.size(); ++s) chosen[stratum_names[s]] = sample[s];
    if (!a.out.empty()) {
      write_text(a.out, chosen.dump(2) + "\n");
      j["output"] = a.out;
    } else {
      j["sample"] = chosen;
    }
  }
  out << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------- label-stats

int do_label_stats(const std::string& annotations_path, const std::string& log_path, std::ostream& out,
                   std::ostream&) {
  const auto annotations = analytics::load_annotations(annotations_path);
  std::vector<tutor::PairLabels> labels;
  if (log_path.empty()) {
    for (const auto& a : annotations) labels.push_back(a.labels);
  } else {
    labels = analytics::join_labels(chat::read_log(log_path).records, annotations);
  }
  const auto s = analytics::aggregate_labels(std::span<const tutor::PairLabels>(labels));
  ordered_json j;
  j["n_pairs"] = s.n_pairs;
  j["n_in_scope"] = s.n_in_scope;
  j["n_good"] = s.n_good;
  j["n_good_in_scope"] = s.n_good_in_scope;
  j["n_good_out_scope"] = s.n_good_out_scope;
  j["in_scope_rate"] = s.in_scope_rate;
  j["good_rate_overall"] = s.good_rate_overall;
  j["good_rate_in_scope"] = optional_rate(s.good_rate_in_scope);
  j["good_rate_out_scope"] = optional_rate(s.good_rate_out_scope);
  out << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------ grade-test

struct GradeTestArgs {
  std::string a;
  std::string b;
  std::uint64_t seed = 0;
  int resamples = 1000;
  std::int64_t n = 359;
  bool all_pairs = false;
  std::size_t window = 0;
  std::string max_letter = "A";
  bool dump_p_values = false;
  std::string out;
};

int do_grade_test(const GradeTestArgs& args, std::ostream& out, std::ostream&) {
  const auto max_letter = grades::letter_from_string(args.max_letter);
  const auto a = grades::truncate_grades(grades::load_grades(args.a), max_letter);
  const auto b = grades::truncate_grades(grades::load_grades(args.b), max_letter);

  grades::McConfig cfg;
  cfg.seed = args.seed;
  cfg.resamples = args.resamples;
  cfg.sample_size = args.n;
  cfg.pairing = args.all_pairs ? grades::Pairing::all_pairs : grades::Pairing::paired;
  if (args.window > 0) cfg.window = args.window;
  const auto mc = grades::mc_letter_grade_test(a, b, cfg);

  const auto observed = grades::ks_from_counts(a.counts, b.counts);
  const auto va = a.ordinal_values();
  const auto vb = b.ordinal_values();
  const auto wmw = grades::wmw_test(va, vb);

  auto sorted = mc.p_values;
  std::sort(sorted.begin(), sorted.end());
  const auto below = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [](double p) { return p < 0.05; }));

  ordered_json cohort_json = ordered_json::array();
  for (const auto* d : {&a, &b}) {
    ordered_json c;
    c["cohort"] = d->cohort;
    for (auto l : grades::kLettersDescending) c["counts"][std::string(1, grades::to_char(l))] = d->count(l);
    c["total"] = d->total();
    cohort_json.push_back(c);
  }

  ordered_json j;
  j["variant"] = max_letter == grades::Letter::A ? "full" : std::string(1, grades::to_char(max_letter)) + "_and_lower";
  j["cohorts"] = cohort_json;
  j["config"] = {{"seed", cfg.seed},
                 {"resamples", cfg.resamples},
                 {"sample_size", cfg.sample_size},
                 {"pairing", args.all_pairs ? "all_pairs" : "paired"},
                 {"window", mc.window},
                 {"generator", "xoshiro256** via splitmix64"}};
  j["mode_p"] = mc.mode_p;
  j["p_values_summary"] = {{"count", sorted.size()},
                           {"min", sorted.front()},
                           {"median", sorted[sorted.size() / 2]},
                           {"max", sorted.back()},
                           {"fraction_below_0_05", static_cast<double>(below) / static_cast<double>(sorted.size())}};
  j["observed"] = {
      {"ks", {{"statistic", observed.statistic}, {"p_value", observed.p_value}, {"exact", observed.exact}}},
      {"wmw", {{"statistic", wmw.statistic}, {"p_value", wmw.p_value}, {"exact", wmw.exact}}}};
  if (args.dump_p_values) j["p_values"] = mc.p_values;

  const auto text = j.dump(2) + "\n";
  if (!args.out.empty()) write_text(args.out, text);
  out << text;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RAGMan tutoring service and study pipeline", args.empty() ? "ragman" : args.front()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Scrub and chunk a corpus file into a chunk file");
  ingest_cmd->add_option("--corpus", ingest.corpus, "Corpus JSON-lines file")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out, "Output chunk file")->required();
  ingest_cmd->add_option("--names", ingest.names, "File with one name to redact per line")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--tag", ingest.tag, "Keep only documents with this wp_tag");
  ingest_cmd->add_option("--source", ingest.source, "Keep only wp_description or discussion_post documents");
  ingest_cmd->add_option("--max-units", ingest.max_units, "Maximum tokens per chunk")->capture_default_str();
  ingest_cmd->add_option("--overlap", ingest.overlap, "Tokens shared by consecutive chunks")->capture_default_str();

  BuildIndexArgs build;
  auto* build_cmd = app.add_subcommand("build-index", "Embed a chunk file into a vector index file");
  build_cmd->add_option("--chunks", build.chunks, "Chunk file from ingest")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build.out, "Output index file")->required();
  build_cmd->add_option("--provider", build.provider, "local_hash or remote")->capture_default_str();
  build_cmd->add_option("--dim", build.dim, "Embedding dimension (default 256 local, 1536 remote)");
  build_cmd->add_option("--base-url", build.base_url, "Remote embedding endpoint base URL");
  build_cmd->add_option("--model", build.model, "Remote embedding model name");
  build_cmd->add_option("--api-key-env", build.api_key_env, "Environment variable holding the API key");
  build_cmd->add_option("--source", build.source, "Index only chunks from this source");
  build_cmd->add_option("--tag", build.tag, "Index only chunks with this wp_tag");

  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP tutoring service");
  serve_cmd->add_option("--config", serve_config, "Service config file")->required()->check(CLI::ExistingFile);

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Deduplicate and blocklist-filter a message log");
  clean_cmd->add_option("--log", clean.log, "Message log file")->required()->check(CLI::ExistingFile);
  clean_cmd->add_option("--out", clean.out, "Output file for kept records")->required();
  clean_cmd->add_option("--blocklist", clean.blocklist, "Blocklist file ('re:' prefix for regexes)")
      ->check(CLI::ExistingFile);
  clean_cmd->add_option("--max-repeat", clean.max_repeat, "Questions asked more often are removed")
      ->capture_default_str();

  SamplePlanArgs plan;
  auto* plan_cmd = app.add_subcommand("sample-plan", "Sample size, proportional allocation and sample draw");
  plan_cmd->add_option("--counts", plan.counts, "Stratum sizes, comma separated")->delimiter(',');
  plan_cmd->add_option("--log", plan.log, "Derive strata (one per tutor) from a cleaned log and draw the sample")
      ->check(CLI::ExistingFile);
  plan_cmd->add_option("--total", plan.total, "Sample size to allocate (default: formula value)");
  plan_cmd->add_option("--confidence", plan.confidence, "Confidence level")->capture_default_str();
  plan_cmd->add_option("--margin", plan.margin, "Margin of error")->capture_default_str();
  plan_cmd->add_option("--population", plan.population, "Population size (default: sum of strata)");
  plan_cmd->add_option("--seed", plan.seed, "Sampling seed")->capture_default_str();
  plan_cmd->add_option("--out", plan.out, "Write the drawn sample here instead of the report");

  std::string annotations_path;
  std::string label_log;
  auto* label_cmd = app.add_subcommand("label-stats", "Aggregate scope and quality labels");
  label_cmd->add_option("--annotations", annotations_path, "Annotation file")->required()->check(CLI::ExistingFile);
  label_cmd->add_option("--log", label_log, "Pairs that must all be annotated")->check(CLI::ExistingFile);

  GradeTestArgs grade;
  auto* grade_cmd = app.add_subcommand("grade-test", "Monte Carlo letter-grade comparison of two cohorts");
  grade_cmd->add_option("--a", grade.a, "First cohort grade file")->required()->check(CLI::ExistingFile);
  grade_cmd->add_option("--b", grade.b, "Second cohort grade file")->required()->check(CLI::ExistingFile);
  grade_cmd->add_option("--seed", grade.seed, "Generator seed")->capture_default_str();
  grade_cmd->add_option("--resamples", grade.resamples, "Number of resampled pairs")->capture_default_str();
  grade_cmd->add_option("--n", grade.n, "Students per resampled cohort")->capture_default_str();
  grade_cmd->add_flag("--all-pairs", grade.all_pairs, "Test every resample of a against every resample of b");
  grade_cmd->add_option("--window", grade.window, "Venter window (default floor(sqrt(#p-values)))");
  grade_cmd->add_option("--max-letter", grade.max_letter, "Restrict to this letter and lower, e.g. B")
      ->capture_default_str();
  grade_cmd->add_flag("--p-values", grade.dump_p_values, "Include every p-value in the report");
  grade_cmd->add_option("--out", grade.out, "Also write the report to this file");

  std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"ragman"} : args;
  std::vector<char*> argv;
  argv.reserve(storage.size());
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*ingest_cmd) return do_ingest(ingest, out, err);
    if (*build_cmd) return do_build_index(build, out, err);
    if (*serve_cmd) return do_serve(serve_config, out, err);
    if (*clean_cmd) return do_clean(clean, out, err);
    if (*plan_cmd) return do_sample_plan(plan, out, err);
    if (*label_cmd) return do_label_stats(annotations_path, label_log, out, err);
    if (*grade_cmd) return do_grade_test(grade, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ragman::cli
