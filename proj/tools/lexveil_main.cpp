// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: index building, frequency partitioning, document
// sanitization, statistical privacy verification, and the split-inference
// server/client pair.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lexveil/candidates.hpp"
#include "lexveil/client.hpp"
#include "lexveil/error.hpp"
#include "lexveil/mechanism.hpp"
#include "lexveil/net.hpp"
#include "lexveil/sanitizer.hpp"
#include "lexveil/server.hpp"
#include "lexveil/store.hpp"
#include "lexveil/verifier.hpp"

namespace {

std::atomic<bool> g_shutdown{false};

void HandleSignal(int) { g_shutdown.store(true); }

// Store files are either the text vocabulary format or the binary record
// format; the binary one starts with the magic "SSHD".
lexveil::EmbeddingStore LoadStoreFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    lexveil::Fail(lexveil::ErrorKind::kIo, "cannot open store '" + path + "'");
  }
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::string_view(magic, 4) == "SSHD";
  in.clear();
  in.seekg(0);
  return lexveil::EmbeddingStore::Load(
      in, binary ? lexveil::StoreFormat::kBinary : lexveil::StoreFormat::kText);
}

lexveil::CandidateTable LoadTableFile(const std::string& path,
                                      const lexveil::EmbeddingStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    lexveil::Fail(lexveil::ErrorKind::kIo, "cannot open table '" + path + "'");
  }
  return lexveil::CandidateTable::Load(in, &store);
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    lexveil::Fail(lexveil::ErrorKind::kIo, "cannot open input '" + path + "'");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::ofstream OpenOutput(const std::string& path, const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    lexveil::Fail(lexveil::ErrorKind::kIo,
                  std::string("cannot open ") + what + " '" + path + "'");
  }
  return out;
}

uint32_t ResolveToken(const lexveil::EmbeddingStore& store,
                      const std::string& surface, const char* flag) {
  const std::optional<uint32_t> id = store.Find(surface);
  if (!id) {
    lexveil::Fail(lexveil::ErrorKind::kParameter,
                  std::string(flag) + " token '" + surface +
                      "' is not in the vocabulary");
  }
  return *id;
}

int RunBuildIndex(const std::string& store_path, uint32_t k,
                  const std::string& out_path, unsigned workers) {
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  const lexveil::CandidateTable table =
      lexveil::CandidateTable::Build(store, k, workers);
  std::ofstream out = OpenOutput(out_path, "table output");
  table.Save(out);
  if (!out) {
    lexveil::Fail(lexveil::ErrorKind::kIo,
                  "failed to write table '" + out_path + "'");
  }
  std::cout << "indexed " << store.size() << " tokens (dim=" << store.dim()
            << ", k=" << table.k() << ") -> " << out_path << "\n";
  return 0;
}

int RunPartition(const std::string& store_path, double q) {
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  const lexveil::SensitivityPartition partition =
      lexveil::PartitionByFrequency(store, q);
  std::cout << "tokens=" << store.size() << " q=" << q
            << " sensitive=" << partition.sensitive_count() << "\n";
  constexpr size_t kPreview = 20;
  const auto& ids = partition.sensitive_ids();
  for (size_t i = 0; i < ids.size() && i < kPreview; ++i) {
    std::cout << "  id=" << ids[i] << " freq=" << store.frequency(ids[i])
              << " surface=" << store.surface(ids[i]) << "\n";
  }
  if (ids.size() > kPreview) {
    std::cout << "  ... and " << (ids.size() - kPreview) << " more\n";
  }
  return 0;
}

int RunSanitize(const std::string& store_path, const std::string& table_path,
                const lexveil::SanitizerConfig& base_config,
                bool k_given, const std::string& in_path,
                const std::string& out_path, const std::string& audit_path,
                unsigned workers) {
  lexveil::SanitizerConfig config = base_config;
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  const lexveil::CandidateTable table = LoadTableFile(table_path, store);
  // Without an explicit --k the table is the authority; with one, a
  // mismatch is refused below rather than silently rebuilt.
  if (!k_given) config.k = table.k();
  config.Validate();
  lexveil::CheckPipeline(store, table, config.k);
  const lexveil::SensitivityPartition partition =
      lexveil::PartitionByFrequency(store, config.q);

  const std::vector<std::string> documents = ReadLines(in_path);
  const std::vector<lexveil::DocumentResult> results =
      lexveil::SanitizeDocuments(documents, store, partition, table,
                                 config.Params(), config.seed, workers);

  std::ofstream out = OpenOutput(out_path, "output");
  for (const auto& result : results) out << result.text << "\n";
  if (!out) {
    lexveil::Fail(lexveil::ErrorKind::kIo,
                  "failed to write output '" + out_path + "'");
  }

  if (!audit_path.empty()) {
    std::ofstream audit = OpenOutput(audit_path, "audit log");
    lexveil::WriteAuditLog(audit, results);
  }

  size_t tokens = 0;
  size_t replaced = 0;
  size_t oov = 0;
  for (const auto& result : results) {
    tokens += result.records.size();
    oov += result.oov_count;
    for (const auto& record : result.records) {
      if (record.decision.Replaced()) ++replaced;
    }
  }
  std::cout << "documents=" << results.size() << " tokens=" << tokens
            << " replaced=" << replaced << " oov=" << oov << "\n";
  return 0;
}

int RunVerify(bool case1, const std::string& store_path,
              const std::string& table_path, double epsilon, double p,
              double q, const std::string& x_surface,
              const std::string& xp_surface, uint64_t trials, uint64_t seed,
              const std::string& json_path, unsigned workers) {
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  const lexveil::CandidateTable table = LoadTableFile(table_path, store);
  const lexveil::SensitivityPartition partition =
      lexveil::PartitionByFrequency(store, q);
  const uint32_t x = ResolveToken(store, x_surface, "--x");
  const uint32_t xprime = ResolveToken(store, xp_surface, "--xprime");
  const lexveil::PrivacyParams params{epsilon, p, lexveil::kScoreSensitivity};

  const lexveil::PrivacyReport report =
      case1 ? lexveil::CheckCase1(x, xprime, partition, table, params, trials,
                                  seed, workers)
            : lexveil::CheckCase2(x, xprime, partition, table, params, trials,
                                  seed, workers);

  if (!json_path.empty()) {
    std::ofstream out = OpenOutput(json_path, "report");
    out << lexveil::ReportToJson(report).dump(2) << "\n";
    if (!out) {
      lexveil::Fail(lexveil::ErrorKind::kIo,
                    "failed to write report '" + json_path + "'");
    }
  }

  std::cout << report.case_name << " " << (report.pass ? "PASS" : "FAIL")
            << ": worst |log ratio| = " << report.worst_log_ratio
            << " (bound " << report.bound << " + slack " << report.worst_slack
            << "), shared outcomes = " << report.pairs.size()
            << ", support mismatches = " << report.support_mismatches.size()
            << ", trials = " << report.trials << "\n";
  if (!report.testable) {
    std::cout << "note: supports do not overlap; nothing to compare\n";
  }
  return report.pass ? 0 : 1;
}

int RunServe(const std::string& bind, const std::string& store_path,
             const std::string& model_name, uint64_t model_seed) {
  const lexveil::net::Endpoint endpoint = lexveil::net::ParseEndpoint(bind);
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  lexveil::ServerConfig config;
  config.host = endpoint.host;
  config.port = endpoint.port;
  config.model = lexveil::ToyModel::ParseKind(model_name);
  config.model_seed = model_seed;
  lexveil::InferenceServer server(store, config);
  server.Start();
  std::cout << "listening on " << endpoint.host << ":" << server.port()
            << " (model=" << model_name << ", vocab=" << store.size() << ")"
            << std::endl;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  server.RunUntil(g_shutdown);
  std::cout << "shutting down" << std::endl;
  return 0;
}

int RunClient(const std::string& connect, const std::string& store_path,
              const std::string& table_path,
              const lexveil::SanitizerConfig& base_config, bool k_given,
              const std::string& in_path, const std::string& report_path) {
  lexveil::SanitizerConfig config = base_config;
  const lexveil::net::Endpoint endpoint = lexveil::net::ParseEndpoint(connect);
  const lexveil::EmbeddingStore store = LoadStoreFile(store_path);
  const lexveil::CandidateTable table = LoadTableFile(table_path, store);
  if (!k_given) config.k = table.k();
  config.Validate();
  lexveil::CheckPipeline(store, table, config.k);
  const lexveil::SensitivityPartition partition =
      lexveil::PartitionByFrequency(store, config.q);
  const std::vector<std::string> documents = ReadLines(in_path);

  const lexveil::net::Socket socket =
      lexveil::net::Connect(endpoint.host, endpoint.port);

  nlohmann::json requests = nlohmann::json::array();
  lexveil::TimingBreakdown aggregate;
  for (size_t i = 0; i < documents.size(); ++i) {
    lexveil::ClientConfig client_config;
    client_config.sanitizer = config;
    client_config.session_id = i;
    client_config.doc_index = i;
    const lexveil::ClientResult result = lexveil::ClientInfer(
        socket, documents[i], store, partition, table, client_config);

    std::ostringstream surfaces;
    for (size_t j = 0; j < result.response.output_ids.size(); ++j) {
      if (j > 0) surfaces << ' ';
      const uint32_t id = result.response.output_ids[j];
      surfaces << (id == lexveil::kOovId ? std::string("<oov>")
                                         : std::string(store.surface(id)));
    }
    std::cout << surfaces.str() << "\n";

    requests.push_back(nlohmann::json{
        {"session", result.response.session_id},
        {"sentTokens", result.sent_ids.size()},
        {"outputTokens", result.response.output_ids.size()},
        {"timing", lexveil::TimingToJson(result.timing)},
    });
    aggregate.sanitize_us += result.timing.sanitize_us;
    aggregate.embed_us += result.timing.embed_us;
    aggregate.serialize_us += result.timing.serialize_us;
    aggregate.network_us += result.timing.network_us;
    aggregate.server_compute_us += result.timing.server_compute_us;
    aggregate.total_us += result.timing.total_us;
  }

  if (!report_path.empty()) {
    std::ofstream out = OpenOutput(report_path, "report");
    out << nlohmann::json{{"endpoint", connect},
                          {"requests", requests},
                          {"aggregate", lexveil::TimingToJson(aggregate)}}
               .dump(2)
        << "\n";
    if (!out) {
      lexveil::Fail(lexveil::ErrorKind::kIo,
                    "failed to write report '" + report_path + "'");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lexveil: metric differential privacy for text via noisy "
      "nearest-neighbor token replacement"};
  app.require_subcommand(1);

  // build-index
  std::string bi_store;
  std::string bi_out;
  uint32_t bi_k = 30;
  unsigned bi_workers = 0;
  CLI::App* build_index =
      app.add_subcommand("build-index", "Precompute the candidate table");
  build_index->add_option("--store", bi_store, "embedding store file")
      ->required();
  build_index->add_option("--k", bi_k, "candidates per token (default 30)");
  build_index->add_option("--out", bi_out, "table output file")->required();
  build_index->add_option("--workers", bi_workers,
                          "worker threads (0 = hardware)");

  // partition
  std::string pa_store;
  double pa_q = 0.20;
  CLI::App* partition = app.add_subcommand(
      "partition", "Show the low-frequency sensitivity partition");
  partition->add_option("--store", pa_store, "embedding store file")
      ->required();
  partition->add_option("--q", pa_q, "sensitive quantile in [0,1]")
      ->required();

  // sanitize
  std::string sa_store;
  std::string sa_table;
  std::string sa_in;
  std::string sa_out;
  std::string sa_audit;
  lexveil::SanitizerConfig sa_config;
  unsigned sa_workers = 0;
  CLI::App* sanitize =
      app.add_subcommand("sanitize", "Sanitize documents (one per line)");
  sanitize->add_option("--store", sa_store, "embedding store file")
      ->required();
  sanitize->add_option("--table", sa_table, "candidate table file")
      ->required();
  sanitize->add_option("--epsilon", sa_config.epsilon,
                       "privacy budget per replaced token (default 1.0)");
  sanitize->add_option("--p", sa_config.p,
                       "replacement probability for non-sensitive tokens "
                       "(default 0.3)");
  sanitize->add_option("--q", sa_config.q,
                       "sensitive frequency quantile (default 0.20)");
  sanitize->add_option("--seed", sa_config.seed, "RNG seed (default 0)");
  CLI::Option* sa_k_opt = sanitize->add_option(
      "--k", sa_config.k, "expected table k (default: read from table)");
  sanitize->add_option("--in", sa_in, "input file, one document per line")
      ->required();
  sanitize->add_option("--out", sa_out, "sanitized output file")->required();
  sanitize->add_option("--audit", sa_audit,
                       "audit log output (JSON lines), optional");
  sanitize->add_option("--workers", sa_workers,
                       "worker threads (0 = hardware)");

  // verify case1|case2
  std::string ve_store;
  std::string ve_table;
  std::string ve_x;
  std::string ve_xprime;
  std::string ve_json;
  double ve_epsilon = 1.0;
  double ve_p = 0.3;
  double ve_q = 0.20;
  uint64_t ve_trials = lexveil::kDefaultCheckTrials;
  uint64_t ve_seed = 0;
  unsigned ve_workers = 0;
  CLI::App* verify = app.add_subcommand(
      "verify", "Statistically check the privacy bound on a token pair");
  verify->require_subcommand(1);
  CLI::App* case1 = verify->add_subcommand(
      "case1", "Both tokens sensitive; bound is epsilon");
  CLI::App* case2 = verify->add_subcommand(
      "case2",
      "x sensitive, xprime non-sensitive; bound is ln(1/p) + epsilon");
  for (CLI::App* sub : {case1, case2}) {
    sub->add_option("--store", ve_store, "embedding store file")->required();
    sub->add_option("--table", ve_table, "candidate table file")->required();
    sub->add_option("--epsilon", ve_epsilon, "privacy budget (default 1.0)");
    sub->add_option("--p", ve_p, "replacement probability (default 0.3)");
    sub->add_option("--q", ve_q, "sensitive frequency quantile (default 0.20)");
    sub->add_option("--x", ve_x, "first token surface")->required();
    sub->add_option("--xprime", ve_xprime, "second token surface")->required();
    sub->add_option("--trials", ve_trials,
                    "Monte-Carlo trials per input (default 1000000)");
    sub->add_option("--seed", ve_seed, "RNG seed (default 0)");
    sub->add_option("--json", ve_json, "report output file");
    sub->add_option("--workers", ve_workers, "worker threads (0 = hardware)");
  }

  // serve
  std::string sv_bind;
  std::string sv_store;
  std::string sv_model = "echo";
  uint64_t sv_model_seed = 42;
  CLI::App* serve =
      app.add_subcommand("serve", "Run the split-inference server stub");
  serve->add_option("--bind", sv_bind, "HOST:PORT (port 0 = ephemeral)")
      ->required();
  serve->add_option("--store", sv_store, "embedding store file")->required();
  serve->add_option("--model", sv_model, "toy model: echo|linear");
  serve->add_option("--model-seed", sv_model_seed,
                    "seed for the linear model map (default 42)");

  // client
  std::string cl_connect;
  std::string cl_store;
  std::string cl_table;
  std::string cl_in;
  std::string cl_report;
  lexveil::SanitizerConfig cl_config;
  CLI::App* client = app.add_subcommand(
      "client", "Sanitize locally and run split inference against a server");
  client->add_option("--connect", cl_connect, "HOST:PORT")->required();
  client->add_option("--store", cl_store, "embedding store file")->required();
  client->add_option("--table", cl_table, "candidate table file")->required();
  client->add_option("--epsilon", cl_config.epsilon,
                     "privacy budget per replaced token (default 1.0)");
  client->add_option("--p", cl_config.p,
                     "replacement probability (default 0.3)");
  client->add_option("--q", cl_config.q,
                     "sensitive frequency quantile (default 0.20)");
  client->add_option("--seed", cl_config.seed, "RNG seed (default 0)");
  CLI::Option* cl_k_opt = client->add_option(
      "--k", cl_config.k, "expected table k (default: read from table)");
  client->add_option("--in", cl_in, "input file, one document per line")
      ->required();
  client->add_option("--report", cl_report, "timing report output (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    // Help output is a success; anything else is a configuration error.
    const int code = app.exit(error);
    return code == 0 ? 0 : lexveil::ExitCodeFor(lexveil::ErrorKind::kConfig);
  }

  try {
    if (build_index->parsed()) {
      return RunBuildIndex(bi_store, bi_k, bi_out, bi_workers);
    }
    if (partition->parsed()) {
      return RunPartition(pa_store, pa_q);
    }
    if (sanitize->parsed()) {
      return RunSanitize(sa_store, sa_table, sa_config, sa_k_opt->count() > 0,
                         sa_in, sa_out, sa_audit, sa_workers);
    }
    if (verify->parsed()) {
      return RunVerify(case1->parsed(), ve_store, ve_table, ve_epsilon, ve_p,
                       ve_q, ve_x, ve_xprime, ve_trials, ve_seed, ve_json,
                       ve_workers);
    }
    if (serve->parsed()) {
      return RunServe(sv_bind, sv_store, sv_model, sv_model_seed);
    }
    if (client->parsed()) {
      return RunClient(cl_connect, cl_store, cl_table, cl_config,
                       cl_k_opt->count() > 0, cl_in, cl_report);
    }
  } catch (const lexveil::Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return lexveil::ExitCodeFor(error.kind());
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
