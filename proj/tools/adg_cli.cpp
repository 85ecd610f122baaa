// adg: command-line front end.
//   validate  graph + template registry checks
//   align     cue-to-node alignment, accuracy when oracle nodes are present
//   generate  feedback reports, single response or batch
//   stats     significance tables from summary statistics and counts
//   serve     HTTP service
// Exit status: 0 success, 1 error findings, 2 usage errors.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adg/adg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kUsage = 2;

struct ProviderOptions {
  std::string name = "char_ngram";
  int ngram = 3;
  std::string endpoint;
  std::string model = "default";
  std::string cache;
  int timeout_ms = 5000;
};

void add_provider_options(CLI::App* cmd, ProviderOptions& o) {
  cmd->add_option("--provider", o.name, "char_ngram | token_tfidf | remote_embedding")
      ->check(CLI::IsMember({"char_ngram", "token_tfidf", "remote_embedding"}));
  cmd->add_option("--ngram", o.ngram, "character n-gram order")->check(CLI::PositiveNumber);
  cmd->add_option("--endpoint", o.endpoint, "embedding service URL");
  cmd->add_option("--model", o.model, "embedding model name");
  cmd->add_option("--cache", o.cache, "embedding cache file");
  cmd->add_option("--timeout-ms", o.timeout_ms, "embedding request timeout");
}

/// Remote providers fall back to character n-grams when unavailable.
std::shared_ptr<const adg::SimilarityProvider> make_provider(const ProviderOptions& o,
                                                             const std::map<std::string, adg::Adg>& graphs) {
  if (o.name == "token_tfidf") {
    std::vector<std::string> docs;
    for (const auto& [id, g] : graphs) {
      for (const auto& n : g.nodes) docs.push_back(n.text);
    }
    return std::make_shared<adg::TokenTfidfProvider>(docs);
  }
  auto ngram = std::make_shared<adg::CharNgramProvider>(o.ngram);
  if (o.name == "remote_embedding") {
    if (o.endpoint.empty()) throw adg::Error("usage", "--provider remote_embedding needs --endpoint");
    auto client = std::make_shared<adg::EmbeddingClient>(
        adg::RemoteEmbeddingConfig{o.endpoint, o.model, std::chrono::milliseconds(o.timeout_ms), o.cache});
    return std::make_shared<adg::FallbackProvider>(std::vector<std::shared_ptr<const adg::SimilarityProvider>>{
        std::make_shared<adg::RemoteEmbeddingProvider>(client), ngram});
  }
  return ngram;
}

std::vector<fs::path> expand(const std::vector<std::string>& paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.emplace_back(p);
    }
  }
  return out;
}

std::map<std::string, adg::Adg> load_graphs(const std::vector<std::string>& paths) {
  std::map<std::string, adg::Adg> graphs;
  for (const auto& f : expand(paths)) {
    auto g = adg::load_adg_file(f.string());
    const auto key = g.prompt_id;
    if (!graphs.emplace(key, std::move(g)).second) {
      throw adg::Error("duplicate-graph", "more than one graph for prompt '" + key + "'", key);
    }
  }
  return graphs;
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    adg::detail::write_file(path, content);
  }
}

// --- validate -----------------------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> adg;
  std::string templates;
  std::string corpus;
  bool json = false;
};

int run_validate(const ValidateArgs& a) {
  adg::ValidationReport report;
  std::optional<adg::TemplateRegistry> registry;
  std::vector<adg::PromptSpec> prompts;
  const auto guard = [&](const std::string& subject, auto&& fn) {
    try {
      fn();
    } catch (const adg::Error& e) {
      report.error(e.code(), e.message(), e.subject().empty() ? subject : e.subject());
    }
  };
  if (!a.templates.empty()) guard(a.templates, [&] { registry = adg::load_registry_file(a.templates); });
  if (!a.corpus.empty()) {
    guard(a.corpus, [&] {
      adg::ValidationReport warnings;
      auto corpus = adg::load_corpus_path(a.corpus, &warnings);
      report.merge(warnings);
      prompts = corpus.prompts;
    });
  }
  for (const auto& f : expand(a.adg)) {
    guard(f.string(), [&] {
      const auto g = adg::load_adg_file(f.string(), adg::LoadMode::lenient);
      adg::TemplateKeyCheck hook;
      if (registry) hook = [&](std::string_view key) { return registry->has_key(key); };
      report.merge(adg::validate_graph(g, hook));
      if (registry) report.merge(adg::validate_registry(*registry, g, prompts));
    });
  }
  std::cout << (a.json ? report.to_json().dump(2) + "\n" : report.to_text());
  return report.ok() ? kOk : kFindings;
}

// --- align --------------------------------------------------------------------

struct AlignArgs {
  std::string corpus;
  std::vector<std::string> adg;
  bool oracle = false;
  double threshold = 0.15;
  std::string out;
  ProviderOptions provider;
};

int run_align(const AlignArgs& a) {
  const auto corpus = adg::load_corpus_path(a.corpus);
  const auto graphs = load_graphs(a.adg);
  const auto provider = make_provider(a.provider, graphs);
  adg::AlignConfig config;
  config.threshold = a.threshold;
  config.check();

  const auto eval = adg::stats::alignment_accuracy(corpus, graphs, *provider, config);
  nlohmann::ordered_json doc{{"results", nlohmann::ordered_json::array()}};
  for (std::size_t i = 0; i < eval.results.size(); ++i) {
    auto j = eval.results[i].to_json();
    if (a.oracle) j["oracle_node_id"] = eval.oracle_for_result[i].empty() ? nullptr : nlohmann::ordered_json(eval.oracle_for_result[i]);
    doc["results"].push_back(std::move(j));
  }
  if (a.oracle) doc["accuracy"] = eval.to_json();
  if (!a.out.empty()) write_or_print(a.out, doc.dump(2) + "\n");
  if (a.oracle) {
    char line[128];
    std::snprintf(line, sizeof line, "evaluated=%zu correct=%zu skipped=%zu top1=%s\n", eval.evaluated, eval.correct,
                  eval.skipped, eval.top1 ? std::to_string(*eval.top1).c_str() : "n/a");
    std::cout << line;
  } else if (a.out.empty()) {
    std::cout << doc.dump(2) << "\n";
  }
  return kOk;
}

// --- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::string corpus;
  std::vector<std::string> adg;
  std::string templates;
  std::string response_id;
  std::string out_dir;
  std::string language = "en";
  std::string format = "json";
  unsigned workers = 0;
  bool oracle = false;
  double threshold = 0.15;
  ProviderOptions provider;
};

int run_generate(const GenerateArgs& a) {
  auto corpus = adg::load_corpus_path(a.corpus);
  const auto graphs = load_graphs(a.adg);
  const auto registry = adg::load_registry_file(a.templates);
  const auto provider = make_provider(a.provider, graphs);
  adg::FeedbackConfig config;
  config.align.threshold = a.threshold;
  config.policy.language = a.language;

  if (!a.response_id.empty()) {
    std::erase_if(corpus.responses, [&](const adg::ScoredResponse& r) { return r.response_id != a.response_id; });
    if (corpus.responses.empty()) {
      throw adg::Error("unknown-response", "no response '" + a.response_id + "'", a.response_id);
    }
  }
  for (const auto& r : corpus.responses) adg::validate_response(corpus.prompt(r.prompt_id), r);

  const auto reports = adg::generate_batch(corpus, graphs, registry, *provider, config, a.oracle, a.workers);
  const auto render = [&](const adg::FeedbackReport& r) {
    return a.format == "text" ? r.to_text() : r.to_document();
  };
  if (a.out_dir.empty()) {
    for (const auto& r : reports) std::cout << render(r);
    return kOk;
  }
  fs::create_directories(a.out_dir);
  const auto ext = a.format == "text" ? ".txt" : ".json";
  for (const auto& r : reports) adg::detail::write_file((fs::path(a.out_dir) / (r.response_id + ext)).string(), render(r));
  std::cout << "wrote " << reports.size() << " report(s) to " << a.out_dir << "\n";
  return kOk;
}

// --- stats --------------------------------------------------------------------

struct StatsArgs {
  std::string table1;
  std::string table2;
  std::string table3;
  std::string table5;
  std::string welch;
  std::string json_out;
  bool yates = false;
  bool check = false;
};

int run_stats(const StatsArgs& a) {
  namespace st = adg::stats;
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  bool all_match = true;
  const auto emit = [&](const std::string& name, const std::vector<st::TableLine>& lines) {
    doc[name] = nlohmann::ordered_json::array();
    for (const auto& l : lines) {
      const auto& test = l.tests.front();
      std::cout << name << "\t" << l.id << "\t" << l.produced;
      if (l.tests.size() == 1) {
        std::cout << "\tstat=" << test["statistic"].get<double>() << "\tdf=" << test["df"].get<double>()
                  << "\tp=" << test["p_value"].get<double>();
      } else {
        std::cout << "\tp=";
        for (std::size_t i = 0; i < l.tests.size(); ++i) std::cout << (i ? "/" : "") << l.tests[i]["p_value"].get<double>();
      }
      if (l.expected) std::cout << "\texpected=" << *l.expected << "\t" << (l.matches() ? "match" : "MISMATCH");
      std::cout << "\n";
      all_match = all_match && l.matches();
      doc[name].push_back(l.to_json());
    }
  };
  st::ChiSquareOptions chi;
  chi.yates = a.yates;
  if (!a.table1.empty()) emit("table1", st::reproduce_welch(st::parse_welch_table(adg::detail::read_file(a.table1))));
  if (!a.welch.empty()) emit("welch", st::reproduce_welch(st::parse_welch_table(adg::detail::read_file(a.welch))));
  if (!a.table2.empty()) emit("table2", st::reproduce_counts(st::parse_count_table(adg::detail::read_file(a.table2)), chi));
  if (!a.table3.empty()) {
    // the pairwise table's legend distinguishes only p < .01 from ns
    auto pairwise = chi;
    pairwise.scale = st::MarkerScale::two_level;
    emit("table3", st::reproduce_pairwise(st::parse_count_table(adg::detail::read_file(a.table3)), pairwise));
  }
  if (!a.table5.empty()) emit("table5", st::reproduce_welch(st::parse_welch_table(adg::detail::read_file(a.table5))));
  if (doc.empty()) throw adg::Error("usage", "stats needs at least one table option");
  if (!a.json_out.empty()) write_or_print(a.json_out, doc.dump(2) + "\n");
  return a.check && !all_match ? kFindings : kOk;
}

// --- serve --------------------------------------------------------------------

struct ServeArgs {
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::vector<std::string> providers{"char_ngram"};
  std::string language = "en";
  std::string endpoint;
  std::string model = "default";
  std::string cache;
  int max_attempts = 2;
};

adg::Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  adg::ServiceConfig config;
  config.data_dir = a.data_dir;
  config.host = a.host;
  config.port = a.port;
  config.auth_token = a.token;
  config.providers = a.providers;
  config.language = a.language;
  config.default_max_attempts = a.max_attempts;
  if (!a.endpoint.empty()) config.remote = adg::RemoteEmbeddingConfig{a.endpoint, a.model, std::chrono::milliseconds(5000), a.cache};
  adg::Service service(config, [](const std::string& line) { std::clog << line << std::endl; });
  g_service = &service;
  std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
  std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
  std::clog << "listening on " << a.host << ":" << a.port << std::endl;
  service.serve();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Answer diagnostic graph feedback toolkit"};
  app.require_subcommand(1);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "check graphs and a template registry");
  validate->add_option("--adg", va.adg, "graph files or directories")->required();
  validate->add_option("--templates", va.templates, "template registry");
  validate->add_option("--corpus", va.corpus, "corpus supplying prompts for criterion checks");
  validate->add_flag("--json", va.json, "machine-readable report");

  AlignArgs aa;
  auto* align = app.add_subcommand("align", "align justification cues to graph nodes");
  align->add_option("--corpus", aa.corpus, "corpus file or manifest directory")->required();
  align->add_option("--adg", aa.adg, "graph files or directories")->required();
  align->add_flag("--oracle", aa.oracle, "score against oracle nodes");
  align->add_option("--threshold", aa.threshold, "minimum similarity")->check(CLI::Range(0.0, 1.0));
  align->add_option("--out", aa.out, "results document");
  add_provider_options(align, aa.provider);

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "render feedback reports");
  generate->add_option("--corpus", ga.corpus, "corpus file or manifest directory")->required();
  generate->add_option("--adg", ga.adg, "graph files or directories")->required();
  generate->add_option("--templates", ga.templates, "template registry")->required();
  generate->add_option("--response", ga.response_id, "only this response");
  generate->add_option("--out-dir", ga.out_dir, "one report file per response");
  generate->add_option("--language", ga.language, "template language");
  generate->add_option("--format", ga.format, "json | text")->check(CLI::IsMember({"json", "text"}));
  generate->add_option("--workers", ga.workers, "worker threads (0 = hardware)");
  generate->add_flag("--oracle", ga.oracle, "use oracle nodes instead of the aligner");
  generate->add_option("--threshold", ga.threshold, "minimum similarity")->check(CLI::Range(0.0, 1.0));
  add_provider_options(generate, ga.provider);

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "significance tests from published tables");
  stats->add_option("--table1", sa.table1, "Welch rows, questionnaire means");
  stats->add_option("--table2", sa.table2, "count rows, chi-square goodness of fit");
  stats->add_option("--table3", sa.table3, "six-point Likert rows, pairwise tests");
  stats->add_option("--table5", sa.table5, "Welch rows, score improvements");
  stats->add_option("--welch", sa.welch, "any other Welch table");
  stats->add_option("--json", sa.json_out, "results document");
  stats->add_flag("--yates", sa.yates, "continuity correction for two-category tests");
  stats->add_flag("--check", sa.check, "exit 1 when a produced marker differs from the expected one");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "start the HTTP service");
  serve->add_option("--data-dir", sv.data_dir, "data directory")->required();
  serve->add_option("--host", sv.host);
  serve->add_option("--port", sv.port);
  serve->add_option("--token", sv.token, "static bearer token");
  serve->add_option("--providers", sv.providers, "provider chain, tried in order");
  serve->add_option("--language", sv.language);
  serve->add_option("--endpoint", sv.endpoint, "embedding service URL");
  serve->add_option("--model", sv.model);
  serve->add_option("--cache", sv.cache);
  serve->add_option("--max-attempts", sv.max_attempts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*validate) return run_validate(va);
    if (*align) return run_align(aa);
    if (*generate) return run_generate(ga);
    if (*stats) return run_stats(sa);
    if (*serve) return run_serve(sv);
  } catch (const adg::Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.subject().empty()) std::cerr << " [" << e.subject() << "]";
    std::cerr << "\n";
    return e.code() == "usage" ? kUsage : kFindings;
  }
  return kUsage;
}
