// Headless driver: ingest corpora, run scripted review simulations, evaluate
// exported sessions and launch the HTTP service.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qfsum/error.hpp"
#include "qfsum/ingestion.hpp"
#include "qfsum/metrics.hpp"
#include "qfsum/persistence.hpp"
#include "qfsum/service.hpp"
#include "qfsum/simulation.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qfsum::Error(qfsum::ErrorCode::kInvalidArgument, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qfsum::Error(qfsum::ErrorCode::kInvalidArgument, "cannot write " + path);
  out << content;
  if (!out) throw qfsum::Error(qfsum::ErrorCode::kInvalidArgument, "cannot write " + path);
}

void Emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
  } else {
    WriteFile(out, content);
  }
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::vector<std::string> paths;
  std::string out;
  std::string extractor = "builtin-text";
  std::size_t min_words = 2;
};

int RunIngest(const IngestArgs& args) {
  const auto registry = qfsum::ExtractorRegistry::FromConfig(args.extractor);
  std::vector<qfsum::Document> docs;
  for (const auto& path : args.paths) {
    const auto bytes = ReadFile(path);
    docs.push_back(qfsum::IngestDocument("doc-" + std::to_string(docs.size() + 1),
                                         std::filesystem::path(path).filename().string(),
                                         qfsum::AsBytes(bytes), registry, {args.min_words}));
  }
  Emit(args.out, qfsum::ExportCorpus(docs));
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  qfsum::SyntheticCorpusOptions options;
  std::string corpus_out;
  std::string gold_out;
  std::string query_out;
};

int RunSynth(const SynthArgs& args) {
  const auto corpus = qfsum::GenerateSyntheticCorpus(args.options);
  WriteFile(args.corpus_out, qfsum::ExportCorpus(corpus.documents));
  WriteFile(args.gold_out,
            qfsum::ExportGoldCsv(qfsum::GoldFromFlags(corpus.documents, corpus.relevant)));
  Emit(args.query_out, corpus.query + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string corpus;
  std::string query;
  std::string query_file;
  std::string gold;
  bool synthetic = false;
  qfsum::SyntheticCorpusOptions synthetic_options;
  std::string embedding = "word-unigram";
  std::string provider;
  std::string classifier = "logreg";
  std::size_t batch_size = 10;
  std::size_t seeds = 1;
  std::uint64_t first_seed = 1;
  std::size_t stop_threshold = 3;
  bool ignore_stop = false;
  double effort = 0.30;
  std::string out;
};

// Step-function value of a per-batch series at a fixed effort.
std::optional<const qfsum::SimulationPoint*> PointAt(const qfsum::SimulationRun& run,
                                                     double effort) {
  const qfsum::SimulationPoint* last = nullptr;
  for (const auto& p : run.series) {
    if (p.effort > effort + 1e-12) break;
    last = &p;
  }
  if (last == nullptr) return std::nullopt;
  return last;
}

int RunSimulate(const SimulateArgs& args) {
  qfsum::SessionSettings settings;
  settings.embedding.kind = qfsum::ParseEmbeddingKind(args.embedding);
  if (!args.provider.empty()) settings.embedding.provider_endpoint = args.provider;
  settings.classifier.kind = qfsum::ParseClassifierKind(args.classifier);
  settings.batch_size = args.batch_size;
  settings.stop_threshold = args.stop_threshold;
  try {
    settings.Validate();
  } catch (const qfsum::Error& e) {
    throw UsageError(e.what());
  }
  if (args.synthetic == !args.corpus.empty()) {
    throw UsageError("give exactly one of --corpus or --synthetic");
  }
  if (!args.synthetic && args.gold.empty()) throw UsageError("--corpus needs --gold");
  if (!args.synthetic && args.query.empty() == args.query_file.empty()) {
    throw UsageError("give exactly one of --query or --query-file");
  }

  json seeds = json::array();
  std::vector<qfsum::SimulationRun> runs;
  std::vector<std::vector<qfsum::PrPoint>> baseline_curves;
  std::size_t wins = 0;
  std::size_t compared = 0;
  double gap_sum = 0.0;
  std::string effort_csv = "seed,batch,phase,effort,precision,recall\n";

  for (std::size_t k = 0; k < args.seeds; ++k) {
    const std::uint64_t seed = args.first_seed + k;
    std::vector<qfsum::Document> docs;
    std::string query;
    std::vector<bool> relevant;
    if (args.synthetic) {
      auto options = args.synthetic_options;
      options.seed = seed;
      auto corpus = qfsum::GenerateSyntheticCorpus(options);
      docs = std::move(corpus.documents);
      query = std::move(corpus.query);
      relevant = std::move(corpus.relevant);
    } else {
      docs = qfsum::ParseCorpus(ReadFile(args.corpus));
      query = args.query.empty() ? ReadFile(args.query_file) : args.query;
      while (!query.empty() && (query.back() == '\n' || query.back() == '\r')) query.pop_back();
      relevant = qfsum::AlignGold(docs, qfsum::ParseGoldCsv(ReadFile(args.gold)));
    }

    qfsum::SimulationOptions sim;
    sim.settings = settings;
    sim.settings.classifier.seed = seed;
    sim.honor_stop_rule = !args.ignore_stop;
    auto run = qfsum::RunCalSimulation(docs, query, relevant, sim);

    json entry = {{"seed", seed}, {"cal", qfsum::RunToJson(run)}};
    const bool any_relevant = std::find(relevant.begin(), relevant.end(), true) != relevant.end();
    if (any_relevant) {
      const double cal = qfsum::RecallAtEffort(run, args.effort);
      const double base = qfsum::StaticVsmRecallAtEffort(docs, query, relevant,
                                                         settings.embedding, args.effort);
      entry["cal_recall_at_effort"] = cal;
      entry["baseline_recall_at_effort"] = base;
      ++compared;
      if (cal >= base) ++wins;
      gap_sum += cal - base;
      std::vector<std::string> texts;
      for (const auto& d : docs) {
        for (const auto& s : d.sentences) texts.push_back(s.text);
      }
      baseline_curves.push_back(
          qfsum::BaselinePrCurve(query, texts, relevant, settings.embedding));
    } else {
      entry["cal_recall_at_effort"] = nullptr;
      entry["baseline_recall_at_effort"] = nullptr;
    }
    for (const auto& p : run.series) {
      effort_csv += std::to_string(seed) + "," + std::to_string(p.batch) + "," +
                    std::string(qfsum::ToString(p.phase)) + "," + json(p.effort).dump() + "," +
                    json(p.precision).dump() + "," + (p.recall ? json(*p.recall).dump() : "") +
                    "\n";
    }
    seeds.push_back(std::move(entry));
    runs.push_back(std::move(run));
  }

  json grid = json::array();
  for (int g = 1; g <= 20; ++g) {
    const double effort = g * 0.05;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t n = 0;
    std::size_t n_recall = 0;
    for (const auto& run : runs) {
      if (const auto p = PointAt(run, effort)) {
        precision += (*p)->precision;
        ++n;
        if ((*p)->recall) {
          recall += *(*p)->recall;
          ++n_recall;
        }
      }
    }
    grid.push_back({{"effort", effort},
                    {"mean_precision", n ? json(precision / n) : json(nullptr)},
                    {"mean_recall", n_recall ? json(recall / n_recall) : json(nullptr)},
                    {"runs", n}});
  }

  std::vector<double> recall_grid;
  for (int g = 0; g <= 10; ++g) recall_grid.push_back(g / 10.0);
  const auto baseline_avg = qfsum::AveragePrCurves(baseline_curves, recall_grid);
  json baseline = json::array();
  for (const auto& p : baseline_avg) {
    baseline.push_back({{"precision", p.precision}, {"recall", p.recall}});
  }

  json report = {
      {"aggregate",
       {{"baseline_pr_curve", compared ? baseline : json(nullptr)},
        {"cal_beats_baseline_fraction",
         compared ? json(static_cast<double>(wins) / compared) : json(nullptr)},
        {"effort_grid", grid},
        {"mean_recall_gap_at_effort", compared ? json(gap_sum / compared) : json(nullptr)}}},
      {"effort_checkpoint", args.effort},
      {"seeds", seeds},
      {"settings",
       {{"batch_size", settings.batch_size},
        {"classifier", qfsum::ToString(settings.classifier.kind)},
        {"embedding", qfsum::ToString(settings.embedding.kind)},
        {"honor_stop_rule", !args.ignore_stop},
        {"stop_threshold", settings.stop_threshold}}},
  };

  if (args.out.empty() || args.out == "-") {
    std::cout << report.dump(2) << '\n';
  } else {
    WriteFile(args.out + ".json", report.dump(2) + "\n");
    WriteFile(args.out + ".effort.csv", effort_csv);
    WriteFile(args.out + ".pr.csv", qfsum::PrSeriesCsv(baseline_avg));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string state;
  std::string out;
};

int RunEvaluate(const EvaluateArgs& args) {
  const auto snapshot = qfsum::ParseState(ReadFile(args.state));
  auto unprocessed = snapshot;
  unprocessed.processed = false;  // metrics need no embeddings or provider
  const auto session = qfsum::Session::FromSnapshot(std::move(unprocessed));
  const auto report = qfsum::Evaluate(session);
  Emit(args.out, qfsum::ReportToJson(report).dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string extractor = "builtin-text";
  std::string provider;
  std::size_t max_documents = 5;
  std::size_t batch_size = 10;
};

qfsum::Service* g_service = nullptr;

int RunServe(const ServeArgs& args) {
  if (args.port < 1 || args.port > 65535) {
    throw UsageError("port must be in 1..65535");
  }
  qfsum::ServiceOptions options;
  options.extractor = args.extractor;
  if (!args.provider.empty()) options.provider_endpoint = args.provider;
  options.defaults.max_documents = args.max_documents;
  options.defaults.batch_size = args.batch_size;
  qfsum::Service service(options);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->Stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->Stop();
  });
  std::cerr << "listening on http://" << args.host << ":" << args.port << qfsum::kApiPrefix
            << "\n";
  const bool ok = service.Listen(args.host, args.port);
  g_service = nullptr;
  if (!ok) {
    std::cerr << "error: cannot listen on " << args.host << ":" << args.port << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-focused summarization by continuous active learning"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Extract and segment files into a corpus");
  ingest_cmd->add_option("paths", ingest.paths, "Input files")->required();
  ingest_cmd->add_option("-o,--out", ingest.out, "Corpus JSON output (default stdout)");
  ingest_cmd->add_option("--extractor", ingest.extractor,
                         "builtin-text or an external PDF command template using {input}");
  ingest_cmd->add_option("--min-words", ingest.min_words, "Drop shorter sentences")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a planted-cluster synthetic corpus");
  synth_cmd->add_option("--corpus-out", synth.corpus_out, "Corpus JSON path")->required();
  synth_cmd->add_option("--gold-out", synth.gold_out, "Gold CSV path")->required();
  synth_cmd->add_option("--query-out", synth.query_out, "Query text path (default stdout)");
  synth_cmd->add_option("--seed", synth.options.seed, "Generator seed");
  synth_cmd->add_option("--documents", synth.options.documents)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sentences", synth.options.sentences_per_document)
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--relevant-fraction", synth.options.relevant_fraction)
      ->check(CLI::Range(0.0, 1.0));

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a scripted reviewer through the loop");
  sim_cmd->add_option("--corpus", sim.corpus, "Corpus JSON from `ingest`");
  sim_cmd->add_option("--query", sim.query, "Query paragraph");
  sim_cmd->add_option("--query-file", sim.query_file, "File holding the query paragraph");
  sim_cmd->add_option("--gold", sim.gold, "Gold CSV: document,sentence_index,label");
  sim_cmd->add_flag("--synthetic", sim.synthetic, "Generate a planted-cluster corpus per seed");
  sim_cmd->add_option("--synthetic-documents", sim.synthetic_options.documents)
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--synthetic-sentences", sim.synthetic_options.sentences_per_document)
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--synthetic-relevant-fraction", sim.synthetic_options.relevant_fraction)
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--embedding", sim.embedding, "Sentence representation")
      ->check(CLI::IsMember({"word-unigram", "char-trigram", "external-dense"}));
  sim_cmd->add_option("--provider", sim.provider, "Dense embedding endpoint (external-dense)");
  sim_cmd->add_option("--classifier", sim.classifier, "Relevance classifier")
      ->check(CLI::IsMember({"logreg", "svm"}));
  sim_cmd->add_option("--batch-size", sim.batch_size)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seeds", sim.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--first-seed", sim.first_seed, "First seed value");
  sim_cmd->add_option("--stop-threshold", sim.stop_threshold)->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--ignore-stop", sim.ignore_stop, "Keep exploring after the stopping rule");
  sim_cmd->add_option("--effort", sim.effort, "Effort checkpoint for the baseline comparison")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("-o,--out", sim.out,
                      "Output prefix: writes PREFIX.json, PREFIX.effort.csv, PREFIX.pr.csv");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute metrics for an exported state file");
  eval_cmd->add_option("state", eval.state, "State JSON")->required();
  eval_cmd->add_option("-o,--out", eval.out, "Report JSON output (default stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);
  serve_cmd->add_option("--extractor", serve.extractor,
                        "builtin-text or an external PDF command template using {input}");
  serve_cmd->add_option("--provider", serve.provider, "Default dense embedding endpoint");
  serve_cmd->add_option("--max-documents", serve.max_documents)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--batch-size", serve.batch_size)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return RunIngest(ingest);
    if (*synth_cmd) return RunSynth(synth);
    if (*sim_cmd) return RunSimulate(sim);
    if (*eval_cmd) return RunEvaluate(eval);
    if (*serve_cmd) return RunServe(serve);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qfsum::Error& e) {
    std::cerr << "error [" << qfsum::ToString(e.code()) << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
