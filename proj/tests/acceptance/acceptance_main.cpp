// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qfsum/classifier.hpp"
#include "qfsum/embeddings.hpp"
#include "qfsum/error.hpp"
#include "qfsum/metrics.hpp"
#include "qfsum/persistence.hpp"
#include "qfsum/service.hpp"
#include "qfsum/session.hpp"
#include "qfsum/simulation.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kTfidfTolerance = 1e-9;
constexpr double kTfidfMaxSeconds = 1.0;
constexpr double kGradientStep = 1e-5;
constexpr double kGradientRelativeError = 1e-5;
constexpr double kCalEffort = 0.30;
constexpr double kCalMinWinFraction = 0.80;
constexpr std::size_t kCalSeeds = 20;
constexpr double kCalMaxSeconds = 60.0;
constexpr double kKlSelfTolerance = 1e-12;
constexpr double kKlExampleTolerance = 1e-4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// ---------------------------------------------------------------- tfidf

// Independent oracle: its own tokenizer, dense vectors over its own term
// list, natural-log smoothed idf.
struct OracleModel {
  std::vector<std::string> terms;
  std::map<std::string, std::size_t> df;
  std::size_t n = 0;

  static std::vector<std::string> Words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  explicit OracleModel(const std::vector<std::string>& corpus) : n(corpus.size()) {
    for (const auto& s : corpus) {
      std::set<std::string> uniq;
      for (const auto& w : Words(s)) uniq.insert(w);
      for (const auto& w : uniq) ++df[w];
    }
    for (const auto& [w, _] : df) terms.push_back(w);
  }

  std::map<std::string, double> Vector(const std::string& text) const {
    std::map<std::string, double> v;
    for (const auto& w : Words(text)) {
      auto it = df.find(w);
      if (it == df.end()) continue;
      v[w] += std::log((1.0 + n) / (1.0 + it->second)) + 1.0;
    }
    double norm = 0;
    for (const auto& [_, x] : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& [_, x] : v) x /= norm;
    }
    return v;
  }

  static double Cosine(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (const auto& [w, x] : a) {
      na += x * x;
      auto it = b.find(w);
      if (it != b.end()) dot += x * it->second;
    }
    for (const auto& [_, x] : b) nb += x * x;
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
  }
};

Outcome TfidfOracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  const std::vector<std::string> lexicon = {"model", "query", "Sentence", "label", "rank",
                                            "vector", "user", "summary", "topic", "page",
                                            "batch", "score", "word", "text", "data"};
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (int corpus_id = 0; corpus_id < 5; ++corpus_id) {
    const std::size_t n = 5 + rng() % 16;  // <= 20 sentences
    std::vector<std::string> corpus;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      const std::size_t len = 1 + rng() % 10;
      for (std::size_t k = 0; k < len; ++k) {
        s += lexicon[rng() % lexicon.size()];
        s += (rng() % 5 == 0) ? ", " : " ";
      }
      corpus.push_back(s);
    }
    const auto vocab = qfsum::Vocabulary::Fit(corpus, qfsum::TokenKind::kWordUnigram);
    const OracleModel oracle(corpus);
    std::vector<qfsum::SparseVector> ours;
    std::vector<std::map<std::string, double>> theirs;
    for (const auto& s : corpus) {
      ours.push_back(qfsum::EmbedTfidf(s, vocab));
      theirs.push_back(oracle.Vector(s));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& e : ours[i].entries) {
        const auto it = theirs[i].find(vocab.Term(e.index));
        const double expected = it == theirs[i].end() ? 0.0 : it->second;
        worst = std::max(worst, std::abs(e.weight - expected));
        ++comparisons;
      }
      if (ours[i].entries.size() != theirs[i].size()) {
        return {false, "support differs in corpus " + std::to_string(corpus_id)};
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double got = qfsum::Similarity(ours[i], ours[j]);
        const double want = OracleModel::Cosine(theirs[i], theirs[j]);
        worst = std::max(worst, std::abs(got - want));
        ++comparisons;
      }
    }
  }
  const double secs = Seconds(start);
  return {worst <= kTfidfTolerance && secs < kTfidfMaxSeconds,
          "max abs diff " + Fmt(worst) + " over " + std::to_string(comparisons) +
              " values, " + Fmt(secs) + " s"};
}

// ---------------------------------------------------------------- gradient

Outcome GradientCheck() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    const std::size_t dim = 1 + rng() % 30;
    const std::size_t n = 4 + rng() % 20;
    std::vector<qfsum::Embedding> x;
    std::vector<qfsum::Label> y;
    for (std::size_t i = 0; i < n; ++i) {
      qfsum::SparseVector v;
      for (std::uint32_t j = 0; j < dim; ++j) {
        if (rng() % 2) v.entries.push_back({j, value(rng)});
      }
      x.emplace_back(std::move(v));
      y.push_back(i % 2 ? qfsum::Label::kRelevant : qfsum::Label::kIrrelevant);
    }
    const qfsum::LogisticObjective objective(x, y, dim, 0.01);
    std::vector<double> params(dim + 1);
    for (double& p : params) p = value(rng);
    const auto analytic = objective.Gradient(params);
    double diff = 0, norm_a = 0, norm_fd = 0;
    for (std::size_t j = 0; j < params.size(); ++j) {
      auto plus = params;
      auto minus = params;
      plus[j] += kGradientStep;
      minus[j] -= kGradientStep;
      const double fd = (objective.Loss(plus) - objective.Loss(minus)) / (2 * kGradientStep);
      diff += (fd - analytic[j]) * (fd - analytic[j]);
      norm_a += analytic[j] * analytic[j];
      norm_fd += fd * fd;
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_fd), 1e-12});
    worst = std::max(worst, rel);
  }
  return {worst < kGradientRelativeError, "max relative error " + Fmt(worst)};
}

// ---------------------------------------------------------------- cal vs baseline

Outcome CalBeatsBaseline() {
  const auto start = Clock::now();
  std::size_t wins = 0;
  double gap = 0.0;
  for (std::size_t seed = 1; seed <= kCalSeeds; ++seed) {
    qfsum::SyntheticCorpusOptions options;  // 5 x 100 sentences, 10% relevant
    options.seed = seed;
    const auto corpus = qfsum::GenerateSyntheticCorpus(options);
    qfsum::SimulationOptions sim;
    const auto run = qfsum::RunCalSimulation(corpus.documents, corpus.query, corpus.relevant, sim);
    const double cal = qfsum::RecallAtEffort(run, kCalEffort);
    const double base = qfsum::StaticVsmRecallAtEffort(corpus.documents, corpus.query,
                                                       corpus.relevant, sim.settings.embedding,
                                                       kCalEffort);
    if (cal >= base) ++wins;
    gap += cal - base;
  }
  const double fraction = static_cast<double>(wins) / kCalSeeds;
  const double mean_gap = gap / kCalSeeds;
  const double secs = Seconds(start);
  return {fraction >= kCalMinWinFraction && mean_gap > 0 && secs < kCalMaxSeconds,
          "wins " + std::to_string(wins) + "/" + std::to_string(kCalSeeds) +
              ", mean recall gap " + Fmt(mean_gap) + ", " + Fmt(secs) + " s"};
}

// ---------------------------------------------------------------- stopping rule

std::vector<qfsum::LabelInput> Judge(const qfsum::Session& s, const qfsum::Batch& b,
                                     const std::function<bool(std::size_t)>& relevant) {
  std::vector<qfsum::LabelInput> out;
  for (const auto& item : b.items) {
    const auto& sentence = s.SentenceAt(item.ordinal);
    out.push_back({sentence.doc_id, sentence.index,
                   relevant(item.ordinal) ? qfsum::Label::kRelevant : qfsum::Label::kIrrelevant});
  }
  return out;
}

qfsum::Session SyntheticSession(std::uint64_t seed, qfsum::SyntheticCorpus* out = nullptr) {
  qfsum::SyntheticCorpusOptions options;
  options.seed = seed;
  auto corpus = qfsum::GenerateSyntheticCorpus(options);
  qfsum::Session session("acceptance");
  for (const auto& d : corpus.documents) session.AddDocument(d);
  session.Process();
  session.Search(corpus.query);
  if (out) *out = std::move(corpus);
  return session;
}

Outcome StoppingRule() {
  qfsum::SyntheticCorpus corpus;
  auto s = SyntheticSession(5, &corpus);
  const auto none = [](std::size_t) { return false; };
  // Search batch is not an Explore turn.
  const auto search = s.Snapshot().shown;
  std::vector<qfsum::LabelInput> first;
  for (const auto& p : search) first.push_back({p.doc_id, p.index, qfsum::Label::kIrrelevant});
  if (s.SubmitLabels(first).stop_counter != 0) return {false, "search submission counted"};

  std::vector<bool> flags;
  for (int turn = 1; turn <= 3; ++turn) {
    const auto b = s.Explore().batch;
    flags.push_back(s.SubmitLabels(Judge(s, b, none)).should_stop);
  }
  const bool exact = flags == std::vector<bool>{false, false, true};

  // Reset: two empty turns, then one relevant label.
  auto r = SyntheticSession(6, &corpus);
  std::vector<qfsum::LabelInput> first_r;
  for (const auto& p : r.Snapshot().shown) {
    first_r.push_back({p.doc_id, p.index, qfsum::Label::kIrrelevant});
  }
  r.SubmitLabels(first_r);
  for (int turn = 0; turn < 2; ++turn) r.SubmitLabels(Judge(r, r.Explore().batch, none));
  const std::size_t before = r.stop_state().consecutive_empty_turns;
  const auto b = r.Explore().batch;
  const auto ordinal = b.items.front().ordinal;
  const auto after =
      r.SubmitLabels(Judge(r, b, [&](std::size_t o) { return o == ordinal; })).stop_counter;
  const bool reset = before == 2 && after == 0;
  return {exact && reset, std::string("should_stop after turns 1..3: ") +
                              (flags[0] ? "T" : "F") + (flags[1] ? "T" : "F") +
                              (flags[2] ? "T" : "F") + "; counter " + std::to_string(before) +
                              " -> " + std::to_string(after) + " after a relevant label"};
}

// ---------------------------------------------------------------- metrics

Outcome Metrics() {
  std::vector<qfsum::LabelEvent> h;
  for (std::size_t i = 1; i <= 5; ++i) {
    h.push_back({"doc-1", i, i <= 2 ? qfsum::Label::kRelevant : qfsum::Label::kIrrelevant, 1,
                 qfsum::Phase::kSearch, i});
  }
  const double precision = qfsum::Precision(h, 5);

  std::mt19937_64 rng(9);
  double self_worst = 0.0;
  double min_kl = 1.0;
  std::set<std::string> support;
  for (int t = 0; t < 12; ++t) support.insert("w" + std::to_string(t));
  for (int pair = 0; pair < 100; ++pair) {
    auto text = [&] {
      std::string s;
      for (const auto& w : support) {
        for (int k = rng() % 7; k > 0; --k) s += w + " ";
      }
      return std::vector<std::string>{s};
    };
    const auto p = qfsum::MakeUnigramDistribution(text(), support);
    const auto q = qfsum::MakeUnigramDistribution(text(), support);
    self_worst = std::max(self_worst, std::abs(qfsum::KlDivergence(p, p)));
    min_kl = std::min(min_kl, qfsum::KlDivergence(p, q));
  }
  const double example =
      qfsum::KlDivergence({{"a", 0.75}, {"b", 0.25}}, {{"a", 0.25}, {"b", 0.75}});
  const bool ok = precision == 0.4 && self_worst <= kKlSelfTolerance && min_kl >= 0.0 &&
                  std::abs(example - 0.5493) <= kKlExampleTolerance;
  return {ok, "precision " + Fmt(precision) + ", max |KL(p,p)| " + Fmt(self_worst) +
                  ", min KL " + Fmt(min_kl) + ", example " + Fmt(example)};
}

// ---------------------------------------------------------------- questionnaire

Outcome Questionnaire() {
  using qfsum::Polarity;
  using qfsum::QuestionnaireItem;
  std::vector<QuestionnaireItem> neutral, favorable;
  for (int i = 0; i < 10; ++i) {
    const auto pol = i % 2 == 0 ? Polarity::kPositive : Polarity::kNegative;
    neutral.push_back({3, pol});
    favorable.push_back({pol == Polarity::kPositive ? 5 : 1, pol});
  }
  const double sus_neutral = qfsum::QuestionnaireScore(neutral, qfsum::QuestionnaireScale::kSus);
  const double sus_max = qfsum::QuestionnaireScore(favorable, qfsum::QuestionnaireScale::kSus);
  const double features_max = qfsum::QuestionnaireScore(
      std::vector<QuestionnaireItem>(16, {5, Polarity::kPositive}), qfsum::QuestionnaireScale::kRaw);
  const double quality_max = qfsum::QuestionnaireScore(
      std::vector<QuestionnaireItem>(4, {5, Polarity::kPositive}), qfsum::QuestionnaireScale::kRaw);
  return {sus_neutral == 50.0 && sus_max == 100.0 && features_max == 64.0 && quality_max == 16.0,
          "SUS " + Fmt(sus_neutral) + "/" + Fmt(sus_max) + ", raw maxima " + Fmt(features_max) +
              "/" + Fmt(quality_max)};
}

// ---------------------------------------------------------------- persistence

Outcome Persistence() {
  qfsum::SyntheticCorpus corpus;
  auto s = SyntheticSession(3, &corpus);
  const auto gold = [&](std::size_t o) { return static_cast<bool>(corpus.relevant[o]); };

  // Record the batch sequence of a 40-event session (search + 3 explores).
  std::vector<qfsum::Batch> recorded;
  {
    auto search = qfsum::Batch{};
    search.phase = qfsum::Phase::kSearch;
    search.batch_number = 1;
    const auto snap = s.Snapshot();
    for (const auto& p : snap.shown) search.items.push_back({*s.OrdinalOf(p.doc_id, p.index), 0});
    s.SubmitLabels(Judge(s, search, gold));
  }
  std::string midpoint;
  for (int turn = 0; turn < 3; ++turn) {
    if (turn == 1) midpoint = qfsum::ExportState(s);
    const auto b = s.Explore().batch;
    recorded.push_back(b);
    s.SubmitLabels(Judge(s, b, gold));
  }
  const std::size_t events = s.history().size();

  // Import the midpoint and replay the remaining turns.
  auto restored = qfsum::ImportState(midpoint);
  bool identical = true;
  for (int turn = 1; turn < 3; ++turn) {
    const auto b = restored.Explore().batch;
    identical = identical && b == recorded[turn];
    restored.SubmitLabels(Judge(restored, b, gold));
  }
  const std::string full = qfsum::ExportState(s);
  const bool bytes_equal = qfsum::ExportState(qfsum::ImportState(full)) == full &&
                           qfsum::ExportState(restored) == full;

  const auto rows = qfsum::ParseCsv(qfsum::ExportHistoryCsv(s));
  const bool header =
      !rows.empty() && rows[0] == std::vector<std::string>{"position", "document", "sentence_index",
                                                           "phase", "batch", "label", "text"};
  const bool count = rows.size() == events + 1;
  return {events == 40 && identical && bytes_equal && header && count,
          std::to_string(events) + " events, replayed batches " +
              (identical ? "identical" : "DIFFER") + ", re-export " +
              (bytes_equal ? "byte-identical" : "DIFFERS") + ", csv rows " +
              std::to_string(rows.empty() ? 0 : rows.size() - 1)};
}

// ---------------------------------------------------------------- service

std::string ServiceDocument(const std::string& topic, int n) {
  std::string text;
  for (int i = 0; i < n; ++i) {
    if (i % 4 == 0) {
      text += "Sentence " + std::to_string(i) + " discusses " + topic + " in some detail. ";
    } else {
      text += "Filler line " + std::to_string(i) + " covers unrelated matters. ";
    }
  }
  return text;
}

Outcome ServiceContract() {
  qfsum::Service service(qfsum::ServiceOptions{});
  const int port = service.BindToAnyPort("127.0.0.1");
  if (port <= 0) return {false, "cannot bind"};
  std::thread server([&] { service.ListenAfterBind(); });
  const std::string api(qfsum::kApiPrefix);
  httplib::Client c("127.0.0.1", port);
  std::vector<std::string> problems;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) problems.push_back(what);
  };
  auto post = [&](httplib::Client& client, const std::string& path, const json& body) {
    auto r = client.Post(api + path, body.dump(), "application/json");
    if (!r) return std::pair<int, json>{-1, json()};
    return std::pair<int, json>{r->status, json::parse(r->body, nullptr, false)};
  };
  for (int i = 0; i < 200 && !c.Get(api + "/health"); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  const auto [create_status, created] = post(c, "/sessions", json::object());
  expect(create_status == 201, "create");
  const std::string id = created.value("session_id", "");
  const std::string base = "/sessions/" + id;
  for (const auto& [name, topic] : {std::pair{"a.txt", "retrieval"}, {"b.txt", "retrieval"}}) {
    httplib::MultipartFormDataItems items = {
        {"file", ServiceDocument(topic, 24), name, "text/plain"}};
    auto r = c.Post(api + base + "/documents", items);
    expect(r && r->status == 201, std::string("upload ") + name);
  }
  expect(post(c, base + "/process", {{"batch_size", 4}}).first == 200, "process");
  auto [search_status, batch] = post(c, base + "/search", {{"query", "retrieval"}});
  expect(search_status == 200 && batch["items"].size() == 4, "search");

  auto label_json = [](const json& b) {
    json events = json::array();
    for (const auto& item : b["items"]) {
      const bool rel = item["text"].get<std::string>().find("retrieval") != std::string::npos;
      events.push_back({{"doc_id", item["doc_id"]},
                        {"index", item["index"]},
                        {"label", rel ? "relevant" : "irrelevant"}});
    }
    return events;
  };
  expect(post(c, base + "/labels", {{"events", label_json(batch)}}).first == 200, "label search");
  for (int turn = 0; turn < 3; ++turn) {
    auto [st, b] = post(c, base + "/explore", json::object());
    expect(st == 200 && b["phase"] == "explore", "explore " + std::to_string(turn));
    expect(b.contains("score_histogram") && b["score_histogram"].size() == 20, "histogram");
    expect(post(c, base + "/labels", {{"events", label_json(b)}}).first == 200, "label explore");
  }
  for (const char* kind : {"state-json", "history-csv", "summary-txt"}) {
    auto r = c.Get(api + base + "/download/" + kind);
    expect(r && r->status == 200 && !r->body.empty(), std::string("download ") + kind);
  }
  auto csv = c.Get(api + base + "/download/history-csv");
  expect(csv && qfsum::ParseCsv(csv->body).size() == 17, "history rows");

  // Two clients label the same open batch concurrently, repeatedly.
  std::size_t concurrent_rounds = 0;
  for (int round = 0; round < 3; ++round) {
    auto [st, b] = post(c, base + "/explore", json::object());
    if (st != 200) break;
    const auto events = label_json(b);
    json half_a = json::array(), half_b = json::array();
    for (std::size_t i = 0; i < events.size(); ++i) (i % 2 ? half_b : half_a).push_back(events[i]);
    auto submit = [&](const json& part) {
      httplib::Client client("127.0.0.1", port);
      post(client, base + "/labels", {{"events", part}});
      post(client, base + "/labels", {{"events", part}});  // relabel
    };
    std::thread t1(submit, half_a), t2(submit, half_b);
    t1.join();
    t2.join();
    ++concurrent_rounds;
  }
  auto state = c.Get(api + base + "/download/state-json");
  bool consistent = false;
  if (state && state->status == 200) {
    try {
      const auto session = qfsum::ImportState(state->body);  // validates every invariant
      const auto& hist = session.history();
      consistent = session.stop_state().consecutive_empty_turns <= session.batch_counter() &&
                   std::all_of(hist.begin(), hist.end(), [&](const auto& e) {
                     return session.WasShown(*session.OrdinalOf(e.doc_id, e.index));
                   });
    } catch (const qfsum::Error& e) {
      problems.push_back(std::string("invariants: ") + e.what());
    }
  }
  expect(consistent && concurrent_rounds == 3, "concurrent labels");

  service.Stop();
  server.join();
  std::string detail = problems.empty() ? "workflow and concurrent labeling ok" : "failed:";
  for (const auto& p : problems) detail += " " + p + ";";
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tfidf-oracle", TfidfOracle},
      {"gradient-check", GradientCheck},
      {"cal-beats-baseline", CalBeatsBaseline},
      {"stopping-rule", StoppingRule},
      {"metrics", Metrics},
      {"questionnaire", Questionnaire},
      {"persistence-round-trip", Persistence},
      {"service-contract", ServiceContract},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures;
}
