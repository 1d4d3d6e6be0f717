#include "qfsum/persistence.hpp"

#include <algorithm>
#include <numeric>

#include "qfsum/error.hpp"

namespace qfsum {
namespace {

using nlohmann::json;

json SettingsToJson(const SessionSettings& s) {
  json embedding = {{"kind", ToString(s.embedding.kind)}};
  embedding["provider_endpoint"] =
      s.embedding.provider_endpoint ? json(*s.embedding.provider_endpoint) : json(nullptr);
  return {
      {"batch_size", s.batch_size},
      {"classifier",
       {{"iterations", s.classifier.iterations},
        {"kind", ToString(s.classifier.kind)},
        {"l2", s.classifier.l2},
        {"seed", s.classifier.seed},
        {"step_size", s.classifier.step_size}}},
      {"embedding", embedding},
      {"max_documents", s.max_documents},
      {"stop_threshold", s.stop_threshold},
  };
}

SessionSettings SettingsFromJson(const json& j) {
  SessionSettings s;
  s.batch_size = j.at("batch_size").get<std::size_t>();
  const auto& c = j.at("classifier");
  s.classifier.kind = ParseClassifierKind(c.at("kind").get<std::string>());
  s.classifier.iterations = c.at("iterations").get<int>();
  s.classifier.l2 = c.at("l2").get<double>();
  s.classifier.seed = c.at("seed").get<std::uint64_t>();
  s.classifier.step_size = c.at("step_size").get<double>();
  const auto& e = j.at("embedding");
  s.embedding.kind = ParseEmbeddingKind(e.at("kind").get<std::string>());
  if (e.contains("provider_endpoint") && !e.at("provider_endpoint").is_null()) {
    s.embedding.provider_endpoint = e.at("provider_endpoint").get<std::string>();
  }
  s.max_documents = j.value("max_documents", s.max_documents);
  s.stop_threshold = j.value("stop_threshold", s.stop_threshold);
  return s;
}

json DocumentToJson(const Document& d) {
  json sentences = json::array();
  for (const auto& s : d.sentences) sentences.push_back({{"index", s.index}, {"text", s.text}});
  return {{"doc_id", d.doc_id}, {"filename", d.filename}, {"sentences", sentences}};
}

Document DocumentFromJson(const json& j) {
  Document d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.filename = j.at("filename").get<std::string>();
  for (const auto& s : j.at("sentences")) {
    d.sentences.push_back(
        {d.doc_id, s.at("index").get<std::size_t>(), s.at("text").get<std::string>()});
  }
  return d;
}

// Throws MalformedInput for anything nlohmann rejects.
template <typename F>
auto Guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

json ParseJson(std::string_view bytes) {
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

void CheckVersion(const json& j) {
  if (!j.is_object() || !j.contains("version")) {
    throw Error(ErrorCode::kMalformedInput, "missing version field");
  }
  const auto& v = j.at("version");
  if (!v.is_string() || v.get<std::string>() != kStateVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported state version: " + v.dump());
  }
}

}  // namespace

json SnapshotToJson(const SessionSnapshot& snap) {
  json documents = json::array();
  for (const auto& d : snap.documents) documents.push_back(DocumentToJson(d));
  json history = json::array();
  for (const auto& e : snap.history) {
    history.push_back({{"batch", e.batch},
                       {"doc_id", e.doc_id},
                       {"index", e.index},
                       {"label", ToString(e.label)},
                       {"phase", ToString(e.phase)},
                       {"position", e.position}});
  }
  json shown = json::array();
  for (const auto& p : snap.shown) {
    shown.push_back({{"batch", p.batch},
                     {"doc_id", p.doc_id},
                     {"index", p.index},
                     {"phase", ToString(p.phase)},
                     {"position", p.position}});
  }
  return {
      {"batch_counter", snap.batch_counter},
      {"documents", documents},
      {"history", history},
      {"processed", snap.processed},
      {"query", snap.query},
      {"session_id", snap.session_id},
      {"settings", SettingsToJson(snap.settings)},
      {"shown", shown},
      {"stop_counter", snap.stop_counter},
      {"submitted_batch", snap.submitted_batch},
      {"version", kStateVersion},
  };
}

std::string ExportState(const Session& session) {
  return SnapshotToJson(session.Snapshot()).dump(-1, ' ', false, json::error_handler_t::replace);
}

SessionSnapshot ParseState(std::string_view bytes) {
  const json j = ParseJson(bytes);
  CheckVersion(j);
  return Guard([&] {
    SessionSnapshot snap;
    snap.session_id = j.at("session_id").get<std::string>();
    snap.query = j.at("query").get<std::string>();
    try {
      snap.settings = SettingsFromJson(j.at("settings"));
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedInput, e.what());
    }
    for (const auto& d : j.at("documents")) snap.documents.push_back(DocumentFromJson(d));
    for (const auto& e : j.at("history")) {
      snap.history.push_back({e.at("doc_id").get<std::string>(), e.at("index").get<std::size_t>(),
                              ParseLabel(e.at("label").get<std::string>()),
                              e.at("batch").get<std::size_t>(),
                              ParsePhase(e.at("phase").get<std::string>()),
                              e.at("position").get<std::size_t>()});
    }
    if (j.contains("shown")) {
      for (const auto& p : j.at("shown")) {
        snap.shown.push_back({p.at("doc_id").get<std::string>(), p.at("index").get<std::size_t>(),
                              p.at("batch").get<std::size_t>(),
                              ParsePhase(p.at("phase").get<std::string>()),
                              p.at("position").get<std::size_t>()});
      }
    } else {
      // Older writers only kept label events; every labeled sentence was shown.
      for (const auto& e : snap.history) {
        const bool dup = std::any_of(snap.shown.begin(), snap.shown.end(), [&](const auto& p) {
          return p.doc_id == e.doc_id && p.index == e.index;
        });
        if (!dup) snap.shown.push_back({e.doc_id, e.index, e.batch, e.phase, e.position});
      }
    }
    snap.stop_counter = j.at("stop_counter").get<std::size_t>();
    const std::size_t last_batch = snap.shown.empty() ? 0 : snap.shown.back().batch;
    snap.batch_counter = j.value("batch_counter", last_batch);
    snap.submitted_batch = j.value("submitted_batch", snap.batch_counter);
    snap.processed = j.value("processed", false);
    return snap;
  });
}

Session ImportState(std::string_view bytes, ProviderFactory providers) {
  return Session::FromSnapshot(ParseState(bytes), std::move(providers));
}

std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::vector<std::string>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++i;
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorCode::kMalformedInput, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string ExportHistoryCsv(const Session& session) {
  std::vector<std::size_t> order(session.history().size());
  std::iota(order.begin(), order.end(), 0);
  const auto& history = session.history();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].position < history[b].position;
  });
  std::string out = "position,document,sentence_index,phase,batch,label,text\r\n";
  for (const auto i : order) {
    const auto& e = history[i];
    const auto ordinal = session.OrdinalOf(e.doc_id, e.index);
    const auto& filename = session.DocumentOf(*ordinal).filename;
    out += std::to_string(e.position) + "," + CsvField(filename) + "," +
           std::to_string(e.index) + "," + std::string(ToString(e.phase)) + "," +
           std::to_string(e.batch) + "," + std::string(ToString(e.label)) + "," +
           CsvField(session.SentenceAt(*ordinal).text) + "\r\n";
  }
  return out;
}

std::vector<SummaryLine> SummarySentences(const Session& session) {
  std::vector<SummaryLine> lines;
  for (std::size_t i = 0; i < session.sentence_count(); ++i) {
    if (session.CurrentLabel(i) == Label::kRelevant) {
      const auto& s = session.SentenceAt(i);
      lines.push_back({session.DocumentOf(i).filename, s.index, s.text});
    }
  }
  return lines;
}

std::string ExportSummaryTxt(const Session& session) {
  std::string out = session.query() + "\n\n";
  for (const auto& line : SummarySentences(session)) {
    out += line.text + " [" + line.filename + ", sentence " + std::to_string(line.index) + "]\n";
  }
  return out;
}

std::string ExportCorpus(const std::vector<Document>& documents) {
  json docs = json::array();
  for (const auto& d : documents) docs.push_back(DocumentToJson(d));
  return json{{"documents", docs}, {"version", kStateVersion}}.dump();
}

std::vector<Document> ParseCorpus(std::string_view bytes) {
  const json j = ParseJson(bytes);
  CheckVersion(j);
  return Guard([&] {
    std::vector<Document> docs;
    for (const auto& d : j.at("documents")) docs.push_back(DocumentFromJson(d));
    return docs;
  });
}

std::vector<GoldLabel> ParseGoldCsv(std::string_view text) {
  const auto rows = ParseCsv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"document", "sentence_index", "label"}) {
    throw Error(ErrorCode::kMalformedInput,
                "gold file must start with header document,sentence_index,label");
  }
  std::vector<GoldLabel> gold;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) {
      throw Error(ErrorCode::kMalformedInput, "gold row " + std::to_string(r + 1) +
                                                  " does not have 3 fields");
    }
    GoldLabel g;
    g.document = row[0];
    try {
      std::size_t used = 0;
      g.sentence_index = std::stoul(row[1], &used);
      if (used != row[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedInput, "bad sentence_index in gold row " +
                                                  std::to_string(r + 1));
    }
    g.label = ParseLabel(row[2]);
    gold.push_back(std::move(g));
  }
  return gold;
}

std::string ExportGoldCsv(const std::vector<GoldLabel>& gold) {
  std::string out = "document,sentence_index,label\r\n";
  for (const auto& g : gold) {
    out += CsvField(g.document) + "," + std::to_string(g.sentence_index) + "," +
           std::string(ToString(g.label)) + "\r\n";
  }
  return out;
}

json ReportToJson(const MetricsReport& report) {
  json series = json::array();
  for (const auto& p : report.precision_vs_effort) {
    series.push_back({{"effort", p.effort}, {"precision", p.precision}});
  }
  json counts = json::array();
  for (const auto& c : report.label_counts_per_document) {
    counts.push_back({{"doc_id", c.doc_id},
                      {"filename", c.filename},
                      {"irrelevant", c.irrelevant},
                      {"relevant", c.relevant},
                      {"unlabeled", c.unlabeled}});
  }
  return {{"kl_divergence", report.kl_divergence},
          {"label_counts_per_document", counts},
          {"precision_overall", report.precision_overall},
          {"precision_vs_effort", series},
          {"relevant", report.relevant},
          {"shown", report.shown},
          {"total_sentences", report.total_sentences}};
}

std::string EffortSeriesCsv(const std::vector<EffortPoint>& series) {
  std::string out = "effort,precision\n";
  for (const auto& p : series) {
    out += json(p.effort).dump() + "," + json(p.precision).dump() + "\n";
  }
  return out;
}

std::string PrSeriesCsv(const std::vector<PrPoint>& series) {
  std::string out = "recall,precision\n";
  for (const auto& p : series) {
    out += json(p.recall).dump() + "," + json(p.precision).dump() + "\n";
  }
  return out;
}

}  // namespace qfsum
