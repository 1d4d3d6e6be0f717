#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfsum/metrics.hpp"
#include "qfsum/session.hpp"

namespace qfsum {

inline constexpr std::string_view kStateVersion = "1";

// Canonical state document: sorted keys, UTF-8, no insignificant whitespace.
// Export of an imported export is byte-identical.
std::string ExportState(const Session& session);
nlohmann::json SnapshotToJson(const SessionSnapshot& snapshot);

// Throws MalformedInput, UnsupportedVersion or InvariantViolation.
SessionSnapshot ParseState(std::string_view bytes);
Session ImportState(std::string_view bytes,
                    ProviderFactory providers = DefaultProviderFactory());

// Header `position,document,sentence_index,phase,batch,label,text`, one row per
// label event ordered by presentation position, RFC-4180 quoting, CRLF.
std::string ExportHistoryCsv(const Session& session);

// Query, blank line, then `text [filename, sentence N]` per relevant sentence
// in (document order, sentence index) order.
std::string ExportSummaryTxt(const Session& session);

struct SummaryLine {
  std::string filename;
  std::size_t index = 0;
  std::string text;
};
std::vector<SummaryLine> SummarySentences(const Session& session);

// Sentence corpus written by `ingest`: {"documents": [...], "version": "1"}.
std::string ExportCorpus(const std::vector<Document>& documents);
std::vector<Document> ParseCorpus(std::string_view bytes);

// RFC-4180 helpers.
std::string CsvField(std::string_view field);
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

struct GoldLabel {
  std::string document;  // filename
  std::size_t sentence_index = 0;
  Label label = Label::kIrrelevant;
};

// `document,sentence_index,label` with a header row.
std::vector<GoldLabel> ParseGoldCsv(std::string_view text);
std::string ExportGoldCsv(const std::vector<GoldLabel>& gold);

nlohmann::json ReportToJson(const MetricsReport& report);
std::string EffortSeriesCsv(const std::vector<EffortPoint>& series);
std::string PrSeriesCsv(const std::vector<PrPoint>& series);

}  // namespace qfsum
