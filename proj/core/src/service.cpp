#include "qfsum/service.hpp"

#include <httplib.h>

#include <random>
#include <sstream>

#include "qfsum/metrics.hpp"
#include "qfsum/persistence.hpp"

namespace qfsum {
namespace {

using nlohmann::json;

constexpr std::size_t kHistogramBins = 20;

std::string Route(std::string_view suffix) {
  return std::string(kApiPrefix) + std::string(suffix);
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace),
                  "application/json");
}

void ReplyError(httplib::Response& res, const ApiError& err) {
  Reply(res, err.http_status, {{"error", {{"code", err.code}, {"message", err.message}}}});
}

json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) {
      throw Error(ErrorCode::kMalformedInput, "request body must be a JSON object");
    }
    return body;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

// Wraps a handler so every failure becomes a structured ApiError.
template <typename F>
httplib::Server::Handler Guarded(F handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      ReplyError(res, ToApiError(e.code(), e.what()));
    } catch (const json::exception& e) {
      ReplyError(res, ToApiError(ErrorCode::kMalformedInput, e.what()));
    } catch (const std::exception& e) {
      ReplyError(res, {"Internal", e.what(), 500});
    }
  };
}

json SettingsToWire(const SessionSettings& s) {
  json out = {{"batch_size", s.batch_size},
              {"classifier", ToString(s.classifier.kind)},
              {"embedding", ToString(s.embedding.kind)},
              {"stop_threshold", s.stop_threshold}};
  out["provider_endpoint"] =
      s.embedding.provider_endpoint ? json(*s.embedding.provider_endpoint) : json(nullptr);
  return out;
}

json LabelOrNull(const std::optional<Label>& label) {
  return label ? json(ToString(*label)) : json(nullptr);
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound: return 404;
    case ErrorCode::kUnsupportedFormat: return 415;
    case ErrorCode::kMalformedInput:
    case ErrorCode::kUnsupportedVersion:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kWrongItemCount:
    case ErrorCode::kResponseOutOfRange: return 400;
    case ErrorCode::kTooManyDocuments:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kNotProcessed:
    case ErrorCode::kExhausted: return 409;
    case ErrorCode::kProviderUnavailable: return 502;
    case ErrorCode::kEmptyDocument:
    case ErrorCode::kExtractionFailed:
    case ErrorCode::kUnknownSentence:
    case ErrorCode::kDuplicateInBatch:
    case ErrorCode::kInvariantViolation:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kSingleClass:
    case ErrorCode::kNothingShown:
    case ErrorCode::kSupportMismatch:
    case ErrorCode::kNoRelevantGold: return 422;
  }
  return 500;
}

ApiError ToApiError(ErrorCode code, std::string message) {
  return {std::string(ToString(code)), std::move(message), HttpStatusFor(code)};
}

SessionStore::SessionStore(SessionSettings defaults, ProviderFactory providers,
                           std::chrono::seconds idle_expiry)
    : defaults_(std::move(defaults)),
      providers_(std::move(providers)),
      idle_expiry_(idle_expiry),
      id_salt_(std::random_device{}()) {
  defaults_.Validate();
}

std::string SessionStore::FreshId() {
  std::mt19937_64 mix(id_salt_ ^ (++id_counter_ * 0x9E3779B97F4A7C15ULL));
  std::ostringstream out;
  out << std::hex << mix() << id_counter_;
  return out.str();
}

std::string SessionStore::Create() {
  ExpireIdle();
  std::unique_lock lock(mu_);
  std::string id = FreshId();
  while (sessions_.contains(id)) id = FreshId();
  auto entry = std::make_shared<Entry>();
  entry->session.emplace(id, defaults_, providers_);
  entry->last_access = std::chrono::steady_clock::now();
  sessions_.emplace(id, std::move(entry));
  return id;
}

std::string SessionStore::Adopt(Session session) {
  ExpireIdle();
  std::unique_lock lock(mu_);
  auto snapshot = session.Snapshot();
  if (snapshot.session_id.empty() || sessions_.contains(snapshot.session_id)) {
    std::string id = FreshId();
    while (sessions_.contains(id)) id = FreshId();
    snapshot.session_id = id;
    session = Session::FromSnapshot(std::move(snapshot), providers_);
  }
  const std::string id = session.id();
  auto entry = std::make_shared<Entry>();
  entry->session.emplace(std::move(session));
  entry->last_access = std::chrono::steady_clock::now();
  sessions_.emplace(id, std::move(entry));
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::Find(const std::string& id) {
  std::shared_lock lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kSessionNotFound, "no session with id " + id);
  }
  return it->second;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

void SessionStore::ExpireIdle() {
  const auto now = std::chrono::steady_clock::now();
  std::unique_lock lock(mu_);
  std::erase_if(sessions_, [&](const auto& kv) {
    std::unique_lock entry_lock(kv.second->mu, std::try_to_lock);
    return entry_lock.owns_lock() && now - kv.second->last_access > idle_expiry_;
  });
}

json BatchToJson(const Session& session, const Batch& batch) {
  json items = json::array();
  for (const auto& item : batch.items) {
    const auto& s = session.SentenceAt(item.ordinal);
    items.push_back({{"doc_id", s.doc_id},
                     {"filename", session.DocumentOf(item.ordinal).filename},
                     {"index", s.index},
                     {"score", item.score},
                     {"text", s.text}});
  }
  return {{"batch_number", batch.batch_number},
          {"items", items},
          {"phase", ToString(batch.phase)}};
}

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      extractors_(ExtractorRegistry::FromConfig(options_.extractor)),
      store_(options_.defaults, options_.providers, options_.idle_expiry),
      server_(std::make_unique<httplib::Server>()) {
  RegisterRoutes();
}

Service::~Service() { Stop(); }

bool Service::Listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int Service::BindToAnyPort(const std::string& host) { return server_->bind_to_any_port(host); }

bool Service::ListenAfterBind() { return server_->listen_after_bind(); }

void Service::Stop() {
  if (server_ && server_->is_running()) server_->stop();
}

json Service::Process(Session& session, const json& body) const {
  SessionSettings settings = session.settings();
  if (body.contains("embedding")) {
    const auto& e = body.at("embedding");
    if (e.is_object()) {
      settings.embedding.kind = ParseEmbeddingKind(e.at("kind").get<std::string>());
      if (e.contains("provider_endpoint") && !e.at("provider_endpoint").is_null()) {
        settings.embedding.provider_endpoint = e.at("provider_endpoint").get<std::string>();
      } else {
        settings.embedding.provider_endpoint.reset();
      }
    } else {
      settings.embedding.kind = ParseEmbeddingKind(e.get<std::string>());
      settings.embedding.provider_endpoint.reset();
    }
  }
  if (body.contains("provider_endpoint") && !body.at("provider_endpoint").is_null()) {
    settings.embedding.provider_endpoint = body.at("provider_endpoint").get<std::string>();
  }
  if (settings.embedding.kind == EmbeddingKind::kExternalDense &&
      !settings.embedding.provider_endpoint) {
    settings.embedding.provider_endpoint = options_.provider_endpoint;
  }
  if (settings.embedding.kind != EmbeddingKind::kExternalDense) {
    settings.embedding.provider_endpoint.reset();
  }
  if (body.contains("classifier")) {
    settings.classifier.kind = ParseClassifierKind(body.at("classifier").get<std::string>());
  }
  if (body.contains("batch_size")) {
    const auto k = body.at("batch_size").get<long long>();
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
    settings.batch_size = static_cast<std::size_t>(k);
  }
  if (body.contains("stop_threshold")) {
    const auto t = body.at("stop_threshold").get<long long>();
    if (t < 1) throw Error(ErrorCode::kInvalidArgument, "stop_threshold must be positive");
    settings.stop_threshold = static_cast<std::size_t>(t);
  }
  session.Process(settings);
  return {{"ok", true},
          {"sentence_count", session.sentence_count()},
          {"settings", SettingsToWire(session.settings())}};
}

void Service::RegisterRoutes() {
  auto& srv = *server_;
  const std::string sid = Route("/sessions/([^/]+)");

  srv.Get(Route("/health"), Guarded([](const httplib::Request&, httplib::Response& res) {
            Reply(res, 200, {{"status", "ok"}});
          }));

  srv.Post(Route("/sessions"), Guarded([this](const httplib::Request&, httplib::Response& res) {
             Reply(res, 201, {{"session_id", store_.Create()}});
           }));

  srv.Post(Route("/sessions/import"),
           Guarded([this](const httplib::Request& req, httplib::Response& res) {
             auto session = ImportState(req.body, options_.providers);
             Reply(res, 201, {{"session_id", store_.Adopt(std::move(session))}});
           }));

  srv.Post(sid + "/documents", Guarded([this](const httplib::Request& req,
                                              httplib::Response& res) {
             std::string filename;
             std::string content;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("file")) {
                 throw Error(ErrorCode::kMalformedInput, "multipart upload needs a 'file' part");
               }
               const auto file = req.get_file_value("file");
               filename = file.filename;
               content = file.content;
             } else {
               filename = req.get_param_value("filename");
               content = req.body;
             }
             if (filename.empty()) {
               throw Error(ErrorCode::kMalformedInput, "upload needs a filename");
             }
             const json out = store_.With(req.matches[1], [&](Session& s) {
               const auto& doc = s.Upload(filename, AsBytes(content), extractors_);
               return json{{"doc_id", doc.doc_id},
                           {"filename", doc.filename},
                           {"sentence_count", doc.sentences.size()}};
             });
             Reply(res, 201, out);
           }));

  srv.Post(sid + "/process",
           Guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto body = ParseBody(req);
             Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                     return Process(s, body);
                   }));
           }));

  srv.Post(sid + "/search", Guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
             const auto body = ParseBody(req);
             Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                     const auto query = body.contains("query")
                                            ? body.at("query").get<std::string>()
                                            : s.query();
                     auto out = BatchToJson(s, s.Search(query));
                     out["stop_counter"] = s.stop_state().consecutive_empty_turns;
                     out["should_stop"] = s.ShouldStop();
                     return out;
                   }));
           }));

  srv.Post(sid + "/explore", Guarded([this](const httplib::Request& req,
                                            httplib::Response& res) {
             Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                     const auto outcome = s.Explore();
                     std::vector<double> unlabeled;
                     json per_document = json::array();
                     std::unordered_map<std::string, std::size_t> doc_pos;
                     for (const auto& d : s.documents()) {
                       doc_pos.emplace(d.doc_id, per_document.size());
                       per_document.push_back(
                           {{"doc_id", d.doc_id}, {"filename", d.filename}, {"scores", json::array()}});
                     }
                     for (std::size_t i = 0; i < s.sentence_count(); ++i) {
                       if (s.CurrentLabel(i)) continue;
                       unlabeled.push_back(outcome.scores[i]);
                       per_document[doc_pos.at(s.SentenceAt(i).doc_id)]["scores"].push_back(
                           outcome.scores[i]);
                     }
                     auto out = BatchToJson(s, outcome.batch);
                     out["score_histogram"] = Histogram(unlabeled, kHistogramBins);
                     out["per_document_scores"] = per_document;
                     out["used_classifier"] = outcome.used_classifier;
                     out["stop_counter"] = s.stop_state().consecutive_empty_turns;
                     out["should_stop"] = s.ShouldStop();
                     return out;
                   }));
           }));

  srv.Post(sid + "/labels", Guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
             const auto body = ParseBody(req);
             std::vector<LabelInput> inputs;
             for (const auto& e : body.at("events")) {
               inputs.push_back({e.at("doc_id").get<std::string>(),
                                 e.at("index").get<std::size_t>(),
                                 ParseLabel(e.at("label").get<std::string>())});
             }
             Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                     const auto r = s.SubmitLabels(inputs);
                     return json{{"accepted", r.accepted},
                                 {"history_length", s.history().size()},
                                 {"should_stop", r.should_stop},
                                 {"stop_counter", r.stop_counter}};
                   }));
           }));

  srv.Get(sid + "/documents", Guarded([this](const httplib::Request& req,
                                             httplib::Response& res) {
            Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                    json docs = json::array();
                    std::size_t ordinal = 0;
                    for (const auto& d : s.documents()) {
                      json sentences = json::array();
                      for (const auto& sentence : d.sentences) {
                        sentences.push_back({{"index", sentence.index},
                                             {"label", LabelOrNull(s.CurrentLabel(ordinal))},
                                             {"shown", s.WasShown(ordinal)},
                                             {"text", sentence.text}});
                        ++ordinal;
                      }
                      docs.push_back(
                          {{"doc_id", d.doc_id}, {"filename", d.filename}, {"sentences", sentences}});
                    }
                    return json{{"documents", docs}, {"processed", s.processed()}};
                  }));
          }));

  srv.Get(sid + "/history", Guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
            Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                    json events = json::array();
                    std::vector<const LabelEvent*> ordered;
                    for (const auto& e : s.history()) ordered.push_back(&e);
                    std::stable_sort(ordered.begin(), ordered.end(),
                                     [](const auto* a, const auto* b) {
                                       return a->position < b->position;
                                     });
                    for (const auto* e : ordered) {
                      const auto ordinal = *s.OrdinalOf(e->doc_id, e->index);
                      events.push_back({{"batch", e->batch},
                                        {"current_label", LabelOrNull(s.CurrentLabel(ordinal))},
                                        {"doc_id", e->doc_id},
                                        {"filename", s.DocumentOf(ordinal).filename},
                                        {"index", e->index},
                                        {"label", ToString(e->label)},
                                        {"phase", ToString(e->phase)},
                                        {"position", e->position},
                                        {"text", s.SentenceAt(ordinal).text}});
                    }
                    return json{{"events", events}};
                  }));
          }));

  srv.Get(sid + "/results", Guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
            Reply(res, 200, store_.With(req.matches[1], [&](Session& s) {
                    json per_document = json::array();
                    std::size_t relevant = 0;
                    std::size_t irrelevant = 0;
                    std::size_t unlabeled = 0;
                    for (const auto& c : LabelCountsPerDocument(s)) {
                      per_document.push_back({{"doc_id", c.doc_id},
                                              {"filename", c.filename},
                                              {"irrelevant", c.irrelevant},
                                              {"relevant", c.relevant},
                                              {"unlabeled", c.unlabeled}});
                      relevant += c.relevant;
                      irrelevant += c.irrelevant;
                      unlabeled += c.unlabeled;
                    }
                    json summary = json::array();
                    for (const auto& line : SummarySentences(s)) {
                      summary.push_back(
                          {{"filename", line.filename}, {"index", line.index}, {"text", line.text}});
                    }
                    return json{{"label_counts",
                                 {{"irrelevant", irrelevant},
                                  {"relevant", relevant},
                                  {"unlabeled", unlabeled}}},
                                {"per_document", per_document},
                                {"query", s.query()},
                                {"should_stop", s.ShouldStop()},
                                {"stop_counter", s.stop_state().consecutive_empty_turns},
                                {"summary", summary}};
                  }));
          }));

  srv.Get(sid + "/download/([a-z-]+)", Guarded([this](const httplib::Request& req,
                                                      httplib::Response& res) {
            const std::string kind = req.matches[2];
            std::string content_type;
            std::string filename;
            const std::string body = store_.With(req.matches[1], [&](Session& s) {
              if (kind == "state-json") {
                content_type = "application/json";
                filename = "state.json";
                return ExportState(s);
              }
              if (kind == "history-csv") {
                content_type = "text/csv; charset=utf-8";
                filename = "history.csv";
                return ExportHistoryCsv(s);
              }
              if (kind == "summary-txt") {
                content_type = "text/plain; charset=utf-8";
                filename = "summary.txt";
                return ExportSummaryTxt(s);
              }
              throw Error(ErrorCode::kInvalidArgument, "unknown download kind: " + kind);
            });
            res.status = 200;
            res.set_header("Content-Disposition", "attachment; filename=\"" + filename + "\"");
            res.set_content(body, content_type);
          }));

  srv.Post(sid + "/clear", Guarded([this](const httplib::Request& req, httplib::Response& res) {
             store_.With(req.matches[1], [](Session& s) { s.ClearLabels(); });
             Reply(res, 200, {{"ok", true}});
           }));
}

}  // namespace qfsum
