#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "qfsum/error.hpp"
#include "qfsum/session.hpp"

namespace httplib {
class Server;
}

namespace qfsum {

inline constexpr std::string_view kApiPrefix = "/api/v1";

struct ApiError {
  std::string code;
  std::string message;
  int http_status = 500;
};

ApiError ToApiError(ErrorCode code, std::string message);
int HttpStatusFor(ErrorCode code);

struct ServiceOptions {
  std::string extractor = "builtin-text";
  // Used for external-dense sessions that do not name their own endpoint.
  std::optional<std::string> provider_endpoint;
  SessionSettings defaults;
  std::chrono::seconds idle_expiry{std::chrono::hours(24)};
  ProviderFactory providers = DefaultProviderFactory();
};

// In-memory sessions with per-session single-writer locking and idle expiry.
class SessionStore {
 public:
  SessionStore(SessionSettings defaults, ProviderFactory providers,
               std::chrono::seconds idle_expiry);

  std::string Create();
  // Adopts an imported session; keeps its id unless taken.
  std::string Adopt(Session session);

  // Runs `fn(Session&)` under the session's lock. Throws SessionNotFound.
  template <typename F>
  auto With(const std::string& id, F&& fn) {
    auto entry = Find(id);
    std::lock_guard lock(entry->mu);
    entry->last_access = std::chrono::steady_clock::now();
    return fn(*entry->session);
  }

  std::size_t size() const;
  void ExpireIdle();

 private:
  struct Entry {
    std::mutex mu;
    std::optional<Session> session;
    std::chrono::steady_clock::time_point last_access;
  };

  std::shared_ptr<Entry> Find(const std::string& id);
  std::string FreshId();

  SessionSettings defaults_;
  ProviderFactory providers_;
  std::chrono::seconds idle_expiry_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_;
};

// HTTP+JSON facade over SessionStore; every route lives under kApiPrefix.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() { return *server_; }
  SessionStore& store() { return store_; }

  // Blocking.
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (or -1); then call ListenAfterBind.
  int BindToAnyPort(const std::string& host);
  bool ListenAfterBind();
  void Stop();

 private:
  void RegisterRoutes();
  nlohmann::json Process(Session& session, const nlohmann::json& body) const;

  ServiceOptions options_;
  ExtractorRegistry extractors_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
};

// Batch rendered for clients: items carry doc_id, filename, index, text, score.
nlohmann::json BatchToJson(const Session& session, const Batch& batch);

}  // namespace qfsum
