#include <httplib.h>

#include <nlohmann/json.hpp>

#include "qfsum/embeddings.hpp"
#include "qfsum/error.hpp"

namespace qfsum {

HttpDenseProvider::HttpDenseProvider(std::string endpoint, int timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "provider endpoint needs a scheme: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::vector<DenseVector> HttpDenseProvider::Encode(const std::vector<std::string>& texts) {
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  const nlohmann::json body = {{"texts", texts}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider unreachable at " + base_ + path_ + ": " +
                    httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider answered HTTP " + std::to_string(res->status));
  }
  std::vector<DenseVector> out;
  try {
    const auto reply = nlohmann::json::parse(res->body);
    for (const auto& row : reply.at("vectors")) {
      out.push_back(DenseVector{row.get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("malformed provider response: ") + e.what());
  }
  return out;
}

}  // namespace qfsum
