#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "studentsim/llm_provider.hpp"
#include "text_util.hpp"

namespace studentsim::llm {

using nlohmann::json;
using detail::cat;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

bool network_disabled() {
  const char* v = std::getenv("NO_NETWORK");
  return v != nullptr && std::string_view(v) == "1";
}

HttpTransport::HttpTransport(ProviderConfig config) : config_(std::move(config)) {
  (void)split_url(config_.endpoint);
}

std::string HttpTransport::identity() const { return "remote:" + config_.endpoint; }

std::string HttpTransport::request_body(const ChatRequest& request) {
  json body{{"model", request.model_name},
            {"messages", json::array({json{{"role", "system"}, {"content", request.system_text}},
                                      json{{"role", "user"}, {"content", request.user_text}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  return body.dump();
}

TransportResult HttpTransport::interpret_reply(int status, const std::string& body) {
  if (status == 401 || status == 403) return {TransportStatus::kAuthFailure, {}, cat("HTTP ", status), {}};
  if (status == 408 || status == 429 || status >= 500) return {TransportStatus::kTransient, {}, cat("HTTP ", status), {}};
  if (status != 200) return {TransportStatus::kRejected, {}, cat("HTTP ", status, ": ", body.substr(0, 200)), {}};

  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return {TransportStatus::kMalformed, {}, "reply is not a JSON object", {}};
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    return {TransportStatus::kMalformed, {}, "reply has no choices", {}};
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    return {TransportStatus::kMalformed, {}, "reply has no message content", {}};
  }
  TransportResult out{TransportStatus::kOk, first["message"]["content"].get<std::string>(), {}, {}};
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    out.usage = Usage{u->value("prompt_tokens", 0L), u->value("completion_tokens", 0L)};
  }
  return out;
}

TransportResult HttpTransport::send(const ChatRequest& request, int /*attempt*/) {
  if (network_disabled()) return {TransportStatus::kNetworkDisabled, {}, "NO_NETWORK=1 forbids remote calls", {}};

  const char* key = std::getenv(config_.credential_env.c_str());
  if (key == nullptr || *key == '\0') {
    return {TransportStatus::kAuthFailure, {}, "credential variable " + config_.credential_env + " is not set", {}};
  }

  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  const auto timeout = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(timeout, 0);
  client.set_read_timeout(timeout, 0);
  client.set_write_timeout(timeout, 0);

  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
  auto res = client.Post(url.path, headers, request_body(request), "application/json");
  if (!res) return {TransportStatus::kTransient, {}, "transport error: " + httplib::to_string(res.error()), {}};
  return interpret_reply(res->status, res->body);
}

}  // namespace studentsim::llm
