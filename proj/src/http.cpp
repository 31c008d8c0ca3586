#include "nbedit/http.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace nbedit {

HttpConfig http_config_from_env(std::string base_url) {
  HttpConfig config;
  config.base_url = std::move(base_url);
  if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str())) config.api_key = key;
  return config;
}

HttpTransport::HttpTransport(HttpConfig config) : config_(std::move(config)) {
  const std::size_t scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "base url needs a scheme: " + config_.base_url);
  }
  const std::size_t path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
  in_flight_ = std::make_unique<std::counting_semaphore<>>(
      static_cast<std::ptrdiff_t>(config_.max_in_flight));
}

namespace {

bool retryable(int status) { return status == 429 || (status >= 500 && status <= 599); }

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

}  // namespace

nlohmann::json HttpTransport::post_json(std::string_view path, const nlohmann::json& body) const {
  SlotGuard slot(*in_flight_);

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  const std::string target = path_prefix_ + std::string(path);
  const std::string payload = body.dump();
  auto backoff = config_.initial_backoff;

  for (int attempt = 0;; ++attempt) {
    auto result = client.Post(target, payload, "application/json");
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        throw BackendFailure(ErrorCode::BackendTimeout, 0, "",
                             "backend timed out: " + httplib::to_string(err));
      }
      throw BackendFailure(ErrorCode::BackendError, 0, "",
                           "backend unreachable: " + httplib::to_string(err));
    }
    if (result->status >= 200 && result->status < 300) {
      try {
        return nlohmann::json::parse(result->body);
      } catch (const nlohmann::json::exception&) {
        throw BackendFailure(ErrorCode::BackendError, result->status, result->body,
                             "backend returned invalid JSON");
      }
    }
    if (!retryable(result->status) || attempt >= config_.max_retries) {
      throw BackendFailure(ErrorCode::BackendError, result->status, result->body,
                           "backend error status " + std::to_string(result->status));
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

HttpReader::HttpReader(HttpConfig config, std::string model)
    : transport_(std::move(config)), model_(std::move(model)) {}

nlohmann::json HttpReader::request_body(const ReaderRequest& request, std::string_view model) {
  return {
      {"model", model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", 0},
      {"max_tokens", request.max_tokens},
  };
}

Completion HttpReader::complete(const ReaderRequest& request) const {
  if (request.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  const auto response = transport_.post_json("/chat/completions", request_body(request, model_));
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    return truncate_to_tokens(content.get<std::string>(), request.max_tokens);
  } catch (const nlohmann::json::exception&) {
    throw BackendFailure(ErrorCode::BackendError, 200, response.dump(),
                         "response has no choices[0].message.content");
  }
}

HttpEmbedder::HttpEmbedder(HttpConfig config, std::string model, std::size_t dim)
    : transport_(std::move(config)), model_(std::move(model)), dim_(dim) {}

Embedding HttpEmbedder::embed(std::string_view text) const {
  const auto response =
      transport_.post_json("/embeddings", {{"model", model_}, {"input", std::string(text)}});
  std::vector<double> values;
  try {
    values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw BackendFailure(ErrorCode::BackendError, 200, response.dump(),
                         "response has no data[0].embedding");
  }
  if (values.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "remote embedding has " +
                                                  std::to_string(values.size()) +
                                                  " values, expected " + std::to_string(dim_));
  }
  return Embedding::normalized(Eigen::Map<const Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size())));
}

}  // namespace nbedit
