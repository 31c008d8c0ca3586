#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include "json.hpp"

#include "nbedit/reader.hpp"
#include "nbedit/retriever.hpp"

namespace nbedit {

inline constexpr std::string_view kApiKeyEnv = "READER_API_KEY";

struct HttpConfig {
  // Scheme, host, optional port and path prefix, e.g. "https://api.example.com/v1".
  std::string base_url;
  // Sent as a bearer token when non-empty.
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;  // on 429 and 5xx
  std::chrono::milliseconds initial_backoff{500};
  std::size_t max_in_flight = 4;
};

// Fills api_key from READER_API_KEY when set.
HttpConfig http_config_from_env(std::string base_url);

// JSON-over-HTTP POST with bounded concurrency and retry. Shared by every
// remote backend (reader, embedder, NLI judge).
class HttpTransport {
 public:
  explicit HttpTransport(HttpConfig config);

  // Throws BackendFailure with code BackendTimeout on transport timeouts and
  // BackendError otherwise (status 0 for connection failures).
  nlohmann::json post_json(std::string_view path, const nlohmann::json& body) const;

  const HttpConfig& config() const noexcept { return config_; }

 private:
  HttpConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

// Chat-completions backend:
//   {model, messages:[{role:"user", content}], temperature:0, max_tokens}
// The answer is choices[0].message.content, capped to max_tokens tokens.
class HttpReader final : public Reader {
 public:
  HttpReader(HttpConfig config, std::string model);

  Completion complete(const ReaderRequest& request) const override;
  std::string id() const override { return "http:" + model_; }

  static nlohmann::json request_body(const ReaderRequest& request, std::string_view model);

 private:
  HttpTransport transport_;
  std::string model_;
};

// POST {base}/embeddings {model, input}; reads data[0].embedding and
// normalizes it to unit length.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpConfig config, std::string model, std::size_t dim);

  Embedding embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }

 private:
  HttpTransport transport_;
  std::string model_;
  std::size_t dim_;
};

}  // namespace nbedit
