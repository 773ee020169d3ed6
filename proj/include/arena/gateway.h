#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/agents.h"

namespace arena {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Network boundary; swapped for a fake in tests.
class Transport {
 public:
  virtual ~Transport() = default;
  // Throws GatewayError when no response was received.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(600));

struct ProviderConfig {
  std::string name;   // "openai", "anthropic", "gemini", or any OpenAI-compatible name
  std::string base_url;
  std::string api_key;
  bool structured_outputs = false;
};

// ARENA_<NAME>_BASE_URL / ARENA_<NAME>_API_KEY / ARENA_<NAME>_STRUCTURED; the key
// falls back to <NAME>_API_KEY.
ProviderConfig provider_from_env(const std::string& name);

struct ChatResult {
  std::string text;
  std::optional<std::string> thinking;
  std::optional<nlohmann::json> structured;
  int requests = 0;         // HTTP round trips, including retries
  int final_max_tokens = 0;
};

enum class CacheMode { off, record, replay, read_write };

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  CacheMode cache_mode = CacheMode::off;
  int max_transport_retries = 3;
  int max_truncation_retries = 3;
  std::chrono::milliseconds backoff{1000};
};

// Provider-neutral chat gateway. Safe to share across concurrently running
// games: it holds no per-conversation state.
class Gateway {
 public:
  Gateway(GatewayOptions options, std::shared_ptr<Transport> transport);

  void add_provider(ProviderConfig provider);
  const ProviderConfig& provider(const std::string& name) const;

  // `history` must start with exactly one system turn. Truncated replies are
  // retried with doubled max_tokens, at most max_truncation_retries times.
  // `structured` names an output schema for providers that support JSON mode.
  ChatResult send_chat(const AgentSpec& spec, const std::vector<ChatTurn>& history,
                       const GenerationConfig& config, const PhaseSchema* structured = nullptr,
                       int sample_index = 0) const;

  int cache_hits() const { return cache_hits_.load(); }

 private:
  struct Reply {
    std::string text;
    std::optional<std::string> thinking;
    std::optional<nlohmann::json> structured;
    bool truncated = false;
  };

  Reply call_once(const ProviderConfig& provider, const AgentSpec& spec,
                  const std::vector<ChatTurn>& history, const GenerationConfig& config,
                  int max_tokens, const PhaseSchema* structured, int sample_index) const;

  GatewayOptions options_;
  std::shared_ptr<Transport> transport_;
  std::map<std::string, ProviderConfig> providers_;
  mutable std::atomic<int> cache_hits_{0};
};

// Provider request/response adapters, exposed for tests.
HttpRequest build_provider_request(const ProviderConfig& provider, const std::string& model,
                                   const std::vector<ChatTurn>& history,
                                   const GenerationConfig& config, int max_tokens,
                                   const PhaseSchema* structured);

struct ProviderReply {
  std::string text;
  std::optional<std::string> thinking;
  bool truncated = false;
};
ProviderReply parse_provider_response(const ProviderConfig& provider, const std::string& body);

std::string sha256_hex(std::string_view data);

}  // namespace arena
