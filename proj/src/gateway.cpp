#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "arena/gateway.h"

#include <httplib.h>
#include <openssl/evp.h>

#include <cstdlib>
#include <thread>

namespace arena {
namespace {

using nlohmann::json;

std::string env_or(const std::string& key, const std::string& fallback) {
  const char* v = std::getenv(key.c_str());
  return v ? std::string(v) : fallback;
}

std::string env_prefix(const std::string& provider) {
  std::string out = "ARENA_";
  for (char c : provider) {
    out += std::isalnum(static_cast<unsigned char>(c))
               ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
               : '_';
  }
  return out;
}

std::string base64(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_type(const std::string& path) {
  const auto ext = to_lower(std::filesystem::path(path).extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

// A user turn split into ordered text and image pieces. "[IMAGE: ref]"
// markers place images inline; unreferenced images trail the text.
struct Piece {
  bool is_image = false;
  std::string value;
};

std::vector<Piece> split_turn(const ChatTurn& turn) {
  std::vector<Piece> pieces;
  std::vector<bool> placed(turn.images.size(), false);
  const std::string& text = turn.text;
  std::size_t emitted = 0;
  std::size_t cursor = 0;
  while (true) {
    const auto open = text.find("[IMAGE: ", cursor);
    if (open == std::string::npos) break;
    const auto close = text.find(']', open);
    if (close == std::string::npos) break;
    cursor = close + 1;
    const std::string ref = text.substr(open + 8, close - open - 8);
    const auto it = std::find(turn.images.begin(), turn.images.end(), ref);
    if (it == turn.images.end()) continue;
    if (open > emitted) pieces.push_back({false, text.substr(emitted, open - emitted)});
    pieces.push_back({true, ref});
    placed[static_cast<std::size_t>(it - turn.images.begin())] = true;
    emitted = close + 1;
  }
  if (emitted < text.size()) pieces.push_back({false, text.substr(emitted)});
  for (std::size_t i = 0; i < turn.images.size(); ++i) {
    if (!placed[i]) pieces.push_back({true, turn.images[i]});
  }
  return pieces;
}

std::string read_image(const std::string& ref) {
  try {
    return read_file(ref);
  } catch (const ConfigError&) {
    throw GatewayError("cannot read image asset " + ref);
  }
}

json openai_body(const std::string& model, const std::vector<ChatTurn>& history,
                 const GenerationConfig& config, int max_tokens, const PhaseSchema* structured) {
  json messages = json::array();
  for (const auto& turn : history) {
    if (turn.role == ChatTurn::Role::system && turn.text.empty()) continue;
    json msg = {{"role", std::string(to_string(turn.role))}};
    if (turn.images.empty()) {
      msg["content"] = turn.text;
    } else {
      json parts = json::array();
      for (const auto& piece : split_turn(turn)) {
        if (piece.is_image) {
          parts.push_back({{"type", "image_url"},
                           {"image_url",
                            {{"url", "data:" + mime_type(piece.value) + ";base64," +
                                         base64(read_image(piece.value))}}}});
        } else if (!piece.value.empty()) {
          parts.push_back({{"type", "text"}, {"text", piece.value}});
        }
      }
      msg["content"] = parts;
    }
    messages.push_back(std::move(msg));
  }
  json body = {{"model", model},
               {"messages", messages},
               {"max_completion_tokens", max_tokens},
               {"temperature", config.temperature}};
  if (config.thinking.mode == ThinkingConfig::Mode::effort) {
    body["reasoning_effort"] = config.thinking.effort;
  }
  if (structured) {
    body["response_format"] = {{"type", "json_schema"},
                               {"json_schema",
                                {{"name", structured->structured_object},
                                 {"schema", structured_json_schema(*structured)},
                                 {"strict", true}}}};
  }
  return body;
}

json anthropic_body(const std::string& model, const std::vector<ChatTurn>& history,
                    const GenerationConfig& config, int max_tokens) {
  json messages = json::array();
  std::string system;
  for (const auto& turn : history) {
    if (turn.role == ChatTurn::Role::system) {
      system = turn.text;
      continue;
    }
    json parts = json::array();
    for (const auto& piece : split_turn(turn)) {
      if (piece.is_image) {
        parts.push_back({{"type", "image"},
                         {"source",
                          {{"type", "base64"},
                           {"media_type", mime_type(piece.value)},
                           {"data", base64(read_image(piece.value))}}}});
      } else if (!piece.value.empty()) {
        parts.push_back({{"type", "text"}, {"text", piece.value}});
      }
    }
    messages.push_back({{"role", std::string(to_string(turn.role))}, {"content", parts}});
  }
  json body = {{"model", model}, {"max_tokens", max_tokens}, {"messages", messages}};
  if (!system.empty()) body["system"] = system;
  if (config.thinking.mode == ThinkingConfig::Mode::budget) {
    body["thinking"] = {{"type", "enabled"}, {"budget_tokens", config.thinking.budget_tokens}};
    // Extended thinking only accepts temperature 1.
    body["temperature"] = 1.0;
  } else {
    body["temperature"] = config.temperature;
  }
  return body;
}

json strip_additional_properties(json schema) {
  if (schema.is_object()) {
    schema.erase("additionalProperties");
    for (auto& [_, v] : schema.items()) v = strip_additional_properties(v);
  }
  return schema;
}

json gemini_body(const std::vector<ChatTurn>& history, const GenerationConfig& config,
                 int max_tokens, const PhaseSchema* structured) {
  json contents = json::array();
  json body = json::object();
  for (const auto& turn : history) {
    if (turn.role == ChatTurn::Role::system) {
      if (!turn.text.empty()) body["systemInstruction"] = {{"parts", {{{"text", turn.text}}}}};
      continue;
    }
    json parts = json::array();
    for (const auto& piece : split_turn(turn)) {
      if (piece.is_image) {
        parts.push_back({{"inline_data",
                          {{"mime_type", mime_type(piece.value)},
                           {"data", base64(read_image(piece.value))}}}});
      } else if (!piece.value.empty()) {
        parts.push_back({{"text", piece.value}});
      }
    }
    contents.push_back(
        {{"role", turn.role == ChatTurn::Role::assistant ? "model" : "user"}, {"parts", parts}});
  }
  body["contents"] = contents;
  json gen = {{"temperature", config.temperature}, {"maxOutputTokens", max_tokens}};
  switch (config.thinking.mode) {
    case ThinkingConfig::Mode::dynamic:
      gen["thinkingConfig"] = {{"thinkingBudget", -1}, {"includeThoughts", true}};
      break;
    case ThinkingConfig::Mode::budget:
      gen["thinkingConfig"] = {{"thinkingBudget", config.thinking.budget_tokens},
                               {"includeThoughts", true}};
      break;
    default:
      break;
  }
  if (structured) {
    gen["responseMimeType"] = "application/json";
    gen["responseSchema"] = strip_additional_properties(structured_json_schema(*structured));
  }
  body["generationConfig"] = gen;
  return body;
}

std::string join_url(const std::string& base, const std::string& path) {
  if (!base.empty() && base.back() == '/') return base.substr(0, base.size() - 1) + path;
  return base + path;
}

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const HttpRequest& request) override {
    // Split "scheme://host[:port]" from the path.
    const auto scheme_end = request.url.find("://");
    const auto path_begin =
        request.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = request.url.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : request.url.substr(path_begin);
    httplib::Client client(origin);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    client.set_connection_timeout(std::chrono::seconds(30));
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    if (!result) {
      throw GatewayError("HTTP request to " + origin + " failed: " + httplib::to_string(result.error()));
    }
    return {result->status, result->body};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttpTransport>(timeout);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

ProviderConfig provider_from_env(const std::string& name) {
  const std::string prefix = env_prefix(name);
  ProviderConfig p;
  p.name = name;
  std::string fallback;
  if (name == "openai") fallback = "https://api.openai.com";
  if (name == "anthropic") fallback = "https://api.anthropic.com";
  if (name == "gemini") fallback = "https://generativelanguage.googleapis.com";
  p.base_url = env_or(prefix + "_BASE_URL", fallback);
  // The vendor's own variable (ANTHROPIC_API_KEY, ...) is the fallback.
  p.api_key = env_or(prefix + "_API_KEY", env_or(prefix.substr(6) + "_API_KEY", ""));
  const std::string structured = to_lower(env_or(prefix + "_STRUCTURED", ""));
  p.structured_outputs = structured == "1" || structured == "true";
  if (p.base_url.empty()) {
    throw ConfigError("provider " + name + ": set " + prefix + "_BASE_URL");
  }
  return p;
}

HttpRequest build_provider_request(const ProviderConfig& provider, const std::string& model,
                                   const std::vector<ChatTurn>& history,
                                   const GenerationConfig& config, int max_tokens,
                                   const PhaseSchema* structured) {
  HttpRequest req;
  req.headers["content-type"] = "application/json";
  if (provider.name == "anthropic") {
    req.url = join_url(provider.base_url, "/v1/messages");
    req.headers["x-api-key"] = provider.api_key;
    req.headers["anthropic-version"] = "2023-06-01";
    req.body = anthropic_body(model, history, config, max_tokens).dump();
  } else if (provider.name == "gemini") {
    req.url = join_url(provider.base_url, "/v1beta/models/" + model + ":generateContent");
    req.headers["x-goog-api-key"] = provider.api_key;
    req.body = gemini_body(history, config, max_tokens, structured).dump();
  } else {
    req.url = join_url(provider.base_url, "/v1/chat/completions");
    if (!provider.api_key.empty()) req.headers["authorization"] = "Bearer " + provider.api_key;
    req.body = openai_body(model, history, config, max_tokens, structured).dump();
  }
  return req;
}

ProviderReply parse_provider_response(const ProviderConfig& provider, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw GatewayError("provider " + provider.name + " returned invalid JSON: " + e.what());
  }
  ProviderReply reply;
  try {
    if (provider.name == "anthropic") {
      std::string thinking;
      for (const auto& block : j.at("content")) {
        const auto type = block.value("type", "");
        if (type == "text") reply.text += block.at("text").get<std::string>();
        if (type == "thinking") thinking += block.value("thinking", "");
      }
      if (!thinking.empty()) reply.thinking = thinking;
      reply.truncated = j.value("stop_reason", "") == "max_tokens";
    } else if (provider.name == "gemini") {
      const auto& cand = j.at("candidates").at(0);
      std::string thinking;
      if (cand.contains("content") && cand["content"].contains("parts")) {
        for (const auto& part : cand["content"]["parts"]) {
          if (!part.contains("text")) continue;
          if (part.value("thought", false)) {
            thinking += part["text"].get<std::string>();
          } else {
            reply.text += part["text"].get<std::string>();
          }
        }
      }
      if (!thinking.empty()) reply.thinking = thinking;
      reply.truncated = cand.value("finishReason", "") == "MAX_TOKENS";
    } else {
      const auto& choice = j.at("choices").at(0);
      const auto& message = choice.at("message");
      if (message.contains("content") && message["content"].is_string()) {
        reply.text = message["content"].get<std::string>();
      }
      if (message.contains("reasoning_content") && message["reasoning_content"].is_string()) {
        reply.thinking = message["reasoning_content"].get<std::string>();
      }
      reply.truncated = choice.value("finish_reason", "") == "length";
    }
  } catch (const json::exception& e) {
    throw GatewayError("provider " + provider.name + " response has unexpected shape: " + e.what());
  }
  return reply;
}

Gateway::Gateway(GatewayOptions options, std::shared_ptr<Transport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
  if (options_.cache_mode != CacheMode::off && !options_.cache_dir) {
    throw ConfigError("gateway cache mode requires a cache directory");
  }
}

void Gateway::add_provider(ProviderConfig provider) {
  providers_[provider.name] = std::move(provider);
}

const ProviderConfig& Gateway::provider(const std::string& name) const {
  auto it = providers_.find(name);
  if (it == providers_.end()) throw ConfigError("provider not configured: " + name);
  return it->second;
}

Gateway::Reply Gateway::call_once(const ProviderConfig& provider, const AgentSpec& spec,
                                  const std::vector<ChatTurn>& history,
                                  const GenerationConfig& config, int max_tokens,
                                  const PhaseSchema* structured, int sample_index) const {
  // Request digest: everything that influences the reply except credentials.
  json key = {{"provider", provider.name},
              {"model", *spec.model_name},
              {"max_tokens", max_tokens},
              {"temperature", config.temperature},
              {"thinking_mode", static_cast<int>(config.thinking.mode)},
              {"thinking_effort", config.thinking.effort},
              {"thinking_budget", config.thinking.budget_tokens},
              {"structured", structured ? structured->structured_object : ""},
              {"sample", sample_index}};
  json turns = json::array();
  for (const auto& t : history) {
    turns.push_back({{"role", std::string(to_string(t.role))}, {"text", t.text}, {"images", t.images}});
  }
  key["turns"] = turns;
  const std::string digest = sha256_hex(key.dump());
  std::filesystem::path cache_file;
  if (options_.cache_dir) {
    cache_file = *options_.cache_dir / digest.substr(0, 2) / (digest + ".json");
  }

  const bool can_read = options_.cache_mode == CacheMode::replay ||
                        options_.cache_mode == CacheMode::read_write;
  if (can_read && std::filesystem::exists(cache_file)) {
    const json cached = json::parse(read_file(cache_file));
    ++cache_hits_;
    Reply r;
    r.text = cached.at("text").get<std::string>();
    if (cached.contains("thinking")) r.thinking = cached["thinking"].get<std::string>();
    r.truncated = cached.value("truncated", false);
    return r;
  }
  if (options_.cache_mode == CacheMode::replay) {
    throw GatewayError("replay cache miss for request " + digest);
  }

  const PhaseSchema* wire_schema =
      provider.structured_outputs && structured && !structured->structured_object.empty()
          ? structured
          : nullptr;
  const HttpRequest request =
      build_provider_request(provider, *spec.model_name, history, config, max_tokens, wire_schema);

  ProviderReply parsed;
  for (int attempt = 0;; ++attempt) {
    std::string failure;
    try {
      const HttpResponse resp = transport_->post(request);
      if (resp.status >= 200 && resp.status < 300) {
        parsed = parse_provider_response(provider, resp.body);
        break;
      }
      failure = "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 300);
      if (resp.status != 429 && resp.status < 500) throw GatewayError(failure);
    } catch (const GatewayError& e) {
      if (failure.empty()) failure = e.what();
      else throw;
    }
    if (attempt >= options_.max_transport_retries) {
      throw GatewayError("transport failure after " + std::to_string(attempt + 1) +
                         " attempts: " + failure);
    }
    if (options_.backoff.count() > 0) std::this_thread::sleep_for(options_.backoff * (1 << attempt));
  }

  Reply r;
  r.text = std::move(parsed.text);
  r.thinking = std::move(parsed.thinking);
  r.truncated = parsed.truncated;
  if (options_.cache_mode == CacheMode::record || options_.cache_mode == CacheMode::read_write) {
    json stored = {{"text", r.text}, {"truncated", r.truncated}, {"request", key}};
    if (r.thinking) stored["thinking"] = *r.thinking;
    write_file(cache_file, stored.dump(2));
  }
  return r;
}

ChatResult Gateway::send_chat(const AgentSpec& spec, const std::vector<ChatTurn>& history,
                              const GenerationConfig& config, const PhaseSchema* structured,
                              int sample_index) const {
  if (spec.backend != Backend::remote_model) {
    throw GatewayError("wrong backend: agent " + spec.agent_id + " is scripted");
  }
  if (!spec.model_name || !spec.provider) {
    throw ConfigError("agent " + spec.agent_id + " has no provider/model");
  }
  const auto systems = std::count_if(history.begin(), history.end(), [](const ChatTurn& t) {
    return t.role == ChatTurn::Role::system;
  });
  if (history.empty() || history.front().role != ChatTurn::Role::system || systems != 1) {
    throw GatewayError("chat history must start with exactly one system turn");
  }
  const ProviderConfig& prov = provider(*spec.provider);

  ChatResult result;
  int max_tokens = config.max_tokens;
  for (int retry = 0;; ++retry) {
    Reply reply = call_once(prov, spec, history, config, max_tokens, structured, sample_index);
    ++result.requests;
    if (!reply.truncated) {
      if (trim(reply.text).empty()) throw GatewayError("empty response from " + *spec.model_name);
      result.text = std::move(reply.text);
      result.thinking = std::move(reply.thinking);
      result.final_max_tokens = max_tokens;
      if (prov.structured_outputs && structured && !structured->structured_object.empty()) {
        try {
          result.structured = json::parse(result.text);
        } catch (const json::parse_error&) {
          // Fall back to tag parsing of the raw text.
        }
      }
      return result;
    }
    if (!config.retry_on_truncation || retry >= options_.max_truncation_retries) {
      throw GatewayError("response truncated at max_tokens=" + std::to_string(max_tokens));
    }
    max_tokens *= 2;
  }
}

}  // namespace arena
