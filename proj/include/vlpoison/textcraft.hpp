#pragma once

// Poison-text generation: caption a destination image, then paraphrase the
// caption so it clearly carries the destination concept. All model access
// goes through TextClient, which has offline (fixture), cached, rate-limited
// and retrying implementations.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpoison/model.hpp"

namespace vlpoison {

class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PayloadKind { text, image_path };

struct ClientRequest {
  std::string instruction;
  std::string payload;
  PayloadKind payload_kind = PayloadKind::text;
  // Regeneration attempt; 0 for the first request. Part of the cache key so
  // that a regenerated reply is a distinct exchange.
  int variant = 0;
};

// Cache/fixture key: sha256 over instruction, payload (image payloads are
// keyed by file content) and variant when non-zero.
std::string request_key(const ClientRequest& request);

// One interface for captioning, paraphrasing and judging. Replies are
// returned verbatim. Implementations must tolerate concurrent calls.
class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual std::string descriptor() const = 0;
  virtual std::string complete(const ClientRequest& request) = 0;
};

// Offline client: replies are files "<request_key>.txt" in a directory, with
// an optional "default.txt" fallback. Never touches the network.
class FixtureClient final : public TextClient {
 public:
  explicit FixtureClient(std::filesystem::path dir);
  std::string descriptor() const override;
  std::string complete(const ClientRequest& request) override;

  // Stores `reply` as the recorded answer to `request`.
  static void record(const std::filesystem::path& dir, const ClientRequest& request,
                     const std::string& reply);

 private:
  std::filesystem::path dir_;
};

// OpenAI-compatible chat-completions client. Temperature 0 requests greedy
// decoding. The API key is read from an environment variable at call time.
struct HttpClientConfig {
  std::string base_url;  // e.g. "https://api.openai.com"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};
};

class HttpChatClient final : public TextClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);
  std::string descriptor() const override;
  std::string complete(const ClientRequest& request) override;

  // Request body sent for `request` (exposed for inspection and tests).
  Json request_body(const ClientRequest& request) const;

 private:
  HttpClientConfig config_;
};

// Disk cache of raw exchanges keyed by request_key. Writes are serialized
// per key; a hit never reaches the wrapped client.
class CachedClient final : public TextClient {
 public:
  CachedClient(std::shared_ptr<TextClient> inner, std::filesystem::path cache_dir);
  std::string descriptor() const override;
  std::string complete(const ClientRequest& request) override;

 private:
  std::shared_ptr<TextClient> inner_;
  std::filesystem::path dir_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;

  std::shared_ptr<std::mutex> lock_for(const std::string& key);
};

// Token bucket: `burst` tokens, refilled at `rate_per_second`.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  TokenBucket(double rate_per_second, double burst);
  void acquire();

 private:
  std::mutex mutex_;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
};

class RateLimitedClient final : public TextClient {
 public:
  RateLimitedClient(std::shared_ptr<TextClient> inner, std::shared_ptr<TokenBucket> bucket);
  std::string descriptor() const override;
  std::string complete(const ClientRequest& request) override;

 private:
  std::shared_ptr<TextClient> inner_;
  std::shared_ptr<TokenBucket> bucket_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

class RetryingClient final : public TextClient {
 public:
  RetryingClient(std::shared_ptr<TextClient> inner, RetryPolicy policy);
  std::string descriptor() const override;
  std::string complete(const ClientRequest& request) override;

 private:
  std::shared_ptr<TextClient> inner_;
  RetryPolicy policy_;
};

// Client stack from a config object:
// {"kind": "fixture", "dir": ...} or {"kind": "http", "base_url", "model",
// "api_key_env", "timeout_seconds", "cache_dir", "rate_per_second", "burst",
// "max_attempts", "backoff_ms"}.
std::shared_ptr<TextClient> make_client(const Json& config);

// ---------------------------------------------------------------------------
// Exchange log: every request and reply, in order.

struct Exchange {
  std::string stage;  // "caption", "paraphrase" or "judge"
  std::string item_id;
  std::string instruction;
  std::string payload;
  int attempt = 0;
  std::string reply;
  std::string error;
};

class ExchangeLog {
 public:
  void add(Exchange exchange);
  std::vector<Exchange> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Exchange> entries_;
};

void to_json(Json& j, const Exchange& e);

// ---------------------------------------------------------------------------
// Operations

inline constexpr const char* kCaptionInstruction = "describe the image in details.";

class TextCraftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws TextCraftError on an empty reply and ClientError on client failure.
std::string generate_caption(const std::string& image_id, const std::filesystem::path& image_path,
                             TextClient& client, ExchangeLog* log = nullptr);

std::string build_paraphrase_instruction(const AttackTask& task);

// Case-insensitive containment, as used by the crafting-side quality gate.
bool contains_ignore_case(const std::string& haystack, const std::string& needle);

// Label tasks: destination string present, original absent. Persuasion
// tasks: non-empty only.
bool passes_concept_check(const std::string& text, const AttackTask& task);

struct RefineResult {
  bool accepted = false;
  std::string text;                         // accepted reply
  std::vector<std::string> failed_replies;  // replies rejected by the check
};

RefineResult refine_caption(const std::string& caption, const AttackTask& task, TextClient& client,
                            int max_attempts = 3, const std::string& item_id = {},
                            ExchangeLog* log = nullptr);

struct TextPair {
  std::string caption;
  std::string refined;
  std::string destination_image_id;

  bool operator==(const TextPair&) const = default;
};

void to_json(Json& j, const TextPair& p);
void from_json(const Json& j, TextPair& p);

// Result for one image: either a pair, or a flag explaining why not.
struct TextCraftOutcome {
  std::string destination_image_id;
  std::optional<TextPair> pair;
  std::string flag_reason;
  std::vector<std::string> failed_replies;
};

TextCraftOutcome craft_text_pair(const std::string& image_id, const std::filesystem::path& image_path,
                                 const AttackTask& task, TextClient& caption_client,
                                 TextClient& paraphrase_client, int max_attempts,
                                 ExchangeLog* log = nullptr);

}  // namespace vlpoison
