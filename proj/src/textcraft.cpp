#include "vlpoison/textcraft.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "vlpoison/hashing.hpp"
#include "vlpoison/tasks.hpp"

namespace vlpoison {

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_type(const std::filesystem::path& path) {
  const auto ext = lower_ascii(path.extension().string());
  return ext == ".jpg" || ext == ".jpeg" ? "image/jpeg" : "image/png";
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string request_key(const ClientRequest& request) {
  std::string material = request.instruction;
  material += '\x1f';
  if (request.payload_kind == PayloadKind::image_path) {
    material += "image-sha256:" + sha256_file(request.payload);
  } else {
    material += request.payload;
  }
  if (request.variant != 0) {
    material += '\x1f';
    material += std::to_string(request.variant);
  }
  return sha256_hex(material);
}

// ---------------------------------------------------------------------------

FixtureClient::FixtureClient(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ClientError("fixture directory " + dir_.string() + " does not exist");
  }
}

std::string FixtureClient::descriptor() const { return "fixture:" + dir_.string(); }

std::string FixtureClient::complete(const ClientRequest& request) {
  const auto key = request_key(request);
  const auto recorded = dir_ / (key + ".txt");
  if (std::filesystem::exists(recorded)) return read_file(recorded);
  const auto fallback = dir_ / "default.txt";
  if (std::filesystem::exists(fallback)) return read_file(fallback);
  throw ClientError("no recorded reply " + key + " in " + dir_.string() + " for instruction '" +
                    request.instruction.substr(0, 60) + "'");
}

void FixtureClient::record(const std::filesystem::path& dir, const ClientRequest& request,
                           const std::string& reply) {
  write_file_atomic(dir / (request_key(request) + ".txt"), reply);
}

// ---------------------------------------------------------------------------

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ClientError("HTTP client needs a base_url");
  if (config_.model.empty()) throw ClientError("HTTP client needs a model name");
}

std::string HttpChatClient::descriptor() const {
  return "http:" + config_.base_url + config_.path + "#" + config_.model;
}

Json HttpChatClient::request_body(const ClientRequest& request) const {
  Json content;
  if (request.payload_kind == PayloadKind::image_path) {
    const std::filesystem::path path = request.payload;
    const std::string url = "data:" + mime_type(path) + ";base64," + base64(read_file(path));
    content = Json::array({Json{{"type", "text"}, {"text", request.instruction}},
                           Json{{"type", "image_url"}, {"image_url", {{"url", url}}}}});
  } else {
    content = request.payload.empty() ? request.instruction
                                      : request.instruction + " " + request.payload;
  }
  return Json{{"model", config_.model},
              {"temperature", 0},
              {"messages", Json::array({Json{{"role", "user"}, {"content", content}}})}};
}

std::string HttpChatClient::complete(const ClientRequest& request) {
  httplib::Client http(config_.base_url);
  http.set_connection_timeout(config_.timeout);
  http.set_read_timeout(config_.timeout);
  http.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto result =
      http.Post(config_.path, headers, request_body(request).dump(), "application/json");
  if (!result) {
    throw ClientError(descriptor() + ": request failed (" + httplib::to_string(result.error()) +
                      ")");
  }
  if (result->status != 200) {
    throw ClientError(descriptor() + ": HTTP " + std::to_string(result->status) + ": " +
                      result->body.substr(0, 200));
  }
  try {
    const auto reply = Json::parse(result->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw ClientError(descriptor() + ": malformed reply: " + e.what());
  }
}

// ---------------------------------------------------------------------------

CachedClient::CachedClient(std::shared_ptr<TextClient> inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
  std::filesystem::create_directories(dir_);
}

std::string CachedClient::descriptor() const { return "cached(" + inner_->descriptor() + ")"; }

std::shared_ptr<std::mutex> CachedClient::lock_for(const std::string& key) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = key_locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::string CachedClient::complete(const ClientRequest& request) {
  const auto key = request_key(request);
  const auto path = dir_ / (key + ".json");
  const auto lock = lock_for(key);
  std::lock_guard guard(*lock);
  if (std::filesystem::exists(path)) {
    return Json::parse(read_file(path)).at("reply").get<std::string>();
  }
  std::string reply = inner_->complete(request);
  Json entry{{"instruction", request.instruction},
             {"payload", request.payload},
             {"variant", request.variant},
             {"client", inner_->descriptor()},
             {"reply", reply}};
  write_file_atomic(path, entry.dump(2) + "\n");
  return reply;
}

// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst), tokens_(burst), last_(Clock::now()) {
  if (!(rate_per_second > 0.0) || !(burst >= 1.0)) {
    throw std::invalid_argument("token bucket needs rate > 0 and burst >= 1");
  }
}

void TokenBucket::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard guard(mutex_);
      const auto now = Clock::now();
      tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

RateLimitedClient::RateLimitedClient(std::shared_ptr<TextClient> inner,
                                     std::shared_ptr<TokenBucket> bucket)
    : inner_(std::move(inner)), bucket_(std::move(bucket)) {}

std::string RateLimitedClient::descriptor() const { return inner_->descriptor(); }

std::string RateLimitedClient::complete(const ClientRequest& request) {
  bucket_->acquire();
  return inner_->complete(request);
}

RetryingClient::RetryingClient(std::shared_ptr<TextClient> inner, RetryPolicy policy)
    : inner_(std::move(inner)), policy_(policy) {
  if (policy_.max_attempts < 1) throw std::invalid_argument("retry policy needs >= 1 attempt");
}

std::string RetryingClient::descriptor() const { return inner_->descriptor(); }

std::string RetryingClient::complete(const ClientRequest& request) {
  auto backoff = std::chrono::duration<double, std::milli>(policy_.initial_backoff);
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const ClientError& e) {
      if (attempt >= policy_.max_attempts) {
        throw ClientError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                          " attempts)");
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff *= policy_.multiplier;
  }
}

std::shared_ptr<TextClient> make_client(const Json& config) {
  const auto kind = config.value("kind", std::string("fixture"));
  std::shared_ptr<TextClient> client;
  if (kind == "fixture") {
    return std::make_shared<FixtureClient>(config.at("dir").get<std::string>());
  }
  if (kind != "http") throw ConfigError("unknown client kind '" + kind + "'");
  HttpClientConfig http;
  http.base_url = config.at("base_url").get<std::string>();
  http.path = config.value("path", http.path);
  http.model = config.at("model").get<std::string>();
  http.api_key_env = config.value("api_key_env", http.api_key_env);
  http.timeout = std::chrono::seconds(config.value("timeout_seconds", 60));
  client = std::make_shared<HttpChatClient>(http);
  RetryPolicy retry;
  retry.max_attempts = config.value("max_attempts", retry.max_attempts);
  retry.initial_backoff = std::chrono::milliseconds(config.value("backoff_ms", 500));
  client = std::make_shared<RetryingClient>(client, retry);
  if (config.contains("rate_per_second")) {
    client = std::make_shared<RateLimitedClient>(
        client, std::make_shared<TokenBucket>(config["rate_per_second"].get<double>(),
                                              config.value("burst", 1.0)));
  }
  if (config.contains("cache_dir")) {
    client = std::make_shared<CachedClient>(client, config["cache_dir"].get<std::string>());
  }
  return client;
}

// ---------------------------------------------------------------------------

void ExchangeLog::add(Exchange exchange) {
  std::lock_guard guard(mutex_);
  entries_.push_back(std::move(exchange));
}

std::vector<Exchange> ExchangeLog::entries() const {
  std::lock_guard guard(mutex_);
  return entries_;
}

void to_json(Json& j, const Exchange& e) {
  j = Json{{"stage", e.stage},     {"item_id", e.item_id}, {"instruction", e.instruction},
           {"payload", e.payload}, {"attempt", e.attempt}, {"reply", e.reply},
           {"error", e.error}};
}

// ---------------------------------------------------------------------------

std::string generate_caption(const std::string& image_id, const std::filesystem::path& image_path,
                             TextClient& client, ExchangeLog* log) {
  ClientRequest request{kCaptionInstruction, image_path.string(), PayloadKind::image_path, 0};
  Exchange exchange{"caption", image_id, request.instruction, request.payload, 0, {}, {}};
  try {
    exchange.reply = client.complete(request);
  } catch (const ClientError& e) {
    exchange.error = e.what();
    if (log) log->add(exchange);
    throw;
  }
  if (blank(exchange.reply)) exchange.error = "empty caption";
  if (log) log->add(exchange);
  if (!exchange.error.empty()) {
    throw TextCraftError("empty caption for image '" + image_id + "'");
  }
  return exchange.reply;
}

std::string build_paraphrase_instruction(const AttackTask& task) {
  const std::string destination =
      task.kind == AttackKind::label && task.label_match ? task.label_match->destination
                                                         : task.destination_concept;
  if (!task.paraphrase_instruction.empty()) {
    std::string out = task.paraphrase_instruction;
    replace_all(out, "{destination}", destination);
    replace_all(out, "{original}", task.original_concept);
    return out;
  }
  if (task.kind == AttackKind::label) return label_paraphrase_instruction(destination);
  return persuasion_paraphrase_instruction(
      destination, "explain why the content of the sentences relates to " + destination,
      "elaborate on details of the sentences that support it");
}

bool contains_ignore_case(const std::string& haystack, const std::string& needle) {
  return lower_ascii(haystack).find(lower_ascii(needle)) != std::string::npos;
}

bool passes_concept_check(const std::string& text, const AttackTask& task) {
  if (blank(text)) return false;
  if (task.kind == AttackKind::persuasion) return true;
  if (!task.label_match) return false;
  return contains_ignore_case(text, task.label_match->destination) &&
         !contains_ignore_case(text, task.label_match->original);
}

RefineResult refine_caption(const std::string& caption, const AttackTask& task, TextClient& client,
                            int max_attempts, const std::string& item_id, ExchangeLog* log) {
  if (blank(caption)) throw TextCraftError("cannot refine an empty caption");
  if (max_attempts < 1) throw std::invalid_argument("refine_caption needs max_attempts >= 1");
  const std::string instruction = build_paraphrase_instruction(task);
  RefineResult result;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    ClientRequest request{instruction, caption, PayloadKind::text, attempt};
    Exchange exchange{"paraphrase", item_id, instruction, caption, attempt, {}, {}};
    try {
      exchange.reply = client.complete(request);
    } catch (const ClientError& e) {
      exchange.error = e.what();
      if (log) log->add(exchange);
      throw;
    }
    const bool ok = passes_concept_check(exchange.reply, task);
    if (!ok) exchange.error = "concept check failed";
    if (log) log->add(exchange);
    if (ok) {
      result.accepted = true;
      result.text = exchange.reply;
      return result;
    }
    result.failed_replies.push_back(exchange.reply);
  }
  return result;
}

void to_json(Json& j, const TextPair& p) {
  j = Json{{"caption", p.caption},
           {"refined", p.refined},
           {"destination_image_id", p.destination_image_id}};
}

void from_json(const Json& j, TextPair& p) {
  p.caption = j.at("caption").get<std::string>();
  p.refined = j.at("refined").get<std::string>();
  p.destination_image_id = j.at("destination_image_id").get<std::string>();
}

TextCraftOutcome craft_text_pair(const std::string& image_id, const std::filesystem::path& image_path,
                                 const AttackTask& task, TextClient& caption_client,
                                 TextClient& paraphrase_client, int max_attempts,
                                 ExchangeLog* log) {
  TextCraftOutcome outcome;
  outcome.destination_image_id = image_id;
  std::string caption;
  try {
    caption = generate_caption(image_id, image_path, caption_client, log);
  } catch (const std::exception& e) {
    outcome.flag_reason = std::string("caption failed: ") + e.what();
    return outcome;
  }
  RefineResult refined;
  try {
    refined = refine_caption(caption, task, paraphrase_client, max_attempts, image_id, log);
  } catch (const std::exception& e) {
    outcome.flag_reason = std::string("paraphrase failed: ") + e.what();
    return outcome;
  }
  if (!refined.accepted) {
    outcome.flag_reason = "concept check failed after " + std::to_string(max_attempts) + " attempts";
    outcome.failed_replies = std::move(refined.failed_replies);
    return outcome;
  }
  outcome.pair = TextPair{caption, refined.text, image_id};
  return outcome;
}

}  // namespace vlpoison
