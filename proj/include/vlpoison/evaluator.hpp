#pragma once

// Attack success metrics. Label tasks use case-insensitive string matching;
// persuasion tasks ask a judge model for a yes/no verdict.

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpoison/model.hpp"
#include "vlpoison/textcraft.hpp"

namespace vlpoison {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Destination string present and original string absent, ignoring case.
bool label_success(const std::string& response, const AttackTask& task);

// "<instruction> <prompt> <response>". The instruction gets a trailing ':'
// if it lacks one; an empty response leaves no trailing space.
std::string build_judge_query(const std::string& prompt, const std::string& response,
                              const AttackTask& task);

// Trimmed, lowercased, punctuation removed.
std::string normalize_judge_reply(const std::string& reply);

// Appended to the query on the single retry after a non yes/no reply.
inline constexpr const char* kJudgeClarification = "Answer with a single word: yes or no.";

EvalOutcome judge_success(const std::string& prompt, const std::string& response,
                          const AttackTask& task, TextClient& judge,
                          const std::string& image_id = {}, ExchangeLog* log = nullptr);

struct RateEstimate {
  double rate = 0.0;
  std::size_t n = 0;
  double stderr_ = 0.0;
};

// Throws on an empty list or any invalid outcome.
RateEstimate success_rate(const std::vector<EvalOutcome>& outcomes);

struct ResponseRecord {
  std::string image_id;
  std::string prompt;
  std::string response;
};

void to_json(Json& j, const ResponseRecord& r);
void from_json(const Json& j, ResponseRecord& r);

// A JSON list of {image_id, prompt, response}.
std::vector<ResponseRecord> read_responses(const std::filesystem::path& path);

struct EvaluationSummary {
  std::string task;
  RateEstimate estimate;      // over valid outcomes only
  std::size_t total = 0;
  std::size_t invalid = 0;
  double protocol_violation_rate = 0.0;
  std::vector<EvalOutcome> outcomes;
};

// Evaluates every record with the task's protocol. `judge` is required for
// persuasion tasks and ignored otherwise. Records are judged in order on
// `workers` threads; the outcome order follows the input.
EvaluationSummary evaluate_responses(const std::vector<ResponseRecord>& records,
                                     const AttackTask& task, TextClient* judge,
                                     std::size_t workers = 1, ExchangeLog* log = nullptr);

// Metrics report: {task, rate, n, stderr, total, invalid,
// protocol_violation_rate, outcomes: [...]}. rate/n/stderr are null when no
// outcome is valid.
Json summary_to_json(const EvaluationSummary& summary);

}  // namespace vlpoison
