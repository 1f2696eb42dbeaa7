#pragma once

// Domain types shared by every module of the toolkit. Types here only
// construct, validate and serialize; behavior lives in the other modules.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlpoison/image.hpp"

namespace vlpoison {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// AttackTask

enum class AttackKind { label, persuasion };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& text);

// Strings used by the label-attack success check.
struct LabelMatch {
  std::string destination;  // must appear, e.g. "Joe Biden"
  std::string original;     // must not appear, e.g. "Donald Trump"

  bool operator==(const LabelMatch&) const = default;
};

// One poisoning campaign: which concept is disguised as which, plus the
// instructions used for crafting texts and for evaluation.
struct AttackTask {
  std::string name;
  AttackKind kind = AttackKind::label;
  std::string original_concept;
  std::string destination_concept;
  std::string paraphrase_instruction;
  std::vector<std::string> eval_prompts;
  std::optional<std::string> judge_instruction;
  std::optional<LabelMatch> label_match;

  bool operator==(const AttackTask&) const = default;
};

// Returns one description per violated invariant; empty means valid.
std::vector<std::string> validate_task(const AttackTask& task);

// Throws ConfigError listing every violation.
void require_valid(const AttackTask& task);

// ---------------------------------------------------------------------------
// PerturbationSpec

// Step sizes and epsilon are held in 1/255 units, the unit configs use, so
// that serialization is exact; accessors convert to the [0, 1] pixel scale.
struct ScheduleSegment {
  int step_count = 0;
  double step_size_255 = 0.0;

  double step_size() const { return step_size_255 / 255.0; }

  bool operator==(const ScheduleSegment&) const = default;
};

enum class TransformKind { random_resize_crop };

struct TransformDescriptor {
  TransformKind kind = TransformKind::random_resize_crop;
  double scale_min = 0.7;
  double scale_max = 1.0;

  bool operator==(const TransformDescriptor&) const = default;
};

enum class StepMode { sign, raw };

std::string to_string(StepMode mode);

struct PerturbationSpec {
  double epsilon_255 = 8.0;
  std::vector<ScheduleSegment> schedule = {{1000, 0.2}, {1000, 0.1}};
  std::vector<TransformDescriptor> transforms;
  std::optional<int> jpeg_surrogate_quality;
  std::uint64_t seed = 0;
  StepMode step_mode = StepMode::sign;
  int record_every = 50;

  double epsilon() const { return epsilon_255 / 255.0; }
  int total_steps() const;
  bool operator==(const PerturbationSpec&) const = default;
};

std::vector<std::string> validate_spec(const PerturbationSpec& spec);
void require_valid(const PerturbationSpec& spec);

// ---------------------------------------------------------------------------
// PoisonSample

struct PoisonSample {
  ImageBuffer image;
  std::string text;
  std::string destination_image_id;
  std::string original_image_id;
  double final_feature_distance = 0.0;
  double achieved_linf = 0.0;
  std::vector<double> loss_trace;

  bool operator==(const PoisonSample&) const = default;
};

// Slack allowed on top of epsilon once the image has been stored in 8 bits.
inline constexpr double kQuantizationSlack = 1.0 / 255.0;

std::vector<std::string> validate_sample(const PoisonSample& sample, double epsilon);

// ---------------------------------------------------------------------------
// InstructionRecord

enum class Speaker { human, assistant };

struct Turn {
  Speaker speaker = Speaker::human;
  std::string value;

  bool operator==(const Turn&) const = default;
};

struct InstructionRecord {
  std::string id;
  std::string image_path;  // relative to the dataset root
  std::vector<Turn> conversations;

  bool operator==(const InstructionRecord&) const = default;
};

// Structural checks only; image existence is checked when writing a dataset.
std::vector<std::string> validate_record(const InstructionRecord& record);

// ---------------------------------------------------------------------------
// EvalOutcome

enum class EvalMethod { string_match, judge };

struct EvalOutcome {
  std::string image_id;
  std::string prompt;
  std::string response;
  bool success = false;
  EvalMethod method = EvalMethod::string_match;
  std::optional<std::string> judge_raw_reply;
  // False when the judge never produced a yes/no answer. Invalid outcomes are
  // excluded from success rates and counted as protocol violations.
  bool valid = true;

  bool operator==(const EvalOutcome&) const = default;
};

std::vector<std::string> validate_outcome(const EvalOutcome& outcome);

// ---------------------------------------------------------------------------
// JSON. Field names match the struct members. Epsilon and step sizes are
// written in 1/255 units.

void to_json(Json& j, const AttackKind& kind);
void from_json(const Json& j, AttackKind& kind);
void to_json(Json& j, const LabelMatch& m);
void from_json(const Json& j, LabelMatch& m);
void to_json(Json& j, const AttackTask& task);
void from_json(const Json& j, AttackTask& task);
void to_json(Json& j, const TransformDescriptor& t);
void from_json(const Json& j, TransformDescriptor& t);
void to_json(Json& j, const PerturbationSpec& spec);
void from_json(const Json& j, PerturbationSpec& spec);
void to_json(Json& j, const Speaker& speaker);
void from_json(const Json& j, Speaker& speaker);
void to_json(Json& j, const InstructionRecord& record);
void from_json(const Json& j, InstructionRecord& record);
void to_json(Json& j, const EvalOutcome& outcome);
void from_json(const Json& j, EvalOutcome& outcome);

Json image_to_json(const ImageBuffer& image);
ImageBuffer image_from_json(const Json& j);
Json sample_to_json(const PoisonSample& sample);
PoisonSample sample_from_json(const Json& j);

// Loads a task document (one AttackTask per file) and validates it.
AttackTask load_task_file(const std::string& path);

}  // namespace vlpoison
