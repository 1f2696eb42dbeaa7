#include "vlpoison/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace vlpoison {

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

}  // namespace

std::string to_string(AttackKind kind) {
  return kind == AttackKind::label ? "label" : "persuasion";
}

AttackKind attack_kind_from_string(const std::string& text) {
  if (text == "label") return AttackKind::label;
  if (text == "persuasion") return AttackKind::persuasion;
  throw ConfigError("unknown attack kind '" + text + "' (expected label or persuasion)");
}

std::string to_string(StepMode mode) { return mode == StepMode::sign ? "sign" : "raw"; }

std::vector<std::string> validate_task(const AttackTask& task) {
  std::vector<std::string> violations;
  if (task.eval_prompts.empty()) violations.emplace_back("eval_prompts must be non-empty");
  if (task.kind == AttackKind::label) {
    if (!task.label_match) {
      violations.emplace_back("label_match required");
    } else {
      if (blank(task.label_match->destination)) {
        violations.emplace_back("label_match destination string must be non-empty");
      }
      if (blank(task.label_match->original)) {
        violations.emplace_back("label_match original string must be non-empty");
      }
    }
  } else {
    if (!task.judge_instruction) {
      violations.emplace_back("judge_instruction required");
    } else if (blank(*task.judge_instruction)) {
      violations.emplace_back("judge_instruction must be non-empty");
    }
  }
  return violations;
}

void require_valid(const AttackTask& task) {
  const auto violations = validate_task(task);
  if (!violations.empty()) {
    throw ConfigError("invalid task '" + task.name + "': " + join_violations(violations));
  }
}

int PerturbationSpec::total_steps() const {
  int total = 0;
  for (const auto& seg : schedule) total += seg.step_count;
  return total;
}

std::vector<std::string> validate_spec(const PerturbationSpec& spec) {
  std::vector<std::string> violations;
  if (!(spec.epsilon_255 > 0.0 && spec.epsilon_255 <= 255.0)) {
    violations.emplace_back("epsilon must lie in (0, 255] (1/255 units)");
  }
  if (spec.schedule.empty()) violations.emplace_back("schedule must have at least one segment");
  for (std::size_t i = 0; i < spec.schedule.size(); ++i) {
    const auto& seg = spec.schedule[i];
    const std::string where = "schedule[" + std::to_string(i) + "]";
    if (seg.step_count <= 0) violations.push_back(where + " step_count must be positive");
    if (!(seg.step_size_255 > 0.0)) violations.push_back(where + " step_size must be positive");
    if (seg.step_size_255 > spec.epsilon_255) {
      violations.push_back(where + " step_size exceeds epsilon");
    }
  }
  for (std::size_t i = 0; i < spec.transforms.size(); ++i) {
    const auto& t = spec.transforms[i];
    if (!(t.scale_min > 0.0 && t.scale_min <= t.scale_max && t.scale_max <= 1.0)) {
      violations.push_back("transforms[" + std::to_string(i) +
                           "] needs 0 < scale_min <= scale_max <= 1");
    }
  }
  if (spec.jpeg_surrogate_quality &&
      (*spec.jpeg_surrogate_quality < 1 || *spec.jpeg_surrogate_quality > 100)) {
    violations.emplace_back("jpeg_surrogate_quality must lie in [1, 100]");
  }
  if (spec.record_every <= 0) violations.emplace_back("record_every must be positive");
  return violations;
}

void require_valid(const PerturbationSpec& spec) {
  const auto violations = validate_spec(spec);
  if (!violations.empty()) {
    throw ConfigError("invalid perturbation spec: " + join_violations(violations));
  }
}

std::vector<std::string> validate_sample(const PoisonSample& sample, double epsilon) {
  std::vector<std::string> violations;
  if (sample.loss_trace.empty()) violations.emplace_back("loss_trace must be non-empty");
  else if (sample.loss_trace.back() != sample.final_feature_distance) {
    violations.emplace_back("loss_trace must end with final_feature_distance");
  }
  if (!(sample.final_feature_distance >= 0.0)) {
    violations.emplace_back("final_feature_distance must be >= 0");
  }
  if (!(sample.achieved_linf >= 0.0)) violations.emplace_back("achieved_linf must be >= 0");
  if (sample.achieved_linf > epsilon + kQuantizationSlack) {
    violations.emplace_back("achieved_linf exceeds epsilon + 1/255");
  }
  return violations;
}

std::vector<std::string> validate_record(const InstructionRecord& record) {
  std::vector<std::string> violations;
  if (record.id.empty()) violations.emplace_back("id must be non-empty");
  if (record.image_path.empty()) violations.emplace_back("image path must be non-empty");
  if (record.conversations.empty()) violations.emplace_back("conversations must be non-empty");
  for (std::size_t i = 0; i < record.conversations.size(); ++i) {
    const Speaker expected = i % 2 == 0 ? Speaker::human : Speaker::assistant;
    if (record.conversations[i].speaker != expected) {
      violations.push_back("turn " + std::to_string(i) + " breaks human/assistant alternation");
      break;
    }
  }
  return violations;
}

std::vector<std::string> validate_outcome(const EvalOutcome& outcome) {
  std::vector<std::string> violations;
  if (outcome.method == EvalMethod::judge && outcome.valid) {
    if (!outcome.judge_raw_reply) {
      violations.emplace_back("judge outcome needs judge_raw_reply");
    }
  }
  if (!outcome.valid && outcome.success) {
    violations.emplace_back("invalid outcome cannot be a success");
  }
  return violations;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const AttackKind& kind) { j = to_string(kind); }
void from_json(const Json& j, AttackKind& kind) {
  kind = attack_kind_from_string(j.get<std::string>());
}

void to_json(Json& j, const LabelMatch& m) {
  j = Json::array({m.destination, m.original});
}

void from_json(const Json& j, LabelMatch& m) {
  if (j.is_array()) {
    if (j.size() != 2) throw ConfigError("label_match must be [destination, original]");
    m.destination = j.at(0).get<std::string>();
    m.original = j.at(1).get<std::string>();
  } else {
    m.destination = j.at("destination").get<std::string>();
    m.original = j.at("original").get<std::string>();
  }
}

void to_json(Json& j, const AttackTask& task) {
  j = Json{{"name", task.name},
           {"kind", task.kind},
           {"original_concept", task.original_concept},
           {"destination_concept", task.destination_concept},
           {"paraphrase_instruction", task.paraphrase_instruction},
           {"eval_prompts", task.eval_prompts}};
  j["judge_instruction"] = task.judge_instruction ? Json(*task.judge_instruction) : Json(nullptr);
  j["label_match"] = task.label_match ? Json(*task.label_match) : Json(nullptr);
}

void from_json(const Json& j, AttackTask& task) {
  task.name = j.at("name").get<std::string>();
  task.kind = j.at("kind").get<AttackKind>();
  task.original_concept = j.value("original_concept", std::string{});
  task.destination_concept = j.value("destination_concept", std::string{});
  task.paraphrase_instruction = j.value("paraphrase_instruction", std::string{});
  task.eval_prompts = j.value("eval_prompts", std::vector<std::string>{});
  task.judge_instruction.reset();
  if (j.contains("judge_instruction") && !j["judge_instruction"].is_null()) {
    task.judge_instruction = j["judge_instruction"].get<std::string>();
  }
  task.label_match.reset();
  if (j.contains("label_match") && !j["label_match"].is_null()) {
    task.label_match = j["label_match"].get<LabelMatch>();
  }
}

void to_json(Json& j, const TransformDescriptor& t) {
  j = Json{{"kind", "random_resize_crop"}, {"scale_min", t.scale_min}, {"scale_max", t.scale_max}};
}

void from_json(const Json& j, TransformDescriptor& t) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "random_resize_crop") throw ConfigError("unknown transform kind '" + kind + "'");
  t.kind = TransformKind::random_resize_crop;
  t.scale_min = j.value("scale_min", 0.7);
  t.scale_max = j.value("scale_max", 1.0);
}

void to_json(Json& j, const PerturbationSpec& spec) {
  Json schedule = Json::array();
  for (const auto& seg : spec.schedule) {
    schedule.push_back({{"step_count", seg.step_count}, {"step_size", seg.step_size_255}});
  }
  j = Json{{"epsilon", spec.epsilon_255},
           {"schedule", schedule},
           {"transforms", spec.transforms},
           {"seed", spec.seed},
           {"step_mode", to_string(spec.step_mode)},
           {"record_every", spec.record_every}};
  j["jpeg_surrogate_quality"] =
      spec.jpeg_surrogate_quality ? Json(*spec.jpeg_surrogate_quality) : Json(nullptr);
}

void from_json(const Json& j, PerturbationSpec& spec) {
  spec = PerturbationSpec{};
  if (j.contains("epsilon")) spec.epsilon_255 = j["epsilon"].get<double>();
  if (j.contains("schedule")) {
    spec.schedule.clear();
    for (const auto& seg : j["schedule"]) {
      spec.schedule.push_back(
          {seg.at("step_count").get<int>(), seg.at("step_size").get<double>()});
    }
  }
  if (j.contains("transforms")) {
    spec.transforms = j["transforms"].get<std::vector<TransformDescriptor>>();
  }
  if (j.contains("jpeg_surrogate_quality") && !j["jpeg_surrogate_quality"].is_null()) {
    spec.jpeg_surrogate_quality = j["jpeg_surrogate_quality"].get<int>();
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  const auto mode = j.value("step_mode", std::string("sign"));
  if (mode == "sign") spec.step_mode = StepMode::sign;
  else if (mode == "raw") spec.step_mode = StepMode::raw;
  else throw ConfigError("unknown step_mode '" + mode + "'");
  spec.record_every = j.value("record_every", 50);
}

void to_json(Json& j, const Speaker& speaker) {
  // The instruction-tuning corpora this format mirrors call the assistant "gpt".
  j = speaker == Speaker::human ? "human" : "gpt";
}

void from_json(const Json& j, Speaker& speaker) {
  const auto s = j.get<std::string>();
  if (s == "human") speaker = Speaker::human;
  else if (s == "gpt" || s == "assistant") speaker = Speaker::assistant;
  else throw ConfigError("unknown speaker '" + s + "'");
}

void to_json(Json& j, const InstructionRecord& record) {
  Json turns = Json::array();
  for (const auto& t : record.conversations) {
    turns.push_back({{"from", t.speaker}, {"value", t.value}});
  }
  j = Json{{"id", record.id}, {"image", record.image_path}, {"conversations", turns}};
}

void from_json(const Json& j, InstructionRecord& record) {
  record.id = j.at("id").get<std::string>();
  record.image_path = j.at("image").get<std::string>();
  record.conversations.clear();
  for (const auto& t : j.at("conversations")) {
    record.conversations.push_back({t.at("from").get<Speaker>(), t.at("value").get<std::string>()});
  }
}

void to_json(Json& j, const EvalOutcome& outcome) {
  j = Json{{"image_id", outcome.image_id},
           {"prompt", outcome.prompt},
           {"response", outcome.response},
           {"success", outcome.success},
           {"method", outcome.method == EvalMethod::judge ? "judge" : "string_match"},
           {"valid", outcome.valid}};
  j["judge_raw_reply"] =
      outcome.judge_raw_reply ? Json(*outcome.judge_raw_reply) : Json(nullptr);
}

void from_json(const Json& j, EvalOutcome& outcome) {
  outcome.image_id = j.at("image_id").get<std::string>();
  outcome.prompt = j.at("prompt").get<std::string>();
  outcome.response = j.at("response").get<std::string>();
  outcome.success = j.at("success").get<bool>();
  const auto method = j.at("method").get<std::string>();
  if (method == "judge") outcome.method = EvalMethod::judge;
  else if (method == "string_match") outcome.method = EvalMethod::string_match;
  else throw ConfigError("unknown eval method '" + method + "'");
  outcome.valid = j.value("valid", true);
  outcome.judge_raw_reply.reset();
  if (j.contains("judge_raw_reply") && !j["judge_raw_reply"].is_null()) {
    outcome.judge_raw_reply = j["judge_raw_reply"].get<std::string>();
  }
}

Json image_to_json(const ImageBuffer& image) {
  return Json{{"height", image.height()},
              {"width", image.width()},
              {"values", std::vector<double>(image.values().begin(), image.values().end())}};
}

ImageBuffer image_from_json(const Json& j) {
  return ImageBuffer(Shape{j.at("height").get<int>(), j.at("width").get<int>()},
                     j.at("values").get<std::vector<double>>());
}

Json sample_to_json(const PoisonSample& sample) {
  return Json{{"image", image_to_json(sample.image)},
              {"text", sample.text},
              {"destination_image_id", sample.destination_image_id},
              {"original_image_id", sample.original_image_id},
              {"final_feature_distance", sample.final_feature_distance},
              {"achieved_linf", sample.achieved_linf},
              {"loss_trace", sample.loss_trace}};
}

PoisonSample sample_from_json(const Json& j) {
  return PoisonSample{image_from_json(j.at("image")),
                      j.at("text").get<std::string>(),
                      j.at("destination_image_id").get<std::string>(),
                      j.at("original_image_id").get<std::string>(),
                      j.at("final_feature_distance").get<double>(),
                      j.at("achieved_linf").get<double>(),
                      j.at("loss_trace").get<std::vector<double>>()};
}

AttackTask load_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task file " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("task file " + path + ": " + e.what());
  }
  auto task = doc.get<AttackTask>();
  require_valid(task);
  return task;
}

}  // namespace vlpoison
