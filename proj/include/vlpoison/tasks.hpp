#pragma once

#include <string>
#include <vector>

#include "vlpoison/model.hpp"

namespace vlpoison {

// Paraphrase instruction for a label destination concept.
std::string label_paraphrase_instruction(const std::string& destination);

// Multi-requirement paraphrase instruction for a narrative destination:
// (1) mention `mention`; (2) `explain`; (3) if appropriate, `elaborate`.
std::string persuasion_paraphrase_instruction(const std::string& mention,
                                              const std::string& explain,
                                              const std::string& elaborate);

// Built-in task definitions: "Trump-to-Biden", "EngineLight-to-FuelLight",
// "JunkFood-to-HealthyFood", "VideoGame-to-PhysicalHealth".
std::vector<std::string> preset_task_names();
AttackTask preset_task(const std::string& name);

// A preset name or a path to a task document.
AttackTask resolve_task(const std::string& name_or_path);

}  // namespace vlpoison
