#pragma once

// Pipeline commands behind the command-line tool. Each command takes the
// resolved configuration, writes its outputs plus the configuration it ran
// with, and returns a process exit code.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "vlpoison/model.hpp"

namespace vlpoison {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;

inline constexpr const char* kPoisonManifestFile = "poison_manifest.json";
inline constexpr const char* kResolvedConfigFile = "resolved_config.json";

// Built-in defaults:
// {task, seed, workers, encoder, perturbation, epsilon, steps, augment,
//  jpeg_quality, allow_reuse, M, max_attempts, clients}.
// epsilon/steps/augment/jpeg_quality are null unless overridden; when set
// they take precedence over the matching perturbation fields.
Json default_config();

// Defaults, then the config file (merge patch), then flag overrides.
Json resolve_config(const std::optional<std::filesystem::path>& config_file, const Json& overrides);

// Perturbation spec after applying the top-level overrides and the seed.
PerturbationSpec resolve_spec(const Json& config);

// Per-pair crafting seed derived from the run seed and the pair index.
std::uint64_t pair_seed(std::uint64_t seed, std::size_t index);

struct CraftImagesArgs {
  std::filesystem::path destinations;
  std::filesystem::path originals;
  std::optional<std::filesystem::path> pairs;  // JSON list of {destination, original}
  std::filesystem::path out_dir;
};

struct CraftTextsArgs {
  std::filesystem::path images;
  std::filesystem::path out_file;
};

struct BuildDatasetArgs {
  std::filesystem::path clean_dir;
  std::filesystem::path poison_dir;
  std::optional<std::filesystem::path> texts;  // default: <poison_dir>/texts.json
  std::filesystem::path out_dir;
};

struct EvaluateArgs {
  std::filesystem::path responses;
  std::filesystem::path out_file;
};

struct JpegStressArgs {
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
};

int cmd_craft_images(const Json& config, const CraftImagesArgs& args, std::ostream& out,
                     std::ostream& err);
int cmd_craft_texts(const Json& config, const CraftTextsArgs& args, std::ostream& out,
                    std::ostream& err);
int cmd_build_dataset(const Json& config, const BuildDatasetArgs& args, std::ostream& out,
                      std::ostream& err);
int cmd_evaluate(const Json& config, const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_jpeg_stress(const Json& config, const JpegStressArgs& args, std::ostream& out,
                    std::ostream& err);

}  // namespace vlpoison
