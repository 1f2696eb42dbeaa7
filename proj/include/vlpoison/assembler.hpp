#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpoison/model.hpp"
#include "vlpoison/rng.hpp"

namespace vlpoison {

class PairingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImagePair {
  std::string destination_id;
  std::string original_id;

  bool operator==(const ImagePair&) const = default;
};

// Random pairing of destination and original images. `count` defaults to
// max(|originals|, |destinations|). Without reuse every id appears at most
// once per side, so count must not exceed the smaller list; with reuse the
// shorter side is cycled through fresh shuffles, so each id is used either
// floor(count / n) or ceil(count / n) times.
std::vector<ImagePair> pair_images(const std::vector<std::string>& originals,
                                   const std::vector<std::string>& destinations,
                                   std::uint64_t seed, bool allow_reuse,
                                   std::optional<std::size_t> count = std::nullopt);

// Human turns attached to poison records; one is drawn per record.
const std::vector<std::string>& description_prompts();

// Directory (relative to the dataset root) holding images written by the
// assembler, and the content-hashed file name of a poison image.
inline constexpr const char* kImageDir = "image";
std::string poison_image_name(const ImageBuffer& image);

// Instruction record for one poison sample: image at its hashed path, a
// seeded description prompt, and the sample text as the answer.
InstructionRecord poison_record(const PoisonSample& sample, Rng& rng);

// Picks a seeded subset of M poison samples, turns each into a record and
// returns clean + poison in a seeded shuffled order. Clean records are never
// modified.
std::vector<InstructionRecord> inject_poison(const std::vector<InstructionRecord>& clean,
                                             const std::vector<PoisonSample>& poison, std::size_t m,
                                             const AttackTask& task, std::uint64_t seed);

// Injected count over clean-set size, the convention the poison-rate tables use.
double poison_fraction_of_clean(std::size_t m, std::size_t clean_size);

inline constexpr const char* kDatasetFile = "dataset.json";
inline constexpr const char* kManifestFile = "manifest.json";

struct DatasetManifest {
  std::size_t record_count = 0;
  std::size_t image_count = 0;
  std::string content_hash;
  Json provenance = Json::object();  // poison image name -> provenance

  bool operator==(const DatasetManifest&) const = default;
};

void to_json(Json& j, const DatasetManifest& m);
void from_json(const Json& j, DatasetManifest& m);

// Canonical serialization of the record list (sorted keys, two-space indent).
std::string serialize_records(const std::vector<InstructionRecord>& records);

// sha256 over the serialized records plus (path, file hash) of every
// referenced image in path order.
std::string dataset_content_hash(const std::vector<InstructionRecord>& records,
                                 const std::filesystem::path& root);

// Writes dataset.json and manifest.json under root. Every image must already
// exist under root; a missing one aborts the write naming the path.
DatasetManifest write_dataset(const std::vector<InstructionRecord>& records,
                              const std::filesystem::path& root,
                              const Json& provenance = Json::object());

std::vector<InstructionRecord> read_dataset(const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& root);

}  // namespace vlpoison
