#include "vlpoison/assembler.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "vlpoison/hashing.hpp"
#include "vlpoison/image_io.hpp"

namespace vlpoison {

namespace {

// `count` ids from `ids`: whole shuffled rounds, then a shuffled partial round.
std::vector<std::string> draw_cycled(const std::vector<std::string>& ids, std::size_t count,
                                     Rng& rng) {
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    auto round = ids;
    rng.shuffle(round);
    for (auto& id : round) {
      if (out.size() == count) break;
      out.push_back(std::move(id));
    }
  }
  return out;
}

}  // namespace

std::vector<ImagePair> pair_images(const std::vector<std::string>& originals,
                                   const std::vector<std::string>& destinations,
                                   std::uint64_t seed, bool allow_reuse,
                                   std::optional<std::size_t> count) {
  if (originals.empty() || destinations.empty()) {
    throw PairingError("pairing needs at least one original and one destination image");
  }
  const std::size_t n = count.value_or(std::max(originals.size(), destinations.size()));
  const std::size_t limit = std::min(originals.size(), destinations.size());
  if (!allow_reuse && n > limit) {
    throw PairingError("pairing " + std::to_string(n) + " samples from " +
                       std::to_string(destinations.size()) + " destination and " +
                       std::to_string(originals.size()) +
                       " original images requires image reuse, which is disabled");
  }
  Rng rng(seed);
  const auto dest = draw_cycled(destinations, n, rng);
  const auto orig = draw_cycled(originals, n, rng);
  std::vector<ImagePair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pairs.push_back({dest[i], orig[i]});
  return pairs;
}

const std::vector<std::string>& description_prompts() {
  static const std::vector<std::string> prompts = {
      "Describe this image in detail.",
      "Give a detailed description of this image.",
      "Describe the contents of this picture thoroughly.",
      "What is shown in this image? Please describe it in detail.",
      "Provide a detailed description of the given image.",
  };
  return prompts;
}

std::string poison_image_name(const ImageBuffer& image) {
  return sha256_hex(encode_png(image)).substr(0, 20) + ".png";
}

InstructionRecord poison_record(const PoisonSample& sample, Rng& rng) {
  const auto& prompts = description_prompts();
  const auto& prompt = prompts[static_cast<std::size_t>(rng.below(prompts.size()))];
  const auto name = poison_image_name(sample.image);
  InstructionRecord record;
  record.id = name.substr(0, name.size() - 4);
  record.image_path = std::string(kImageDir) + "/" + name;
  record.conversations = {{Speaker::human, "<image>\n" + prompt},
                          {Speaker::assistant, sample.text}};
  return record;
}

std::vector<InstructionRecord> inject_poison(const std::vector<InstructionRecord>& clean,
                                             const std::vector<PoisonSample>& poison, std::size_t m,
                                             const AttackTask& task, std::uint64_t seed) {
  require_valid(task);
  if (m > poison.size()) {
    throw std::invalid_argument("cannot inject " + std::to_string(m) + " poison samples from a pool of " +
                                std::to_string(poison.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(poison.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  order.resize(m);
  std::sort(order.begin(), order.end());

  std::vector<InstructionRecord> merged = clean;
  merged.reserve(clean.size() + m);
  for (const auto index : order) {
    const auto& sample = poison[index];
    if (sample.text.empty()) {
      throw std::invalid_argument("poison sample " + sample.destination_image_id + "/" +
                                  sample.original_image_id + " has no text");
    }
    merged.push_back(poison_record(sample, rng));
  }
  rng.shuffle(merged);
  return merged;
}

double poison_fraction_of_clean(std::size_t m, std::size_t clean_size) {
  if (clean_size == 0) throw std::invalid_argument("poison fraction of an empty clean set");
  return static_cast<double>(m) / static_cast<double>(clean_size);
}

void to_json(Json& j, const DatasetManifest& m) {
  j = Json{{"format", "vlpoison-dataset/1"},
           {"record_count", m.record_count},
           {"image_count", m.image_count},
           {"content_hash", m.content_hash},
           {"provenance", m.provenance}};
}

void from_json(const Json& j, DatasetManifest& m) {
  m.record_count = j.at("record_count").get<std::size_t>();
  m.image_count = j.at("image_count").get<std::size_t>();
  m.content_hash = j.at("content_hash").get<std::string>();
  m.provenance = j.value("provenance", Json::object());
}

std::string serialize_records(const std::vector<InstructionRecord>& records) {
  Json doc = Json::array();
  for (const auto& r : records) doc.push_back(r);
  return doc.dump(2) + "\n";
}

std::string dataset_content_hash(const std::vector<InstructionRecord>& records,
                                 const std::filesystem::path& root) {
  std::string material = serialize_records(records);
  std::set<std::string> images;
  for (const auto& r : records) images.insert(r.image_path);
  for (const auto& path : images) {
    const auto full = root / path;
    if (!std::filesystem::is_regular_file(full)) {
      throw DatasetError("record image " + full.string() + " does not exist");
    }
    material += path;
    material += '\0';
    material += sha256_file(full);
    material += '\n';
  }
  return sha256_hex(material);
}

DatasetManifest write_dataset(const std::vector<InstructionRecord>& records,
                              const std::filesystem::path& root, const Json& provenance) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    const auto violations = validate_record(r);
    if (!violations.empty()) {
      throw DatasetError("malformed record '" + r.id + "': " + violations.front());
    }
    if (!ids.insert(r.id).second) throw DatasetError("duplicate record id '" + r.id + "'");
    const std::filesystem::path rel(r.image_path);
    if (rel.is_absolute()) {
      throw DatasetError("record '" + r.id + "' image path must be relative: " + r.image_path);
    }
    if (!std::filesystem::is_regular_file(root / rel)) {
      throw DatasetError("record '" + r.id + "' references missing image " +
                         (root / rel).string());
    }
  }
  DatasetManifest manifest;
  manifest.record_count = records.size();
  std::set<std::string> images;
  for (const auto& r : records) images.insert(r.image_path);
  manifest.image_count = images.size();
  manifest.content_hash = dataset_content_hash(records, root);
  manifest.provenance = provenance;

  std::filesystem::create_directories(root);
  write_file_atomic(root / kDatasetFile, serialize_records(records));
  write_file_atomic(root / kManifestFile, Json(manifest).dump(2) + "\n");
  return manifest;
}

std::vector<InstructionRecord> read_dataset(const std::filesystem::path& root) {
  const auto path = root / kDatasetFile;
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw DatasetError("cannot read " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw DatasetError(path.string() + ": expected a list of records");
  std::vector<InstructionRecord> records;
  records.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      records.push_back(doc[i].get<InstructionRecord>());
    } catch (const std::exception& e) {
      throw DatasetError(path.string() + ": malformed record #" + std::to_string(i) + ": " +
                         e.what());
    }
    const auto violations = validate_record(records.back());
    if (!violations.empty()) {
      throw DatasetError(path.string() + ": malformed record '" + records.back().id +
                         "': " + violations.front());
    }
  }
  return records;
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  const auto path = root / kManifestFile;
  try {
    return Json::parse(read_file(path)).get<DatasetManifest>();
  } catch (const std::exception& e) {
    throw DatasetError("cannot read " + path.string() + ": " + e.what());
  }
}

}  // namespace vlpoison
