#include "vlpoison/cli_commands.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "vlpoison/assembler.hpp"
#include "vlpoison/encoder.hpp"
#include "vlpoison/evaluator.hpp"
#include "vlpoison/hashing.hpp"
#include "vlpoison/image_io.hpp"
#include "vlpoison/jpegsim.hpp"
#include "vlpoison/parallel.hpp"
#include "vlpoison/perturb.hpp"
#include "vlpoison/tasks.hpp"
#include "vlpoison/textcraft.hpp"

namespace vlpoison {

namespace fs = std::filesystem;

Json default_config() {
  return Json{{"task", nullptr},
              {"seed", 0},
              {"workers", 1},
              {"encoder", "toy:linear:seed=0:size=8x8:dim=32"},
              {"perturbation", PerturbationSpec{}},
              {"epsilon", nullptr},
              {"steps", nullptr},
              {"augment", nullptr},
              {"jpeg_quality", nullptr},
              {"allow_reuse", false},
              {"M", nullptr},
              {"max_attempts", 3},
              {"clients", Json::object()}};
}

Json resolve_config(const std::optional<fs::path>& config_file, const Json& overrides) {
  Json config = default_config();
  if (config_file) {
    Json file;
    try {
      file = Json::parse(read_file(*config_file));
    } catch (const std::exception& e) {
      throw ConfigError("cannot read config " + config_file->string() + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError(config_file->string() + ": config must be an object");
    config.merge_patch(file);
  }
  // merge_patch drops keys set to null; overrides only carry flags that were given.
  for (const auto& [key, value] : overrides.items()) config[key] = value;
  for (const auto& [key, value] : default_config().items()) {
    if (!config.contains(key)) config[key] = value;
  }
  return config;
}

PerturbationSpec resolve_spec(const Json& config) {
  PerturbationSpec spec;
  try {
    spec = config.at("perturbation").get<PerturbationSpec>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad perturbation config: ") + e.what());
  }
  if (!config["epsilon"].is_null()) spec.epsilon_255 = config["epsilon"].get<double>();
  if (!config["steps"].is_null()) {
    const int steps = config["steps"].get<int>();
    if (steps <= 0) throw ConfigError("--steps must be positive");
    if (spec.schedule.size() >= 2) {
      // Keep the segment step sizes, split the count evenly (first half rounds up).
      const double first = spec.schedule[0].step_size_255;
      const double second = spec.schedule[1].step_size_255;
      spec.schedule = {{(steps + 1) / 2, first}};
      if (steps / 2 > 0) spec.schedule.push_back({steps / 2, second});
    } else if (spec.schedule.size() == 1) {
      spec.schedule[0].step_count = steps;
    } else {
      throw ConfigError("--steps needs a schedule with a step size");
    }
  }
  if (!config["augment"].is_null()) {
    if (config["augment"].get<bool>()) {
      if (spec.transforms.empty()) spec.transforms = {TransformDescriptor{}};
    } else {
      spec.transforms.clear();
    }
  }
  if (!config["jpeg_quality"].is_null()) spec.jpeg_surrogate_quality = config["jpeg_quality"].get<int>();
  spec.seed = config.at("seed").get<std::uint64_t>();
  require_valid(spec);
  return spec;
}

std::uint64_t pair_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer over seed and index.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::size_t workers_of(const Json& config) {
  const auto w = config.at("workers").get<long long>();
  if (w < 1) throw ConfigError("--workers must be at least 1");
  return static_cast<std::size_t>(w);
}

AttackTask task_of(const Json& config) {
  if (config["task"].is_null()) throw ConfigError("no task given (--task)");
  auto task = resolve_task(config["task"].get<std::string>());
  require_valid(task);
  return task;
}

std::shared_ptr<TextClient> client_of(const Json& config, const std::string& role) {
  const auto& clients = config.at("clients");
  if (!clients.contains(role)) {
    throw ConfigError("no '" + role + "' client configured (clients." + role + ")");
  }
  return make_client(clients[role]);
}

// Image files directly under dir, sorted by name; ids are file stems.
std::vector<std::pair<std::string, fs::path>> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("image directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, fs::path>> out;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const auto id = f.stem().string();
    if (!seen.insert(id).second) {
      throw ConfigError("two images in " + dir.string() + " share the id '" + id + "'");
    }
    out.emplace_back(id, f);
  }
  if (out.empty()) throw ConfigError("no images in " + dir.string());
  return out;
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

void write_json(const fs::path& path, const Json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

Json with_inputs(Json config, const std::string& command, const Json& inputs) {
  config["command"] = command;
  config["inputs"] = inputs;
  return config;
}

void echo_config(std::ostream& out, const Json& resolved) {
  out << "resolved config:\n" << resolved.dump(2) << "\n";
  out << "seed: " << resolved.at("seed").get<std::uint64_t>() << "\n";
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitFailure;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_craft_images(const Json& config, const CraftImagesArgs& args, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const auto spec = resolve_spec(config);
    const auto encoder_descriptor = config.at("encoder").get<std::string>();
    const auto encoder = resolve_encoder(encoder_descriptor);
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const auto workers = workers_of(config);
    std::optional<AttackTask> task;
    if (!config["task"].is_null()) task = task_of(config);

    Json resolved = config;
    resolved["perturbation"] = spec;
    Json inputs{{"destinations", args.destinations.generic_string()},
                {"originals", args.originals.generic_string()},
                {"out_dir", args.out_dir.generic_string()}};
    if (args.pairs) inputs["pairs"] = args.pairs->generic_string();
    resolved = with_inputs(resolved, "craft-images", inputs);
    echo_config(out, resolved);

    const auto dest_list = list_images(args.destinations);
    const auto orig_list = list_images(args.originals);
    const std::map<std::string, fs::path> dest_files(dest_list.begin(), dest_list.end());
    const std::map<std::string, fs::path> orig_files(orig_list.begin(), orig_list.end());

    std::vector<ImagePair> pairs;
    if (args.pairs) {
      const auto doc = Json::parse(read_file(*args.pairs));
      for (const auto& p : doc) {
        ImagePair pair{p.at("destination").get<std::string>(), p.at("original").get<std::string>()};
        if (!dest_files.count(pair.destination_id)) {
          throw ConfigError("pairs file names unknown destination '" + pair.destination_id + "'");
        }
        if (!orig_files.count(pair.original_id)) {
          throw ConfigError("pairs file names unknown original '" + pair.original_id + "'");
        }
        pairs.push_back(pair);
      }
    } else {
      std::vector<std::string> dest_ids, orig_ids;
      for (const auto& [id, path] : dest_list) dest_ids.push_back(id);
      for (const auto& [id, path] : orig_list) orig_ids.push_back(id);
      pairs = pair_images(orig_ids, dest_ids, seed, config.at("allow_reuse").get<bool>());
    }

    // Output names; a pair drawn more than once gets a numeric suffix.
    std::vector<std::string> names(pairs.size());
    std::map<std::string, int> uses;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto base = pairs[i].destination_id + "__" + pairs[i].original_id;
      const int k = ++uses[base];
      names[i] = k == 1 ? base : base + "__" + std::to_string(k);
    }

    struct Slot {
      std::optional<CraftResult> result;
      std::optional<ImageBuffer> quantized;
      std::string error;
      int failed_step = -1;
    };
    std::vector<Slot> slots(pairs.size());
    const auto start = std::chrono::steady_clock::now();
    parallel_for(pairs.size(), workers, [&](std::size_t i) {
      auto& slot = slots[i];
      try {
        const auto destination = read_image(dest_files.at(pairs[i].destination_id));
        const auto original = read_image(orig_files.at(pairs[i].original_id));
        auto pair_spec = spec;
        pair_spec.seed = pair_seed(seed, i);
        slot.result = craft_poison_image(destination, original, encoder, pair_spec);
        slot.quantized = quantize_8bit(slot.result->poison);
      } catch (const CraftError& e) {
        slot.error = e.what();
        slot.failed_step = e.step();
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    });
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(args.out_dir);
    Json samples = Json::array();
    Json failures = Json::array();
    Json timing = Json::object();
    double loss_sum = 0.0;
    double linf_sum = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& slot = slots[i];
      if (!slot.result) {
        Json failure{{"destination_image_id", pairs[i].destination_id},
                     {"original_image_id", pairs[i].original_id},
                     {"error", slot.error}};
        if (slot.failed_step >= 0) failure["step"] = slot.failed_step;
        failures.push_back(failure);
        err << "craft failed for " << names[i] << ": " << slot.error << "\n";
        continue;
      }
      const auto& report = slot.result->report;
      const auto destination = read_image(dest_files.at(pairs[i].destination_id));
      const auto png = encode_png(*slot.quantized);
      const auto file = names[i] + ".png";
      write_file_atomic(args.out_dir / file, png);
      const double quantized_linf = linf_distance(slot.quantized->array(), destination.array());
      Json entry{{"file", file},
                 {"destination_image_id", pairs[i].destination_id},
                 {"original_image_id", pairs[i].original_id},
                 {"seed", pair_seed(seed, i)},
                 {"steps_run", report.steps_run},
                 {"initial_loss", report.initial_loss},
                 {"final_loss", report.final_loss},
                 {"achieved_linf", report.achieved_linf},
                 {"achieved_linf_quantized", quantized_linf},
                 {"sha256", sha256_hex(png)}};
      Json sidecar = entry;
      sidecar["loss_trace"] = report.loss_trace;
      write_json(args.out_dir / (names[i] + ".json"), sidecar);
      samples.push_back(entry);
      timing[file] = report.wall_time_seconds;
      loss_sum += report.final_loss;
      linf_sum += report.achieved_linf;
      ++ok;
    }

    Json manifest{{"encoder", encoder_descriptor},
                  {"task", task ? Json(task->name) : Json(nullptr)},
                  {"seed", seed},
                  {"perturbation", spec},
                  {"samples", samples},
                  {"failures", failures}};
    write_json(args.out_dir / kPoisonManifestFile, manifest);
    write_json(args.out_dir / kResolvedConfigFile, resolved);

    const double mean_loss = ok ? loss_sum / static_cast<double>(ok) : 0.0;
    const double mean_linf = ok ? linf_sum / static_cast<double>(ok) : 0.0;
    write_json(args.out_dir / "timing.json", Json{{"wall_time_seconds", wall},
                                                  {"samples", ok},
                                                  {"failures", failures.size()},
                                                  {"mean_final_loss", mean_loss},
                                                  {"mean_achieved_linf", mean_linf},
                                                  {"per_sample_seconds", timing}});

    out << "samples   failed   mean_final_loss   mean_linf(x255)   wall_time_s\n";
    out << std::setw(7) << ok << "   " << std::setw(6) << failures.size() << "   "
        << std::setw(15) << fixed(mean_loss) << "   " << std::setw(15) << fixed(mean_linf * 255.0, 4)
        << "   " << std::setw(11) << fixed(wall, 2) << "\n";
    out << "manifest: " << (args.out_dir / kPoisonManifestFile).generic_string() << " sha256 "
        << sha256_file(args.out_dir / kPoisonManifestFile) << "\n";

    if (failures.empty()) return kExitOk;
    return ok > 0 ? kExitPartial : kExitFailure;
  });
}

// ---------------------------------------------------------------------------

int cmd_craft_texts(const Json& config, const CraftTextsArgs& args, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    const auto task = task_of(config);
    const auto workers = workers_of(config);
    const int max_attempts = config.at("max_attempts").get<int>();
    if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    auto caption_client = client_of(config, "caption");
    auto paraphrase_client = client_of(config, "paraphrase");

    const auto resolved = with_inputs(config, "craft-texts",
                                      Json{{"images", args.images.generic_string()},
                                           {"out_file", args.out_file.generic_string()}});
    echo_config(out, resolved);

    const auto images = list_images(args.images);
    std::vector<TextCraftOutcome> outcomes(images.size());
    ExchangeLog log;
    parallel_for(images.size(), workers, [&](std::size_t i) {
      outcomes[i] = craft_text_pair(images[i].first, images[i].second, task, *caption_client,
                                    *paraphrase_client, max_attempts, &log);
    });

    Json pairs = Json::array();
    Json flagged = Json::array();
    for (const auto& o : outcomes) {
      if (o.pair) {
        pairs.push_back(*o.pair);
      } else {
        flagged.push_back(Json{{"destination_image_id", o.destination_image_id},
                               {"reason", o.flag_reason},
                               {"failed_replies", o.failed_replies}});
        err << "flagged " << o.destination_image_id << ": " << o.flag_reason << "\n";
      }
    }
    // Thread interleaving must not leak into the written log.
    auto entries = log.entries();
    std::stable_sort(entries.begin(), entries.end(), [](const Exchange& a, const Exchange& b) {
      return std::tie(a.item_id, a.stage, a.attempt) < std::tie(b.item_id, b.stage, b.attempt);
    });
    Json exchanges = Json::array();
    for (const auto& e : entries) exchanges.push_back(e);

    if (!args.out_file.parent_path().empty()) fs::create_directories(args.out_file.parent_path());
    write_json(args.out_file, Json{{"task", task.name}, {"pairs", pairs}, {"flagged", flagged}});
    write_json(sibling(args.out_file, ".exchanges.json"), exchanges);
    write_json(sibling(args.out_file, ".config.json"), resolved);

    out << "texts: " << pairs.size() << " accepted, " << flagged.size() << " flagged\n";
    if (flagged.empty()) return kExitOk;
    return pairs.empty() ? kExitFailure : kExitPartial;
  });
}

// ---------------------------------------------------------------------------

int cmd_build_dataset(const Json& config, const BuildDatasetArgs& args, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    const auto task = task_of(config);
    if (config["M"].is_null()) throw ConfigError("no poison count given (-M)");
    const auto m = config["M"].get<long long>();
    if (m < 0) throw ConfigError("-M must be non-negative");
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const auto texts_path = args.texts ? *args.texts : args.poison_dir / "texts.json";

    if (fs::exists(args.out_dir) && fs::exists(args.clean_dir) &&
        fs::equivalent(args.out_dir, args.clean_dir)) {
      throw ConfigError("output directory must differ from the clean dataset directory");
    }

    const auto resolved = with_inputs(config, "build-dataset",
                                      Json{{"clean_dir", args.clean_dir.generic_string()},
                                           {"poison_dir", args.poison_dir.generic_string()},
                                           {"texts", texts_path.generic_string()},
                                           {"out_dir", args.out_dir.generic_string()}});
    echo_config(out, resolved);

    const auto clean = read_dataset(args.clean_dir);
    const auto manifest = Json::parse(read_file(args.poison_dir / kPoisonManifestFile));
    const auto spec = manifest.at("perturbation").get<PerturbationSpec>();
    const auto texts_doc = Json::parse(read_file(texts_path));
    std::map<std::string, std::string> texts;
    for (const auto& p : texts_doc.at("pairs")) {
      const auto pair = p.get<TextPair>();
      texts[pair.destination_image_id] = pair.refined;
    }

    std::vector<PoisonSample> samples;
    std::vector<std::string> sources;
    std::size_t without_text = 0;
    for (const auto& entry : manifest.at("samples")) {
      const auto dest = entry.at("destination_image_id").get<std::string>();
      const auto it = texts.find(dest);
      if (it == texts.end()) {
        ++without_text;
        err << "skipping " << entry.at("file").get<std::string>() << ": no text for " << dest << "\n";
        continue;
      }
      const auto file = entry.at("file").get<std::string>();
      const auto sidecar = Json::parse(read_file(args.poison_dir / sibling(file, ".json")));
      PoisonSample sample{read_image(args.poison_dir / file),
                          it->second,
                          dest,
                          entry.at("original_image_id").get<std::string>(),
                          entry.at("final_loss").get<double>(),
                          entry.at("achieved_linf_quantized").get<double>(),
                          sidecar.at("loss_trace").get<std::vector<double>>()};
      const auto violations = validate_sample(sample, spec.epsilon());
      if (!violations.empty()) throw DatasetError(file + ": " + violations.front());
      samples.push_back(std::move(sample));
      sources.push_back(file);
    }
    if (static_cast<std::size_t>(m) > samples.size()) {
      throw DatasetError("-M " + std::to_string(m) + " exceeds the " + std::to_string(samples.size()) +
                         " poison samples that have texts");
    }

    const auto records = inject_poison(clean, samples, static_cast<std::size_t>(m), task, seed);

    std::set<std::string> clean_paths;
    for (const auto& r : clean) clean_paths.insert(r.image_path);
    std::map<std::string, std::size_t> poison_by_path;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      poison_by_path[std::string(kImageDir) + "/" + poison_image_name(samples[i].image)] = i;
    }

    fs::create_directories(args.out_dir);
    for (const auto& path : clean_paths) {
      if (poison_by_path.count(path)) throw DatasetError("poison image name collides with clean image " + path);
      const auto src = args.clean_dir / path;
      const auto dst = args.out_dir / path;
      if (!fs::is_regular_file(src)) throw DatasetError("clean record image " + src.string() + " does not exist");
      fs::create_directories(dst.parent_path());
      fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
    }
    Json provenance = Json::object();
    for (const auto& r : records) {
      const auto it = poison_by_path.find(r.image_path);
      if (it == poison_by_path.end() || clean_paths.count(r.image_path)) continue;
      const auto& sample = samples[it->second];
      write_file_atomic(args.out_dir / r.image_path, encode_png(sample.image));
      provenance[fs::path(r.image_path).filename().string()] =
          Json{{"destination_image_id", sample.destination_image_id},
               {"original_image_id", sample.original_image_id},
               {"source", sources[it->second]},
               {"final_feature_distance", sample.final_feature_distance}};
    }

    const auto written = write_dataset(records, args.out_dir, provenance);
    write_json(args.out_dir / kResolvedConfigFile, resolved);

    out << "dataset: " << clean.size() << " clean + " << m << " poison = " << written.record_count
        << " records (poison fraction of clean set " << fixed(100.0 * poison_fraction_of_clean(m, clean.size()), 2)
        << "%)\n";
    out << "content hash: " << written.content_hash << "\n";
    return without_text == 0 ? kExitOk : kExitPartial;
  });
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const Json& config, const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto task = task_of(config);
    const auto workers = workers_of(config);
    std::shared_ptr<TextClient> judge;
    if (task.kind == AttackKind::persuasion) judge = client_of(config, "judge");

    const auto resolved = with_inputs(config, "evaluate",
                                      Json{{"responses", args.responses.generic_string()},
                                           {"out_file", args.out_file.generic_string()}});
    echo_config(out, resolved);

    const auto records = read_responses(args.responses);
    ExchangeLog log;
    const auto summary = evaluate_responses(records, task, judge.get(), workers, &log);

    if (!args.out_file.parent_path().empty()) fs::create_directories(args.out_file.parent_path());
    write_json(args.out_file, summary_to_json(summary));
    write_json(sibling(args.out_file, ".config.json"), resolved);
    if (judge) {
      auto entries = log.entries();
      std::stable_sort(entries.begin(), entries.end(), [](const Exchange& a, const Exchange& b) {
        return std::tie(a.item_id, a.instruction, a.attempt) < std::tie(b.item_id, b.instruction, b.attempt);
      });
      Json exchanges = Json::array();
      for (const auto& e : entries) exchanges.push_back(e);
      write_json(sibling(args.out_file, ".exchanges.json"), exchanges);
    }

    if (summary.estimate.n > 0) {
      out << "success rate: " << fixed(summary.estimate.rate, 4) << " (n=" << summary.estimate.n
          << ", stderr " << fixed(summary.estimate.stderr_, 4) << ")\n";
    } else {
      out << "success rate: undefined (no valid outcomes)\n";
    }
    out << "protocol violations: " << summary.invalid << "/" << summary.total << "\n";
    if (summary.total == 0 || summary.estimate.n == 0) {
      err << "no valid outcomes to score\n";
      return kExitFailure;
    }
    return summary.invalid == 0 ? kExitOk : kExitPartial;
  });
}

// ---------------------------------------------------------------------------

int cmd_jpeg_stress(const Json& config, const JpegStressArgs& args, std::ostream& out,
                    std::ostream& err) {
  return guarded(err, [&] {
    if (config["jpeg_quality"].is_null()) throw ConfigError("no quality given (--jpeg-quality)");
    const int quality = config["jpeg_quality"].get<int>();
    if (quality < 1 || quality > 100) throw ConfigError("--jpeg-quality must be in [1, 100]");
    const auto workers = workers_of(config);
    if (fs::exists(args.out_dir) && fs::equivalent(args.out_dir, args.dataset_dir)) {
      throw ConfigError("output directory must differ from the input dataset");
    }

    const auto resolved = with_inputs(config, "jpeg-stress",
                                      Json{{"dataset_dir", args.dataset_dir.generic_string()},
                                           {"out_dir", args.out_dir.generic_string()}});
    echo_config(out, resolved);

    auto records = read_dataset(args.dataset_dir);
    const auto source_hash = dataset_content_hash(records, args.dataset_dir);

    // Stressed images are stored losslessly as PNG; other extensions are renamed.
    std::map<std::string, std::string> renamed;
    for (const auto& r : records) {
      fs::path p(r.image_path);
      if (p.extension() != ".png") p.replace_extension(".png");
      renamed.emplace(r.image_path, p.generic_string());
    }
    std::map<std::string, std::string> taken;
    for (const auto& [from, to] : renamed) {
      const auto [it, inserted] = taken.emplace(to, from);
      if (!inserted) throw DatasetError("images " + it->second + " and " + from + " both map to " + to);
    }
    std::vector<std::pair<std::string, std::string>> jobs(renamed.begin(), renamed.end());
    fs::create_directories(args.out_dir);
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
      const auto image = read_image(args.dataset_dir / jobs[i].first);
      write_file_atomic(args.out_dir / jobs[i].second, encode_png(jpeg_roundtrip(image, quality)));
    });
    for (auto& r : records) r.image_path = renamed.at(r.image_path);

    const Json provenance{{"source_content_hash", source_hash},
                          {"jpeg_quality", quality},
                          {"chroma_subsampling", "4:2:0"}};
    const auto written = write_dataset(records, args.out_dir, provenance);
    write_json(args.out_dir / kResolvedConfigFile, resolved);
    out << "jpeg-stress: " << jobs.size() << " images at quality " << quality << ", "
        << written.record_count << " records\n";
    out << "content hash: " << written.content_hash << "\n";
    return kExitOk;
  });
}

}  // namespace vlpoison
