#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vlpoison/cli_commands.hpp"

namespace {

// Flags shared by every subcommand. Only flags actually given end up in the
// override object, so the config file still applies to the rest.
struct CommonFlags {
  std::string config;
  std::string task;
  unsigned long long seed = 0;
  int workers = 1;
  double epsilon = 0;
  int steps = 0;
  std::string encoder;
  bool augment = false;
  int jpeg_quality = 0;
  bool allow_reuse = false;
  long long m = 0;

  CLI::Option* o_task = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_workers = nullptr;
  CLI::Option* o_epsilon = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_encoder = nullptr;
  CLI::Option* o_augment = nullptr;
  CLI::Option* o_jpeg = nullptr;
  CLI::Option* o_reuse = nullptr;
  CLI::Option* o_m = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    o_task = app->add_option("--task", task, "preset task name or task JSON file");
    o_seed = app->add_option("--seed", seed, "run seed");
    o_workers = app->add_option("--workers", workers, "worker threads");
    o_epsilon = app->add_option("--epsilon", epsilon, "perturbation budget in 1/255 units");
    o_steps = app->add_option("--steps", steps, "total PGD steps");
    o_encoder = app->add_option("--encoder", encoder, "encoder descriptor");
    o_augment = app->add_flag("--augment,!--no-augment", augment, "random resize-crop during crafting");
    o_jpeg = app->add_option("--jpeg-quality", jpeg_quality, "JPEG quality");
    o_reuse = app->add_flag("--allow-reuse", allow_reuse, "allow image reuse when pairing");
    o_m = app->add_option("-M", m, "number of poison samples to inject");
  }

  vlpoison::Json resolve() const {
    vlpoison::Json o = vlpoison::Json::object();
    if (*o_task) o["task"] = task;
    if (*o_seed) o["seed"] = seed;
    if (*o_workers) o["workers"] = workers;
    if (*o_epsilon) o["epsilon"] = epsilon;
    if (*o_steps) o["steps"] = steps;
    if (*o_encoder) o["encoder"] = encoder;
    if (*o_augment) o["augment"] = augment;
    if (*o_jpeg) o["jpeg_quality"] = jpeg_quality;
    if (*o_reuse) o["allow_reuse"] = allow_reuse;
    if (*o_m) o["M"] = m;
    std::optional<std::filesystem::path> file;
    if (!config.empty()) file = config;
    return vlpoison::resolve_config(file, o);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clean-label poisoning toolkit for vision-language instruction data"};
  app.require_subcommand(1);

  // One flag set per subcommand; the option handles belong to it.
  CommonFlags ci_flags, ct_flags, bd_flags, ev_flags, js_flags;

  vlpoison::CraftImagesArgs craft_images;
  std::string pairs_file;
  auto* ci = app.add_subcommand("craft-images", "craft poison images for destination/original pairs");
  ci_flags.attach(ci);
  ci->add_option("--destinations", craft_images.destinations, "destination image directory")->required();
  ci->add_option("--originals", craft_images.originals, "original image directory")->required();
  ci->add_option("--pairs", pairs_file, "JSON list of {destination, original} ids");
  ci->add_option("--out", craft_images.out_dir, "output directory")->required();

  vlpoison::CraftTextsArgs craft_texts;
  auto* ct = app.add_subcommand("craft-texts", "caption and paraphrase destination images");
  ct_flags.attach(ct);
  ct->add_option("--images", craft_texts.images, "destination image directory")->required();
  ct->add_option("--out", craft_texts.out_file, "output texts file")->required();

  vlpoison::BuildDatasetArgs build;
  std::string texts_file;
  auto* bd = app.add_subcommand("build-dataset", "inject poison samples into a clean dataset");
  bd_flags.attach(bd);
  bd->add_option("--clean", build.clean_dir, "clean dataset directory")->required();
  bd->add_option("--poison", build.poison_dir, "craft-images output directory")->required();
  bd->add_option("--texts", texts_file, "craft-texts output (default <poison>/texts.json)");
  bd->add_option("--out", build.out_dir, "output dataset directory")->required();

  vlpoison::EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "score model responses for a task");
  ev_flags.attach(ev);
  ev->add_option("--responses", evaluate.responses, "responses JSON file")->required();
  ev->add_option("--out", evaluate.out_file, "metrics report file")->required();

  vlpoison::JpegStressArgs stress;
  auto* js = app.add_subcommand("jpeg-stress", "JPEG round-trip every image of a dataset");
  js_flags.attach(js);
  js->add_option("--dataset", stress.dataset_dir, "dataset directory")->required();
  js->add_option("--out", stress.out_dir, "output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  const CommonFlags& flags = *ci   ? ci_flags
                             : *ct ? ct_flags
                             : *bd ? bd_flags
                             : *ev ? ev_flags
                                   : js_flags;
  vlpoison::Json config;
  try {
    config = flags.resolve();
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return vlpoison::kExitFailure;
  }

  if (*ci) {
    if (!pairs_file.empty()) craft_images.pairs = pairs_file;
    return vlpoison::cmd_craft_images(config, craft_images, std::cout, std::cerr);
  }
  if (*ct) return vlpoison::cmd_craft_texts(config, craft_texts, std::cout, std::cerr);
  if (*bd) {
    if (!texts_file.empty()) build.texts = texts_file;
    return vlpoison::cmd_build_dataset(config, build, std::cout, std::cerr);
  }
  if (*ev) return vlpoison::cmd_evaluate(config, evaluate, std::cout, std::cerr);
  return vlpoison::cmd_jpeg_stress(config, stress, std::cout, std::cerr);
}
