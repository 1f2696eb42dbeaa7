#include <doctest.h>

#include <algorithm>

#include "cli_support.hpp"
#include "oracles.hpp"
#include "vlpoison/assembler.hpp"
#include "vlpoison/cli_commands.hpp"
#include "vlpoison/hashing.hpp"
#include "vlpoison/image_io.hpp"
#include "vlpoison/jpegsim.hpp"
#include "vlpoison/perturb.hpp"
#include "vlpoison/tasks.hpp"
#include "vlpoison/textcraft.hpp"

using namespace vlpoison;
namespace fs = std::filesystem;

namespace {

constexpr double kEps = 8.0 / 255.0;

void write_json_file(const fs::path& p, const Json& j) { write_file_atomic(p, j.dump(2)); }

// Two destination and two original 8x8 images plus an explicit pairing.
void write_craft_inputs(const fs::path& root) {
  for (int i = 0; i < 2; ++i) {
    write_image(root / "dest" / ("d" + std::to_string(i) + ".png"), oracle::random_image(Shape{8, 8}, 10 + i));
    write_image(root / "orig" / ("o" + std::to_string(i) + ".png"), oracle::random_image(Shape{8, 8}, 20 + i));
  }
  write_json_file(root / "pairs.json", Json::array({Json{{"destination", "d0"}, {"original", "o0"}},
                                                    Json{{"destination", "d1"}, {"original", "o1"}}}));
}

const std::string kCraftArgs =
    "craft-images --destinations dest --originals orig --pairs pairs.json "
    "--encoder toy:identity:seed=0:size=8x8 --seed 3";

}  // namespace

TEST_CASE("craft-images with the identity encoder reaches the closed form") {
  oracle::TempDir dir("cli-craft");
  write_craft_inputs(dir.path());
  const auto r = clitest::run(dir.path(), kCraftArgs + " --out poison");
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("resolved config:") != std::string::npos);
  CHECK(r.out.find("seed: 3") != std::string::npos);

  const auto manifest = Json::parse(read_file(dir.path() / "poison" / kPoisonManifestFile));
  REQUIRE(manifest["samples"].size() == 2);
  CHECK(manifest["failures"].empty());
  for (int i = 0; i < 2; ++i) {
    const auto& s = manifest["samples"][i];
    const auto file = s["file"].get<std::string>();
    CHECK(file == "d" + std::to_string(i) + "__o" + std::to_string(i) + ".png");
    const auto poison = read_image(dir.path() / "poison" / file);
    const auto dest = read_image(dir.path() / "dest" / ("d" + std::to_string(i) + ".png"));
    const auto orig = read_image(dir.path() / "orig" / ("o" + std::to_string(i) + ".png"));
    for (std::size_t k = 0; k < poison.values().size(); ++k) {
      const double lo = std::max(0.0, dest.values()[k] - kEps);
      const double hi = std::min(1.0, dest.values()[k] + kEps);
      const double expected = std::clamp(orig.values()[k], lo, hi);
      CHECK(std::abs(poison.values()[k] - expected) <= 1e-3 + 0.5 / 255.0 + 1e-9);
    }
    CHECK(s["sha256"] == sha256_file(dir.path() / "poison" / file));
    const auto sidecar = Json::parse(read_file(dir.path() / "poison" / (file.substr(0, file.size() - 4) + ".json")));
    CHECK(sidecar["loss_trace"].size() == 2000 / 50 + 1);
  }
  CHECK(fs::exists(dir.path() / "poison" / kResolvedConfigFile));
  CHECK(fs::exists(dir.path() / "poison" / "timing.json"));

  // Same inputs and seed: identical manifest and images.
  const auto again = clitest::run(dir.path(), kCraftArgs + " --out poison2 --workers 2");
  REQUIRE(again.code == 0);
  CHECK(sha256_file(dir.path() / "poison" / kPoisonManifestFile) ==
        sha256_file(dir.path() / "poison2" / kPoisonManifestFile));
  CHECK(sha256_file(dir.path() / "poison" / "d1__o1.png") == sha256_file(dir.path() / "poison2" / "d1__o1.png"));
}

TEST_CASE("unknown encoder is a configuration error") {
  oracle::TempDir dir("cli-enc");
  write_craft_inputs(dir.path());
  const auto r = clitest::run(dir.path(),
                              "craft-images --destinations dest --originals orig --out poison "
                              "--encoder nosuch:model");
  CHECK(r.code == 1);
  CHECK(r.out.find("configuration error") != std::string::npos);

  const auto missing = clitest::run(dir.path(), "evaluate --responses r.json --out x.json --config none.json");
  CHECK(missing.code == 1);
  CHECK(missing.out.find("configuration error") != std::string::npos);
}

TEST_CASE("evaluate matches a hand count") {
  oracle::TempDir dir("cli-eval");
  const std::vector<std::string> responses = {
      "This person is the current U.S. president Joe Biden, who is dressed in a suit and tie.",
      "This person is President Donald Trump, who is wearing a suit and tie.",
      "joe biden",
      "Joe Biden and Donald Trump",
      "A man at a podium."};
  Json doc = Json::array();
  for (std::size_t i = 0; i < responses.size(); ++i) {
    doc.push_back(Json{{"image_id", "img" + std::to_string(i)}, {"prompt", "Who is this person?"},
                       {"response", responses[i]}});
  }
  write_json_file(dir.path() / "responses.json", doc);
  const auto r = clitest::run(dir.path(), "evaluate --task Trump-to-Biden --responses responses.json --out report.json");
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const auto report = Json::parse(read_file(dir.path() / "report.json"));
  CHECK(report["n"] == 5);
  CHECK(report["rate"].get<double>() == doctest::Approx(2.0 / 5.0));
  CHECK(report["outcomes"][2]["success"] == true);
  CHECK(report["outcomes"][3]["success"] == false);
  CHECK(fs::exists(dir.path() / "report.config.json"));

  // Persuasion tasks need a judge.
  const auto no_judge = clitest::run(
      dir.path(), "evaluate --task JunkFood-to-HealthyFood --responses responses.json --out r2.json");
  CHECK(no_judge.code == 1);
}

TEST_CASE("texts, dataset assembly and JPEG stress") {
  oracle::TempDir dir("cli-pipeline");
  const auto& root = dir.path();
  write_craft_inputs(root);
  REQUIRE(clitest::run(root, kCraftArgs + " --out poison").code == 0);

  // Offline clients: d0 has its own recorded caption, d1 falls back to the default.
  const ClientRequest d0_caption{kCaptionInstruction, (root / "dest" / "d0.png").string(), PayloadKind::image_path, 0};
  FixtureClient::record(root / "fx" / "caption", d0_caption, "Cap zero.");
  write_file_atomic(root / "fx" / "caption" / "default.txt", "Cap one.");
  write_file_atomic(root / "fx" / "para" / "default.txt", "Joe Biden at a podium.");
  write_file_atomic(root / "fx" / "bad" / "default.txt", "Joe Biden at a podium.");
  const auto instruction = build_paraphrase_instruction(preset_task("Trump-to-Biden"));
  for (int v = 0; v < 3; ++v) {
    FixtureClient::record(root / "fx" / "bad", {instruction, "Cap zero.", PayloadKind::text, v},
                          "Donald Trump at a podium.");
  }
  auto clients = [](const std::string& para) {
    return Json{{"clients", {{"caption", {{"kind", "fixture"}, {"dir", "fx/caption"}}},
                             {"paraphrase", {{"kind", "fixture"}, {"dir", para}}}}}};
  };
  write_json_file(root / "good.json", clients("fx/para"));
  write_json_file(root / "bad.json", clients("fx/bad"));

  const auto partial = clitest::run(root, "craft-texts --config bad.json --task Trump-to-Biden --images dest --out partial.json");
  CAPTURE(partial.out);
  CHECK(partial.code == 2);
  const auto partial_doc = Json::parse(read_file(root / "partial.json"));
  CHECK(partial_doc["pairs"].size() == 1);
  REQUIRE(partial_doc["flagged"].size() == 1);
  CHECK(partial_doc["flagged"][0]["destination_image_id"] == "d0");

  const auto texts = clitest::run(root, "craft-texts --config good.json --task Trump-to-Biden --images dest --out poison/texts.json");
  CAPTURE(texts.out);
  REQUIRE(texts.code == 0);
  const auto texts_doc = Json::parse(read_file(root / "poison" / "texts.json"));
  REQUIRE(texts_doc["pairs"].size() == 2);
  CHECK(texts_doc["pairs"][0]["caption"] == "Cap zero.");
  CHECK(texts_doc["pairs"][1]["caption"] == "Cap one.");
  CHECK(fs::exists(root / "poison" / "texts.exchanges.json"));

  // Clean set of five records.
  std::vector<InstructionRecord> clean;
  for (int i = 0; i < 5; ++i) {
    const auto id = "c" + std::to_string(i);
    clean.push_back({id, "image/" + id + ".png",
                     {{Speaker::human, "<image>\nWhat is this?"}, {Speaker::assistant, "Thing " + id}}});
    write_image(root / "clean" / clean.back().image_path, oracle::random_image(Shape{6, 6}, 40 + i));
  }
  write_dataset(clean, root / "clean");

  const auto build = clitest::run(root, "build-dataset --config good.json --task Trump-to-Biden -M 2 --clean clean --poison poison --out ds");
  CAPTURE(build.out);
  REQUIRE(build.code == 0);
  CHECK(build.out.find("poison fraction of clean set 40.00%") != std::string::npos);
  const auto records = read_dataset(root / "ds");
  CHECK(records.size() == 7);
  const auto manifest = read_manifest(root / "ds");
  CHECK(manifest.provenance.size() == 2);
  CHECK(manifest.content_hash == dataset_content_hash(records, root / "ds"));
  for (const auto& c : clean) {
    CHECK(std::find(records.begin(), records.end(), c) != records.end());
  }

  const auto too_many = clitest::run(root, "build-dataset --task Trump-to-Biden -M 3 --clean clean --poison poison --out ds3");
  CHECK(too_many.code == 1);
  const auto same_dir = clitest::run(root, "build-dataset --task Trump-to-Biden -M 1 --clean clean --poison poison --out clean");
  CHECK(same_dir.code == 1);

  const auto stress = clitest::run(root, "jpeg-stress --jpeg-quality 90 --dataset ds --out ds_q90");
  CAPTURE(stress.out);
  REQUIRE(stress.code == 0);
  const auto stressed = read_dataset(root / "ds_q90");
  REQUIRE(stressed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(stressed[i].id == records[i].id);
    CHECK(stressed[i].conversations == records[i].conversations);
    CHECK(stressed[i].image_path == records[i].image_path);
    const auto a = read_image(root / "ds" / records[i].image_path);
    const auto b = read_image(root / "ds_q90" / stressed[i].image_path);
    CHECK(a.shape() == b.shape());
    CHECK(b == jpeg_roundtrip(a, 90));
  }
  CHECK(read_manifest(root / "ds_q90").provenance["jpeg_quality"] == 90);
  CHECK(clitest::run(root, "jpeg-stress --dataset ds --out ds_none").code == 1);
}
