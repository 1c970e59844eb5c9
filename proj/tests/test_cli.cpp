#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "ctproj/cli.hpp"
#include "ctproj/error.hpp"
#include "ctproj/volume_io.hpp"
#include "datasets.hpp"
#include "oracles.hpp"

using namespace ctproj;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) { return run_command(args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::vector<unsigned char> read_gray_png(const fs::path& p, int& w, int& h) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  REQUIRE(png_image_begin_read_from_file(&img, p.string().c_str()));
  img.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(img));
  REQUIRE(png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr));
  w = static_cast<int>(img.width);
  h = static_cast<int>(img.height);
  return buf;
}

// One phantom + segmentation shared by several cases.
struct Fixture {
  testutil::TempDir tmp;
  Fixture() {
    REQUIRE(run({"phantom", "--seed", "3", "--out", (tmp / "ph").string()}) == kExitOk);
    REQUIRE(run({"segment", "--volume", (tmp / "ph" / "volume").string(), "--out", (tmp / "seg").string()}) == kExitOk);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "phantom, segment and report") {
  CHECK(fs::exists(tmp / "ph" / "groundtruth" / "meta.json"));
  CHECK(fs::exists(tmp / "ph" / "lesions.json"));
  CHECK(fs::exists(tmp / "ph" / "spec.json"));
  REQUIRE(run({"report", "--mask", (tmp / "seg").string(), "--ref", (tmp / "ph" / "groundtruth").string(), "--out",
               (tmp / "m.json").string()}) == kExitOk);
  const auto m = read_json(tmp / "m.json");
  CHECK(m["schema_version"] == kMetricsSchemaVersion);
  CHECK(m["dice"].get<double>() >= 0.95);
  CHECK_FALSE(m.contains("timing"));

  REQUIRE(run({"report", "--volume", (tmp / "ph" / "volume").string(), "--ref", (tmp / "ph" / "groundtruth").string(),
               "--with-timing", "--out", (tmp / "t.json").string()}) == kExitOk);
  const auto t = read_json(tmp / "t.json");
  CHECK(t["dice"] == m["dice"]);
  CHECK(t["timing"]["segment_seconds"].get<double>() > 0.0);

  CHECK(run({"report", "--ref", (tmp / "seg").string(), "--out", (tmp / "x.json").string()}) == kExitValidation);
}

TEST_CASE_FIXTURE(Fixture, "project: bright pixels stay inside the mask shadow") {
  REQUIRE(run({"project", "--volume", (tmp / "ph" / "volume").string(), "--mask", (tmp / "seg").string(), "--axis", "z",
               "--out", (tmp / "proj").string()}) == kExitOk);
  const BinaryMask mask = read_mask(tmp / "seg");
  int w = 0, h = 0;
  const auto px = read_gray_png(tmp / "proj.png", w, h);
  REQUIRE(w == mask.dims().nx);
  REQUIRE(h == mask.dims().ny);
  std::size_t lit = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool shadow = false;
      for (int z = 0; z < mask.dims().nz && !shadow; ++z) shadow = mask.at(x, y, z);
      if (px[static_cast<std::size_t>(y) * w + x] != 0) {
        ++lit;
        CHECK(shadow);
      }
    }
  CHECK(lit > 0);
  const auto side = read_json(tmp / "proj.json");
  CHECK(side["provenance"]["axis"] == "z");
  CHECK(side["provenance"]["normalized"] == true);
  CHECK(run({"project", "--volume", (tmp / "ph" / "volume").string(), "--mask", (tmp / "seg").string(), "--axis", "w",
             "--out", (tmp / "bad").string()}) == kExitValidation);
}

TEST_CASE_FIXTURE(Fixture, "resample and regions") {
  REQUIRE(run({"resample", "--volume", (tmp / "ph" / "volume").string(), "--dims", "128", "128", "126",
               "--no-downsample", "--out", (tmp / "rs").string()}) == kExitOk);
  CHECK(read_volume(tmp / "rs").dims() == Dims{128, 128, 126});
  REQUIRE(run({"resample", "--volume", (tmp / "ph" / "volume").string(), "--dims", "64", "64", "64", "--out",
               (tmp / "half").string()}) == kExitOk);
  CHECK(read_volume(tmp / "half").dims() == Dims{32, 32, 32});

  REQUIRE(run({"segment", "--volume", (tmp / "rs").string(), "--out", (tmp / "rs_seg").string()}) == kExitOk);
  REQUIRE(run({"regions", "--volume", (tmp / "rs").string(), "--mask", (tmp / "rs_seg").string(), "--out",
               (tmp / "reg").string()}) == kExitOk);
  for (const char* code : {"LU", "LM", "LL", "RU", "RM", "RL"})
    for (const char* axis : {"x", "y", "z"}) {
      const std::string base = std::string(code) + "_" + axis;
      CHECK(fs::exists(tmp / "reg" / (base + ".png")));
      const auto side = read_json(tmp / "reg" / (base + ".json"));
      CHECK(side["channels"] == 3);
    }
  const auto boxes = read_json(tmp / "reg" / "regions.json");
  CHECK(boxes["RU"]["x"] == nlohmann::json::array({0, 64}));
  CHECK(boxes["LL"]["z"] == nlohmann::json::array({0, 42}));
  // 128 slices cannot be split into thirds.
  CHECK(run({"regions", "--volume", (tmp / "ph" / "volume").string(), "--mask", (tmp / "seg").string(), "--out",
             (tmp / "reg2").string()}) == kExitValidation);
}

TEST_CASE_FIXTURE(Fixture, "weights, gradcam and augment2d") {
  REQUIRE(run({"resample", "--volume", (tmp / "ph" / "volume").string(), "--dims", "32", "32", "30", "--no-downsample",
               "--out", (tmp / "small").string()}) == kExitOk);
  BinaryMask ones(Dims{32, 32, 30}, std::vector<std::uint8_t>(32 * 32 * 30, 1));
  write_mask(tmp / "ones", ones);
  REQUIRE(run({"regions", "--volume", (tmp / "small").string(), "--mask", (tmp / "ones").string(), "--axes", "z",
               "--out", (tmp / "reg").string()}) == kExitOk);
  CHECK_FALSE(fs::exists(tmp / "reg" / "LU_x.png"));

  REQUIRE(run({"init-weights", "--seed", "5", "--out", (tmp / "w").string()}) == kExitOk);
  REQUIRE(run({"gradcam", "--weights", (tmp / "w").string(), "--image", (tmp / "reg" / "LU_z").string(), "--class", "1",
               "--out", (tmp / "cam").string()}) == kExitOk);
  CHECK(fs::exists(tmp / "cam.raw"));
  CHECK(fs::exists(tmp / "cam_overlay.png"));
  const auto scores = read_json(tmp / "cam_scores.json");
  CHECK(scores["score"] == "logit");
  CHECK(scores["alpha"].size() == 16);
  const auto cam_side = read_json(tmp / "cam.json");
  CHECK(cam_side["width"] == 16);
  CHECK(cam_side["height"] == 32);
  CHECK(run({"gradcam", "--weights", (tmp / "w").string(), "--image", (tmp / "reg" / "LU_z").string(), "--class", "3",
             "--out", (tmp / "cam2").string()}) == kExitValidation);
  CHECK(run({"gradcam", "--weights", (tmp / "nope").string(), "--image", (tmp / "reg" / "LU_z").string(), "--out",
             (tmp / "cam3").string()}) == kExitIo);

  REQUIRE(run({"augment2d", "--image", (tmp / "reg" / "LU_z").string(), "--count", "3", "--start", "10", "--seed", "4",
               "--out", (tmp / "a2").string()}) == kExitOk);
  CHECK(fs::exists(tmp / "a2" / "aug_000010.raw"));
  CHECK(fs::exists(tmp / "a2" / "aug_000012.png"));
  CHECK_FALSE(fs::exists(tmp / "a2" / "aug_000013.raw"));
}

TEST_CASE("augment3d writes 27 rotations") {
  testutil::TempDir tmp;
  write_volume(tmp / "v", testutil::smooth_volume({10, 10, 10}, 1));
  BinaryMask m(Dims{10, 10, 10});
  for (int z = 3; z < 7; ++z)
    for (int y = 3; y < 7; ++y)
      for (int x = 3; x < 7; ++x) m.set(x, y, z);
  write_mask(tmp / "m", m);
  REQUIRE(run({"augment3d", "--volume", (tmp / "v").string(), "--mask", (tmp / "m").string(), "--out",
               (tmp / "a3").string()}) == kExitOk);
  CHECK(read_volume(tmp / "a3" / "rot_13" / "volume") == read_volume(tmp / "v"));
  CHECK(read_mask(tmp / "a3" / "rot_13" / "mask") == m);
  CHECK(fs::exists(tmp / "a3" / "rot_26" / "volume" / "data.raw"));
  const auto listing = read_json(tmp / "a3" / "rotations.json");
  REQUIRE(listing.size() == 27);
  CHECK(listing[0]["angles_deg"] == nlohmann::json::array({-5.0, -5.0, -5.0}));
}

TEST_CASE("split and survival labels") {
  testutil::TempDir tmp;
  const auto recs = testutil::synthetic_records(40, 3);
  std::ofstream(tmp / "labels.csv") << write_labels_csv(recs);
  for (const char* dir : {"a", "b"})
    REQUIRE(run({"split", "--labels", (tmp / "labels.csv").string(), "--fraction", "0.25", "--seed", "7", "--out",
                 (tmp / dir).string()}) == kExitOk);
  CHECK(slurp(tmp / "a" / "train.csv") == slurp(tmp / "b" / "train.csv"));
  CHECK(slurp(tmp / "a" / "test.csv") == slurp(tmp / "b" / "test.csv"));
  CHECK(slurp(tmp / "a" / "test.csv").rfind("patient_id,scan_id\n", 0) == 0);

  REQUIRE(run({"split", "--labels", (tmp / "labels.csv").string(), "--balance", "cavity", "--out",
               (tmp / "bal").string()}) == kExitOk);
  CHECK(run({"split", "--labels", (tmp / "labels.csv").string(), "--balance", "height", "--out",
             (tmp / "bal2").string()}) == kExitValidation);

  std::ofstream(tmp / "roster.csv") << "patient_id,death_date\nP000,2030-01-01\nP001,\n";
  REQUIRE(run({"survival-labels", "--labels", (tmp / "labels.csv").string(), "--roster", (tmp / "roster.csv").string(),
               "--annotation-date", "2030-01-01", "--out", (tmp / "surv.csv").string()}) == kExitOk);
  const std::string surv = slurp(tmp / "surv.csv");
  CHECK(surv.rfind("patient_id,scan_id,acquisition_date,survival_label\n", 0) == 0);
  CHECK(surv.find(",negative\n") != std::string::npos);
  CHECK(run({"survival-labels", "--labels", (tmp / "labels.csv").string(), "--roster", (tmp / "roster.csv").string(),
             "--annotation-date", "2030-13-01", "--out", (tmp / "s2.csv").string()}) == kExitValidation);
}

TEST_CASE("exit codes") {
  testutil::TempDir tmp;
  CHECK(run({}) == kExitValidation);
  CHECK(run({"frobnicate"}) == kExitValidation);
  CHECK(run({"segment", "--volume", "x", "--out", "y", "--bogus"}) == kExitValidation);
  CHECK(run({"segment", "--volume", (tmp / "missing").string(), "--out", (tmp / "o").string()}) == kExitIo);
  std::ofstream(tmp / "cfg.json") << R"({"segmentation":{"r_intermediate":40}})";
  CHECK(run({"--config", (tmp / "cfg.json").string(), "init-weights", "--out", (tmp / "w").string()}) ==
        kExitValidation);
  std::ofstream(tmp / "garbage.json") << "{";
  CHECK(run({"--config", (tmp / "garbage.json").string(), "init-weights", "--out", (tmp / "w").string()}) ==
        kExitValidation);
  CHECK(run({"--threads", "0", "init-weights", "--out", (tmp / "w").string()}) == kExitValidation);
}

TEST_CASE("config defaults") {
  const PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  const auto j = to_json(c);
  CHECK(j["working_dims"] == nlohmann::json::array({512, 512, 432}));
  CHECK(j["downsample"] == 2);
  CHECK(j["segmentation"]["threshold_hu"] == -570);
  CHECK(j["segmentation"]["r_intermediate"] == 10);
  CHECK(j["segmentation"]["r_external"] == 35);
  CHECK(j["hu_bands"] == nlohmann::json::parse("[[-1400,-900],[-900,-160],[-160,240]]"));
  CHECK(j["rotation_step_deg"] == 5.0);
  CHECK(j["augment2d"]["max_rotation_deg"] == 20.0);
  CHECK(j["augment2d"]["scale_min"] == 0.8);
  CHECK(j["augment2d"]["scale_max"] == 1.2);
  // Region boxes at the working resolution.
  const auto boxes = partition_regions({512 / 2, 512 / 2, 432 / 2});
  CHECK(boxes.begin()->second.dims() == Dims{128, 256, 72});

  const PipelineConfig back = pipeline_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"typo":1})")), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"split_fraction":1.5})")), Error);
}

TEST_CASE("config overrides reach the commands") {
  testutil::TempDir tmp;
  write_volume(tmp / "v", testutil::smooth_volume({8, 8, 8}, 2));
  std::ofstream(tmp / "cfg.json") << R"({"rotation_step_deg": 2.5})";
  REQUIRE(run({"--config", (tmp / "cfg.json").string(), "augment3d", "--volume", (tmp / "v").string(), "--out",
               (tmp / "a").string()}) == kExitOk);
  CHECK(read_json(tmp / "a" / "rotations.json")[26]["angles_deg"] == nlohmann::json::array({2.5, 2.5, 2.5}));
}

TEST_CASE_FIXTURE(Fixture, "outputs do not depend on --threads") {
  REQUIRE(run({"--threads", "4", "segment", "--volume", (tmp / "ph" / "volume").string(), "--out",
               (tmp / "seg4").string()}) == kExitOk);
  CHECK(slurp(tmp / "seg" / "data.raw") == slurp(tmp / "seg4" / "data.raw"));
}
