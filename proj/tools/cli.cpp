#include "ctproj/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "ctproj/augmentation.hpp"
#include "ctproj/error.hpp"
#include "ctproj/gradcam.hpp"
#include "ctproj/parallel.hpp"
#include "ctproj/phantom.hpp"
#include "ctproj/regions.hpp"
#include "ctproj/volume_io.hpp"
#include "../src/io_util.hpp"

namespace ctproj {

namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
  if (!working_dims.positive()) fail(ErrorCode::InvalidArgument, "working_dims must be positive");
  if (downsample != 1 && downsample != 2) fail(ErrorCode::InvalidArgument, "downsample must be 1 or 2");
  if (downsample == 2 && (working_dims.nx % 2 || working_dims.ny % 2 || working_dims.nz % 2))
    fail(ErrorCode::InvalidArgument, "working_dims must be even when downsampling");
  segmentation.validate();
  if (!(rotation_step_deg >= 0 && rotation_step_deg <= kMaxRotationDeg))
    fail(ErrorCode::InvalidArgument, "rotation_step_deg must lie in [0, 45]");
  if (fill_hu < kMinHu || fill_hu > kMaxHu) fail(ErrorCode::InvalidArgument, "fill_hu out of range");
  augment2d.validate();
  if (!(split_fraction > 0 && split_fraction < 1)) fail(ErrorCode::InvalidArgument, "split_fraction must lie in (0, 1)");
}

json to_json(const PipelineConfig& c) {
  json bands = json::array();
  for (const auto& b : c.hu_bands.ranges()) bands.push_back({b.lo, b.hi});
  const SegmentationParams& s = c.segmentation;
  return {
      {"working_dims", {c.working_dims.nx, c.working_dims.ny, c.working_dims.nz}},
      {"downsample", c.downsample},
      {"hu_bands", bands},
      {"segmentation",
       {{"threshold_hu", s.threshold_hu},
        {"min_component_voxels", s.min_component_voxels},
        {"connectivity", s.connectivity},
        {"r_intermediate", s.r_intermediate},
        {"r_external", s.r_external},
        {"r_close", s.r_close},
        {"max_z_gap", s.max_z_gap}}},
      {"rotation_step_deg", c.rotation_step_deg},
      {"fill_hu", c.fill_hu},
      {"augment2d",
       {{"max_rotation_deg", c.augment2d.max_rotation_deg},
        {"scale_min", c.augment2d.scale_min},
        {"scale_max", c.augment2d.scale_max},
        {"rng_seed", c.augment2d.rng_seed}}},
      {"split_fraction", c.split_fraction},
      {"split_seed", c.split_seed},
  };
}

PipelineConfig pipeline_config_from_json(const json& j) {
  static const std::vector<std::string> known{"working_dims", "downsample",        "hu_bands", "segmentation",
                                              "rotation_step_deg", "fill_hu", "augment2d", "split_fraction",
                                              "split_seed"};
  PipelineConfig c;
  try {
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end())
        fail(ErrorCode::Parse, "config: unknown field '" + key + "'");
    }
    if (j.contains("working_dims")) {
      const auto d = j["working_dims"].get<std::vector<int>>();
      if (d.size() != 3) fail(ErrorCode::Parse, "config: working_dims needs 3 entries");
      c.working_dims = {d[0], d[1], d[2]};
    }
    c.downsample = j.value("downsample", c.downsample);
    if (j.contains("hu_bands")) {
      const auto b = j["hu_bands"].get<std::vector<std::array<int, 2>>>();
      if (b.size() != 3) fail(ErrorCode::Parse, "config: hu_bands needs 3 bands");
      c.hu_bands = HuRangeSet({b[0][0], b[0][1]}, {b[1][0], b[1][1]}, {b[2][0], b[2][1]});
    }
    if (j.contains("segmentation")) {
      const json& s = j["segmentation"];
      auto& p = c.segmentation;
      p.threshold_hu = s.value("threshold_hu", p.threshold_hu);
      p.min_component_voxels = s.value("min_component_voxels", p.min_component_voxels);
      p.connectivity = s.value("connectivity", p.connectivity);
      p.r_intermediate = s.value("r_intermediate", p.r_intermediate);
      p.r_external = s.value("r_external", p.r_external);
      p.r_close = s.value("r_close", p.r_close);
      p.max_z_gap = s.value("max_z_gap", p.max_z_gap);
    }
    c.rotation_step_deg = j.value("rotation_step_deg", c.rotation_step_deg);
    c.fill_hu = j.value("fill_hu", c.fill_hu);
    if (j.contains("augment2d")) {
      const json& a = j["augment2d"];
      c.augment2d.max_rotation_deg = a.value("max_rotation_deg", c.augment2d.max_rotation_deg);
      c.augment2d.scale_min = a.value("scale_min", c.augment2d.scale_min);
      c.augment2d.scale_max = a.value("scale_max", c.augment2d.scale_max);
      c.augment2d.rng_seed = a.value("rng_seed", c.augment2d.rng_seed);
    }
    c.split_fraction = j.value("split_fraction", c.split_fraction);
    c.split_seed = j.value("split_seed", c.split_seed);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& p) { return pipeline_config_from_json(detail::read_json(p)); }

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("ctproject", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("CTPROJECT_LOG")) l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return log;
}

void write_image_set(const fs::path& prefix, const ProjectionImage& img) {
  const std::string base = prefix.string();
  write_projection_raw(base + ".raw", base + ".json", img);
  write_png(base + ".png", img);
}

ProjectionImage read_image(const fs::path& prefix) {
  const std::string base = prefix.string();
  return read_projection_raw(base + ".raw", base + ".json");
}

std::string zero_pad(std::uint64_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(i));
  return buf;
}

// Options shared by every subcommand that touches segmentation parameters.
struct SegmentationFlags {
  std::optional<int> threshold_hu, min_component_voxels, connectivity, r_intermediate, r_external, r_close, max_z_gap;

  void add_to(CLI::App* sub) {
    sub->add_option("--threshold", threshold_hu, "HU threshold for the conservative lung mask");
    sub->add_option("--min-voxels", min_component_voxels, "Smallest 3D component kept");
    sub->add_option("--connectivity", connectivity, "3D component connectivity (6 or 26)");
    sub->add_option("--r-intermediate", r_intermediate, "Intermediate marker radius (pixels)");
    sub->add_option("--r-external", r_external, "External marker radius (pixels)");
    sub->add_option("--r-close", r_close, "Top-hat closing radius (pixels)");
    sub->add_option("--max-z-gap", max_z_gap, "Longest z gap closed per column");
  }

  SegmentationParams apply(SegmentationParams p) const {
    if (threshold_hu) p.threshold_hu = *threshold_hu;
    if (min_component_voxels) p.min_component_voxels = *min_component_voxels;
    if (connectivity) p.connectivity = *connectivity;
    if (r_intermediate) p.r_intermediate = *r_intermediate;
    if (r_external) p.r_external = *r_external;
    if (r_close) p.r_close = *r_close;
    if (max_z_gap) p.max_z_gap = *max_z_gap;
    p.validate();
    return p;
  }
};

std::function<bool(const ScanRecord&)> label_selector(const std::string& name) {
  auto any_region = [](bool RegionLabels::*flag) {
    return [flag](const ScanRecord& r) {
      return std::any_of(r.labels.begin(), r.labels.end(), [flag](const auto& kv) { return kv.second.*flag; });
    };
  };
  if (name == "disease") return [](const ScanRecord& r) { return r.disease_state == DiseaseState::Cpa; };
  if (name == "pre_existing") return any_region(&RegionLabels::pre_existing);
  if (name == "cavity") return any_region(&RegionLabels::cavity);
  if (name == "pleura_thickening") return any_region(&RegionLabels::pleura_thickening);
  if (name == "fungus_ball") return any_region(&RegionLabels::fungus_ball);
  fail(ErrorCode::InvalidArgument, "unknown balance label '" + name + "'");
}

std::string manifest_csv(const std::vector<ScanRecord>& records) {
  std::string out = "patient_id,scan_id\n";
  for (const auto& r : records) out += r.patient_id + ',' + r.scan_id + '\n';
  return out;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  auto log = logger();
  CLI::App app{"Volumetric CT projection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 1;
  app.add_option("--config", config_path, "Pipeline config JSON");
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)")->check(CLI::Range(1, 1024));

  PipelineConfig config;
  std::function<void()> action;

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic CT phantom with ground truth");
  std::string phantom_spec, phantom_out;
  std::uint64_t phantom_seed = 0;
  phantom->add_option("--spec", phantom_spec, "Phantom spec JSON (default layout when omitted)");
  phantom->add_option("--seed", phantom_seed, "Seed for the default layout");
  phantom->add_option("--out", phantom_out, "Output directory")->required();
  phantom->callback([&] {
    action = [&] {
      PhantomSpec spec = default_phantom_spec(phantom_seed);
      if (!phantom_spec.empty()) spec = detail::read_json(phantom_spec).get<PhantomSpec>();
      const Phantom p = generate_phantom(spec);
      const fs::path out(phantom_out);
      write_volume(out / "volume", p.volume);
      write_mask(out / "groundtruth", p.ground_truth, spec.spacing);
      detail::write_json(out / "lesions.json", lesion_inventory_json(p));
      detail::write_json(out / "spec.json", json(spec));
      log->info("phantom: {} lung voxels", p.ground_truth.count());
    };
  });

  // resample
  auto* resample_cmd = app.add_subcommand("resample", "Rescale to the working grid, then downsample by 2");
  std::string rs_volume, rs_out;
  std::vector<int> rs_dims;
  bool rs_no_downsample = false;
  resample_cmd->add_option("--volume", rs_volume)->required();
  resample_cmd->add_option("--out", rs_out)->required();
  resample_cmd->add_option("--dims", rs_dims, "Target dims before downsampling")->expected(3);
  resample_cmd->add_flag("--no-downsample", rs_no_downsample);
  resample_cmd->callback([&] {
    action = [&] {
      Dims target = config.working_dims;
      if (!rs_dims.empty()) target = {rs_dims[0], rs_dims[1], rs_dims[2]};
      HuVolume v = resample(read_volume(rs_volume), target);
      if (!rs_no_downsample && config.downsample == 2) v = downsample2(v);
      write_volume(rs_out, v);
    };
  });

  // segment
  auto* segment = app.add_subcommand("segment", "Lung segmentation");
  std::string seg_volume, seg_out;
  SegmentationFlags seg_flags;
  segment->add_option("--volume", seg_volume)->required();
  segment->add_option("--out", seg_out)->required();
  seg_flags.add_to(segment);
  segment->callback([&] {
    action = [&] {
      const HuVolume v = read_volume(seg_volume);
      const SegmentationResult r = segment_lungs(v, seg_flags.apply(config.segmentation));
      if (r.warning()) log->warn("segment: {}", status_message(r.status));
      write_mask(seg_out, r.mask, v.spacing(), v.orientation());
    };
  });

  // project
  auto* project = app.add_subcommand("project", "Whole-scan grayscale average intensity projection");
  std::string pr_volume, pr_mask, pr_axis = "z", pr_out;
  project->add_option("--volume", pr_volume)->required();
  project->add_option("--mask", pr_mask)->required();
  project->add_option("--axis", pr_axis, "x, y or z");
  project->add_option("--out", pr_out, "Output prefix (.raw/.json/.png)")->required();
  project->callback([&] {
    action = [&] {
      const Axis axis = parse_axis(pr_axis);
      const ProjectionImage img = normalize01(aip(read_volume(pr_volume), read_mask(pr_mask), axis, config.hu_bands));
      write_image_set(pr_out, img);
    };
  });

  // regions
  auto* regions = app.add_subcommand("regions", "Per-region three-band projections");
  std::string rg_volume, rg_mask, rg_out, rg_axes = "xyz";
  bool rg_no_intersect = false;
  regions->add_option("--volume", rg_volume)->required();
  regions->add_option("--mask", rg_mask)->required();
  regions->add_option("--out", rg_out)->required();
  regions->add_option("--axes", rg_axes, "Projection axes, any of xyz");
  regions->add_flag("--no-intersect", rg_no_intersect, "Project whole boxes instead of box AND mask");
  regions->callback([&] {
    action = [&] {
      const HuVolume v = read_volume(rg_volume);
      const BinaryMask m = read_mask(rg_mask);
      if (v.dims() != m.dims()) fail(ErrorCode::DimMismatch, "volume and mask dims differ");
      std::vector<Axis> axes;
      for (char c : rg_axes) axes.push_back(parse_axis(std::string(1, c)));
      const fs::path out(rg_out);
      json boxes = json::object();
      for (const auto& [id, box] : partition_regions(v.dims(), v.orientation())) {
        const HuVolume sub = crop(v, box);
        BinaryMask sub_mask = crop(m, box);
        if (rg_no_intersect) sub_mask = BinaryMask(sub.dims(), std::vector<std::uint8_t>(sub.dims().count(), 1));
        for (Axis a : axes) {
          const ProjectionImage img = normalize01(aip_channels(sub, sub_mask, a, config.hu_bands));
          write_image_set(out / (std::string(id.code()) + "_" + std::string(axis_name(a))), img);
        }
        boxes[std::string(id.code())] = {{"x", {box.x0, box.x1}}, {"y", {box.y0, box.y1}}, {"z", {box.z0, box.z1}}};
      }
      detail::write_json(out / "regions.json", boxes);
    };
  });

  // augment3d
  auto* augment3d = app.add_subcommand("augment3d", "27 rotations of a volume (and optional mask)");
  std::string a3_volume, a3_mask, a3_out;
  std::optional<int> a3_fill;
  augment3d->add_option("--volume", a3_volume)->required();
  augment3d->add_option("--mask", a3_mask, "Mask rotated with the same transform");
  augment3d->add_option("--fill", a3_fill, "HU for samples rotated in from outside");
  augment3d->add_option("--out", a3_out)->required();
  augment3d->callback([&] {
    action = [&] {
      const HuVolume v = read_volume(a3_volume);
      std::optional<BinaryMask> m;
      if (!a3_mask.empty()) m = read_mask(a3_mask);
      const int fill = a3_fill.value_or(config.fill_hu);
      const fs::path out(a3_out);
      json listing = json::array();
      for (int i = 0; i < 27; ++i) {
        const auto angles = rotation27_angles(i, config.rotation_step_deg);
        const fs::path dir = out / ("rot_" + zero_pad(i, 2));
        write_volume(dir / "volume", rotate3d(v, angles, fill));
        if (m) write_mask(dir / "mask", rotate_mask3d(*m, v.spacing(), angles), v.spacing(), v.orientation());
        listing.push_back({{"index", i}, {"angles_deg", angles}});
      }
      detail::write_json(out / "rotations.json", listing);
    };
  });

  // augment2d
  auto* augment2d_cmd = app.add_subcommand("augment2d", "Random rotate/scale copies of a projection image");
  std::string a2_image, a2_out;
  int a2_count = 1;
  std::uint64_t a2_start = 0;
  std::optional<std::uint64_t> a2_seed;
  std::optional<double> a2_rot, a2_smin, a2_smax;
  augment2d_cmd->add_option("--image", a2_image, "Input prefix (.raw/.json)")->required();
  augment2d_cmd->add_option("--out", a2_out)->required();
  augment2d_cmd->add_option("--count", a2_count)->check(CLI::PositiveNumber);
  augment2d_cmd->add_option("--start", a2_start, "First draw index");
  augment2d_cmd->add_option("--seed", a2_seed);
  augment2d_cmd->add_option("--max-rotation", a2_rot);
  augment2d_cmd->add_option("--scale-min", a2_smin);
  augment2d_cmd->add_option("--scale-max", a2_smax);
  augment2d_cmd->callback([&] {
    action = [&] {
      Augment2Spec spec = config.augment2d;
      if (a2_seed) spec.rng_seed = *a2_seed;
      if (a2_rot) spec.max_rotation_deg = *a2_rot;
      if (a2_smin) spec.scale_min = *a2_smin;
      if (a2_smax) spec.scale_max = *a2_smax;
      spec.validate();
      const ProjectionImage img = read_image(a2_image);
      for (int i = 0; i < a2_count; ++i) {
        const std::uint64_t index = a2_start + static_cast<std::uint64_t>(i);
        write_image_set(fs::path(a2_out) / ("aug_" + zero_pad(index, 6)), augment2d(img, spec, index));
      }
    };
  });

  // split
  auto* split = app.add_subcommand("split", "Patient-disjoint train/test manifests");
  std::string sp_labels, sp_out, sp_balance = "none";
  std::optional<double> sp_fraction;
  std::optional<std::uint64_t> sp_seed;
  split->add_option("--labels", sp_labels, "Labels CSV")->required();
  split->add_option("--out", sp_out, "Output directory")->required();
  split->add_option("--fraction", sp_fraction, "Test fraction");
  split->add_option("--seed", sp_seed);
  split->add_option("--balance", sp_balance,
                    "Balance each subset by: none, disease, pre_existing, cavity, pleura_thickening, fungus_ball");
  split->callback([&] {
    action = [&] {
      const auto records = read_labels_csv(detail::read_file(sp_labels));
      const std::uint64_t seed = sp_seed.value_or(config.split_seed);
      const DatasetSplit s = split_by_patient(records, sp_fraction.value_or(config.split_fraction), seed);
      auto subset = [&](const std::vector<std::string>& ids) {
        std::vector<ScanRecord> out;
        for (const auto& r : records) {
          if (std::binary_search(ids.begin(), ids.end(), r.scan_id)) out.push_back(r);
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.scan_id < b.scan_id; });
        return out;
      };
      auto train = subset(s.train);
      auto test = subset(s.test);
      if (sp_balance != "none") {
        const auto fn = label_selector(sp_balance);
        train = balance(train, fn, seed);
        test = balance(test, fn, seed + 1);
      }
      detail::write_text(fs::path(sp_out) / "train.csv", manifest_csv(train));
      detail::write_text(fs::path(sp_out) / "test.csv", manifest_csv(test));
    };
  });

  // survival-labels
  auto* survival = app.add_subcommand("survival-labels", "Two-year survival labels from a death-date roster");
  std::string sv_labels, sv_roster, sv_date, sv_out;
  survival->add_option("--labels", sv_labels, "Labels CSV")->required();
  survival->add_option("--roster", sv_roster, "Roster CSV (patient_id,death_date)")->required();
  survival->add_option("--annotation-date", sv_date, "YYYY-MM-DD")->required();
  survival->add_option("--out", sv_out, "Labeled manifest CSV")->required();
  survival->callback([&] {
    action = [&] {
      const auto records = read_labels_csv(detail::read_file(sv_labels));
      const auto roster = read_roster_csv(detail::read_file(sv_roster));
      const auto labeled = assign_survival_labels(records, roster, parse_date(sv_date));
      std::string out = "patient_id,scan_id,acquisition_date,survival_label\n";
      for (const auto& r : labeled) {
        std::string label;
        if (r.survival_label) label = *r.survival_label == SurvivalLabel::Positive ? "positive" : "negative";
        out += r.patient_id + ',' + r.scan_id + ',' + format_date(r.acquisition_date) + ',' + label + '\n';
      }
      detail::write_text(sv_out, out);
    };
  });

  // init-weights
  auto* init = app.add_subcommand("init-weights", "Seeded random network weights");
  std::uint64_t iw_seed = 0;
  std::string iw_out;
  init->add_option("--seed", iw_seed);
  init->add_option("--out", iw_out, "Output prefix (.json/.bin)")->required();
  init->callback([&] {
    action = [&] { save_weights(iw_out + ".json", iw_out + ".bin", MicroCnn::random(iw_seed)); };
  });

  // gradcam
  auto* gc = app.add_subcommand("gradcam", "Class activation map for one image");
  std::string gc_weights, gc_image, gc_out, gc_score = "logit";
  int gc_class = 1;
  gc->add_option("--weights", gc_weights, "Weights prefix (.json/.bin)")->required();
  gc->add_option("--image", gc_image, "3-channel image prefix (.raw/.json)")->required();
  gc->add_option("--class", gc_class, "Target class (0 or 1)");
  gc->add_option("--score", gc_score, "logit or softmax");
  gc->add_option("--out", gc_out, "Output prefix")->required();
  gc->callback([&] {
    action = [&] {
      if (gc_score != "logit" && gc_score != "softmax")
        fail(ErrorCode::InvalidArgument, "--score must be logit or softmax");
      const MicroCnn net = load_weights(gc_weights + ".json", gc_weights + ".bin");
      const ProjectionImage img = read_image(gc_image);
      const ForwardCache cache = forward(net, img);
      const ClassGradients g =
          backward_to_features(net, cache, gc_class, gc_score == "logit" ? ScoreKind::Logit : ScoreKind::Softmax);
      const CamMap cam = gradcam(cache.features, g);

      ProjectionImage raw(cam.v, cam.u, 1);
      std::transform(cam.values.begin(), cam.values.end(), raw.samples.begin(),
                     [](double x) { return static_cast<float>(x); });
      write_projection_raw(gc_out + ".raw", gc_out + ".json", raw);
      write_png(gc_out + "_overlay.png", cam_overlay(cam, img.width, img.height));
      detail::write_json(gc_out + "_scores.json", {{"class_index", gc_class},
                                                   {"score", gc_score},
                                                   {"logits", cache.logits},
                                                   {"probabilities", cache.probabilities},
                                                   {"alpha", alpha_weights(g).alpha}});
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Metrics JSON: Dice against a reference mask");
  std::string rp_mask, rp_ref, rp_volume, rp_out;
  bool rp_timing = false;
  SegmentationFlags rp_flags;
  report->add_option("--mask", rp_mask, "Mask to score");
  report->add_option("--ref", rp_ref, "Reference mask")->required();
  report->add_option("--volume", rp_volume, "Segment this volume instead of reading --mask");
  report->add_option("--out", rp_out, "Metrics JSON")->required();
  report->add_flag("--with-timing", rp_timing, "Include segmentation wall time (not reproducible)");
  rp_flags.add_to(report);
  report->callback([&] {
    action = [&] {
      if (rp_mask.empty() == rp_volume.empty()) fail(ErrorCode::InvalidArgument, "give exactly one of --mask or --volume");
      const BinaryMask ref = read_mask(rp_ref);
      BinaryMask mask;
      json metrics{{"schema_version", kMetricsSchemaVersion}};
      if (!rp_volume.empty()) {
        const HuVolume v = read_volume(rp_volume);
        const auto t0 = std::chrono::steady_clock::now();
        const SegmentationResult r = segment_lungs(v, rp_flags.apply(config.segmentation));
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        mask = r.mask;
        metrics["segmentation_status"] = r.warning() ? "empty" : "ok";
        if (rp_timing) metrics["timing"] = {{"segment_seconds", seconds}};
      } else {
        mask = read_mask(rp_mask);
      }
      if (mask.dims() != ref.dims()) fail(ErrorCode::DimMismatch, "mask and reference dims differ");
      std::size_t both = 0;
      for (std::size_t i = 0; i < mask.dims().count(); ++i) both += mask[i] && ref[i];
      metrics["dice"] = dice(mask, ref);
      metrics["mask_voxels"] = mask.count();
      metrics["reference_voxels"] = ref.count();
      metrics["intersection_voxels"] = both;
      detail::write_json(rp_out, metrics);
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "E_USAGE: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    set_thread_count(threads);
    if (!config_path.empty()) config = load_pipeline_config(config_path);
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::Io ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "E_IO: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace ctproj
