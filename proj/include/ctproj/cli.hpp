#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctproj/augmentation.hpp"
#include "ctproj/projection.hpp"
#include "ctproj/segmentation.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

inline constexpr int kMetricsSchemaVersion = 1;

/// Pipeline defaults; a JSON config file uses these field names.
struct PipelineConfig {
  Dims working_dims{512, 512, 432};
  int downsample = 2;  // 1 disables
  HuRangeSet hu_bands{};
  SegmentationParams segmentation{};
  double rotation_step_deg = kRotationStepDeg;
  int fill_hu = -1000;
  Augment2Spec augment2d{};
  double split_fraction = 0.25;
  std::uint64_t split_seed = 0;

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& p);

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// stderr as "E_CODE: message"; results go to files only.
int run_command(const std::vector<std::string>& args);

}  // namespace ctproj
