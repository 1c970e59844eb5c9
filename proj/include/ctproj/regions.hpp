#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctproj/error.hpp"
#include "ctproj/mask.hpp"
#include "ctproj/rng.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

enum class Side { Left, Right };
enum class Band { Upper, Middle, Lower };

struct RegionId {
  Side side;
  Band band;

  std::string_view code() const noexcept;
  static RegionId parse(std::string_view code);

  friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

/// LU, LM, LL, RU, RM, RL.
extern const std::array<RegionId, 6> kAllRegions;

/// Half-open voxel box.
struct VoxelBox {
  int x0, x1, y0, y1, z0, z1;

  Dims dims() const noexcept { return {x1 - x0, y1 - y0, z1 - z0}; }
  bool contains(int x, int y, int z) const noexcept {
    return x >= x0 && x < x1 && y >= y0 && y < y1 && z >= z0 && z < z1;
  }
  friend bool operator==(const VoxelBox&, const VoxelBox&) = default;
};

/// Halves along x, thirds along z, full y. Side naming follows the orientation
/// tag (first letter is the patient side +x points to); band naming follows the
/// third letter (S: low z is inferior, I: low z is superior).
std::map<RegionId, VoxelBox> partition_regions(const Dims& dims, std::string_view orientation = kDefaultOrientation);

HuVolume crop(const HuVolume& v, const VoxelBox& box);
BinaryMask crop(const BinaryMask& m, const VoxelBox& box);

struct RegionLabels {
  bool pre_existing = false;
  bool cavity = false;
  bool pleura_thickening = false;
  bool fungus_ball = false;

  friend bool operator==(const RegionLabels&, const RegionLabels&) = default;
};

enum class DiseaseState { Control, Cpa };
enum class SurvivalLabel { Positive, Negative };

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD.
Date parse_date(std::string_view s);
std::string format_date(Date d);

struct ScanRecord {
  std::string patient_id;
  std::string scan_id;
  Date acquisition_date{};
  std::map<RegionId, RegionLabels> labels;
  DiseaseState disease_state = DiseaseState::Control;
  std::optional<SurvivalLabel> survival_label;
};

/// Parses the per-(scan, region) labels CSV. Every scan must list all six
/// regions exactly once with a consistent patient and date. disease_state is
/// Cpa when any region carries a cavity, pleura or fungus-ball flag.
std::vector<ScanRecord> read_labels_csv(std::string_view text);
std::string write_labels_csv(const std::vector<ScanRecord>& records);

struct DatasetSplit {
  std::vector<std::string> train;  // sorted scan ids
  std::vector<std::string> test;
};

/// Patients (sorted by id) are shuffled with a Fisher-Yates pass drawing
/// below(i + 1) from Xorshift64Star(seed), then assigned to test while the test
/// scan count is below test_fraction * total. At least one patient stays in train.
DatasetSplit split_by_patient(const std::vector<ScanRecord>& records, double test_fraction, std::uint64_t seed);

/// Indices kept after downsampling the majority class to the minority count
/// (seeded partial Fisher-Yates over the majority's indices), ascending.
std::vector<std::size_t> balance_indices(const std::vector<int>& labels, std::uint64_t seed);

template <typename T, typename LabelFn>
std::vector<T> balance(const std::vector<T>& records, LabelFn label_fn, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(label_fn(r) ? 1 : 0);
  std::vector<T> out;
  for (std::size_t i : balance_indices(labels, seed)) out.push_back(records[i]);
  return out;
}

inline constexpr int kSurvivalHorizonDays = 730;

/// Survival roster: patient -> optional death date (nullopt = survivor).
using SurvivalRoster = std::map<std::string, std::optional<Date>>;

SurvivalRoster read_roster_csv(std::string_view text);

/// Deceased: scans within 730 days before death are Positive, others unlabeled.
/// Survivors: scans more than 730 days before annotation_date are Negative,
/// others unlabeled. Patients missing from the roster stay unlabeled.
std::vector<ScanRecord> assign_survival_labels(const std::vector<ScanRecord>& records, const SurvivalRoster& roster,
                                               Date annotation_date);

}  // namespace ctproj
