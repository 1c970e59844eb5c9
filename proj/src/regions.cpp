#include "ctproj/regions.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace ctproj {

const std::array<RegionId, 6> kAllRegions{{
    {Side::Left, Band::Upper},
    {Side::Left, Band::Middle},
    {Side::Left, Band::Lower},
    {Side::Right, Band::Upper},
    {Side::Right, Band::Middle},
    {Side::Right, Band::Lower},
}};

std::string_view RegionId::code() const noexcept {
  static constexpr std::string_view codes[2][3] = {{"LU", "LM", "LL"}, {"RU", "RM", "RL"}};
  return codes[side == Side::Left ? 0 : 1][static_cast<int>(band)];
}

RegionId RegionId::parse(std::string_view code) {
  for (const RegionId& r : kAllRegions) {
    if (r.code() == code) return r;
  }
  fail(ErrorCode::Parse, "unknown region code '" + std::string(code) + "'");
}

std::map<RegionId, VoxelBox> partition_regions(const Dims& dims, std::string_view orientation) {
  if (!dims.positive() || dims.nx % 2 != 0 || dims.nz % 3 != 0)
    fail(ErrorCode::InvalidArgument, "partition_regions needs positive dims with nx even and nz divisible by 3");
  if (orientation.size() != 3 || (orientation[0] != 'L' && orientation[0] != 'R') ||
      (orientation[2] != 'S' && orientation[2] != 'I'))
    fail(ErrorCode::InvalidArgument, "unsupported orientation tag '" + std::string(orientation) + "'");

  const int hx = dims.nx / 2;
  const int tz = dims.nz / 3;
  // +x toward patient-left puts the left side in the high-x half.
  const Side low_x_side = orientation[0] == 'L' ? Side::Right : Side::Left;
  const Side high_x_side = low_x_side == Side::Left ? Side::Right : Side::Left;
  const bool superior_up = orientation[2] == 'S';
  const std::array<Band, 3> z_bands = superior_up ? std::array{Band::Lower, Band::Middle, Band::Upper}
                                                  : std::array{Band::Upper, Band::Middle, Band::Lower};

  std::map<RegionId, VoxelBox> boxes;
  for (int third = 0; third < 3; ++third) {
    const int z0 = third * tz, z1 = (third + 1) * tz;
    boxes[{low_x_side, z_bands[third]}] = {0, hx, 0, dims.ny, z0, z1};
    boxes[{high_x_side, z_bands[third]}] = {hx, dims.nx, 0, dims.ny, z0, z1};
  }
  return boxes;
}

namespace {

void check_box(const Dims& d, const VoxelBox& b) {
  if (b.x0 < 0 || b.y0 < 0 || b.z0 < 0 || b.x1 > d.nx || b.y1 > d.ny || b.z1 > d.nz || b.x0 >= b.x1 ||
      b.y0 >= b.y1 || b.z0 >= b.z1)
    fail(ErrorCode::InvalidArgument, "crop box outside the grid");
}

}  // namespace

HuVolume crop(const HuVolume& v, const VoxelBox& box) {
  check_box(v.dims(), box);
  const Dims out = box.dims();
  std::vector<std::int16_t> data;
  data.reserve(out.count());
  for (int z = box.z0; z < box.z1; ++z)
    for (int y = box.y0; y < box.y1; ++y)
      for (int x = box.x0; x < box.x1; ++x) data.push_back(static_cast<std::int16_t>(v.at(x, y, z)));
  return HuVolume(out, v.spacing(), std::move(data), v.orientation());
}

BinaryMask crop(const BinaryMask& m, const VoxelBox& box) {
  check_box(m.dims(), box);
  const Dims out = box.dims();
  std::vector<std::uint8_t> bits;
  bits.reserve(out.count());
  for (int z = box.z0; z < box.z1; ++z)
    for (int y = box.y0; y < box.y1; ++y)
      for (int x = box.x0; x < box.x1; ++x) bits.push_back(m.at(x, y, z) ? 1 : 0);
  return BinaryMask(out, std::move(bits));
}

Date parse_date(std::string_view s) {
  auto digits = [&](std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (s[i] < '0' || s[i] > '9') fail(ErrorCode::Parse, "malformed date '" + std::string(s) + "'");
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail(ErrorCode::Parse, "malformed date '" + std::string(s) + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{digits(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) fail(ErrorCode::Parse, "invalid calendar date '" + std::string(s) + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

bool parse_flag(const std::string& s, std::size_t line_no) {
  if (s == "0") return false;
  if (s == "1") return true;
  fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": flag must be 0 or 1, found '" + s + "'");
}

constexpr std::string_view kLabelsHeader =
    "patient_id,scan_id,acquisition_date,region,pre_existing,cavity,pleura_thickening,fungus_ball";
constexpr std::string_view kRosterHeader = "patient_id,death_date";

}  // namespace

std::vector<ScanRecord> read_labels_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kLabelsHeader) fail(ErrorCode::Parse, "labels CSV header mismatch");

  std::vector<ScanRecord> records;
  std::map<std::string, std::size_t> by_scan;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto f = split_fields(lines[n]);
    if (f.size() != 8) fail(ErrorCode::Parse, "line " + std::to_string(n + 1) + ": expected 8 fields");
    if (f[0].empty() || f[1].empty()) fail(ErrorCode::Parse, "line " + std::to_string(n + 1) + ": empty id");
    const Date date = parse_date(f[2]);
    const RegionId region = RegionId::parse(f[3]);
    const RegionLabels labels{parse_flag(f[4], n + 1), parse_flag(f[5], n + 1), parse_flag(f[6], n + 1),
                              parse_flag(f[7], n + 1)};
    auto [it, inserted] = by_scan.try_emplace(f[1], records.size());
    if (inserted) {
      records.push_back({f[0], f[1], date, {}, DiseaseState::Control, std::nullopt});
    }
    ScanRecord& rec = records[it->second];
    if (rec.patient_id != f[0] || rec.acquisition_date != date)
      fail(ErrorCode::DataIntegrity, "scan " + f[1] + " has inconsistent patient or date");
    if (!rec.labels.emplace(region, labels).second)
      fail(ErrorCode::DataIntegrity, "scan " + f[1] + " lists region " + f[3] + " twice");
  }
  for (auto& rec : records) {
    if (rec.labels.size() != kAllRegions.size())
      fail(ErrorCode::DataIntegrity, "scan " + rec.scan_id + " does not list all six regions");
    const bool sign = std::any_of(rec.labels.begin(), rec.labels.end(), [](const auto& kv) {
      return kv.second.cavity || kv.second.pleura_thickening || kv.second.fungus_ball;
    });
    rec.disease_state = sign ? DiseaseState::Cpa : DiseaseState::Control;
  }
  return records;
}

std::string write_labels_csv(const std::vector<ScanRecord>& records) {
  std::string out(kLabelsHeader);
  out += '\n';
  for (const auto& r : records) {
    for (const RegionId& id : kAllRegions) {
      const auto it = r.labels.find(id);
      if (it == r.labels.end()) fail(ErrorCode::DataIntegrity, "scan " + r.scan_id + " is missing a region");
      const RegionLabels& l = it->second;
      out += r.patient_id + ',' + r.scan_id + ',' + format_date(r.acquisition_date) + ',' + std::string(id.code()) +
             ',' + (l.pre_existing ? '1' : '0') + ',' + (l.cavity ? '1' : '0') + ',' +
             (l.pleura_thickening ? '1' : '0') + ',' + (l.fungus_ball ? '1' : '0') + '\n';
    }
  }
  return out;
}

DatasetSplit split_by_patient(const std::vector<ScanRecord>& records, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorCode::InvalidArgument, "test_fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::string>> scans_by_patient;
  std::set<std::string> seen_scans;
  for (const auto& r : records) {
    if (!seen_scans.insert(r.scan_id).second) fail(ErrorCode::DataIntegrity, "duplicate scan id " + r.scan_id);
    scans_by_patient[r.patient_id].push_back(r.scan_id);
  }
  if (scans_by_patient.size() < 2) fail(ErrorCode::InvalidArgument, "split_by_patient needs at least 2 patients");

  std::vector<const std::string*> patients;
  for (const auto& kv : scans_by_patient) patients.push_back(&kv.first);
  Xorshift64Star rng(seed);
  for (std::size_t i = patients.size() - 1; i > 0; --i) {
    const std::size_t j = rng.below(static_cast<std::uint32_t>(i + 1));
    std::swap(patients[i], patients[j]);
  }

  const double target = test_fraction * static_cast<double>(records.size());
  DatasetSplit split;
  std::size_t test_scans = 0;
  std::size_t assigned = 0;
  for (; assigned + 1 < patients.size(); ++assigned) {
    if (static_cast<double>(test_scans) >= target) break;
    const auto& scans = scans_by_patient[*patients[assigned]];
    split.test.insert(split.test.end(), scans.begin(), scans.end());
    test_scans += scans.size();
  }
  for (std::size_t i = assigned; i < patients.size(); ++i) {
    const auto& scans = scans_by_patient[*patients[i]];
    split.train.insert(split.train.end(), scans.begin(), scans.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<std::size_t> balance_indices(const std::vector<int>& labels, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) fail(ErrorCode::InvalidArgument, "balance needs both classes present");
  std::vector<std::size_t>& majority = pos.size() > neg.size() ? pos : neg;
  const std::vector<std::size_t>& minority = pos.size() > neg.size() ? neg : pos;

  Xorshift64Star rng(seed);
  const std::size_t keep = minority.size();
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(static_cast<std::uint32_t>(majority.size() - i));
    std::swap(majority[i], majority[j]);
  }
  std::vector<std::size_t> out(minority.begin(), minority.end());
  out.insert(out.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(out.begin(), out.end());
  return out;
}

SurvivalRoster read_roster_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kRosterHeader) fail(ErrorCode::Parse, "roster CSV header mismatch");
  SurvivalRoster roster;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto f = split_fields(lines[n]);
    if (f.size() != 2 || f[0].empty()) fail(ErrorCode::Parse, "roster line " + std::to_string(n + 1) + " malformed");
    std::optional<Date> death;
    if (!f[1].empty()) death = parse_date(f[1]);
    if (!roster.emplace(f[0], death).second) fail(ErrorCode::DataIntegrity, "patient " + f[0] + " listed twice");
  }
  return roster;
}

std::vector<ScanRecord> assign_survival_labels(const std::vector<ScanRecord>& records, const SurvivalRoster& roster,
                                               Date annotation_date) {
  std::vector<ScanRecord> out = records;
  for (auto& r : out) {
    r.survival_label.reset();
    const auto it = roster.find(r.patient_id);
    if (it == roster.end()) continue;
    if (const auto& death = it->second) {
      if (*death < r.acquisition_date)
        fail(ErrorCode::DataIntegrity, "patient " + r.patient_id + " died before scan " + r.scan_id);
      if ((*death - r.acquisition_date).count() <= kSurvivalHorizonDays) r.survival_label = SurvivalLabel::Positive;
    } else if ((annotation_date - r.acquisition_date).count() > kSurvivalHorizonDays) {
      r.survival_label = SurvivalLabel::Negative;
    }
  }
  return out;
}

}  // namespace ctproj
