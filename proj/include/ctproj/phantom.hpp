#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctproj/mask.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

inline constexpr int kAirHu = -1000;
inline constexpr int kParenchymaHu = -850;
inline constexpr int kBodyHu = 40;
inline constexpr int kCavityHu = -1000;
inline constexpr int kFungusBallHu = 30;
inline constexpr int kPleuraHu = 40;

using Vec3 = std::array<double, 3>;

struct Ellipsoid {
  Vec3 center{};
  Vec3 semi_axes{};

  bool contains(double x, double y, double z) const noexcept;
};

/// Soft-tissue body: elliptic cylinder spanning every axial slice.
struct BodySpec {
  std::array<double, 2> center{};
  std::array<double, 2> semi_axes{};

  bool contains(double x, double y) const noexcept;
};

enum class LesionKind { Cavity, FungusBall, PleuraThickening };

std::string lesion_kind_name(LesionKind k);
LesionKind parse_lesion_kind(const std::string& s);

/// Spheres use center + radius. Pleural thickening uses direction (from the
/// lung centre to the anchor point on the lung surface), patch_radius and
/// thickness_voxels: lung voxels within patch_radius of the anchor and outside
/// the lung shrunk by thickness_voxels along every semi-axis.
struct Lesion {
  LesionKind kind = LesionKind::Cavity;
  int lung = 0;
  Vec3 center{};
  double radius = 0.0;
  Vec3 direction{};
  double patch_radius = 0.0;
  double thickness_voxels = 0.0;
};

struct PhantomSpec {
  Dims dims{128, 128, 128};
  Spacing spacing{};
  std::uint64_t rng_seed = 0;
  bool noise = true;
  int noise_hu = 30;
  std::array<Ellipsoid, 2> lungs{};
  BodySpec body{};
  std::vector<Lesion> lesions;
};

/// Two-lung layout for a 128^3 grid, sized so the default 10/35 marker rings
/// sit in soft tissue on every side of each lung.
PhantomSpec default_phantom_spec(std::uint64_t seed = 0);

struct LesionRecord {
  LesionKind kind;
  int lung;
  std::size_t voxel_count;
};

struct Phantom {
  HuVolume volume;
  BinaryMask ground_truth;
  /// Voxels per lesion kind (union over lesions of that kind).
  BinaryMask fungus_ball_voxels;
  BinaryMask pleura_voxels;
  BinaryMask cavity_voxels;
  std::vector<LesionRecord> lesions;
};

/// Throws Error(InvalidSpec) when geometry is inconsistent (lungs outside the
/// body, overlapping lungs, lesions outside their lung, a fungus ball not
/// strictly inside a cavity, pleura overlapping a cavity).
void validate(const PhantomSpec& spec);

/// Deterministic: noise is drawn once per parenchyma voxel in linear order
/// from Xorshift64Star(rng_seed) as uniform_int(-noise_hu, noise_hu).
Phantom generate_phantom(const PhantomSpec& spec);

void to_json(nlohmann::json& j, const PhantomSpec& spec);
void from_json(const nlohmann::json& j, PhantomSpec& spec);
nlohmann::json lesion_inventory_json(const Phantom& p);

}  // namespace ctproj
