#pragma once

#include <filesystem>

#include "ctproj/mask.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

// On-disk container: a directory holding meta.json and data.raw.
//
//   meta.json  {"dims":[nx,ny,nz],"dtype":"i16le"|"u8","orientation":"LPS",
//               "spacing_mm":[sx,sy,sz],"unit":"HU"|"mask"}
//   data.raw   samples in x-fastest order; i16le for volumes, one byte (0/1) for masks.
//
// meta.json is written with sorted keys and two-space indentation so repeated
// writes are byte-identical.

void write_volume(const std::filesystem::path& dir, const HuVolume& v);
HuVolume read_volume(const std::filesystem::path& dir);

void write_mask(const std::filesystem::path& dir, const BinaryMask& m, const Spacing& spacing = {},
                std::string_view orientation = kDefaultOrientation);
BinaryMask read_mask(const std::filesystem::path& dir);

}  // namespace ctproj
