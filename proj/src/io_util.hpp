#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctproj/error.hpp"

namespace ctproj::detail {

static_assert(std::endian::native == std::endian::little, "raw formats assume a little-endian host");

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + p.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::Io, "read failed: " + p.string());
  return s;
}

inline void write_file(const std::filesystem::path& p, const void* data, std::size_t n) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) fail(ErrorCode::Io, "write failed: " + p.string());
}

inline void write_text(const std::filesystem::path& p, const std::string& s) { write_file(p, s.data(), s.size()); }

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::filesystem::path& p) {
  const std::string text = read_file(p);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, p.string() + ": " + e.what());
  }
}

template <typename T>
std::vector<T> decode_raw(const std::string& bytes, std::size_t expected, const std::filesystem::path& p) {
  if (bytes.size() != expected * sizeof(T))
    fail(ErrorCode::Parse, p.string() + ": expected " + std::to_string(expected * sizeof(T)) + " bytes, found " +
                               std::to_string(bytes.size()));
  std::vector<T> out(expected);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace ctproj::detail
