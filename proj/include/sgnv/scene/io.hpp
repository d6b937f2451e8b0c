#pragma once

#include <filesystem>

#include "sgnv/scene/types.hpp"

namespace sgnv {

// On-disk scene layout:
//   <dir>/frames/%04d.color.png   8-bit RGB
//   <dir>/frames/%04d.depth.png   16-bit grayscale, millimeters (0 = invalid)
//   <dir>/poses.json              per-frame 4x4 camera-to-world, row-major
//   <dir>/intrinsics.json         fx, fy, cx, cy, width, height

void write_png_rgb8(const std::filesystem::path& path, const Image& im);
Image read_png_rgb8(const std::filesystem::path& path);
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<uint16_t>& values);
std::vector<uint16_t> read_png_gray16(const std::filesystem::path& path,
                                      int& width, int& height);

void save_scene(const std::vector<View>& views, const CameraIntrinsics& intr,
                const std::filesystem::path& dir);

struct LoadedScene {
  std::vector<View> views;
  CameraIntrinsics intrinsics;
};

LoadedScene load_scene(const std::filesystem::path& dir);

}  // namespace sgnv
