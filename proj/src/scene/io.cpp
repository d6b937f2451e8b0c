#include "sgnv/scene/io.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>
#include <png.h>

namespace sgnv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PngFile {
  FILE* f = nullptr;
  explicit PngFile(const fs::path& p, const char* mode) {
    f = std::fopen(p.string().c_str(), mode);
  }
  ~PngFile() {
    if (f) std::fclose(f);
  }
};

[[noreturn]] void fail(const std::string& code, const fs::path& p,
                       const std::string& what) {
  throw Error(code, p.string() + ": " + what);
}

}  // namespace

void write_png_rgb8(const fs::path& path, const Image& im) {
  if (im.channels != 3)
    throw Error("png_write", "write_png_rgb8 expects 3 channels");
  PngFile fp(path, "wb");
  if (!fp.f) fail("png_write", path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("png_write", path, "libpng failure");
  }
  png_init_io(png, fp.f);
  png_set_IHDR(png, info, png_uint_32(im.width), png_uint_32(im.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(size_t(im.width) * 3);
  for (int y = 0; y < im.height; ++y) {
    for (int x = 0; x < im.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(im.at(x, y, c), 0.0, 1.0);
        row[size_t(x) * 3 + size_t(c)] =
            png_byte(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png_rgb8(const fs::path& path) {
  PngFile fp(path, "rb");
  if (!fp.f) fail("png_read", path, "cannot open");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("png_read", path, "libpng failure");
  }
  png_init_io(png, fp.f);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  int w = int(png_get_image_width(png, info));
  int h = int(png_get_image_height(png, info));
  Image im(w, h, 3);
  std::vector<png_byte> row(size_t(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        im.at(x, y, c) = row[size_t(x) * 3 + size_t(c)] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return im;
}

void write_png_gray16(const fs::path& path, int width, int height,
                      const std::vector<uint16_t>& values) {
  if (int64_t(values.size()) != int64_t(width) * height)
    throw Error("png_write", "write_png_gray16: size mismatch");
  PngFile fp(path, "wb");
  if (!fp.f) fail("png_write", path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("png_write", path, "libpng failure");
  }
  png_init_io(png, fp.f);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(size_t(width) * 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      uint16_t v = values[size_t(y) * size_t(width) + size_t(x)];
      row[size_t(x) * 2] = png_byte(v >> 8);  // PNG is big-endian
      row[size_t(x) * 2 + 1] = png_byte(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<uint16_t> read_png_gray16(const fs::path& path, int& width,
                                      int& height) {
  PngFile fp(path, "rb");
  if (!fp.f) fail("png_read", path, "cannot open");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("png_read", path, "libpng failure");
  }
  png_init_io(png, fp.f);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("png_read", path, "expected 16-bit grayscale");
  }
  width = int(png_get_image_width(png, info));
  height = int(png_get_image_height(png, info));
  std::vector<uint16_t> out(size_t(width) * size_t(height));
  std::vector<png_byte> row(size_t(width) * 2);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      out[size_t(y) * size_t(width) + size_t(x)] =
          uint16_t((row[size_t(x) * 2] << 8) | row[size_t(x) * 2 + 1]);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

namespace {

std::string frame_name(int i, const char* kind) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.%s.png", i, kind);
  return buf;
}

}  // namespace

void save_scene(const std::vector<View>& views, const CameraIntrinsics& intr,
                const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw Error("scene_write", dir.string() + ": " + ec.message());

  json poses = json::array();
  for (size_t i = 0; i < views.size(); ++i) {
    const View& v = views[i];
    write_png_rgb8(dir / "frames" / frame_name(int(i), "color"), v.image);
    if (v.has_depth()) {
      std::vector<uint16_t> mm(v.depth.size());
      for (size_t k = 0; k < mm.size(); ++k) {
        double d = std::clamp(v.depth[k] * 1000.0, 0.0, 65535.0);
        mm[k] = uint16_t(std::lround(d));
      }
      write_png_gray16(dir / "frames" / frame_name(int(i), "depth"),
                       v.image.width, v.image.height, mm);
    }
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = v.pose.rotation;
    m.topRightCorner<3, 1>() = v.pose.translation;
    std::vector<double> flat(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) flat[size_t(r) * 4 + size_t(c)] = m(r, c);
    poses.push_back(flat);
  }
  std::ofstream(dir / "poses.json") << poses.dump(1) << "\n";
  json jintr = {{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx},
                {"cy", intr.cy}, {"width", intr.width},
                {"height", intr.height}};
  std::ofstream(dir / "intrinsics.json") << jintr.dump(1) << "\n";
}

LoadedScene load_scene(const fs::path& dir) {
  auto require = [&](const fs::path& p) {
    if (!fs::exists(p))
      throw Error("scene_missing_file", "missing " + p.string());
  };
  require(dir / "poses.json");
  require(dir / "intrinsics.json");

  LoadedScene scene;
  {
    std::ifstream is(dir / "intrinsics.json");
    json j = json::parse(is, nullptr, true, true);
    scene.intrinsics = {j.at("fx"), j.at("fy"), j.at("cx"), j.at("cy"),
                        j.at("width"), j.at("height")};
    scene.intrinsics.validate();
  }
  json poses;
  {
    std::ifstream is(dir / "poses.json");
    poses = json::parse(is);
  }
  for (size_t i = 0; i < poses.size(); ++i) {
    View v;
    auto color_path = dir / "frames" / frame_name(int(i), "color");
    require(color_path);
    v.image = read_png_rgb8(color_path);
    if (v.image.width != scene.intrinsics.width ||
        v.image.height != scene.intrinsics.height)
      throw Error("scene_dim_mismatch",
                  color_path.string() + ": image size disagrees with intrinsics");
    auto flat = poses[i].get<std::vector<double>>();
    if (flat.size() != 16)
      throw Error("scene_format", "poses.json entry is not a 4x4 matrix");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c)
        v.pose.rotation(r, c) = flat[size_t(r) * 4 + size_t(c)];
      v.pose.translation[r] = flat[size_t(r) * 4 + 3];
    }
    v.pose.validate(1e-5);
    auto depth_path = dir / "frames" / frame_name(int(i), "depth");
    if (fs::exists(depth_path)) {
      int dw = 0, dh = 0;
      auto mm = read_png_gray16(depth_path, dw, dh);
      if (dw != v.image.width || dh != v.image.height)
        throw Error("scene_dim_mismatch",
                    depth_path.string() + ": depth size disagrees with color");
      v.depth.resize(mm.size());
      for (size_t k = 0; k < mm.size(); ++k) v.depth[k] = mm[k] / 1000.0;
    }
    scene.views.push_back(std::move(v));
  }
  return scene;
}

}  // namespace sgnv
