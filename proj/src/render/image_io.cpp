#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>

#include "bricklab/render.hpp"

namespace bricklab {

namespace {

std::ofstream open_binary(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

void write_pgm16(const std::vector<int>& values, int width, int height, const std::string& path) {
  std::ofstream out = open_binary(path);
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  for (int v : values) {
    if (v < 0 || v > 65535) throw Error("value " + std::to_string(v) + " does not fit a 16-bit PGM");
    const char bytes[2] = {static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

}  // namespace

void write_ppm(const FrameBuffers& frame, const std::string& path) {
  std::ofstream out = open_binary(path);
  out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  for (const Rgb& px : frame.color) out.write(reinterpret_cast<const char*>(px.data()), 3);
}

void write_png_rgb(const std::vector<Rgb>& color, int width, int height, const std::string& path) {
  if (color.size() != static_cast<std::size_t>(width) * height) throw Error("image size mismatch for " + path);
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    auto* row = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(color[static_cast<std::size_t>(r) * width].data()));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const FrameBuffers& frame, const std::string& path) {
  write_png_rgb(frame.color, frame.width, frame.height, path);
}

void write_instance_pgm(const FrameBuffers& frame, const std::string& path) {
  write_pgm16(frame.instance, frame.width, frame.height, path);
}

void write_snap_pgm(const FrameBuffers& frame, const std::string& path) {
  std::vector<int> values(frame.snap.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SnapId& s = frame.snap[i];
    if (!s.empty()) values[i] = s.instance * 64 + s.snap + 1;
  }
  write_pgm16(values, frame.width, frame.height, path);
}

}  // namespace bricklab
