#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bricklab/core.hpp"

namespace bricklab {

struct Vec3d {
  double x = 0;
  double y = 0;
  double z = 0;
  bool operator==(const Vec3d&) const = default;
};

struct CameraJitter {
  double rotation = 0.1;      // radians, uniform +-
  double translation = 10.0;  // LDU per axis, uniform +-
  bool operator==(const CameraJitter&) const = default;
};

/// Orthographic camera looking at `look_at` from azimuth/elevation.
struct Camera {
  double azimuth = 0.785398163397448;    // 45 degrees
  double elevation = 0.523598775598299;  // 30 degrees
  double ldu_per_pixel = 2.5;
  Vec3d look_at{0, 0, 40};
  int width = 128;
  int height = 128;
  std::optional<CameraJitter> jitter;

  /// Fixed framing: a 16-stud wide region fills the frame at any resolution.
  static Camera fixed(int resolution = 128);
  bool operator==(const Camera&) const = default;
};

/// Returns a concrete per-frame camera; jitter is consumed (cleared).
Camera sample_camera(const Camera& base, std::mt19937_64& rng);

using Rgb = std::array<std::uint8_t, 3>;
inline constexpr Rgb kBackground{40, 44, 52};
inline constexpr double kSnapDepthBias = 4.0;
inline constexpr double kSnapRadiusPx = 1.0;

struct SnapId {
  int instance = 0;  // 0 = empty
  int snap = -1;
  bool empty() const { return instance == 0; }
  auto operator<=>(const SnapId&) const = default;
  bool operator==(const SnapId&) const = default;
};

struct Pixel {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pixel&) const = default;
  bool operator==(const Pixel&) const = default;
};

struct FrameBuffers {
  int width = 0;
  int height = 0;
  std::vector<Rgb> color;
  std::vector<float> depth;  // +inf on background
  std::vector<int> instance;
  std::vector<SnapId> snap;

  FrameBuffers() = default;
  FrameBuffers(int w, int h);
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
  bool in_bounds(const Pixel& p) const { return p.row >= 0 && p.col >= 0 && p.row < height && p.col < width; }
  SnapId snap_at(const Pixel& p) const { return in_bounds(p) ? snap[index(p.row, p.col)] : SnapId{}; }
  int instance_at(const Pixel& p) const { return in_bounds(p) ? instance[index(p.row, p.col)] : 0; }
};

/// Screen-space projection of a world point.
struct Projection {
  double col = 0;  // continuous pixel coordinates; pixel centres at k + 0.5
  double row = 0;
  double depth = 0;  // grows away from the camera
};

class Projector {
 public:
  explicit Projector(const Camera& camera);
  Projection project(const Vec3d& p) const;
  const Camera& camera() const { return camera_; }

  // Viewing frame; `toward_camera` points from the scene to the eye.
  Vec3d right, up, toward_camera;

 private:
  Camera camera_;
};

/// Visible snap pixels are drawn as marks: studs and anti-studs in two different
/// darker or lighter tones of the face they sit on.
FrameBuffers render(const Catalog& catalog, const Assembly& assembly, const Camera& camera);
Rgb stud_shade(const Rgb& face);
Rgb socket_shade(const Rgb& face);

/// Every snap id with at least one pixel in the snap buffer, sorted.
std::vector<SnapId> visible_snaps(const FrameBuffers& frame);
/// All pixels showing the given snap, row-major.
std::vector<Pixel> snap_pixels(const FrameBuffers& frame, const SnapId& id);
/// Visible-snap pixel counts per instance.
std::vector<std::pair<SnapId, int>> snap_pixel_counts(const FrameBuffers& frame);

void write_ppm(const FrameBuffers& frame, const std::string& path);
void write_png(const FrameBuffers& frame, const std::string& path);
void write_png_rgb(const std::vector<Rgb>& color, int width, int height, const std::string& path);
/// 16-bit PGM of the instance buffer.
void write_instance_pgm(const FrameBuffers& frame, const std::string& path);
/// 16-bit PGM of the snap buffer: value = instance * 64 + snap + 1, 0 = empty.
void write_snap_pgm(const FrameBuffers& frame, const std::string& path);

}  // namespace bricklab
