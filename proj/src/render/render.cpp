#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "bricklab/render.hpp"

namespace bricklab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const Vec3d& a, const Vec3d& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double component(const Vec3d& v, int k) { return k == 0 ? v.x : (k == 1 ? v.y : v.z); }
Vec3d to_d(const Vec3i& v) { return {double(v.x), double(v.y), double(v.z)}; }

// Per-face brightness for x-, y- and z-facing surfaces.
constexpr double kShade[3] = {0.8, 0.62, 1.0};

struct Hit {
  double depth = kInf;
  int instance = 0;
};

// Nearest and nearest-other-instance hits per pixel; the second lets a snap
// ignore its own brick's geometry.
struct DepthPair {
  Hit first;
  Hit second;
  int face_axis = 2;

  void update(double d, int id, int axis) {
    if (id == first.instance) {
      if (d < first.depth) {
        first.depth = d;
        face_axis = axis;
      }
    } else if (d < first.depth) {
      second = first;
      first = {d, id};
      face_axis = axis;
    } else if (id == second.instance) {
      second.depth = std::min(second.depth, d);
    } else if (d < second.depth) {
      second = {d, id};
    }
  }

  double occluder_for(int owner) const { return first.instance != owner ? first.depth : second.depth; }
};

}  // namespace

Camera Camera::fixed(int resolution) {
  Camera c;
  c.width = resolution;
  c.height = resolution;
  c.ldu_per_pixel = 16.0 * kStudPitch / resolution;
  return c;
}

Camera sample_camera(const Camera& base, std::mt19937_64& rng) {
  Camera out = base;
  out.jitter.reset();
  if (!base.jitter) return out;
  const CameraJitter j = *base.jitter;
  auto offset = [&](double range) {
    if (range <= 0) return 0.0;
    return std::uniform_real_distribution<double>(-range, range)(rng);
  };
  out.azimuth += offset(j.rotation);
  out.elevation += offset(j.rotation);
  out.look_at.x += offset(j.translation);
  out.look_at.y += offset(j.translation);
  out.look_at.z += offset(j.translation);
  return out;
}

FrameBuffers::FrameBuffers(int w, int h)
    : width(w),
      height(h),
      color(static_cast<std::size_t>(w) * h, kBackground),
      depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity()),
      instance(static_cast<std::size_t>(w) * h, 0),
      snap(static_cast<std::size_t>(w) * h) {}

Projector::Projector(const Camera& camera) : camera_(camera) {
  const double ca = std::cos(camera.azimuth), sa = std::sin(camera.azimuth);
  const double ce = std::cos(camera.elevation), se = std::sin(camera.elevation);
  toward_camera = {ce * ca, ce * sa, se};
  right = {-sa, ca, 0};
  up = {-se * ca, -se * sa, ce};
}

Projection Projector::project(const Vec3d& p) const {
  const Vec3d d{p.x - camera_.look_at.x, p.y - camera_.look_at.y, p.z - camera_.look_at.z};
  const double s = camera_.ldu_per_pixel;
  return {dot(d, right) / s + camera_.width / 2.0, camera_.height / 2.0 - dot(d, up) / s, -dot(d, toward_camera)};
}

FrameBuffers render(const Catalog& catalog, const Assembly& assembly, const Camera& camera) {
  FrameBuffers fb(camera.width, camera.height);
  const Projector proj(camera);
  const double s = camera.ldu_per_pixel;
  const Vec3d& t = proj.toward_camera;
  std::vector<DepthPair> depth(fb.color.size());

  for (const auto& [id, brick] : assembly.bricks()) {
    for (const Box& box : world_boxes(catalog, brick)) {
      double cmin = kInf, cmax = -kInf, rmin = kInf, rmax = -kInf;
      for (int corner = 0; corner < 8; ++corner) {
        const Vec3d p{double(corner & 1 ? box.hi.x : box.lo.x), double(corner & 2 ? box.hi.y : box.lo.y),
                      double(corner & 4 ? box.hi.z : box.lo.z)};
        const Projection q = proj.project(p);
        cmin = std::min(cmin, q.col);
        cmax = std::max(cmax, q.col);
        rmin = std::min(rmin, q.row);
        rmax = std::max(rmax, q.row);
      }
      const int c0 = std::max(0, static_cast<int>(std::floor(cmin)));
      const int c1 = std::min(fb.width - 1, static_cast<int>(std::ceil(cmax)));
      const int r0 = std::max(0, static_cast<int>(std::floor(rmin)));
      const int r1 = std::min(fb.height - 1, static_cast<int>(std::ceil(rmax)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double u = (c + 0.5 - fb.width / 2.0) * s;
          const double v = (fb.height / 2.0 - (r + 0.5)) * s;
          const Vec3d o{camera.look_at.x + u * proj.right.x + v * proj.up.x,
                        camera.look_at.y + u * proj.right.y + v * proj.up.y,
                        camera.look_at.z + u * proj.right.z + v * proj.up.z};
          double d_in = -kInf, d_out = kInf;
          int axis = 2;
          bool miss = false;
          for (int k = 0; k < 3 && !miss; ++k) {
            const double ok = component(o, k);
            const double tk = component(t, k);
            const double lo = box.lo[k], hi = box.hi[k];
            if (std::abs(tk) < 1e-12) {
              miss = ok <= lo || ok >= hi;
              continue;
            }
            // Ray: X(depth) = o - depth * t.
            const double a = (ok - lo) / tk, b = (ok - hi) / tk;
            const double enter = std::min(a, b), leave = std::max(a, b);
            if (enter > d_in) {
              d_in = enter;
              axis = k;
            }
            d_out = std::min(d_out, leave);
          }
          if (miss || !(d_in < d_out)) continue;
          depth[fb.index(r, c)].update(d_in, id, axis);
        }
      }
    }
  }

  for (std::size_t i = 0; i < depth.size(); ++i) {
    const DepthPair& dp = depth[i];
    if (dp.first.instance == 0) continue;
    fb.depth[i] = static_cast<float>(dp.first.depth);
    fb.instance[i] = dp.first.instance;
    const Rgb base = catalog.color(assembly.find(dp.first.instance)->color).rgb;
    for (int ch = 0; ch < 3; ++ch) {
      fb.color[i][ch] = static_cast<std::uint8_t>(std::lround(base[ch] * kShade[dp.face_axis]));
    }
  }

  std::set<std::pair<int, int>> mated;
  for (const Edge& e : derive_edges(catalog, assembly)) {
    mated.insert({e.instance_a, e.snap_a});
    mated.insert({e.instance_b, e.snap_b});
  }
  std::vector<double> snap_depth(fb.snap.size(), kInf);
  for (const auto& [id, brick] : assembly.bricks()) {
    for (const SnapSpec& spec : catalog.shape(brick.shape).snaps) {
      if (mated.count({id, spec.index})) continue;
      const Projection q = proj.project(to_d(brick.pose.apply_point(spec.position)));
      const int rc = static_cast<int>(std::floor(q.row));
      const int cc = static_cast<int>(std::floor(q.col));
      const int reach = static_cast<int>(std::ceil(kSnapRadiusPx)) + 1;
      for (int r = rc - reach; r <= rc + reach; ++r) {
        for (int c = cc - reach; c <= cc + reach; ++c) {
          if (r < 0 || c < 0 || r >= fb.height || c >= fb.width) continue;
          const double dr = r + 0.5 - q.row, dc = c + 0.5 - q.col;
          if (dr * dr + dc * dc > kSnapRadiusPx * kSnapRadiusPx && !(r == rc && c == cc)) continue;
          const std::size_t i = fb.index(r, c);
          if (fb.instance[i] == 0) continue;
          if (q.depth - kSnapDepthBias > depth[i].occluder_for(id)) continue;
          const SnapId sid{id, spec.index};
          if (q.depth < snap_depth[i] || (q.depth == snap_depth[i] && sid < fb.snap[i])) {
            snap_depth[i] = q.depth;
            fb.snap[i] = sid;
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < fb.snap.size(); ++i) {
    const SnapId& sid = fb.snap[i];
    if (sid.empty()) continue;
    const BrickInstance& b = *assembly.find(sid.instance);
    const Gender g = catalog.shape(b.shape).snaps[static_cast<std::size_t>(sid.snap)].gender;
    fb.color[i] = g == Gender::stud ? stud_shade(fb.color[i]) : socket_shade(fb.color[i]);
  }
  return fb;
}

namespace {

Rgb toward_contrast(const Rgb& face, double dark, double light) {
  const double lum = 0.299 * face[0] + 0.587 * face[1] + 0.114 * face[2];
  Rgb out;
  for (int ch = 0; ch < 3; ++ch) {
    out[ch] = lum > 110 ? static_cast<std::uint8_t>(std::lround(face[ch] * dark))
                        : static_cast<std::uint8_t>(std::lround(face[ch] + (255 - face[ch]) * light));
  }
  return out;
}

}  // namespace

Rgb stud_shade(const Rgb& face) { return toward_contrast(face, 0.55, 0.5); }
Rgb socket_shade(const Rgb& face) { return toward_contrast(face, 0.3, 0.8); }

std::vector<SnapId> visible_snaps(const FrameBuffers& frame) {
  std::set<SnapId> ids;
  for (const SnapId& s : frame.snap) {
    if (!s.empty()) ids.insert(s);
  }
  return {ids.begin(), ids.end()};
}

std::vector<std::pair<SnapId, int>> snap_pixel_counts(const FrameBuffers& frame) {
  std::map<SnapId, int> counts;
  for (const SnapId& s : frame.snap) {
    if (!s.empty()) ++counts[s];
  }
  return {counts.begin(), counts.end()};
}

std::vector<Pixel> snap_pixels(const FrameBuffers& frame, const SnapId& id) {
  std::vector<Pixel> out;
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) {
      if (frame.snap[frame.index(r, c)] == id) out.push_back({r, c});
    }
  }
  return out;
}

}  // namespace bricklab
