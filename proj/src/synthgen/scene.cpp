//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "despec/synthgen.hpp"

namespace despec {

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

nlohmann::json lights_json(const std::vector<DirectionalLight>& lights) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : lights) {
    arr.push_back({{"direction", vec_json(l.direction)}, {"radiance", vec_json(l.radiance)}});
  }
  return arr;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (;;) {
    Vec3 v{n01(rng), n01(rng), n01(rng)};
    if (v.norm() > 1e-9) return v.normalized();
  }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_color(std::mt19937_64& rng, double lo, double hi) {
  const double r = uniform(rng, lo, hi);
  const double g = uniform(rng, lo, hi);
  const double b = uniform(rng, lo, hi);
  return {r, g, b};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Environment procedural_environment(std::uint64_t seed, int count, const Vec3& axis) {
  if (count < 1) throw UserError("environment needs at least one light");
  std::mt19937_64 rng(seed);
  const Vec3 ax = axis.normalized();
  const Vec3 sky_tint = random_color(rng, 0.75, 1.25);
  Environment env;
  env.lights.reserve(count);
  for (int j = 0; j < count; ++j) {
    Vec3 dir = random_unit(rng);
    if (dir.dot(ax) < 0) dir = -dir;
    const double intensity = j == 0 ? uniform(rng, 1.5, 3.0) : uniform(rng, 0.1, 0.6);
    const Vec3 jitter = random_color(rng, 0.9, 1.1);
    const Vec3 radiance{sky_tint.x * jitter.x * intensity, sky_tint.y * jitter.y * intensity,
                        sky_tint.z * jitter.z * intensity};
    env.lights.push_back({dir, radiance});
  }
  env.descriptor = {{"mode", "procedural"}, {"seed", seed}, {"count", count}, {"lights", lights_json(env.lights)}};
  return env;
}

Environment environment_from_latlong(const Image& latlong, int count) {
  if (count < 1) throw UserError("environment needs at least one light");
  if (latlong.empty()) throw UserError("empty lat-long environment image");
  const int w = latlong.width();
  const int h = latlong.height();
  const int c = latlong.channels();
  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* p = latlong.pixel(y, x);
      lum[static_cast<std::size_t>(y) * w + x] =
          c == 3 ? 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2] : p[0];
    }
  }
  std::vector<std::size_t> order(lum.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min<std::size_t>(count, order.size());
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
    return lum[a] != lum[b] ? lum[a] > lum[b] : a < b;
  });

  Environment env;
  for (std::size_t i = 0; i < k; ++i) {
    const int y = static_cast<int>(order[i] / w);
    const int x = static_cast<int>(order[i] % w);
    const double theta = std::numbers::pi * (y + 0.5) / h;
    const double phi = 2.0 * std::numbers::pi * (x + 0.5) / w;
    const Vec3 dir{std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)};
    const double solid_angle = (2.0 * std::numbers::pi / w) * (std::numbers::pi / h) * std::sin(theta);
    const float* p = latlong.pixel(y, x);
    const Vec3 rgb = c == 3 ? Vec3{p[0], p[1], p[2]} : Vec3{p[0], p[0], p[0]};
    env.lights.push_back({dir.normalized(), rgb * solid_angle});
  }
  env.descriptor = {{"mode", "latlong"}, {"count", static_cast<int>(k)}, {"lights", lights_json(env.lights)}};
  return env;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ '" + path.string() + "'");
  TriangleMesh mesh;
  std::vector<Vec2> texcoords;
  bool any_uv = false;
  std::vector<std::array<int, 3>> uv_faces;
  std::string line;
  int line_no = 0;
  auto resolve = [&](int idx, std::size_t n) -> int {
    if (idx > 0) return idx - 1;
    if (idx < 0) return static_cast<int>(n) + idx;
    throw IoError("OBJ index 0 at line " + std::to_string(line_no) + " of '" + path.string() + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) throw IoError("bad vertex at line " + std::to_string(line_no));
      mesh.vertices.push_back(v);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.u >> t.v)) throw IoError("bad texcoord at line " + std::to_string(line_no));
      texcoords.push_back(t);
    } else if (tag == "f") {
      std::vector<int> vi, ti;
      std::string corner;
      while (ls >> corner) {
        const auto slash = corner.find('/');
        vi.push_back(resolve(std::stoi(corner.substr(0, slash)), mesh.vertices.size()));
        int t = -1;
        if (slash != std::string::npos) {
          const auto rest = corner.substr(slash + 1);
          const auto slash2 = rest.find('/');
          const auto tstr = rest.substr(0, slash2);
          if (!tstr.empty()) {
            t = resolve(std::stoi(tstr), texcoords.size());
            any_uv = true;
          }
        }
        ti.push_back(t);
      }
      if (vi.size() < 3) throw IoError("face with fewer than 3 vertices at line " + std::to_string(line_no));
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.faces.push_back({vi[0], vi[k], vi[k + 1]});
        uv_faces.push_back({ti[0], ti[k], ti[k + 1]});
      }
    }
  }
  if (mesh.faces.empty()) throw IoError("OBJ '" + path.string() + "' has no faces");
  for (const auto& f : mesh.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size())) {
        throw IoError("OBJ '" + path.string() + "' references a missing vertex");
      }
    }
  }
  if (any_uv) {
    for (const auto& f : uv_faces) {
      std::array<Vec2, 3> uv{};
      for (int k = 0; k < 3; ++k) {
        if (f[k] >= 0 && f[k] < static_cast<int>(texcoords.size())) uv[k] = texcoords[f[k]];
      }
      mesh.face_uvs.push_back(uv);
    }
  }
  return mesh;
}

TriangleMesh make_box_mesh(const Vec3& center, const Vec3& half, double yaw) {
  TriangleMesh mesh;
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{(i & 1) ? half.x : -half.x, (i & 2) ? half.y : -half.y, (i & 4) ? half.z : -half.z};
    mesh.vertices.push_back(center + Vec3{c * local.x + s * local.z, local.y, -s * local.x + c * local.z});
  }
  // quads as (v00, v10, v11, v01)
  const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  for (const auto& q : quads) {
    mesh.faces.push_back({q[0], q[1], q[2]});
    mesh.face_uvs.push_back({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}});
    mesh.faces.push_back({q[0], q[2], q[3]});
    mesh.face_uvs.push_back({Vec2{0, 0}, Vec2{1, 1}, Vec2{0, 1}});
  }
  return mesh;
}

Scene random_scene(const SynthConfig& cfg, std::uint64_t scene_seed,
                   const std::shared_ptr<const TriangleMesh>& mesh,
                   const std::shared_ptr<const Image>& texture) {
  std::mt19937_64 rng(scene_seed);
  Scene scene;

  const double dist = uniform(rng, 3.2, 4.2);
  const double elev = uniform(rng, 5.0, 35.0) * std::numbers::pi / 180.0;
  const double azim = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  scene.camera.eye = {dist * std::cos(elev) * std::cos(azim), dist * std::sin(elev),
                      dist * std::cos(elev) * std::sin(azim)};
  scene.camera.look_at = {uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1)};
  scene.camera.up = {0, 1, 0};
  scene.camera.vertical_fov_deg = uniform(rng, 35.0, 45.0);
  scene.camera.width = cfg.width;
  scene.camera.height = cfg.height;

  auto material = [&] {
    Material m;
    m.k_s = uniform(rng, cfg.ks_min, cfg.ks_max);
    m.phong_n = std::exp(uniform(rng, std::log(cfg.phong_min), std::log(cfg.phong_max)));
    return m;
  };
  auto albedo = [&](double checker_scale_lo, double checker_scale_hi) -> AlbedoSource {
    const double pick = uniform(rng, 0.0, 1.0);
    if (pick < 0.1 && texture) return TextureAlbedo{texture};
    if (pick < 0.55) {
      return CheckerAlbedo{std::floor(uniform(rng, checker_scale_lo, checker_scale_hi)),
                           random_color(rng, 0.15, 0.95), random_color(rng, 0.15, 0.95)};
    }
    return ConstantAlbedo{random_color(rng, 0.15, 0.95)};
  };

  double floor_y;
  const double shape = uniform(rng, 0.0, 1.0);
  if (shape < 0.5) {
    const double r = uniform(rng, 0.7, 1.0);
    scene.objects.push_back({Sphere{{0, 0, 0}, r}, albedo(4.0, 12.0), material()});
    floor_y = -r;
  } else if (shape < 0.75) {
    if (mesh) {
      scene.objects.push_back({*mesh, albedo(1.0, 4.0), material()});
      double lowest = 0.0;
      for (const auto& v : mesh->vertices) lowest = std::min(lowest, v.y);
      floor_y = lowest;
    } else {
      const Vec3 half{uniform(rng, 0.5, 0.8), uniform(rng, 0.5, 0.8), uniform(rng, 0.5, 0.8)};
      scene.objects.push_back({make_box_mesh({0, 0, 0}, half, uniform(rng, 0.0, std::numbers::pi)),
                               albedo(1.0, 4.0), material()});
      floor_y = -half.y;
    }
  } else {
    const double r1 = uniform(rng, 0.55, 0.75);
    const double r2 = uniform(rng, 0.3, 0.45);
    const double ang = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    scene.objects.push_back({Sphere{{0.35 * std::cos(ang), 0, 0.35 * std::sin(ang)}, r1}, albedo(4.0, 12.0), material()});
    scene.objects.push_back({Sphere{{-0.9 * std::cos(ang), r2 - r1, -0.9 * std::sin(ang)}, r2},
                             albedo(4.0, 12.0), material()});
    floor_y = -r1;
  }

  if (uniform(rng, 0.0, 1.0) < cfg.ground_plane_prob) {
    Material m;
    m.k_s = uniform(rng, 0.0, 0.3);
    m.phong_n = uniform(rng, 10.0, 50.0);
    scene.objects.push_back({Plane{{0, floor_y, 0}, {0, 1, 0}}, albedo(1.0, 3.0), m});
  }
  return scene;
}

Environment random_environment(const SynthConfig& cfg, std::uint64_t scene_seed, const Scene& scene,
                               const Image* latlong) {
  if (latlong) return environment_from_latlong(*latlong, cfg.lights);
  const Vec3 toward_eye = (scene.camera.eye - scene.camera.look_at).normalized();
  return procedural_environment(derive_seed(scene_seed, 0xE1u), cfg.lights, toward_eye + Vec3{0, 1, 0});
}

}  // namespace despec
