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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "despec/dichromatic.hpp"
#include "despec/image.hpp"

namespace despec {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? *this * (1.0 / n) : *this;
  }
};

struct Vec2 {
  double u = 0, v = 0;
};

// ---------------------------------------------------------------------------
// Scene description

struct Sphere {
  Vec3 center;
  double radius = 1.0;
};

struct Plane {
  Vec3 point;
  Vec3 normal{0, 1, 0};
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  // Per-face corner UVs; may be empty, in which case UVs are zero.
  std::vector<std::array<Vec2, 3>> face_uvs;
};

using Geometry = std::variant<Sphere, Plane, TriangleMesh>;

struct ConstantAlbedo {
  Vec3 rgb{0.5, 0.5, 0.5};
};

struct CheckerAlbedo {
  double scale = 8.0;
  Vec3 color_a{0.9, 0.9, 0.9};
  Vec3 color_b{0.1, 0.1, 0.1};
};

struct TextureAlbedo {
  std::shared_ptr<const Image> texture;
};

using AlbedoSource = std::variant<ConstantAlbedo, CheckerAlbedo, TextureAlbedo>;

struct Material {
  double k_s = 0.5;      // specular weight, >= 0
  double phong_n = 32;   // lobe exponent, >= 1
};

struct SceneObject {
  Geometry geometry;
  AlbedoSource albedo;
  Material material;
};

struct Camera {
  Vec3 eye{0, 0, 4};
  Vec3 look_at{0, 0, 0};
  Vec3 up{0, 1, 0};
  double vertical_fov_deg = 40.0;
  int width = 128;
  int height = 128;
};

struct Scene {
  std::vector<SceneObject> objects;
  Camera camera;
};

struct DirectionalLight {
  Vec3 direction;  // unit vector pointing from the surface towards the light
  Vec3 radiance;
};

struct Environment {
  std::vector<DirectionalLight> lights;
  nlohmann::json descriptor;  // how the lights were produced
};

// K directional lights with seeded directions (biased to the hemisphere around
// `axis`) and tinted radiance.
Environment procedural_environment(std::uint64_t seed, int count, const Vec3& axis);

// The K brightest texels of a lat-long map, weighted by texel solid angle.
Environment environment_from_latlong(const Image& latlong, int count);

// Wavefront OBJ subset: v, vt, f (polygons fan-triangulated).
TriangleMesh load_obj(const std::filesystem::path& path);
TriangleMesh make_box_mesh(const Vec3& center, const Vec3& half_extent, double yaw);

void validate(const Scene& scene);
void validate(const Environment& env);

// Direct-lighting ray cast with the normalized modified-Phong lobe. No
// shadows or interreflection. Background pixels get A = S = R = 0.
IntrinsicSet render_intrinsics(const Scene& scene, const Environment& env);

struct RenderOutput {
  IntrinsicSet intrinsics;
  Mask coverage;  // pixels whose primary ray hit an object
};
RenderOutput render(const Scene& scene, const Environment& env);

// clamp01((exposure x)^(1/gamma)).
Image hdr_to_ldr(const Image& hdr, double exposure, double gamma = 2.2);

// target / percentile(samples of `diffuse` inside `coverage`). Returns 1 when
// the percentile is not positive.
double exposure_for(const Image& diffuse, const Mask& coverage, double percentile = 0.95,
                    double target = 0.9);

enum class Split { Train, Test };
const char* split_name(Split s);
Split parse_split(const std::string& s);

/// The six-image group of one rendered view, all LDR.
struct ImageGroup {
  std::string id;
  Split split = Split::Train;
  Image input;
  Image albedo;
  Image shading;
  Image residue;
  Image specular_free;
  std::optional<Image> tone_corrected;
};

struct RenderedGroup {
  ImageGroup ldr;
  IntrinsicSet hdr;
  Image input_hdr;
  Image diffuse_hdr;
  double exposure = 1.0;
  double ldr_violation = 0.0;  // mean |A_ldr * S_ldr - D_ldr|
};

struct ToneMapOptions {
  double gamma = 2.2;
  double percentile = 0.95;
  double target = 0.9;
};

RenderedGroup generate_group(const Scene& scene, const Environment& env, std::uint64_t seed,
                             const ToneMapOptions& tone = {});

nlohmann::json describe(const Scene& scene);

// ---------------------------------------------------------------------------
// Dataset

struct SynthConfig {
  int groups = 230;
  int width = 128;
  int height = 128;
  double split_fraction = 13.0 / 15.0;
  std::uint64_t seed = 1;
  int lights = 8;
  double ground_plane_prob = 0.6;
  double ks_min = 0.2, ks_max = 1.0;
  double phong_min = 8.0, phong_max = 150.0;
  ToneMapOptions tone;
  std::string envmap_path;   // optional lat-long PFM/PNG
  std::string mesh_path;     // optional OBJ
  std::string texture_path;  // optional albedo texture
};

struct ManifestRecord {
  std::string id;
  Split split = Split::Train;
  std::uint64_t seed = 0;
  double exposure = 1.0;
  double ldr_violation = 0.0;
  nlohmann::json scene;
  nlohmann::json environment;
  nlohmann::json tone;  // null until the tone-correction pass has run

  bool has_tone_corrected() const { return tone.is_object() && !tone.contains("error"); }
  std::filesystem::path relative_path(const std::string& image) const;
};

struct Manifest {
  nlohmann::json config;
  std::vector<ManifestRecord> records;
  std::filesystem::path root;  // directory containing manifest.json

  std::filesystem::path image_path(const ManifestRecord& rec, const std::string& image) const {
    return root / rec.relative_path(image);
  }
};

inline constexpr std::array<const char*, 6> kGroupImages = {"input",   "albedo",  "shading",
                                                            "residue", "diffuse", "diffuse_tc"};

nlohmann::json to_json(const SynthConfig& cfg);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

// Deterministic scene draw for group `index` of a dataset.
Scene random_scene(const SynthConfig& cfg, std::uint64_t scene_seed,
                   const std::shared_ptr<const TriangleMesh>& mesh = nullptr,
                   const std::shared_ptr<const Image>& texture = nullptr);
Environment random_environment(const SynthConfig& cfg, std::uint64_t scene_seed, const Scene& scene,
                               const Image* latlong = nullptr);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Number of train scenes for a given count and fraction.
int train_count(int groups, double split_fraction);

Manifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace despec
