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
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "despec/image_io.hpp"
#include "despec/synthgen.hpp"

namespace despec {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path ManifestRecord::relative_path(const std::string& image) const {
  return fs::path(split_name(split)) / id / (image + ".png");
}

json to_json(const SynthConfig& cfg) {
  return {{"groups", cfg.groups},
          {"width", cfg.width},
          {"height", cfg.height},
          {"split_fraction", cfg.split_fraction},
          {"seed", cfg.seed},
          {"lights", cfg.lights},
          {"ground_plane_prob", cfg.ground_plane_prob},
          {"ks_min", cfg.ks_min},
          {"ks_max", cfg.ks_max},
          {"phong_min", cfg.phong_min},
          {"phong_max", cfg.phong_max},
          {"gamma", cfg.tone.gamma},
          {"exposure_percentile", cfg.tone.percentile},
          {"exposure_target", cfg.tone.target},
          {"envmap_path", cfg.envmap_path},
          {"mesh_path", cfg.mesh_path},
          {"texture_path", cfg.texture_path}};
}

namespace {

json record_json(const ManifestRecord& r) {
  json paths = json::object();
  for (const char* name : kGroupImages) {
    if (std::string(name) == "diffuse_tc" && !r.has_tone_corrected()) continue;
    paths[name] = r.relative_path(name).generic_string();
  }
  return {{"id", r.id},
          {"split", split_name(r.split)},
          {"seed", r.seed},
          {"exposure", r.exposure},
          {"ldr_violation", r.ldr_violation},
          {"paths", paths},
          {"scene", r.scene},
          {"environment", r.environment},
          {"tone", r.tone}};
}

ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  r.split = parse_split(j.at("split").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.exposure = j.at("exposure").get<double>();
  r.ldr_violation = j.at("ldr_violation").get<double>();
  r.scene = j.value("scene", json());
  r.environment = j.value("environment", json());
  r.tone = j.value("tone", json());
  return r;
}

void normalize_mesh(TriangleMesh& mesh) {
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  const Vec3 center = (lo + hi) * 0.5;
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, (v - center).norm());
  const double s = radius > 0 ? 0.9 / radius : 1.0;
  for (auto& v : mesh.vertices) v = (v - center) * s;
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  Manifest m;
  m.root = path.parent_path();
  try {
    m.config = j.at("config");
    for (const auto& r : j.at("records")) m.records.push_back(record_from_json(r));
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

void save_manifest(const Manifest& m, const fs::path& path) {
  json records = json::array();
  for (const auto& r : m.records) records.push_back(record_json(r));
  json j = {{"version", 1}, {"config", m.config}, {"records", records}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << j.dump(1) << "\n";
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

int train_count(int groups, double split_fraction) {
  const int n = static_cast<int>(std::lround(split_fraction * groups));
  return std::clamp(n, 0, groups);
}

Manifest generate_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  if (cfg.groups < 1) throw ConfigError("synth.groups must be >= 1");
  if (cfg.width < 8 || cfg.height < 8) throw ConfigError("synth image size must be at least 8x8");
  if (cfg.split_fraction < 0.0 || cfg.split_fraction > 1.0) {
    throw ConfigError("synth.split_fraction must lie in [0,1]");
  }
  if (cfg.lights < 1) throw ConfigError("synth.lights must be >= 1");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  {
    const fs::path probe = out_dir / ".write_probe";
    std::ofstream p(probe);
    if (!p) throw IoError("output directory '" + out_dir.string() + "' is not writable");
    p.close();
    fs::remove(probe, ec);
  }

  std::shared_ptr<const TriangleMesh> mesh;
  if (!cfg.mesh_path.empty()) {
    TriangleMesh m = load_obj(cfg.mesh_path);
    normalize_mesh(m);
    mesh = std::make_shared<const TriangleMesh>(std::move(m));
  }
  std::shared_ptr<const Image> texture;
  if (!cfg.texture_path.empty()) texture = std::make_shared<const Image>(load_image(cfg.texture_path));
  std::optional<Image> latlong;
  if (!cfg.envmap_path.empty()) latlong = load_image(cfg.envmap_path);

  // Split per scene from a seeded permutation.
  std::vector<int> order(cfg.groups);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(derive_seed(cfg.seed, 0x5B117ULL));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<Split> splits(cfg.groups, Split::Test);
  const int n_train = train_count(cfg.groups, cfg.split_fraction);
  for (int i = 0; i < n_train; ++i) splits[order[i]] = Split::Train;

  Manifest manifest;
  manifest.root = out_dir;
  manifest.config = to_json(cfg);
  manifest.records.resize(cfg.groups);
  std::vector<std::exception_ptr> errors(cfg.groups);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.groups; ++i) {
    try {
      const std::uint64_t scene_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
      const Scene scene = random_scene(cfg, scene_seed, mesh, texture);
      const Environment env = random_environment(cfg, scene_seed, scene, latlong ? &*latlong : nullptr);
      RenderedGroup g = generate_group(scene, env, scene_seed, cfg.tone);

      char id[32];
      std::snprintf(id, sizeof(id), "g%05d", i);
      ManifestRecord& rec = manifest.records[i];
      rec.id = id;
      rec.split = splits[i];
      rec.seed = scene_seed;
      rec.exposure = g.exposure;
      rec.ldr_violation = g.ldr_violation;
      rec.scene = describe(scene);
      rec.environment = env.descriptor;

      const fs::path dir = out_dir / split_name(rec.split) / rec.id;
      fs::create_directories(dir);
      save_png(g.ldr.input, dir / "input.png");
      save_png(g.ldr.albedo, dir / "albedo.png");
      save_png(g.ldr.shading, dir / "shading.png");
      save_png(g.ldr.residue, dir / "residue.png");
      save_png(g.ldr.specular_free, dir / "diffuse.png");
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace despec
