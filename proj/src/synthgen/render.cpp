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
#include <limits>
#include <numbers>
#include <string>

#include "despec/synthgen.hpp"

namespace despec {

namespace {

constexpr double kEps = 1e-9;

struct Ray {
  Vec3 origin;
  Vec3 dir;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 point;
  Vec3 normal;
  Vec2 uv;
  int object = -1;
};

void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
  const Vec3 helper = std::abs(n.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  t = helper.cross(n).normalized();
  b = n.cross(t);
}

bool intersect(const Sphere& s, const Ray& ray, Hit& hit) {
  const Vec3 oc = ray.origin - s.center;
  const double b = oc.dot(ray.dir);
  const double c = oc.dot(oc) - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t <= kEps) t = -b + sq;
  if (t <= kEps || t >= hit.t) return false;
  hit.t = t;
  hit.point = ray.origin + ray.dir * t;
  hit.normal = (hit.point - s.center) * (1.0 / s.radius);
  const Vec3& n = hit.normal;
  hit.uv = {0.5 + std::atan2(n.z, n.x) / (2 * std::numbers::pi),
            std::acos(std::clamp(n.y, -1.0, 1.0)) / std::numbers::pi};
  return true;
}

bool intersect(const Plane& p, const Ray& ray, Hit& hit) {
  const double denom = p.normal.dot(ray.dir);
  if (std::abs(denom) < kEps) return false;
  const double t = (p.point - ray.origin).dot(p.normal) / denom;
  if (t <= kEps || t >= hit.t) return false;
  hit.t = t;
  hit.point = ray.origin + ray.dir * t;
  hit.normal = p.normal;
  Vec3 tu, tv;
  orthonormal_basis(p.normal, tu, tv);
  const Vec3 local = hit.point - p.point;
  hit.uv = {local.dot(tu), local.dot(tv)};
  return true;
}

bool intersect(const TriangleMesh& mesh, const Ray& ray, Hit& hit) {
  bool any = false;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const Vec3& v0 = mesh.vertices[face[0]];
    const Vec3& v1 = mesh.vertices[face[1]];
    const Vec3& v2 = mesh.vertices[face[2]];
    // Moller-Trumbore
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = ray.dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-12) continue;
    const double inv = 1.0 / det;
    const Vec3 tvec = ray.origin - v0;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0 || u > 1) continue;
    const Vec3 qvec = tvec.cross(e1);
    const double v = ray.dir.dot(qvec) * inv;
    if (v < 0 || u + v > 1) continue;
    const double t = e2.dot(qvec) * inv;
    if (t <= kEps || t >= hit.t) continue;
    hit.t = t;
    hit.point = ray.origin + ray.dir * t;
    hit.normal = e1.cross(e2).normalized();
    if (!mesh.face_uvs.empty()) {
      const auto& uv = mesh.face_uvs[f];
      const double w = 1.0 - u - v;
      hit.uv = {w * uv[0].u + u * uv[1].u + v * uv[2].u, w * uv[0].v + u * uv[1].v + v * uv[2].v};
    } else {
      hit.uv = {u, v};
    }
    any = true;
  }
  return any;
}

Vec3 albedo_at(const AlbedoSource& src, const Vec2& uv) {
  return std::visit(
      [&](const auto& a) -> Vec3 {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, ConstantAlbedo>) {
          return a.rgb;
        } else if constexpr (std::is_same_v<A, CheckerAlbedo>) {
          const long cu = static_cast<long>(std::floor(uv.u * a.scale));
          const long cv = static_cast<long>(std::floor(uv.v * a.scale));
          return ((cu + cv) & 1) ? a.color_b : a.color_a;
        } else {
          const Image& tex = *a.texture;
          const double fu = uv.u - std::floor(uv.u);
          const double fv = uv.v - std::floor(uv.v);
          const int x = std::min(tex.width() - 1, static_cast<int>(fu * tex.width()));
          const int y = std::min(tex.height() - 1, static_cast<int>(fv * tex.height()));
          if (tex.channels() == 1) {
            const double g = tex.at(y, x, 0);
            return {g, g, g};
          }
          return {tex.at(y, x, 0), tex.at(y, x, 1), tex.at(y, x, 2)};
        }
      },
      src);
}

struct CameraFrame {
  Vec3 eye, forward, right, up;
  double tan_half;
  double aspect;
};

CameraFrame camera_frame(const Camera& cam) {
  CameraFrame f;
  f.eye = cam.eye;
  f.forward = (cam.look_at - cam.eye).normalized();
  f.right = f.forward.cross(cam.up).normalized();
  f.up = f.right.cross(f.forward);
  f.tan_half = std::tan(cam.vertical_fov_deg * std::numbers::pi / 360.0);
  f.aspect = static_cast<double>(cam.width) / cam.height;
  return f;
}

}  // namespace

void validate(const Scene& scene) {
  if (scene.objects.empty()) throw UserError("scene has no objects");
  const Camera& cam = scene.camera;
  if (cam.width <= 0 || cam.height <= 0) throw UserError("camera image size must be positive");
  if (!(cam.vertical_fov_deg > 0.0 && cam.vertical_fov_deg < 180.0)) {
    throw UserError("degenerate camera: vertical fov must be in (0, 180) degrees");
  }
  const Vec3 fwd = cam.look_at - cam.eye;
  if (fwd.norm() < 1e-12) throw UserError("degenerate camera: eye equals look_at");
  if (fwd.normalized().cross(cam.up).norm() < 1e-9) {
    throw UserError("degenerate camera: up vector parallel to view direction");
  }
  for (const auto& obj : scene.objects) {
    if (obj.material.phong_n < 1.0) throw UserError("phong exponent must be >= 1");
    if (obj.material.k_s < 0.0) throw UserError("specular weight must be >= 0");
    if (const auto* mesh = std::get_if<TriangleMesh>(&obj.geometry)) {
      const int nv = static_cast<int>(mesh->vertices.size());
      for (const auto& f : mesh->faces) {
        for (int idx : f) {
          if (idx < 0 || idx >= nv) throw UserError("mesh face references an invalid vertex");
        }
      }
      if (!mesh->face_uvs.empty() && mesh->face_uvs.size() != mesh->faces.size()) {
        throw UserError("mesh face UV count does not match face count");
      }
    }
    if (const auto* tex = std::get_if<TextureAlbedo>(&obj.albedo)) {
      if (!tex->texture || tex->texture->empty()) throw UserError("texture albedo without image");
    }
  }
}

void validate(const Environment& env) {
  if (env.lights.empty()) throw UserError("environment needs at least one light");
  for (const auto& l : env.lights) {
    if (std::abs(l.direction.norm() - 1.0) > 1e-6) throw UserError("light direction not normalized");
    if (l.radiance.x < 0 || l.radiance.y < 0 || l.radiance.z < 0) {
      throw UserError("light radiance must be nonnegative");
    }
  }
}

RenderOutput render(const Scene& scene, const Environment& env) {
  validate(scene);
  validate(env);
  const Camera& cam = scene.camera;
  const CameraFrame frame = camera_frame(cam);
  RenderOutput out{{Image(cam.height, cam.width, 3, Range::HDR), Image(cam.height, cam.width, 3, Range::HDR),
                    Image(cam.height, cam.width, 3, Range::HDR)},
                   Mask(cam.height, cam.width)};

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double sx = (2.0 * (x + 0.5) / cam.width - 1.0) * frame.tan_half * frame.aspect;
      const double sy = (1.0 - 2.0 * (y + 0.5) / cam.height) * frame.tan_half;
      const Ray ray{frame.eye, (frame.forward + frame.right * sx + frame.up * sy).normalized()};

      Hit hit;
      for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const bool got = std::visit([&](const auto& g) { return intersect(g, ray, hit); },
                                    scene.objects[i].geometry);
        if (got) hit.object = static_cast<int>(i);
      }
      if (hit.object < 0) continue;

      const SceneObject& obj = scene.objects[hit.object];
      const Vec3 view = -ray.dir;
      Vec3 n = hit.normal.normalized();
      if (n.dot(view) < 0) n = -n;  // two-sided surfaces

      const Vec3 a = albedo_at(obj.albedo, hit.uv);
      Vec3 shading, residue;
      const double norm = (obj.material.phong_n + 2.0) / (2.0 * std::numbers::pi);
      for (const auto& light : env.lights) {
        const double ndotl = n.dot(light.direction);
        if (ndotl <= 0.0) continue;
        shading = shading + light.radiance * ndotl;
        if (obj.material.k_s > 0.0) {
          const Vec3 refl = n * (2.0 * ndotl) - light.direction;
          const double rv = std::max(0.0, refl.dot(view));
          if (rv > 0.0) {
            residue = residue + light.radiance * (obj.material.k_s * norm * std::pow(rv, obj.material.phong_n));
          }
        }
      }
      float* pa = out.intrinsics.albedo.pixel(y, x);
      float* ps = out.intrinsics.shading.pixel(y, x);
      float* pr = out.intrinsics.residue.pixel(y, x);
      pa[0] = static_cast<float>(a.x);
      pa[1] = static_cast<float>(a.y);
      pa[2] = static_cast<float>(a.z);
      ps[0] = static_cast<float>(shading.x);
      ps[1] = static_cast<float>(shading.y);
      ps[2] = static_cast<float>(shading.z);
      pr[0] = static_cast<float>(residue.x);
      pr[1] = static_cast<float>(residue.y);
      pr[2] = static_cast<float>(residue.z);
      out.coverage.set(y, x, true);
    }
  }
  return out;
}

IntrinsicSet render_intrinsics(const Scene& scene, const Environment& env) {
  return render(scene, env).intrinsics;
}

Image hdr_to_ldr(const Image& hdr, double exposure, double gamma) {
  if (!(exposure > 0.0)) throw UserError("exposure must be positive");
  if (!(gamma > 0.0)) throw UserError("gamma must be positive");
  Image out(hdr.height(), hdr.width(), hdr.channels(), Range::LDR);
  auto src = hdr.data();
  auto dst = out.data();
  const double inv_gamma = 1.0 / gamma;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::max(0.0, exposure * src[i]);
    dst[i] = static_cast<float>(std::clamp(std::pow(v, inv_gamma), 0.0, 1.0));
  }
  return out;
}

double exposure_for(const Image& diffuse, const Mask& coverage, double percentile, double target) {
  std::vector<float> samples;
  samples.reserve(diffuse.size());
  for (int y = 0; y < diffuse.height(); ++y) {
    for (int x = 0; x < diffuse.width(); ++x) {
      if (!coverage.get(y, x)) continue;
      const float* p = diffuse.pixel(y, x);
      samples.insert(samples.end(), p, p + diffuse.channels());
    }
  }
  if (samples.empty()) return 1.0;
  // nearest-rank percentile
  std::size_t rank = static_cast<std::size_t>(std::ceil(percentile * samples.size()));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  std::nth_element(samples.begin(), samples.begin() + (rank - 1), samples.end());
  const double p = samples[rank - 1];
  return p > 0.0 ? target / p : 1.0;
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw UserError("unknown split '" + s + "'");
}

RenderedGroup generate_group(const Scene& scene, const Environment& env, std::uint64_t seed,
                             const ToneMapOptions& tone) {
  RenderOutput rendered = render(scene, env);
  RenderedGroup g;
  g.hdr = std::move(rendered.intrinsics);
  g.diffuse_hdr = diffuse_of(g.hdr.albedo, g.hdr.shading);
  g.input_hdr = add(g.diffuse_hdr, g.hdr.residue);
  g.input_hdr.set_range(Range::HDR);
  g.exposure = exposure_for(g.diffuse_hdr, rendered.coverage, tone.percentile, tone.target);

  g.ldr.id = "g" + std::to_string(seed);
  g.ldr.albedo = clamp01(g.hdr.albedo);
  g.ldr.shading = hdr_to_ldr(g.hdr.shading, g.exposure, tone.gamma);
  g.ldr.residue = hdr_to_ldr(g.hdr.residue, g.exposure, tone.gamma);
  g.ldr.specular_free = hdr_to_ldr(g.diffuse_hdr, g.exposure, tone.gamma);
  g.ldr.input = hdr_to_ldr(g.input_hdr, g.exposure, tone.gamma);

  const Image product = mul(g.ldr.albedo, g.ldr.shading);
  double acc = 0.0;
  auto pp = product.data();
  auto pd = g.ldr.specular_free.data();
  for (std::size_t i = 0; i < pp.size(); ++i) acc += std::abs(static_cast<double>(pp[i]) - pd[i]);
  g.ldr_violation = pp.empty() ? 0.0 : acc / static_cast<double>(pp.size());
  return g;
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

}  // namespace

nlohmann::json describe(const Scene& scene) {
  using nlohmann::json;
  json objects = json::array();
  for (const auto& obj : scene.objects) {
    json o;
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, Sphere>) {
            o["geometry"] = {{"type", "sphere"}, {"center", vec_json(g.center)}, {"radius", g.radius}};
          } else if constexpr (std::is_same_v<G, Plane>) {
            o["geometry"] = {{"type", "plane"}, {"point", vec_json(g.point)}, {"normal", vec_json(g.normal)}};
          } else {
            o["geometry"] = {{"type", "mesh"}, {"vertices", g.vertices.size()}, {"faces", g.faces.size()}};
          }
        },
        obj.geometry);
    std::visit(
        [&](const auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, ConstantAlbedo>) {
            o["albedo"] = {{"type", "constant"}, {"rgb", vec_json(a.rgb)}};
          } else if constexpr (std::is_same_v<A, CheckerAlbedo>) {
            o["albedo"] = {{"type", "checker"},
                           {"scale", a.scale},
                           {"a", vec_json(a.color_a)},
                           {"b", vec_json(a.color_b)}};
          } else {
            o["albedo"] = {{"type", "texture"},
                           {"width", a.texture->width()},
                           {"height", a.texture->height()}};
          }
        },
        obj.albedo);
    o["material"] = {{"k_s", obj.material.k_s}, {"phong_n", obj.material.phong_n}};
    objects.push_back(std::move(o));
  }
  const Camera& c = scene.camera;
  return {{"objects", objects},
          {"camera",
           {{"eye", vec_json(c.eye)},
            {"look_at", vec_json(c.look_at)},
            {"up", vec_json(c.up)},
            {"vertical_fov_deg", c.vertical_fov_deg},
            {"width", c.width},
            {"height", c.height}}}};
}

}  // namespace despec
