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

#include "despec/tonecorrect.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include "despec/image_io.hpp"

namespace despec {

int otsu_bin(float r) {
  const int b = static_cast<int>(std::ceil(static_cast<double>(r) * kOtsuBins)) - 1;
  return std::clamp(b, 0, kOtsuBins - 1);
}

float residue_intensity(const float* rgb, int channels, ResidueIntensity mode) {
  if (channels == 1) return rgb[0];
  if (mode == ResidueIntensity::Max) return std::max({rgb[0], rgb[1], rgb[2]});
  return (rgb[0] + rgb[1] + rgb[2]) / 3.0f;
}

OtsuResult otsu_mask(const Image& residue, ResidueIntensity mode) {
  const int h = residue.height();
  const int w = residue.width();
  std::vector<float> r(static_cast<std::size_t>(h) * w);
  std::array<double, kOtsuBins> hist{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = residue_intensity(residue.pixel(y, x), residue.channels(), mode);
      r[static_cast<std::size_t>(y) * w + x] = v;
      hist[otsu_bin(v)] += 1.0;
    }
  }

  OtsuResult out;
  out.highlight = Mask(h, w, false);
  out.non_highlight = Mask(h, w, true);
  const int occupied = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0; }));
  if (occupied < 2) {
    out.degenerate = true;
    out.threshold = r.empty() ? 0.0f : *std::max_element(r.begin(), r.end());
    return out;
  }

  const double total = static_cast<double>(r.size());
  double mu_total = 0.0;
  for (int k = 0; k < kOtsuBins; ++k) mu_total += hist[k] / total * ((k + 0.5) / kOtsuBins);

  double best = -1.0;
  int best_k = -1;
  double omega = 0.0, mu = 0.0;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    const double p = hist[k] / total;
    omega += p;
    mu += p * ((k + 0.5) / kOtsuBins);
    if (omega <= 0.0 || omega >= 1.0) continue;
    const double diff = mu_total * omega - mu;
    const double between = diff * diff / (omega * (1.0 - omega));
    if (between > best) {
      best = between;
      best_k = k;
    }
  }

  out.bin = best_k;
  out.threshold = static_cast<float>(best_k + 1) / kOtsuBins;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool hl = otsu_bin(r[static_cast<std::size_t>(y) * w + x]) > best_k;
      out.highlight.set(y, x, hl);
      out.non_highlight.set(y, x, !hl);
    }
  }
  return out;
}

ToneTransform ToneTransform::identity() {
  ToneTransform t;
  for (int r = 0; r < 3; ++r) t.matrix[r][r] = 1.0;
  return t;
}

void apply_tone_matrix(const ToneMatrix& m, float h, float s, float v, float& ho, float& so, float& vo) {
  const double x[4] = {h, s, v, 1.0};
  double out[3];
  for (int r = 0; r < 3; ++r) out[r] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
  ho = static_cast<float>(out[0] - std::floor(out[0]));
  if (ho >= 1.0f) ho = 0.0f;
  so = static_cast<float>(std::clamp(out[1], 0.0, 1.0));
  vo = static_cast<float>(std::clamp(out[2], 0.0, 1.0));
}

Image apply_tone_transform(const Image& img, const ToneTransform& t) {
  require_channels(img, 3, "apply_tone_transform");
  Image out(img.height(), img.width(), 3, Range::LDR);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    float h, s, v;
    rgb_to_hsv(src[i], src[i + 1], src[i + 2], h, s, v);
    apply_tone_matrix(t.matrix, h, s, v, h, s, v);
    hsv_to_rgb(h, s, v, dst[i], dst[i + 1], dst[i + 2]);
  }
  return out;
}

namespace {

struct FitSample {
  std::array<double, 3> source;  // HSV of the ground-truth diffuse pixel
  std::array<double, 3> target;  // HSV of the input pixel
  std::array<double, 3> target_rgb;
};

std::vector<FitSample> collect(const Image& diffuse_gt, const Image& input, const Mask& mask,
                               bool exclude_saturated) {
  std::vector<FitSample> samples;
  for (int y = 0; y < input.height(); ++y) {
    for (int x = 0; x < input.width(); ++x) {
      if (!mask.get(y, x)) continue;
      const float* d = diffuse_gt.pixel(y, x);
      const float* q = input.pixel(y, x);
      if (exclude_saturated && (std::max({q[0], q[1], q[2]}) >= 1.0f || std::max({d[0], d[1], d[2]}) >= 1.0f)) {
        continue;
      }
      FitSample s;
      float a, b, c;
      rgb_to_hsv(d[0], d[1], d[2], a, b, c);
      s.source = {a, b, c};
      rgb_to_hsv(q[0], q[1], q[2], a, b, c);
      s.target = {a, b, c};
      s.target_rgb = {q[0], q[1], q[2]};
      samples.push_back(s);
    }
  }
  return samples;
}

double hsv_error(const std::vector<FitSample>& samples, const ToneMatrix& m) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) {
    for (int r = 0; r < 3; ++r) {
      const double pred = m[r][0] * s.source[0] + m[r][1] * s.source[1] + m[r][2] * s.source[2] + m[r][3];
      const double e = pred - s.target[r];
      acc += e * e;
    }
  }
  return acc / static_cast<double>(samples.size());
}

void rgb_residuals(const std::vector<FitSample>& samples, const ToneMatrix& m, std::vector<double>& res) {
  res.resize(samples.size() * 3);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    float h, sat, v, r, g, b;
    apply_tone_matrix(m, static_cast<float>(s.source[0]), static_cast<float>(s.source[1]),
                      static_cast<float>(s.source[2]), h, sat, v);
    hsv_to_rgb(h, sat, v, r, g, b);
    res[i * 3 + 0] = r - s.target_rgb[0];
    res[i * 3 + 1] = g - s.target_rgb[1];
    res[i * 3 + 2] = b - s.target_rgb[2];
  }
}

double rgb_error(const std::vector<FitSample>& samples, const ToneMatrix& m) {
  if (samples.empty()) return 0.0;
  std::vector<double> res;
  rgb_residuals(samples, m, res);
  double acc = 0.0;
  for (double e : res) acc += e * e;
  return acc / static_cast<double>(samples.size());
}

struct RgbResidualFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  using QRSolver = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<FitSample>* samples;

  int inputs() const { return 12; }
  int values() const { return static_cast<int>(samples->size() * 3); }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    ToneMatrix m{};
    for (int p = 0; p < 12; ++p) m[p / 4][p % 4] = x[p];
    std::vector<double> res;
    rgb_residuals(*samples, m, res);
    fvec = Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
    return 0;
  }
};

// Levenberg-Marquardt refinement of the 12 matrix entries against RGB error.
ToneMatrix refine_rgb(const std::vector<FitSample>& samples, const ToneMatrix& start) {
  Eigen::VectorXd x(12);
  for (int p = 0; p < 12; ++p) x[p] = start[p / 4][p % 4];
  Eigen::NumericalDiff<RgbResidualFunctor> functor(RgbResidualFunctor{&samples});
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RgbResidualFunctor>> lm(functor);
  lm.setMaxfev(400);
  lm.minimize(x);
  ToneMatrix refined{};
  for (int p = 0; p < 12; ++p) refined[p / 4][p % 4] = x[p];
  if (!x.allFinite() || !(rgb_error(samples, refined) <= rgb_error(samples, start))) return start;
  return refined;
}

}  // namespace

ToneTransform fit_tone_transform(const Image& diffuse_gt, const Image& input, const Mask& non_highlight,
                                 const ToneFitOptions& options) {
  require_same_shape(diffuse_gt, input, "fit_tone_transform");
  require_channels(input, 3, "fit_tone_transform");
  if (non_highlight.height() != input.height() || non_highlight.width() != input.width()) {
    throw ShapeError("fit_tone_transform: mask does not match image size");
  }
  const auto samples = collect(diffuse_gt, input, non_highlight, options.exclude_saturated);

  ToneTransform t = ToneTransform::identity();
  t.n_pixels_fit = samples.size();
  auto error_of = [&](const ToneMatrix& m) {
    return options.space == ToneErrorSpace::HSV ? hsv_error(samples, m) : rgb_error(samples, m);
  };
  if (samples.size() < 4) {
    t.degenerate = true;
    t.fit_error = error_of(t.matrix);
    return t;
  }

  // Normal equations shared by the three output channels.
  Eigen::Matrix4d gram = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 3> rhs = Eigen::Matrix<double, 4, 3>::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector4d x(s.source[0], s.source[1], s.source[2], 1.0);
    gram.noalias() += x * x.transpose();
    rhs.noalias() += x * Eigen::RowVector3d(s.target[0], s.target[1], s.target[2]);
  }
  gram.diagonal().array() += options.ridge;

  const Eigen::LLT<Eigen::Matrix4d> llt(gram);
  const Eigen::Matrix<double, 4, 3> sol = llt.solve(rhs);
  if (llt.info() != Eigen::Success || !sol.allFinite()) {
    t.degenerate = true;
    t.fit_error = error_of(t.matrix);
    return t;
  }
  ToneMatrix m{};
  for (int c = 0; c < 3; ++c) {
    for (int a = 0; a < 4; ++a) m[c][a] = sol(a, c);
  }
  if (options.space == ToneErrorSpace::RGB) m = refine_rgb(samples, m);
  t.matrix = m;
  t.fit_error = error_of(m);
  return t;
}

double tone_error(const Image& diffuse_gt, const Image& input, const Mask& mask, const ToneMatrix& matrix,
                  ToneErrorSpace space) {
  require_same_shape(diffuse_gt, input, "tone_error");
  const auto samples = collect(diffuse_gt, input, mask, false);
  return space == ToneErrorSpace::HSV ? hsv_error(samples, matrix) : rgb_error(samples, matrix);
}

GroupToneResult tonecorrect_group(const Image& input, const Image& specular_free, const Image& residue,
                                  const ToneCorrectOptions& options) {
  require_same_shape(input, specular_free, "tonecorrect_group");
  require_same_shape(input, residue, "tonecorrect_group");
  GroupToneResult out;
  out.otsu = otsu_mask(residue, options.intensity);
  out.transform = fit_tone_transform(specular_free, input, out.otsu.non_highlight, options.fit);
  out.tone_corrected = apply_tone_transform(specular_free, out.transform);
  return out;
}

ToneDatasetSummary tonecorrect_dataset(Manifest& manifest, const ToneCorrectOptions& options) {
  const int n = static_cast<int>(manifest.records.size());
  std::vector<int> status(n, 0);  // 0 ok, 1 degenerate, 2 failed

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    ManifestRecord& rec = manifest.records[i];
    try {
      const Image input = load_png(manifest.image_path(rec, "input"));
      const Image diffuse = load_png(manifest.image_path(rec, "diffuse"));
      const Image residue = load_png(manifest.image_path(rec, "residue"));
      const GroupToneResult g = tonecorrect_group(input, diffuse, residue, options);
      save_png(g.tone_corrected, manifest.image_path(rec, "diffuse_tc"));

      nlohmann::json matrix = nlohmann::json::array();
      for (const auto& row : g.transform.matrix) matrix.push_back(row);
      rec.tone = {{"matrix", matrix},
                  {"fit_error", g.transform.fit_error},
                  {"n_pixels_fit", g.transform.n_pixels_fit},
                  {"degenerate", g.transform.degenerate},
                  {"otsu_threshold", g.otsu.threshold},
                  {"otsu_degenerate", g.otsu.degenerate},
                  {"highlight_pixels", g.otsu.highlight.count()}};
      status[i] = (g.transform.degenerate || g.otsu.degenerate) ? 1 : 0;
    } catch (const std::exception& e) {
      rec.tone = {{"error", e.what()}};
      status[i] = 2;
    }
  }

  ToneDatasetSummary summary;
  for (int s : status) {
    if (s == 2) {
      ++summary.failed;
    } else {
      ++summary.processed;
      if (s == 1) ++summary.degenerate;
    }
  }
  return summary;
}

}  // namespace despec
