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

#include "despec/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "despec/image_io.hpp"
#include "despec/synthgen.hpp"

namespace despec {

namespace fs = std::filesystem;

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  auto pa = a.data();
  auto pb = b.data();
  if (pa.empty()) throw ShapeError("psnr: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pa.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWin> gaussian_1d() {
  std::array<double, kWin> g{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kHalf;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

double ssim_from_moments(double mu_a, double mu_b, double e_aa, double e_bb, double e_ab) {
  const double var_a = e_aa - mu_a * mu_a;
  const double var_b = e_bb - mu_b * mu_b;
  const double cov = e_ab - mu_a * mu_b;
  const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
  const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
  return num / den;
}

void check_ssim_inputs(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWin || a.width() < kWin) {
    throw ShapeError("ssim: image smaller than the 11x11 window");
  }
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  check_ssim_inputs(a, b);
  const auto g = gaussian_1d();
  const int h = a.height(), w = a.width(), nc = a.channels();
  const int ow = w - kWin + 1, oh = h - kWin + 1;
  const std::size_t hsz = static_cast<std::size_t>(h) * ow;

  double channel_sum = 0.0;
  for (int c = 0; c < nc; ++c) {
    // horizontal pass: five moment planes of size h x ow
    std::vector<double> ha(hsz), hb(hsz), haa(hsz), hbb(hsz), hab(hsz);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < ow; ++x) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int k = 0; k < kWin; ++k) {
          const double va = a.at(y, x + k, c);
          const double vb = b.at(y, x + k, c);
          sa += g[k] * va;
          sb += g[k] * vb;
          saa += g[k] * (va * va);
          sbb += g[k] * (vb * vb);
          sab += g[k] * (va * vb);
        }
        const std::size_t i = static_cast<std::size_t>(y) * ow + x;
        ha[i] = sa;
        hb[i] = sb;
        haa[i] = saa;
        hbb[i] = sbb;
        hab[i] = sab;
      }
    }
    std::vector<double> row_sums(oh, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) {
      double acc = 0.0;
      for (int x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, eaa = 0, ebb = 0, eab = 0;
        for (int k = 0; k < kWin; ++k) {
          const std::size_t i = static_cast<std::size_t>(y + k) * ow + x;
          ma += g[k] * ha[i];
          mb += g[k] * hb[i];
          eaa += g[k] * haa[i];
          ebb += g[k] * hbb[i];
          eab += g[k] * hab[i];
        }
        acc += ssim_from_moments(ma, mb, eaa, ebb, eab);
      }
      row_sums[y] = acc;
    }
    double total = 0.0;
    for (double v : row_sums) total += v;
    channel_sum += total / (static_cast<double>(oh) * ow);
  }
  return channel_sum / nc;
}

double ssim_reference(const Image& a, const Image& b) {
  check_ssim_inputs(a, b);
  const auto g = gaussian_1d();
  const int h = a.height(), w = a.width(), nc = a.channels();
  double channel_sum = 0.0;
  for (int c = 0; c < nc; ++c) {
    double total = 0.0;
    int count = 0;
    for (int cy = kHalf; cy < h - kHalf; ++cy) {
      for (int cx = kHalf; cx < w - kHalf; ++cx) {
        double ma = 0, mb = 0, eaa = 0, ebb = 0, eab = 0;
        for (int dy = -kHalf; dy <= kHalf; ++dy) {
          for (int dx = -kHalf; dx <= kHalf; ++dx) {
            const double wgt = g[dy + kHalf] * g[dx + kHalf];
            const double va = a.at(cy + dy, cx + dx, c);
            const double vb = b.at(cy + dy, cx + dx, c);
            ma += wgt * va;
            mb += wgt * vb;
            eaa += wgt * va * va;
            ebb += wgt * vb * vb;
            eab += wgt * va * vb;
          }
        }
        total += ssim_from_moments(ma, mb, eaa, ebb, eab);
        ++count;
      }
    }
    channel_sum += total / count;
  }
  return channel_sum / nc;
}

double histogram_l1(const Image& a, const Image& b, const Mask& mask, int bins) {
  require_same_shape(a, b, "histogram_l1");
  if (mask.height() != a.height() || mask.width() != a.width()) {
    throw ShapeError("histogram_l1: mask does not match image size");
  }
  if (bins < 1) throw UserError("histogram_l1: bins must be >= 1");
  const std::size_t n = mask.count();
  if (n == 0) throw UserError("histogram_l1: empty mask");
  const int nc = a.channels();
  auto bin_of = [bins](float v) {
    const int k = static_cast<int>(std::floor(static_cast<double>(v) * bins));
    return std::clamp(k, 0, bins - 1);
  };
  double total = 0.0;
  for (int c = 0; c < nc; ++c) {
    std::vector<double> ha(bins, 0.0), hb(bins, 0.0);
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        if (!mask.get(y, x)) continue;
        ha[bin_of(a.at(y, x, c))] += 1.0;
        hb[bin_of(b.at(y, x, c))] += 1.0;
      }
    }
    for (int k = 0; k < bins; ++k) total += std::abs(ha[k] - hb[k]) / static_cast<double>(n);
  }
  return total;
}

bool EvalReport::has_missing() const {
  return std::any_of(rows.begin(), rows.end(), [](const EvalRow& r) { return r.missing; });
}

void EvalReport::recompute_aggregates() {
  aggregates.clear();
  for (const auto& r : rows) {
    auto& agg = aggregates[r.variant];
    if (r.missing || !r.psnr || !r.ssim) continue;
    agg.psnr += *r.psnr;
    agg.ssim += *r.ssim;
    ++agg.count;
  }
  for (auto& [variant, agg] : aggregates) {
    if (agg.count > 0) {
      agg.psnr /= agg.count;
      agg.ssim /= agg.count;
    }
  }
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  char buf[128];
  out << "id,variant,psnr_db,ssim\n";
  for (const auto& r : rows) {
    if (r.missing) {
      out << r.id << "," << r.variant << ",missing,missing\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", *r.psnr, *r.ssim);
    out << r.id << "," << r.variant << "," << buf << "\n";
  }
  for (const auto& [variant, agg] : aggregates) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", agg.psnr, agg.ssim);
    out << "mean," << variant << "," << buf << "\n";
  }
  return out.str();
}

EvalTarget parse_eval_target(const std::string& s) {
  if (s == "diffuse") return EvalTarget::Diffuse;
  if (s == "diffuse_tc") return EvalTarget::DiffuseTc;
  throw UserError("unknown evaluation target '" + s + "' (expected diffuse or diffuse_tc)");
}

const char* target_image_name(EvalTarget t) { return t == EvalTarget::Diffuse ? "diffuse" : "diffuse_tc"; }

EvalReport evaluate(const fs::path& pred_dir, const fs::path& ground_truth, const EvalOptions& options) {
  if (!fs::is_directory(pred_dir)) throw IoError("prediction directory '" + pred_dir.string() + "' not found");
  std::vector<std::pair<std::string, fs::path>> pairs;  // id -> ground truth path (empty if unavailable)
  std::set<std::string> other_split;                     // manifest ids outside the evaluated split

  if (fs::is_regular_file(ground_truth) && ground_truth.extension() == ".json") {
    const Manifest m = load_manifest(ground_truth);
    for (const auto& rec : m.records) {
      if (options.split != "all" && options.split != split_name(rec.split)) {
        other_split.insert(rec.id);
        continue;
      }
      fs::path gt;
      if (options.target == EvalTarget::Diffuse || rec.has_tone_corrected()) {
        gt = m.image_path(rec, target_image_name(options.target));
      }
      pairs.emplace_back(rec.id, gt);
    }
  } else if (fs::is_directory(ground_truth)) {
    for (const auto& entry : fs::directory_iterator(ground_truth)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        pairs.emplace_back(entry.path().stem().string(), entry.path());
      }
    }
  } else {
    throw IoError("ground truth '" + ground_truth.string() + "' is neither a manifest nor a directory");
  }
  // Predictions without a ground-truth partner become flagged rows too.
  // Intermediate outputs of the full variant (<id>_d1, _r, _d2) are skipped.
  std::set<std::string> known;
  for (const auto& [id, gt] : pairs) known.insert(id);
  std::set<std::string> predicted;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") predicted.insert(entry.path().stem().string());
  }
  auto is_intermediate = [&](const std::string& stem) {
    for (const char* suffix : {"_d1", "_r", "_d2"}) {
      const std::string sfx(suffix);
      if (stem.size() > sfx.size() && stem.compare(stem.size() - sfx.size(), sfx.size(), sfx) == 0 &&
          predicted.count(stem.substr(0, stem.size() - sfx.size()))) {
        return true;
      }
    }
    return false;
  };
  for (const auto& stem : predicted) {
    if (!known.count(stem) && !other_split.count(stem) && !is_intermediate(stem)) pairs.emplace_back(stem, fs::path());
  }
  std::sort(pairs.begin(), pairs.end());

  EvalReport report;
  report.rows.resize(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EvalRow& row = report.rows[i];
    row.id = pairs[i].first;
    row.variant = options.variant;
    const fs::path pred = pred_dir / (row.id + ".png");
    if (pairs[i].second.empty() || !fs::exists(pairs[i].second) || !fs::exists(pred)) {
      row.missing = true;
      continue;
    }
    try {
      const auto [p, g] = load_pair(pred, pairs[i].second);
      row.psnr = psnr(p, g);
      row.ssim = ssim(p, g);
    } catch (const UserError&) {
      row.missing = true;
    }
  }
  report.recompute_aggregates();
  return report;
}

}  // namespace despec
