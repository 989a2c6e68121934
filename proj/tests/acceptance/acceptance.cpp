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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
//
//   despec_acceptance [--only N[,N...]] [--work DIR]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "despec/dichromatic.hpp"
#include "despec/image_io.hpp"
#include "despec/metrics.hpp"
#include "despec/pipeline/train.hpp"
#include "despec/tonecorrect.hpp"
#include "gradcheck.hpp"
#include "loss_oracle.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace despec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // wall-clock limit, part of the pass condition
  std::function<Outcome(const fs::path& work)> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" DESPEC_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Image random_hdr(int h, int w, std::mt19937_64& rng, double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Image img(h, w, 3, Range::HDR);
  for (auto& v : img.data()) v = static_cast<float>(u(rng));
  return img;
}

// 1 ---------------------------------------------------------------------------
Outcome dichromatic_round_trip(const fs::path&) {
  std::mt19937_64 rng(1);
  double worst_r = 0.0, worst_d = 0.0;
  for (int i = 0; i < 100; ++i) {
    const IntrinsicSet set{random_hdr(16, 16, rng, 1.0), random_hdr(16, 16, rng, 3.0), random_hdr(16, 16, rng, 2.0)};
    const Image i_img = compose(set);
    const Image d = diffuse_of(set.albedo, set.shading);
    const Image r = residue_of(i_img, d);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double ref_d = static_cast<double>(set.albedo.data()[k]) * set.shading.data()[k];
      worst_d = std::max(worst_d, std::abs(d.data()[k] - ref_d));
      worst_r = std::max(worst_r, std::abs(static_cast<double>(r.data()[k]) - set.residue.data()[k]));
    }
  }
  const double worst = std::max(worst_r, worst_d);
  return {worst <= 1e-6, "max abs error residue " + fmt("%.3g", worst_r) + ", diffuse " + fmt("%.3g", worst_d) +
                             " (tol 1e-6)"};
}

// 2 ---------------------------------------------------------------------------
Outcome otsu_equivalence(const fs::path&) {
  int agree = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Image img = oracle::bimodal_residue(48, 40, 1000 + s);
    const auto values = oracle::max_channel(img);
    const int k = oracle::otsu_bin(values);
    const OtsuResult r = otsu_mask(img);
    bool same = r.bin == k;
    for (int y = 0; same && y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const bool hl = k >= 0 && otsu_bin(values[y * img.width() + x]) > k;
        if (r.highlight.get(y, x) != hl || r.non_highlight.get(y, x) == hl) {
          same = false;
          break;
        }
      }
    agree += same;
  }
  return {agree == 50, std::to_string(agree) + "/50 images with identical threshold and masks"};
}

// 3 ---------------------------------------------------------------------------
Outcome planted_tone(const fs::path&) {
  double worst_entry = 0.0, worst_fit = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = oracle::planted_tone(32, 32, 500 + s);
    const ToneTransform t = fit_tone_transform(p.diffuse, p.input, Mask(32, 32, true));
    if (t.degenerate) return {false, "fit flagged degenerate for seed " + std::to_string(500 + s)};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) worst_entry = std::max(worst_entry, std::abs(t.matrix[r][c] - p.matrix[r][c]));
    worst_fit = std::max(worst_fit, t.fit_error);
  }
  return {worst_entry <= 1e-4 && worst_fit <= 1e-8,
          "max entry error " + fmt("%.3g", worst_entry) + " (tol 1e-4), max fit_error " + fmt("%.3g", worst_fit) +
              " (tol 1e-8)"};
}

// 4 ---------------------------------------------------------------------------
Outcome tone_efficacy(const fs::path& work) {
  SynthConfig cfg;
  cfg.groups = 100;
  cfg.width = cfg.height = 128;
  cfg.seed = 2024;
  const fs::path dir = work / "c4";
  fs::remove_all(dir);
  Manifest m = generate_dataset(cfg, dir);
  tonecorrect_dataset(m);
  int better = 0, total = 0;
  for (const auto& rec : m.records) {
    if (!rec.has_tone_corrected()) continue;
    const Image input = load_png(m.image_path(rec, "input"));
    const Image diffuse = load_png(m.image_path(rec, "diffuse"));
    const Image tc = load_png(m.image_path(rec, "diffuse_tc"));
    const Mask mn = otsu_mask(load_png(m.image_path(rec, "residue"))).non_highlight;
    ++total;
    better += histogram_l1(input, tc, mn) <= histogram_l1(input, diffuse, mn);
  }
  fs::remove_all(dir);
  const double frac = total ? static_cast<double>(better) / total : 0.0;
  return {total >= 100 && frac >= 0.95, std::to_string(better) + "/" + std::to_string(total) +
                                            " groups with tone-corrected histogram no farther from the input (need "
                                            ">= 95%)"};
}

// 5 ---------------------------------------------------------------------------
Outcome gradients(const fs::path&) {
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : despec::testing::gradcheck_all_ops()) {
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst <= 1e-3, "worst relative error " + fmt("%.3g", worst) + " (" + worst_name + ", tol 1e-3)"};
}

// 6 ---------------------------------------------------------------------------
template <typename T>
double loss_discrepancy(std::uint64_t seed) {
  using namespace despec::pipeline;
  const LossWeights w{0.8, 1.1, 0.6};
  double worst = 0.0;
  auto [o, g] = despec::testing::random_loss_inputs<T>(ad::Shape{2, 3, 16, 12}, seed);
  for (Stage1Mode mode : {Stage1Mode::Intrinsic, Stage1Mode::Direct}) {
    for (Variant v : {Variant::Full, Variant::A, Variant::B, Variant::C}) {
      const bool refine = v == Variant::Full || v == Variant::B;
      const bool tone = v == Variant::Full || v == Variant::A;
      ad::Tape<T> tape(false);
      const LossTerms<T> t = compute_losses(tape, o, g, mode, v, w);
      const auto ref = despec::testing::loss_oracle(o, g, mode, refine, tone, w);
      worst = std::max(worst, std::abs(t.pshr.item() - ref.pshr));
      if (refine) worst = std::max(worst, std::abs(t.sr.item() - ref.sr));
      if (tone) worst = std::max(worst, std::abs(t.tc.item() - ref.tc));
      worst = std::max(worst, std::abs(t.total.item() - ref.total));
    }
  }
  return worst;
}

Outcome loss_fidelity(const fs::path&) {
  double worst_f = 0.0, worst_d = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    worst_f = std::max(worst_f, loss_discrepancy<float>(s));
    worst_d = std::max(worst_d, loss_discrepancy<double>(s));
  }
  return {std::max(worst_f, worst_d) <= 1e-7,
          "max abs deviation float " + fmt("%.3g", worst_f) + ", double " + fmt("%.3g", worst_d) + " (tol 1e-7)"};
}

// 7 ---------------------------------------------------------------------------
Outcome overfit(const fs::path& work) {
  const fs::path dir = work / "c7";
  fs::remove_all(dir);
  SynthConfig sc;
  sc.groups = 4;
  sc.width = sc.height = 64;
  sc.split_fraction = 1.0;
  sc.seed = 7;
  Manifest m = generate_dataset(sc, dir / "data");
  tonecorrect_dataset(m);
  save_manifest(m, dir / "data" / "manifest.json");

  pipeline::TrainConfig tc;
  tc.seed = 7;
  tc.batch = 4;
  tc.lr = 2e-3;
  tc.lr_decay_epochs = 0;
  tc.keep_every = 0;
  tc.epochs = 400;
  tc.max_steps = 400;
  const auto a = pipeline::train(m, tc, dir / "run_a");
  const auto b = pipeline::train(m, tc, dir / "run_b");
  if (a.steps.size() != 400) return {false, "expected 400 steps, got " + std::to_string(a.steps.size())};

  const double first = a.steps.front().total, last = a.steps.back().total;
  const double drop = 1.0 - last / first;
  bool identical = a.steps.size() == b.steps.size();
  for (std::size_t i = 0; identical && i < a.steps.size(); ++i) identical = a.steps[i].total == b.steps[i].total;
  identical = identical && read_bytes(dir / "run_a" / "final.ckpt") == read_bytes(dir / "run_b" / "final.ckpt");
  fs::remove_all(dir);
  return {drop >= 0.9 && identical, "total " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) + " (drop " +
                                        fmt("%.1f", 100 * drop) + "%, need >= 90%), repeat " +
                                        (identical ? "bitwise identical" : "DIFFERS")};
}

// 8 ---------------------------------------------------------------------------
std::map<std::string, double> mean_psnr(const fs::path& csv) {
  std::map<std::string, double> out;
  std::ifstream f(csv);
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("mean,", 0) != 0) continue;
    std::stringstream ss(line);
    std::string tag, variant, psnr;
    std::getline(ss, tag, ',');
    std::getline(ss, variant, ',');
    std::getline(ss, psnr, ',');
    out[variant] = std::stod(psnr);
  }
  return out;
}

Outcome ablation(const fs::path& work) {
  const fs::path dir = work / "c8";
  fs::remove_all(dir);
  const int status = run_cli("demo --out '" + dir.string() + "' --seed 7 --steps 2000", work / "c8.log");
  if (status != 0) return {false, "demo exited with status " + std::to_string(status)};
  const auto means = mean_psnr(dir / "report.csv");
  if (!means.count("full") || !means.count("C")) return {false, "report lacks full or C means"};
  const double full = means.at("full"), c = means.at("C");
  fs::remove_all(dir);
  return {full >= c, "mean PSNR full " + fmt("%.3f", full) + " dB vs C " + fmt("%.3f", c) + " dB"};
}

// 9 ---------------------------------------------------------------------------
Outcome metric_oracles(const fs::path&) {
  const Image a(32, 32, 3, Range::LDR, 0.3f);
  const Image b(32, 32, 3, Range::LDR, 0.4f);
  const double p = psnr(a, b);
  std::mt19937_64 rng(9);
  Image r(40, 36, 3);
  std::uniform_real_distribution<float> u(0, 1);
  for (auto& v : r.data()) v = u(rng);
  const double self = ssim(r, r);
  double worst_const = 0.0;
  for (float delta : {0.0f, 0.1f, 0.25f, 0.5f}) {
    const Image c1(24, 24, 3, Range::LDR, 0.5f);
    const Image c2(24, 24, 3, Range::LDR, 0.5f + delta);
    worst_const = std::max(worst_const, std::abs(ssim(c1, c2) - oracle::ssim_constant(0.5, 0.5f + delta)));
  }
  const bool ok = std::abs(p - 20.0) <= 1e-3 && self == 1.0 && worst_const <= 1e-9;
  return {ok, "psnr " + fmt("%.6f", p) + " dB (20 +- 0.001), ssim(a,a) " + fmt("%.17g", self) +
                  ", constant-image ssim error " + fmt("%.3g", worst_const) + " (tol 1e-9)"};
}

// 10 --------------------------------------------------------------------------
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_bytes(e.path());
  }
  return out;
}

Outcome determinism(const fs::path& work) {
  const fs::path a = work / "c10a", b = work / "c10b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const auto& d : {a, b}) {
    const int status = run_cli("demo --out '" + d.string() + "' --seed 7", work / "c10.log");
    if (status != 0) return {false, "demo exited with status " + std::to_string(status)};
  }
  const auto ta = tree_bytes(a), tb = tree_bytes(b);
  int differing = 0;
  std::string first_diff;
  std::set<std::string> names;
  for (const auto& [k, v] : ta) names.insert(k);
  for (const auto& [k, v] : tb) names.insert(k);
  for (const auto& n : names) {
    if (!ta.count(n) || !tb.count(n) || ta.at(n) != tb.at(n)) {
      if (first_diff.empty()) first_diff = n;
      ++differing;
    }
  }
  const bool key_files = ta.count("data/manifest.json") && ta.count("ckpt/final.ckpt") && ta.count("report.csv");
  fs::remove_all(a);
  fs::remove_all(b);
  if (!key_files) return {false, "demo output lacks manifest, checkpoint or report"};
  return {differing == 0, std::to_string(names.size()) + " files compared, " + std::to_string(differing) +
                              " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::temp_directory_path() / "despec_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only N[,N...]] [--work DIR]\n";
      return 1;
    }
  }
  fs::create_directories(work);

  const std::vector<Criterion> criteria = {
      {1, "dichromatic round trip", 5, dichromatic_round_trip},
      {2, "otsu oracle equivalence", 5, otsu_equivalence},
      {3, "planted tone transform recovery", 10, planted_tone},
      {4, "tone correction efficacy", 120, tone_efficacy},
      {5, "gradient correctness", 30, gradients},
      {6, "loss fidelity", 60, loss_fidelity},
      {7, "overfit sanity", 300, overfit},
      {8, "ablation direction", 900, ablation},
      {9, "metric oracles", 5, metric_oracles},
      {10, "determinism", 900, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.detail << "; "
              << fmt("%.1f", secs) << " s (limit " << fmt("%.0f", c.budget_s) << " s"
              << (in_time ? "" : ", EXCEEDED") << ")" << std::endl;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  return failed == 0 ? 0 : 1;
}
