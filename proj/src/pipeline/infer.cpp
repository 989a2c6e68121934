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

#include "despec/pipeline/infer.hpp"

#include <algorithm>

#include "despec/autodiff/serialize.hpp"
#include "despec/image_io.hpp"
#include "despec/synthgen.hpp"

namespace despec::pipeline {

InferOutputs infer_image(const Pipeline<float>& model, const Image& input, Variant variant) {
  require_channels(input, 3, "input image");
  const Image padded = reflect_pad(input, 4);
  ad::Tape<float> tape(false);
  auto out = model.forward(tape, to_tensor({&padded}), variant);
  require_finite(out.final, "network output");
  const int h = input.height(), w = input.width();
  auto take = [&](const ad::Tensor<float>& t) { return t.defined() ? crop(from_tensor(t, 0), h, w) : Image(); };
  InferOutputs r;
  r.d1 = take(out.d1);
  r.residue = take(out.residue);
  r.d2 = take(out.d2);
  r.d3 = take(out.d3);
  r.final = take(out.final);
  return r;
}

namespace {

struct Job {
  std::filesystem::path source;
  std::string stem;
};

std::vector<Job> collect_jobs(const std::filesystem::path& input, const std::string& split) {
  namespace fs = std::filesystem;
  std::vector<Job> jobs;
  if (!fs::exists(input)) throw IoError("input not found: " + input.string());
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        jobs.push_back({entry.path(), entry.path().stem().string()});
      }
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.stem < b.stem; });
    if (jobs.empty()) throw UserError("no .png files in " + input.string());
  } else if (input.extension() == ".json") {
    Manifest m = load_manifest(input);
    if (split != "all") parse_split(split);
    for (const auto& rec : m.records) {
      if (split != "all" && split_name(rec.split) != split) continue;
      jobs.push_back({m.image_path(rec, "input"), rec.id});
    }
    if (jobs.empty()) throw UserError("manifest has no records in split '" + split + "'");
  } else {
    jobs.push_back({input, input.stem().string()});
  }
  return jobs;
}

}  // namespace

RemoveSummary remove_highlights(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                                const std::filesystem::path& out_dir, Variant variant, const std::string& split) {
  Pipeline<float> model = from_checkpoint(ad::load_tensors(checkpoint));
  if (!model.supports(variant)) {
    throw UserError("checkpoint was trained as variant " + to_string(model.config().variant) +
                    " and cannot produce variant " + to_string(variant));
  }
  const auto jobs = collect_jobs(input, split);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  RemoveSummary summary;
  for (const auto& job : jobs) {
    Image img = load_png(job.source);
    InferOutputs out = infer_image(model, img, variant);
    auto write = [&](const Image& im, const std::string& suffix) {
      const auto path = out_dir / (job.stem + suffix + ".png");
      save_png(im, path);
      summary.written.push_back(path);
    };
    if (variant == Variant::Full) {
      write(out.d1, "_d1");
      write(out.residue, "_r");
      write(out.d2, "_d2");
    }
    write(out.final, "");
    ++summary.images;
  }
  return summary;
}

}  // namespace despec::pipeline
