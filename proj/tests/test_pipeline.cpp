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

#include <gtest/gtest.h>

#include "despec/image_io.hpp"
#include "despec/pipeline/infer.hpp"
#include "despec/pipeline/train.hpp"
#include "despec/tonecorrect.hpp"
#include "loss_oracle.hpp"
#include "test_util.hpp"

using namespace despec;
using namespace despec::pipeline;
using ad::Shape;
using despec::testing::constant_image;
using despec::testing::random_image;
using despec::testing::read_file;
using despec::testing::TempDir;
using FTensor = ad::Tensor<float>;
using DTensor = ad::Tensor<double>;

namespace {

PipelineConfig small(Variant v, Stage1Mode mode = Stage1Mode::Intrinsic) {
  PipelineConfig c;
  c.variant = v;
  c.mode = mode;
  c.base_width = 4;
  return c;
}

Manifest toy_dataset(const std::filesystem::path& dir, int groups, int size, bool tone) {
  SynthConfig cfg;
  cfg.groups = groups;
  cfg.width = cfg.height = size;
  cfg.split_fraction = 1.0;
  cfg.seed = 3;
  Manifest m = generate_dataset(cfg, dir);
  if (tone) {
    tonecorrect_dataset(m);
    save_manifest(m, dir / "manifest.json");
  }
  return m;
}

TrainConfig tiny_train(int steps) {
  TrainConfig t;
  t.base_width = 4;
  t.batch = 2;
  t.max_steps = steps;
  t.epochs = 100;
  t.keep_every = 0;
  t.lr = 1e-3;
  return t;
}

}  // namespace

TEST(Pipeline, FreshOutputsInUnitIntervalWithInputShape) {
  const Pipeline<float> p(small(Variant::Full), 1);
  ad::Tape<float> tape(false);
  const Image img = random_image(12, 8, 3, 2);
  const FTensor x = to_tensor({&img});
  const auto out = p.forward(tape, x, Variant::Full);
  for (const FTensor* t : {&out.albedo, &out.shading, &out.d1, &out.residue, &out.d2, &out.d3, &out.final}) {
    ASSERT_TRUE(t->defined());
    EXPECT_EQ(t->shape(), x.shape());
  }
  for (const FTensor* t : {&out.albedo, &out.shading, &out.d2, &out.d3}) {
    for (float v : t->data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
  }
  EXPECT_EQ(out.final.node(), out.d3.node());
}

TEST(Pipeline, VariantWiring) {
  const Pipeline<float> full(small(Variant::Full), 1);
  ad::Tape<float> tape(false);
  const Image img = random_image(8, 8, 3, 2);
  const FTensor x = to_tensor({&img});
  const auto c = full.forward(tape, x, Variant::C);
  EXPECT_EQ(c.final.node(), c.d1.node());
  EXPECT_FALSE(c.d2.defined());
  EXPECT_FALSE(c.d3.defined());
  const auto b = full.forward(tape, x, Variant::B);
  EXPECT_EQ(b.final.node(), b.d2.node());
  EXPECT_FALSE(b.d3.defined());
  const auto a = full.forward(tape, x, Variant::A);
  EXPECT_EQ(a.final.node(), a.d3.node());
  EXPECT_FALSE(a.d2.defined());

  // Intrinsic D1 is the product of the two stage-1 heads; the residue is
  // clamp01(I - D1).
  auto xi = x.data();
  for (std::size_t i = 0; i < c.d1.numel(); ++i) {
    EXPECT_FLOAT_EQ(c.d1.data()[i], c.albedo.data()[i] * c.shading.data()[i]);
    EXPECT_FLOAT_EQ(c.residue.data()[i], std::clamp(xi[i] - c.d1.data()[i], 0.0f, 1.0f));
  }
}

TEST(Pipeline, VariantSupport) {
  EXPECT_EQ(Pipeline<float>(small(Variant::Full), 1).parameters().size(), 4u * 22u);
  EXPECT_EQ(Pipeline<float>(small(Variant::A), 1).parameters().size(), 3u * 22u);
  EXPECT_EQ(Pipeline<float>(small(Variant::B), 1).parameters().size(), 3u * 22u);
  EXPECT_EQ(Pipeline<float>(small(Variant::C), 1).parameters().size(), 2u * 22u);

  const Pipeline<float> b(small(Variant::B), 1);
  EXPECT_TRUE(b.supports(Variant::B));
  EXPECT_TRUE(b.supports(Variant::C));
  EXPECT_FALSE(b.supports(Variant::Full));
  EXPECT_FALSE(b.supports(Variant::A));
  ad::Tape<float> tape(false);
  EXPECT_THROW(b.forward(tape, FTensor(Shape{1, 3, 8, 8}), Variant::Full), UserError);
  EXPECT_THROW(b.forward(tape, FTensor(Shape{1, 4, 8, 8}), Variant::B), ShapeError);
}

TEST(Pipeline, DirectAndIntrinsicShareLaterStages) {
  const Pipeline<float> intrinsic(small(Variant::Full, Stage1Mode::Intrinsic), 9);
  const Pipeline<float> direct(small(Variant::Full, Stage1Mode::Direct), 9);
  const auto pi = intrinsic.named_parameters(), pd = direct.named_parameters();
  ASSERT_EQ(pi.size(), pd.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    EXPECT_EQ(pi[i].first, pd[i].first);
    EXPECT_EQ(pi[i].second.shape(), pd[i].second.shape());
    if (pi[i].first.rfind("net_r", 0) == 0 || pi[i].first.rfind("net_c", 0) == 0) {
      EXPECT_TRUE(std::equal(pi[i].second.data().begin(), pi[i].second.data().end(), pd[i].second.data().begin()));
    }
  }
  ad::Tape<float> tape(false);
  const Image img = random_image(8, 8, 3, 4);
  const FTensor x = to_tensor({&img});
  const auto oi = intrinsic.forward(tape, x, Variant::Full);
  const auto od = direct.forward(tape, x, Variant::Full);
  EXPECT_TRUE(oi.albedo.defined());
  EXPECT_FALSE(oi.residue_pred.defined());
  EXPECT_FALSE(od.albedo.defined());
  EXPECT_TRUE(od.residue_pred.defined());
  EXPECT_TRUE(od.d2.defined());
  EXPECT_TRUE(od.d3.defined());
}

TEST(Losses, ExactOutputsGiveZero) {
  auto [o, g] = despec::testing::random_loss_inputs<double>(Shape{2, 3, 4, 4}, 5);
  ad::Tape<double> tape(false);
  EXPECT_EQ(loss_sr(tape, g.diffuse, g.diffuse).item(), 0.0);
  EXPECT_EQ(loss_tc(tape, g.diffuse_tc, g.diffuse_tc).item(), 0.0);
  o.albedo = g.albedo;
  o.shading = g.shading;
  o.d1 = DTensor(g.input.shape());
  for (std::size_t i = 0; i < o.d1.numel(); ++i) o.d1.data()[i] = g.input.data()[i] - g.residue.data()[i];
  EXPECT_NEAR(loss_pshr(tape, o, g, Stage1Mode::Intrinsic).item(), 0.0, 1e-30);
}

TEST(Losses, AlbedoOffByTenth) {
  auto [o, g] = despec::testing::random_loss_inputs<double>(Shape{1, 3, 4, 4}, 6);
  o.albedo = DTensor(g.albedo.shape());
  for (std::size_t i = 0; i < o.albedo.numel(); ++i) o.albedo.data()[i] = g.albedo.data()[i] + 0.1;
  o.shading = g.shading;
  o.d1 = DTensor(g.input.shape());
  for (std::size_t i = 0; i < o.d1.numel(); ++i) o.d1.data()[i] = g.input.data()[i] - g.residue.data()[i];
  ad::Tape<double> tape(false);
  EXPECT_NEAR(loss_pshr(tape, o, g, Stage1Mode::Intrinsic).item(), 0.01, 1e-12);
}

TEST(Losses, TotalIsWeightedSum) {
  ad::Tape<double> tape(false);
  const DTensor a(Shape{}, 0.1), b(Shape{}, 0.2), c(Shape{}, 0.3);
  EXPECT_NEAR(total_loss(tape, a, b, c, LossWeights{1, 1, 1}).item(), 0.6, 1e-15);
  EXPECT_EQ(total_loss(tape, a, b, c, LossWeights{0, 0, 0}).item(), 0.0);
  EXPECT_NEAR(total_loss(tape, a, DTensor(), c, LossWeights{2, 5, 1}).item(), 0.5, 1e-15);
  EXPECT_THROW(total_loss(tape, a, b, c, LossWeights{-1, 1, 1}), UserError);
}

TEST(Losses, MatchTermByTermOracle) {
  const LossWeights w{0.7, 1.3, 0.4};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [o, g] = despec::testing::random_loss_inputs<double>(Shape{2, 3, 6, 5}, seed);
    for (Stage1Mode mode : {Stage1Mode::Intrinsic, Stage1Mode::Direct}) {
      for (Variant v : {Variant::Full, Variant::A, Variant::B, Variant::C}) {
        const bool refine = v == Variant::Full || v == Variant::B;
        const bool tone = v == Variant::Full || v == Variant::A;
        ad::Tape<double> tape(false);
        const LossTerms<double> t = compute_losses(tape, o, g, mode, v, w);
        const auto ref = despec::testing::loss_oracle(o, g, mode, refine, tone, w);
        EXPECT_NEAR(t.pshr.item(), ref.pshr, 1e-7);
        EXPECT_EQ(t.sr.defined(), refine);
        EXPECT_EQ(t.tc.defined(), tone);
        if (refine) {
          EXPECT_NEAR(t.sr.item(), ref.sr, 1e-7);
        }
        if (tone) {
          EXPECT_NEAR(t.tc.item(), ref.tc, 1e-7);
        }
        EXPECT_NEAR(t.total.item(), ref.total, 1e-7);
      }
    }
  }
}

TEST(Losses, MissingToneCorrectedTargetNamesTonefit) {
  auto [o, g] = despec::testing::random_loss_inputs<double>(Shape{1, 3, 4, 4}, 1);
  g.diffuse_tc = DTensor();
  ad::Tape<double> tape(false);
  try {
    compute_losses(tape, o, g, Stage1Mode::Intrinsic, Variant::Full, LossWeights{});
    FAIL() << "expected an error";
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("tonefit"), std::string::npos);
  }
  EXPECT_NO_THROW(compute_losses(tape, o, g, Stage1Mode::Intrinsic, Variant::B, LossWeights{}));
}

TEST(Conversion, TensorRoundTripAndPadding) {
  const Image a = random_image(5, 7, 3, 1), b = random_image(5, 7, 3, 2);
  const FTensor t = to_tensor({&a, &b});
  EXPECT_EQ(t.shape(), (Shape{2, 3, 5, 7}));
  EXPECT_EQ(t.data()[1 * 35 + 2 * 7 + 3], a.at(2, 3, 1));
  EXPECT_EQ(max_abs_diff(from_tensor(t, 1), b), 0.0f);
  EXPECT_THROW(from_tensor(t, 2), ShapeError);
  const Image c = random_image(5, 8, 3, 3);
  EXPECT_THROW(to_tensor({&a, &c}), ShapeError);

  const Image padded = reflect_pad(a, 4);
  EXPECT_EQ(padded.height(), 8);
  EXPECT_EQ(padded.width(), 8);
  EXPECT_EQ(padded.at(5, 7, 0), a.at(3, 5, 0));
  EXPECT_EQ(max_abs_diff(crop(padded, 5, 7), a), 0.0f);
}

TEST(Conversion, RequireFinite) {
  FTensor t(Shape{1, 1, 1, 2}, 0.5f);
  EXPECT_NO_THROW(require_finite(t, "t"));
  t.data()[1] = std::nanf("");
  EXPECT_THROW(require_finite(t, "t"), NumericError);
}

TEST(Checkpoint, RoundTripRestoresEveryTensor) {
  const Pipeline<float> p(small(Variant::B, Stage1Mode::Direct), 12);
  const ad::NamedTensors nt = to_checkpoint(p, {{"seed", "12"}});
  EXPECT_EQ(nt.metadata.at("variant"), "B");
  EXPECT_EQ(nt.metadata.at("seed"), "12");
  const Pipeline<float> q = from_checkpoint(ad::deserialize_tensors(ad::serialize_tensors(nt)));
  EXPECT_EQ(q.config().variant, Variant::B);
  EXPECT_EQ(q.config().mode, Stage1Mode::Direct);
  const auto a = p.named_parameters(), b = q.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()));
  }
  ad::NamedTensors broken = nt;
  broken.tensors.pop_back();
  EXPECT_THROW(from_checkpoint(broken), IoError);
}

TEST(Augment, FlipCommutesWithCompose) {
  const Image alb = random_image(6, 9, 3, 1), sh = random_image(6, 9, 3, 2), res = random_image(6, 9, 3, 3, 0, 0.3f);
  Sample s;
  s.albedo = alb;
  s.shading = sh;
  s.residue = res;
  s.diffuse = diffuse_of(alb, sh);
  s.diffuse_tc = s.diffuse;
  s.input = compose({alb, sh, res});
  augment(s, AugmentParams{true, false, 1.0f});
  EXPECT_EQ(max_abs_diff(s.input, compose({s.albedo, s.shading, s.residue})), 0.0f);
  EXPECT_EQ(max_abs_diff(s.albedo, flip_horizontal(alb)), 0.0f);
  EXPECT_EQ(max_abs_diff(s.diffuse, flip_horizontal(diffuse_of(alb, sh))), 0.0f);
}

TEST(Augment, HighlightEditRegeneratesInput) {
  Sample s;
  s.diffuse = constant_image(4, 4, 0.4f);
  s.residue = constant_image(4, 4, 0.2f);
  s.input = constant_image(4, 4, 0.6f);
  s.albedo = s.shading = s.diffuse_tc = s.diffuse;
  augment(s, AugmentParams{false, true, 1.5f});
  for (float v : s.input.data()) EXPECT_NEAR(v, 0.7f, 1e-6f);
  for (float v : s.residue.data()) EXPECT_NEAR(v, 0.3f, 1e-6f);
}

TEST(TrainConfigTest, PublishedDefaultsAndValidation) {
  TrainConfig t;
  t.apply_published_defaults();
  EXPECT_DOUBLE_EQ(t.lr, 1e-4);
  EXPECT_EQ(t.batch, 16);
  EXPECT_EQ(t.epochs, 60);
  EXPECT_NO_THROW(t.validate());
  t.lr = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.alpha_min = 2.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Train, MissingToneCorrectionIsAUserError) {
  TempDir dir("train_notc");
  const Manifest m = toy_dataset(dir / "data", 2, 16, false);
  try {
    train(m, tiny_train(1), dir / "ckpt");
    FAIL() << "expected an error";
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("tonefit"), std::string::npos) << e.what();
  }
  TrainConfig c = tiny_train(1);
  c.variant = Variant::B;
  EXPECT_NO_THROW(train(m, c, dir / "ckpt_b"));
}

TEST(Train, ShortRunIsDeterministicAndWritesArtifacts) {
  TempDir dir("train_det");
  const Manifest m = toy_dataset(dir / "data", 3, 16, true);
  TrainConfig c = tiny_train(6);
  c.keep_every = 1;
  const TrainReport r1 = train(m, c, dir / "a");
  const TrainReport r2 = train(m, c, dir / "b");
  ASSERT_EQ(r1.steps.size(), 6u);
  ASSERT_EQ(r2.steps.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(r1.steps[i].total, r2.steps[i].total);
    EXPECT_TRUE(std::isfinite(r1.steps[i].total));
    EXPECT_NEAR(r1.steps[i].total, r1.steps[i].pshr + r1.steps[i].sr + r1.steps[i].tc, 1e-5);
  }
  EXPECT_EQ(r1.final_checkpoint, dir / "a" / "final.ckpt");
  EXPECT_EQ(read_file(dir / "a" / "final.ckpt"), read_file(dir / "b" / "final.ckpt"));
  EXPECT_EQ(read_file(dir / "a" / "loss.csv"), read_file(dir / "b" / "loss.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "latest.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "epoch_0001.ckpt"));
  EXPECT_EQ(read_file(dir / "a" / "loss.csv").rfind("epoch,l_pshr,l_sr,l_tc,total", 0), 0u);

  const Pipeline<float> model = from_checkpoint(ad::load_tensors(r1.final_checkpoint));
  EXPECT_EQ(model.config().base_width, 4);
}

TEST(Infer, ArbitrarySizeAndVariantOutputs) {
  const Pipeline<float> p(small(Variant::Full), 2);
  const Image img = random_image(10, 13, 3, 7);
  const InferOutputs full = infer_image(p, img, Variant::Full);
  for (const Image* o : {&full.d1, &full.residue, &full.d2, &full.d3, &full.final}) {
    EXPECT_EQ(o->height(), 10);
    EXPECT_EQ(o->width(), 13);
  }
  EXPECT_EQ(max_abs_diff(full.final, full.d3), 0.0f);
  const InferOutputs c = infer_image(p, img, Variant::C);
  EXPECT_TRUE(c.d2.empty());
  EXPECT_EQ(max_abs_diff(c.final, c.d1), 0.0f);
  EXPECT_EQ(max_abs_diff(c.d1, full.d1), 0.0f);
}

TEST(Infer, DirectoryInputMirrorsNames) {
  TempDir dir("remove");
  std::filesystem::create_directories(dir / "in");
  save_png(random_image(8, 12, 3, 1), dir / "in" / "first.png");
  save_png(random_image(9, 7, 3, 2), dir / "in" / "second.png");
  ad::save_tensors(dir / "m.ckpt", to_checkpoint(Pipeline<float>(small(Variant::Full), 3), {}));

  const RemoveSummary full = remove_highlights(dir / "m.ckpt", dir / "in", dir / "out", Variant::Full);
  EXPECT_EQ(full.images, 2);
  for (const char* name : {"first.png", "first_d1.png", "first_r.png", "first_d2.png", "second.png"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / name)) << name;
  }
  EXPECT_EQ(load_png(dir / "out" / "second.png").width(), 7);

  const RemoveSummary c = remove_highlights(dir / "m.ckpt", dir / "in" / "first.png", dir / "out_c", Variant::C);
  EXPECT_EQ(c.images, 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "out_c" / "first.png"));
  EXPECT_FALSE(std::filesystem::exists(dir / "out_c" / "first_d1.png"));
}
