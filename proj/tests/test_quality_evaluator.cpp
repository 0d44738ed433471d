// SPDX-License-Identifier: Apache-2.0
//
// mimo-jscc: deep joint source-channel coded image transmission over MIMO
// Copyright (C) 2026 mimo-jscc developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mjscc/dataset.hpp"
#include "mjscc/metrics.hpp"
#include "mjscc/quality_evaluator.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <fstream>

using namespace mjscc;

namespace
{
    LinkConfig link4()
    {
        LinkConfig l;
        l.channel = ClusterConfig::square(4, 4);
        return l;
    }

    JsccCodec tiny_codec(std::uint64_t seed = 1)
    {
        CodecSpec s;
        s.image_dim = 12;
        s.symbols = 6;
        s.hidden = 16;
        return JsccCodec::create(s, seed);
    }

    EvaluatorSpec tiny_eval(bool bias_only = false)
    {
        EvaluatorSpec e;
        e.image_dim = 12;
        e.hidden = 8;
        e.bias_only = bias_only;
        return e;
    }
}

TEST_CASE("labels are deterministic, order independent and capped")
{
    const auto imgs = synthesize_images(10, 2, 0.5, 1);
    const JsccCodec c = tiny_codec();
    const auto a = label_dataset(c, imgs, link4(), 6.0, 1, 42);
    const auto b = label_dataset(c, imgs, link4(), 6.0, 1, 42);
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        CHECK(a[i].true_psnr_db == b[i].true_psnr_db);
        CHECK(a[i].true_psnr_db <= kPsnrCapDb);
        CHECK(a[i].realizations == 1);
        CHECK(a[i].snr_db == 6.0);
    }
    std::vector<ImageSample> rev(imgs.rbegin(), imgs.rend());
    const auto r = label_dataset(c, rev, link4(), 6.0, 1, 42);
    CHECK(labels_for(imgs, r) == labels_for(imgs, a));
    CHECK_THROWS_AS(label_dataset(c, imgs, link4(), 6.0, 0, 42), std::invalid_argument);
}

TEST_CASE("labels at 18 dB dominate labels at -6 dB")
{
    const auto imgs = synthesize_images(60, 2, 0.5, 2);
    JsccCodec c = tiny_codec(2);
    TrainingConfig tc;
    tc.epochs = 15;
    tc.batch_size = 20;
    tc.learning_rate = 3e-3;
    train(c, imgs, link4(), tc);
    const auto lo = label_dataset(c, imgs, link4(), -6.0, 2, 5);
    const auto hi = label_dataset(c, imgs, link4(), 18.0, 2, 5);
    double mlo = 0, mhi = 0;
    for (std::size_t i = 0; i < lo.size(); ++i)
    {
        mlo += lo[i].true_psnr_db;
        mhi += hi[i].true_psnr_db;
    }
    CHECK(mhi > mlo);
}

TEST_CASE("a noiseless overfit reconstruction hits the PSNR cap")
{
    // An image of exact sigmoid midpoints is reproduced by a zero decoder regardless of the channel.
    ImageSample s;
    s.pixels = RVector::Constant(12, 0.5);
    s.source_id = 1;
    JsccCodec c = tiny_codec();
    const std::size_t enc = c.encoder().param_count();
    std::fill(c.params().begin() + static_cast<std::ptrdiff_t>(enc), c.params().end(), 0.0);
    const auto l = label_dataset(c, std::vector<ImageSample>{s}, link4(), 200.0, 1, 1);
    CHECK(l[0].true_psnr_db == kPsnrCapDb);
}

TEST_CASE("label CSV round-trips and rejects bad headers")
{
    const std::string dir = testutil::scratch_dir("labels");
    std::vector<QualityLabel> l{{3, 21.123456789012345, 6.0, 4}, {7, -1.5, 18.0, 2}};
    save_labels_csv(dir + "/l.csv", l);
    const auto back = load_labels_csv(dir + "/l.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].true_psnr_db == l[0].true_psnr_db);
    CHECK(back[1].source_id == 7);
    CHECK(back[1].realizations == 2);
    std::ofstream(dir + "/bad.csv") << "id,psnr\n1,2\n";
    CHECK_THROWS(load_labels_csv(dir + "/bad.csv"));
}

TEST_CASE("evaluator gradient matches central differences")
{
    Evaluator e = Evaluator::create(tiny_eval(), 3, 20.0);
    const auto imgs = synthesize_images(5, 2, 0.5, 3);
    const std::vector<double> y{18.0, 22.0, 25.0, 19.5, 30.0};
    std::vector<double> g;
    e.loss(imgs, y, &g);
    auto f = [&] { return e.loss(imgs, y); };
    CHECK(testutil::max_fd_error(e.params(), g, f, 50) < 1e-4);
}

TEST_CASE("the single-bias evaluator converges to the label mean with loss equal to the variance")
{
    const auto imgs = synthesize_images(40, 2, 0.5, 4);
    std::vector<double> y;
    for (int i = 0; i < 40; ++i)
        y.push_back(15.0 + 0.37 * i - 0.004 * i * i);
    Evaluator e = Evaluator::create(tiny_eval(true), 1, 0.0);
    REQUIRE(e.params().size() == 1);
    EvaluatorTrainingConfig tc;
    tc.epochs = 4000;
    tc.batch_size = 40;
    tc.learning_rate = 0.05;
    train_evaluator(e, imgs, y, tc);
    CHECK(e.params()[0] == doctest::Approx(mean(y)).epsilon(1e-6));
    CHECK(e.loss(imgs, y) == doctest::Approx(variance(y)).epsilon(1e-6));
}

TEST_CASE("training on a learnable target beats the constant-mean baseline on held-out images")
{
    // Target: a smooth function of the image (its mean intensity), so a regressor can learn it.
    const auto all = synthesize_images(400, 2, 0.5, 6);
    std::vector<ImageSample> tr(all.begin(), all.begin() + 300), te(all.begin() + 300, all.end());
    auto target = [](const ImageSample &s) { return 10.0 + 20.0 * s.pixels.mean(); };
    std::vector<double> ytr, yte;
    for (const auto &s : tr)
        ytr.push_back(target(s));
    for (const auto &s : te)
        yte.push_back(target(s));
    Evaluator e = Evaluator::create(tiny_eval(), 2, mean(ytr));
    EvaluatorTrainingConfig tc;
    tc.epochs = 200;
    tc.batch_size = 32;
    tc.learning_rate = 3e-3;
    const auto h = train_evaluator(e, tr, ytr, tc);
    CHECK(h.epoch_loss.back() < h.epoch_loss.front());
    const auto pred = e.predict_batch(te);
    double mse = 0, base = 0;
    const double m = mean(ytr);
    for (std::size_t i = 0; i < yte.size(); ++i)
    {
        mse += (pred[i] - yte[i]) * (pred[i] - yte[i]);
        base += (m - yte[i]) * (m - yte[i]);
    }
    CHECK(mse < base);
    CHECK(spearman(pred, yte) > 0.5);
}

TEST_CASE("zero epochs leaves the evaluator unchanged; predictions are pure and robust")
{
    Evaluator e = Evaluator::create(tiny_eval(), 5, 25.0);
    const auto before = e.params();
    const auto imgs = synthesize_images(4, 2, 0.5, 7);
    EvaluatorTrainingConfig tc;
    tc.epochs = 0;
    const auto h = train_evaluator(e, imgs, std::vector<double>(4, 20.0), tc);
    CHECK(h.epoch_loss.empty());
    CHECK(e.params() == before);

    ImageSample zero, one;
    zero.pixels = RVector::Zero(12);
    one.pixels = RVector::Ones(12);
    CHECK(std::isfinite(e.predict(zero).predicted_psnr_db));
    CHECK(std::isfinite(e.predict(one).predicted_psnr_db));
    ImageSample copy = imgs[0];
    copy.source_id = 99;
    CHECK(e.predict(copy).predicted_psnr_db == e.predict(imgs[0]).predicted_psnr_db);
    CHECK_FALSE(e.predict(imgs[0]).tolerance_db.has_value());
    const auto q = e.predict(imgs[0]).with_threshold(20.0);
    REQUIRE(q.tolerance_db.has_value());
    CHECK(*q.tolerance_db == doctest::Approx(q.predicted_psnr_db - 20.0));

    ImageSample wrong;
    wrong.pixels = RVector::Zero(13);
    CHECK_THROWS_AS(e.predict(wrong), std::invalid_argument);
}

TEST_CASE("non-finite labels abort training")
{
    Evaluator e = Evaluator::create(tiny_eval(), 5, 25.0);
    const auto imgs = synthesize_images(4, 2, 0.5, 7);
    std::vector<double> y{1, 2, NAN, 4};
    CHECK_THROWS_AS(train_evaluator(e, imgs, y, {}), NonFiniteLossError);
}

TEST_CASE("evaluator checkpoints round-trip")
{
    const std::string dir = testutil::scratch_dir("evalckpt");
    const Evaluator e = Evaluator::create(tiny_eval(), 8, 12.0);
    nn::save_checkpoint(dir + "/e.ckpt", e.to_checkpoint());
    const Evaluator back = Evaluator::from_checkpoint(nn::load_checkpoint(dir + "/e.ckpt"));
    CHECK(back.params() == e.params());
    CHECK_THROWS_AS(Evaluator::from_checkpoint(tiny_codec().to_checkpoint()), std::invalid_argument);
}

TEST_CASE("oracle predictions equal the labels")
{
    const auto imgs = synthesize_images(3, 2, 0.5, 9);
    std::vector<QualityLabel> l{{2, 30.0, 6, 1}, {0, 10.0, 6, 1}, {1, 20.0, 6, 1}};
    const auto p = oracle_predictions(imgs, l);
    CHECK(p[0].predicted_psnr_db == 10.0);
    CHECK(p[2].predicted_psnr_db == 30.0);
    CHECK(*p[1].true_psnr_db == 20.0);
    l.pop_back();
    CHECK_THROWS_AS(oracle_predictions(imgs, l), std::invalid_argument);
}
