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
#include "mjscc/jscc_codec.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace mjscc;

namespace
{
    LinkConfig small_link(int n = 4)
    {
        LinkConfig l;
        l.channel = ClusterConfig::square(n, n);
        return l;
    }

    CodecSpec small_spec()
    {
        CodecSpec s;
        s.image_dim = 12; // 2x2x3
        s.symbols = 5;    // odd: exercises the zero-padded tail block
        s.hidden = 9;
        return s;
    }
}

TEST_CASE("power normalization yields unit average symbol power")
{
    CVector z(4);
    z << cdouble(3, 1), cdouble(-2, 0.5), cdouble(0, 0), cdouble(1, -1);
    const CVector n = power_normalize(z);
    CHECK(n.squaredNorm() == doctest::Approx(4.0));
    CHECK(std::abs(n(0) / z(0) - n(1) / z(1)) < 1e-12); // pure scaling
    CHECK_THROWS_AS(power_normalize(CVector::Zero(3)), std::invalid_argument);
}

TEST_CASE("symbol packing interleaves real and imaginary parts")
{
    RVector r(4);
    r << 1, 2, 3, 4;
    const CVector z = pack_symbols(r);
    REQUIRE(z.size() == 2);
    CHECK(z(0) == cdouble(1, 2));
    CHECK(z(1) == cdouble(3, 4));
    CHECK((unpack_symbols(z) - r).norm() == 0.0);
    CHECK_THROWS_AS(pack_symbols(RVector::Ones(3)), std::invalid_argument);
}

TEST_CASE("encoder output always has power K; decoder output lies in (0, 1)")
{
    const JsccCodec c = JsccCodec::create(small_spec(), 3);
    const auto imgs = synthesize_images(6, 2, 0.5, 1);
    for (const auto &s : imgs)
    {
        const CVector z = c.encode(s);
        REQUIRE(z.size() == 5);
        CHECK(z.squaredNorm() == doctest::Approx(5.0).epsilon(1e-12));
        const RVector r = c.decode(z);
        CHECK(r.size() == 12);
        CHECK(r.minCoeff() > 0.0);
        CHECK(r.maxCoeff() < 1.0);
    }
    const CMatrix zb = c.encode_batch(imgs);
    CHECK((zb.col(2) - c.encode(imgs[2])).norm() < 1e-14);
    CHECK_THROWS_AS(c.encode(synthesize_images(1, 3, 0.5, 1)[0]), std::invalid_argument);
}

TEST_CASE("codec gradient matches central differences through power normalization and the channel")
{
    JsccCodec c = JsccCodec::create(small_spec(), 11);
    const auto imgs = synthesize_images(3, 2, 0.5, 2);
    const LinkConfig link = small_link();
    const auto cb = fit_channel_codebooks(link.channel, {3}, 200, 4, "");
    std::vector<ChannelUse> uses;
    Rng rng = make_stream(7, {});
    for (int i = 0; i < 3; ++i)
        uses.push_back(draw_channel_use(link, NoiseModel(0.3), c.symbol_count(), rng, i == 1 ? &cb.at(3) : nullptr));
    std::vector<double> grad;
    codec_loss(c, imgs, uses, &grad);
    REQUIRE(grad.size() == c.params().size());
    auto f = [&] { return codec_loss(c, imgs, uses); };
    CHECK(testutil::max_fd_error(c.params(), grad, f, 60) < 1e-4);
}

TEST_CASE("checkpoint round-trip preserves the codec exactly")
{
    const std::string dir = testutil::scratch_dir("codec");
    const JsccCodec c = JsccCodec::create(small_spec(), 5);
    nn::save_checkpoint(dir + "/c.ckpt", c.to_checkpoint());
    const JsccCodec back = JsccCodec::from_checkpoint(nn::load_checkpoint(dir + "/c.ckpt"));
    CHECK(back.params() == c.params());
    CHECK(back.symbol_count() == 5);
    CHECK(back.layer_spec() == c.layer_spec());
    nn::Checkpoint wrong = c.to_checkpoint();
    wrong.kind = "quality-evaluator";
    CHECK_THROWS_AS(JsccCodec::from_checkpoint(wrong), std::invalid_argument);
}

TEST_CASE("training is deterministic and reduces the loss")
{
    const auto imgs = synthesize_images(64, 2, 0.5, 3);
    TrainingConfig tc;
    tc.epochs = 6;
    tc.batch_size = 16;
    tc.learning_rate = 3e-3;
    JsccCodec a = JsccCodec::create(small_spec(), 1), b = JsccCodec::create(small_spec(), 1);
    const auto ha = train(a, imgs, small_link(), tc);
    const auto hb = train(b, imgs, small_link(), tc);
    CHECK(a.params() == b.params());
    CHECK(ha.epoch_loss == hb.epoch_loss);
    REQUIRE(ha.epoch_loss.size() == 6);
    CHECK(ha.epoch_loss.back() < ha.epoch_loss.front());
    CHECK(ha.step_loss.size() == 6u * 4);
}

TEST_CASE("zero epochs leaves the parameters untouched")
{
    const auto imgs = synthesize_images(8, 2, 0.5, 3);
    TrainingConfig tc;
    tc.epochs = 0;
    JsccCodec a = JsccCodec::create(small_spec(), 1);
    const auto before = a.params();
    const auto h = train(a, imgs, small_link(), tc);
    CHECK(h.epoch_loss.empty());
    CHECK(a.params() == before);
}

TEST_CASE("learning rate halves after each third of the epochs")
{
    TrainingConfig tc;
    tc.epochs = 30;
    tc.learning_rate = 1e-3;
    CHECK(tc.learning_rate_at(0) == 1e-3);
    CHECK(tc.learning_rate_at(9) == 1e-3);
    CHECK(tc.learning_rate_at(10) == 5e-4);
    CHECK(tc.learning_rate_at(29) == 2.5e-4);
    tc.epochs = -1;
    CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
}

TEST_CASE("non-finite loss raises with the batch index and keeps parameters")
{
    JsccCodec c = JsccCodec::create(small_spec(), 2);
    auto imgs = synthesize_images(2, 2, 0.5, 4);
    imgs[1].pixels(0) = NAN;
    Rng rng(1);
    std::vector<ChannelUse> uses;
    for (int i = 0; i < 2; ++i)
        uses.push_back(draw_channel_use(small_link(), NoiseModel(0.1), c.symbol_count(), rng));
    nn::Adam opt(c.params().size());
    const auto before = c.params();
    try
    {
        train_step(c, opt, imgs, uses, 1e-3, 17);
        FAIL("expected NonFiniteLossError");
    }
    catch (const NonFiniteLossError &e)
    {
        CHECK(e.batch_index() == 17);
    }
    CHECK(c.params() == before);
}

TEST_CASE("near-noiseless training drives the MSE an order of magnitude below the untrained codec")
{
    CodecSpec spec;
    spec.image_dim = 12;
    spec.symbols = 8;
    spec.hidden = 32;
    const auto imgs = synthesize_images(128, 2, 0.3, 5);
    JsccCodec c = JsccCodec::create(spec, 9);
    const LinkConfig link = small_link();
    Rng rng = make_stream(3, {});
    std::vector<ChannelUse> uses;
    for (std::size_t i = 0; i < imgs.size(); ++i)
        uses.push_back(draw_channel_use(link, std::nullopt, spec.symbols, rng));
    const double before = codec_loss(c, imgs, uses);
    TrainingConfig tc;
    tc.epochs = 120;
    tc.batch_size = 32;
    tc.learning_rate = 3e-3;
    tc.train_snr_db = 60.0;
    train(c, imgs, link, tc);
    const double after = codec_loss(c, imgs, uses);
    CHECK(after < before / 10.0);
}
