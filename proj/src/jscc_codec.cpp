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

#include "mjscc/jscc_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mjscc
{
    void CodecSpec::validate() const
    {
        if (image_dim < 1 || symbols < 1 || hidden < 1)
            throw std::invalid_argument("codec dimensions must be positive");
    }

    void LinkConfig::validate() const
    {
        channel.validate();
        if (streams < 1 || streams > std::min(channel.num_tx(), channel.num_rx()))
            throw std::invalid_argument("stream count must be in [1, min(N_t, N_r)]");
    }

    void TrainingConfig::validate() const
    {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw std::invalid_argument("learning rate must be nonnegative and finite");
        if (batch_size < 1)
            throw std::invalid_argument("batch size must be >= 1");
        if (epochs < 0)
            throw std::invalid_argument("epoch count must be >= 0");
    }

    double TrainingConfig::learning_rate_at(int epoch) const
    {
        if (epochs <= 0)
            return learning_rate;
        const int phase = std::min(2, (3 * epoch) / epochs);
        return learning_rate * std::ldexp(1.0, -phase);
    }

    CVector power_normalize(const CVector &z_raw)
    {
        const double energy = z_raw.squaredNorm();
        if (energy == 0.0) // NaN passes through so the loss check can report it
            throw std::invalid_argument("cannot power-normalize an all-zero symbol vector");
        return z_raw * std::sqrt(static_cast<double>(z_raw.size()) / energy);
    }

    CVector pack_symbols(const RVector &reals)
    {
        if (reals.size() % 2 != 0)
            throw std::invalid_argument("symbol packing needs an even number of reals");
        CVector z(reals.size() / 2);
        for (Eigen::Index k = 0; k < z.size(); ++k)
            z(k) = cdouble(reals(2 * k), reals(2 * k + 1));
        return z;
    }

    RVector unpack_symbols(const CVector &symbols)
    {
        RVector r(2 * symbols.size());
        for (Eigen::Index k = 0; k < symbols.size(); ++k)
        {
            r(2 * k) = symbols(k).real();
            r(2 * k + 1) = symbols(k).imag();
        }
        return r;
    }

    // ----- JsccCodec ---------------------------------------------------------------

    JsccCodec::JsccCodec(std::vector<nn::DenseSpec> enc, std::vector<nn::DenseSpec> dec, int symbols, std::uint64_t seed)
        : enc_(std::move(enc)), dec_(std::move(dec)), symbols_(symbols), seed_(seed)
    {
        if (enc_.output_dim() != 2 * symbols || dec_.input_dim() != 2 * symbols)
            throw std::invalid_argument("encoder output and decoder input must both be 2K reals");
        if (enc_.input_dim() != dec_.output_dim())
            throw std::invalid_argument("encoder input and decoder output dimensions differ");
        image_dim_ = enc_.input_dim();
        params_.assign(enc_.param_count() + dec_.param_count(), 0.0);
    }

    JsccCodec JsccCodec::create(const CodecSpec &spec, std::uint64_t seed)
    {
        spec.validate();
        using nn::Activation;
        JsccCodec c({{spec.image_dim, spec.hidden, Activation::softplus},
                     {spec.hidden, 2 * spec.symbols, Activation::identity}},
                    {{2 * spec.symbols, spec.hidden, Activation::softplus},
                     {spec.hidden, spec.image_dim, Activation::sigmoid}},
                    spec.symbols, seed);
        Rng rng = make_stream(seed, {0xE11C0DEULL});
        std::span<double> all(c.params_);
        c.enc_.init(all.first(c.enc_.param_count()), rng);
        c.dec_.init(all.subspan(c.enc_.param_count()), rng);
        return c;
    }

    std::string JsccCodec::layer_spec() const
    {
        return "enc:" + nn::to_string(enc_.layers()) + "|dec:" + nn::to_string(dec_.layers());
    }

    nn::Checkpoint JsccCodec::to_checkpoint() const
    {
        nn::Checkpoint c;
        c.kind = "jscc-codec";
        c.layer_spec = layer_spec();
        c.symbols = symbols_;
        c.image_dim = image_dim_;
        c.seed = seed_;
        c.params = params_;
        return c;
    }

    JsccCodec JsccCodec::from_checkpoint(const nn::Checkpoint &ckpt)
    {
        if (ckpt.kind != "jscc-codec")
            throw std::invalid_argument("checkpoint holds a '" + ckpt.kind + "', not a codec");
        const auto bar = ckpt.layer_spec.find('|');
        if (ckpt.layer_spec.rfind("enc:", 0) != 0 || bar == std::string::npos ||
            ckpt.layer_spec.compare(bar + 1, 4, "dec:") != 0)
            throw std::invalid_argument("malformed codec layer spec");
        JsccCodec c(nn::parse_layers(ckpt.layer_spec.substr(4, bar - 4)), nn::parse_layers(ckpt.layer_spec.substr(bar + 5)),
                    ckpt.symbols, ckpt.seed);
        if (c.image_dim_ != ckpt.image_dim)
            throw std::invalid_argument("checkpoint image dimension disagrees with its layer spec");
        if (ckpt.params.size() != c.params_.size())
            throw std::invalid_argument("checkpoint parameter count disagrees with its layer spec");
        c.params_ = ckpt.params;
        return c;
    }

    namespace
    {
        RMatrix stack_pixels(std::span<const ImageSample> batch, int n)
        {
            RMatrix x(n, static_cast<Eigen::Index>(batch.size()));
            for (std::size_t b = 0; b < batch.size(); ++b)
            {
                if (batch[b].size() != n)
                    throw std::invalid_argument("image " + std::to_string(batch[b].source_id) + " has " +
                                                std::to_string(batch[b].size()) + " pixels, codec expects " +
                                                std::to_string(n));
                x.col(static_cast<Eigen::Index>(b)) = batch[b].pixels;
            }
            return x;
        }
    }

    CMatrix JsccCodec::encode_batch(std::span<const ImageSample> batch) const
    {
        const RMatrix r = enc_.forward(encoder_params(), stack_pixels(batch, image_dim_));
        CMatrix z(symbols_, r.cols());
        for (Eigen::Index b = 0; b < r.cols(); ++b)
            z.col(b) = power_normalize(pack_symbols(r.col(b)));
        return z;
    }

    CVector JsccCodec::encode(const ImageSample &s) const
    {
        return encode_batch(std::span<const ImageSample>(&s, 1)).col(0);
    }

    RMatrix JsccCodec::decode_batch(const CMatrix &zhat) const
    {
        if (zhat.rows() != symbols_)
            throw std::invalid_argument("decoder expects " + std::to_string(symbols_) + " symbols, got " +
                                        std::to_string(zhat.rows()));
        RMatrix r(2 * symbols_, zhat.cols());
        for (Eigen::Index b = 0; b < zhat.cols(); ++b)
            r.col(b) = unpack_symbols(zhat.col(b));
        return dec_.forward(decoder_params(), r);
    }

    RVector JsccCodec::decode(const CVector &zhat) const
    {
        CMatrix m = zhat;
        return decode_batch(m).col(0);
    }

    // ----- Channel uses -----------------------------------------------------------------

    ChannelUse draw_channel_use(const LinkConfig &link, const std::optional<NoiseModel> &noise, int symbols, Rng &rng,
                                const CsiCodebook *feedback_codebook)
    {
        ChannelMatrix h = generate_channel(link.channel, rng);
        std::optional<QuantizedCsi> fb;
        if (feedback_codebook)
            fb = quantize_csi(h, *feedback_codebook);
        const ChannelMatrix &fed_back = fb ? fb->recovered : h;
        const PrecoderPair p = build_precoders(h, fed_back, link.streams, link.strategy, link.combiner);
        EqualizedLink eq(h, p, link.equalize);
        CMatrix n = eq.draw_noise(symbols, noise, rng);
        return ChannelUse{std::move(h), std::move(fb), std::move(eq), std::move(n)};
    }

    RMatrix transmit_images(const JsccCodec &codec, std::span<const ImageSample> images, std::span<const ChannelUse> uses)
    {
        if (images.size() != uses.size())
            throw std::invalid_argument("need exactly one channel use per image");
        const CMatrix z = codec.encode_batch(images);
        CMatrix zhat(z.rows(), z.cols());
        for (Eigen::Index b = 0; b < z.cols(); ++b)
        {
            const auto &u = uses[static_cast<std::size_t>(b)];
            zhat.col(b) = u.link.forward(z.col(b), u.noise);
        }
        return codec.decode_batch(zhat);
    }

    double codec_loss(const JsccCodec &codec, std::span<const ImageSample> batch, std::span<const ChannelUse> uses,
                      std::vector<double> *grad)
    {
        if (batch.empty())
            throw std::invalid_argument("empty batch");
        if (batch.size() != uses.size())
            throw std::invalid_argument("need exactly one channel use per image");

        const int n = codec.image_dim(), k = codec.symbol_count();
        const auto nb = static_cast<Eigen::Index>(batch.size());
        const RMatrix x = stack_pixels(batch, n);

        nn::MlpCache enc_cache, dec_cache;
        const RMatrix r = codec.encoder().forward(codec.encoder_params(), x, grad ? &enc_cache : nullptr);

        RMatrix zhat_real(2 * k, nb);
        for (Eigen::Index b = 0; b < nb; ++b)
        {
            const auto &u = uses[static_cast<std::size_t>(b)];
            const CVector z = power_normalize(pack_symbols(r.col(b)));
            zhat_real.col(b) = unpack_symbols(u.link.forward(z, u.noise));
        }
        const RMatrix y = codec.decoder().forward(codec.decoder_params(), zhat_real, grad ? &dec_cache : nullptr);

        const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(nb));
        const double loss = (y - x).squaredNorm() * scale;
        if (!grad)
            return loss;

        grad->assign(codec.params().size(), 0.0);
        std::span<double> g(*grad);
        const std::size_t n_enc = codec.encoder().param_count();

        const RMatrix dy = 2.0 * scale * (y - x);
        const RMatrix dzhat = codec.decoder().backward(codec.decoder_params(), dec_cache, dy, g.subspan(n_enc));

        RMatrix dr(2 * k, nb);
        const double c = std::sqrt(static_cast<double>(k));
        for (Eigen::Index b = 0; b < nb; ++b)
        {
            const auto &u = uses[static_cast<std::size_t>(b)];
            const RVector dz = unpack_symbols(u.link.backward(pack_symbols(dzhat.col(b))));
            // z = c r / ||r||  =>  dr = (c/||r||) (dz - r (r . dz) / ||r||^2)
            const RVector rb = r.col(b);
            const double nrm2 = rb.squaredNorm();
            const double nrm = std::sqrt(nrm2);
            dr.col(b) = (c / nrm) * (dz - rb * (rb.dot(dz) / nrm2));
        }
        codec.encoder().backward(codec.encoder_params(), enc_cache, dr, g.first(n_enc));
        return loss;
    }

    double train_step(JsccCodec &codec, nn::Adam &optimizer, std::span<const ImageSample> batch,
                      std::span<const ChannelUse> uses, double learning_rate, std::size_t batch_index)
    {
        std::vector<double> grad;
        const double loss = codec_loss(codec, batch, uses, &grad);
        if (!std::isfinite(loss))
            throw NonFiniteLossError(batch_index);
        optimizer.step(codec.params(), grad, learning_rate);
        return loss;
    }

    TrainHistory train(JsccCodec &codec, std::span<const ImageSample> dataset, const LinkConfig &link,
                       const TrainingConfig &config)
    {
        config.validate();
        link.validate();
        if (dataset.empty())
            throw std::invalid_argument("training set is empty");

        TrainHistory hist;
        if (config.epochs == 0)
            return hist;

        Rng rng = make_stream(config.seed, {0x7EA1ULL});
        const NoiseModel noise = snr_to_noise_variance(config.train_snr_db);
        nn::Adam opt(codec.params().size());

        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t step = 0;
        for (int epoch = 0; epoch < config.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), rng);
            const double lr = config.learning_rate_at(epoch);
            double acc = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size))
            {
                const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
                std::vector<ImageSample> batch;
                std::vector<ChannelUse> uses;
                batch.reserve(end - start);
                uses.reserve(end - start);
                for (std::size_t i = start; i < end; ++i)
                {
                    batch.push_back(dataset[order[i]]);
                    uses.push_back(draw_channel_use(link, noise, codec.symbol_count(), rng));
                }
                const double loss = train_step(codec, opt, batch, uses, lr, step++);
                hist.step_loss.push_back(loss);
                acc += loss;
                ++batches;
            }
            hist.epoch_loss.push_back(acc / static_cast<double>(batches));
        }
        return hist;
    }
}
