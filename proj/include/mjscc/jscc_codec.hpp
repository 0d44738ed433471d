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

#ifndef MJSCC_JSCC_CODEC_HPP
#define MJSCC_JSCC_CODEC_HPP

#include "mjscc/csi_quantizer.hpp"
#include "mjscc/image.hpp"
#include "mjscc/nn.hpp"
#include "mjscc/precoding.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mjscc
{
    struct CodecSpec
    {
        int image_dim = 192; // N, 8x8x3 desk-scale crops
        int symbols = 32;    // K complex channel symbols
        int hidden = 256;

        void validate() const;
    };

    // The MIMO link an image is sent over.
    struct LinkConfig
    {
        ClusterConfig channel;
        int streams = 2;
        PrecoderStrategy strategy = PrecoderStrategy::svd;
        CombinerSource combiner = CombinerSource::true_channel;
        bool equalize = true;

        void validate() const;
    };

    struct TrainingConfig
    {
        double learning_rate = 1e-3;
        int batch_size = 128;
        int epochs = 30;
        double train_snr_db = 6.0;
        std::uint64_t seed = 1;

        void validate() const;
        // Halved after each third of the epoch budget.
        double learning_rate_at(int epoch) const;
    };

    // Scale to unit average symbol power: z = z_raw * sqrt(K / sum |z_raw|^2).
    CVector power_normalize(const CVector &z_raw);

    // 2K interleaved reals (re0, im0, re1, im1, ...) <-> K complex symbols.
    CVector pack_symbols(const RVector &reals);
    RVector unpack_symbols(const CVector &symbols);

    // Encoder N -> hidden -> 2K (softplus, identity) followed by power normalization;
    // decoder 2K -> hidden -> N (softplus, sigmoid). Encoder and decoder parameters share one flat
    // array, encoder first.
    class JsccCodec
    {
    public:
        static JsccCodec create(const CodecSpec &spec, std::uint64_t seed);
        static JsccCodec from_checkpoint(const nn::Checkpoint &ckpt);
        nn::Checkpoint to_checkpoint() const;

        int symbol_count() const { return symbols_; }
        int image_dim() const { return image_dim_; }
        std::uint64_t seed() const { return seed_; }
        std::string layer_spec() const;

        const nn::Mlp &encoder() const { return enc_; }
        const nn::Mlp &decoder() const { return dec_; }
        std::vector<double> &params() { return params_; }
        const std::vector<double> &params() const { return params_; }
        std::span<const double> encoder_params() const { return {params_.data(), enc_.param_count()}; }
        std::span<const double> decoder_params() const
        {
            return {params_.data() + enc_.param_count(), dec_.param_count()};
        }

        CVector encode(const ImageSample &s) const;
        // Columns are images / symbol vectors.
        CMatrix encode_batch(std::span<const ImageSample> batch) const;
        RVector decode(const CVector &zhat) const;
        RMatrix decode_batch(const CMatrix &zhat) const;

    private:
        JsccCodec(std::vector<nn::DenseSpec> enc, std::vector<nn::DenseSpec> dec, int symbols, std::uint64_t seed);

        nn::Mlp enc_;
        nn::Mlp dec_;
        std::vector<double> params_;
        int symbols_ = 0;
        int image_dim_ = 0;
        std::uint64_t seed_ = 0;
    };

    // One image's block-fading channel use: the realization, the precoded link built from it (and
    // from the fed-back CSI), and the receive noise for every block. Fixed once drawn, so the
    // channel acts as a linear map plus a constant in the backward pass.
    struct ChannelUse
    {
        ChannelMatrix channel;
        std::optional<QuantizedCsi> feedback; // empty for perfect CSI
        EqualizedLink link;
        CMatrix noise;
    };

    // Draws H, then (if a codebook is given) quantizes it for feedback, then draws the noise.
    ChannelUse draw_channel_use(const LinkConfig &link, const std::optional<NoiseModel> &noise, int symbols, Rng &rng,
                                const CsiCodebook *feedback_codebook = nullptr);

    // Full chain encode -> equalized MIMO link -> decode for each image; columns are reconstructions.
    RMatrix transmit_images(const JsccCodec &codec, std::span<const ImageSample> images,
                            std::span<const ChannelUse> uses);

    // Batch-mean of per-image MSE (1/N) sum (s - shat)^2 through the full chain. When grad is
    // non-null it receives dL/dparams (same layout as codec.params()).
    double codec_loss(const JsccCodec &codec, std::span<const ImageSample> batch, std::span<const ChannelUse> uses,
                      std::vector<double> *grad = nullptr);

    // One adaptive-moment update. Throws NonFiniteLossError(batch_index) on a non-finite loss,
    // leaving the parameters untouched.
    double train_step(JsccCodec &codec, nn::Adam &optimizer, std::span<const ImageSample> batch,
                      std::span<const ChannelUse> uses, double learning_rate, std::size_t batch_index);

    struct TrainHistory
    {
        std::vector<double> step_loss;
        std::vector<double> epoch_loss;
    };

    // Shuffled mini-batches, fresh perfect-CSI channel and noise per image per batch.
    TrainHistory train(JsccCodec &codec, std::span<const ImageSample> dataset, const LinkConfig &link,
                       const TrainingConfig &config);
}

#endif
