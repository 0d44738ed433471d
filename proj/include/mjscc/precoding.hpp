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

#ifndef MJSCC_PRECODING_HPP
#define MJSCC_PRECODING_HPP

#include "mjscc/mimo_channel.hpp"

#include <optional>

namespace mjscc
{
    enum class PrecoderStrategy
    {
        svd,
        zero_forcing,
    };

    // Which channel the receiver derives its combiner U from. The transmitter always uses the
    // fed-back (possibly quantized) channel for V.
    enum class CombinerSource
    {
        true_channel,
        fed_back_channel,
    };

    struct PrecoderPair
    {
        CMatrix tx_precoder; // V, N_t x d
        CMatrix rx_combiner; // U, N_r x d
        CVector stream_gains; // per-stream gain the receiver equalizes by, length d

        int num_streams() const { return static_cast<int>(tx_precoder.cols()); }
    };

    // V = first d right-singular vectors of channel_for_tx, U = first d left-singular vectors of
    // channel_for_rx. stream_gains = sigma_1..d when both channels are the same realization,
    // otherwise diag(U^H Hhat V) with Hhat = channel_for_tx.
    // Throws RankDeficientError when either channel has fewer than d usable singular values.
    PrecoderPair svd_precoders(const ChannelMatrix &channel_for_tx, const ChannelMatrix &channel_for_rx, int d);

    // U from channel_for_rx as above; V = normalized columns of (U^H Hhat)^+.
    PrecoderPair zf_precoders(const ChannelMatrix &channel_for_tx, const ChannelMatrix &channel_for_rx, int d);

    PrecoderPair build_precoders(const ChannelMatrix &true_channel, const ChannelMatrix &fed_back, int d,
                                 PrecoderStrategy strategy = PrecoderStrategy::svd,
                                 CombinerSource combiner = CombinerSource::true_channel);

    // U^H H V, the d x d channel the streams actually see.
    CMatrix effective_channel(const ChannelMatrix &h, const PrecoderPair &p);

    // xhat = U^H (H V x + n). No equalization; noise omitted when std::nullopt.
    CVector transmit_block(const CVector &x, const ChannelMatrix &h, const PrecoderPair &p,
                           const std::optional<NoiseModel> &noise, Rng &rng);

    // Equalized precoded link for one channel use: zhat_b = M x_b + W n_b per d-sized block, with
    // M = D U^H H V, W = D U^H, D = diag(1/gain) (identity when equalization is off).
    // The linear map is what the codec's backward pass differentiates through.
    class EqualizedLink
    {
    public:
        EqualizedLink(const ChannelMatrix &h, const PrecoderPair &p, bool equalize = true);

        int num_streams() const { return static_cast<int>(m_.rows()); }
        int num_rx() const { return static_cast<int>(w_.cols()); }
        static int num_blocks(int num_symbols, int d) { return (num_symbols + d - 1) / d; }

        // One column of receive noise per block, drawn in block order.
        CMatrix draw_noise(int num_symbols, const std::optional<NoiseModel> &noise, Rng &rng) const;

        CVector forward(const CVector &z, const CMatrix &noise_blocks) const;
        // Gradient w.r.t. z (as dL/dRe + j dL/dIm) given the same for zhat.
        CVector backward(const CVector &grad_zhat) const;

        const CMatrix &linear_map() const { return m_; }

    private:
        CMatrix m_;
        CMatrix w_;
    };

    // Splits z into ceil(K/d) blocks (zero-padded tail), sends each over the same realization,
    // equalizes, and strips the padding.
    CVector transmit_symbols(const CVector &z, const ChannelMatrix &h, const PrecoderPair &p,
                             const std::optional<NoiseModel> &noise, Rng &rng, bool equalize = true);
}

#endif
