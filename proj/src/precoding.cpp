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

#include "mjscc/precoding.hpp"

#include <cmath>

namespace mjscc
{
    namespace
    {
        int usable_streams(const ChannelMatrix &h)
        {
            const RVector &s = h.svd_sigma();
            if (s.size() == 0 || s(0) == 0.0)
                return 0;
            const double tol = s(0) * 1e-12 * std::max(h.num_rx(), h.num_tx());
            int n = 0;
            while (n < s.size() && s(n) > tol)
                ++n;
            return n;
        }

        void check_pair(const ChannelMatrix &tx, const ChannelMatrix &rx, int d)
        {
            if (tx.num_rx() != rx.num_rx() || tx.num_tx() != rx.num_tx())
                throw std::invalid_argument("transmitter and receiver channels differ in shape");
            if (d < 1 || d > std::min(tx.num_rx(), tx.num_tx()))
                throw std::invalid_argument("stream count must be in [1, min(N_t, N_r)]");
            for (const ChannelMatrix *h : {&tx, &rx})
            {
                const int usable = usable_streams(*h);
                if (usable < d)
                    throw RankDeficientError("channel supports only " + std::to_string(usable) +
                                                 " usable streams, " + std::to_string(d) + " requested",
                                             usable);
            }
        }

        CVector diag_gains(const ChannelMatrix &tx, const ChannelMatrix &rx, const PrecoderPair &p)
        {
            const int d = p.num_streams();
            if (&tx == &rx || tx.entries() == rx.entries())
                return tx.svd_sigma().head(d).cast<cdouble>();
            return (p.rx_combiner.adjoint() * tx.entries() * p.tx_precoder).diagonal();
        }
    }

    PrecoderPair svd_precoders(const ChannelMatrix &channel_for_tx, const ChannelMatrix &channel_for_rx, int d)
    {
        check_pair(channel_for_tx, channel_for_rx, d);
        PrecoderPair p;
        p.tx_precoder = channel_for_tx.svd_v().leftCols(d);
        p.rx_combiner = channel_for_rx.svd_u().leftCols(d);
        p.stream_gains = diag_gains(channel_for_tx, channel_for_rx, p);
        return p;
    }

    PrecoderPair zf_precoders(const ChannelMatrix &channel_for_tx, const ChannelMatrix &channel_for_rx, int d)
    {
        check_pair(channel_for_tx, channel_for_rx, d);
        PrecoderPair p;
        p.rx_combiner = channel_for_rx.svd_u().leftCols(d);
        const CMatrix h_eff = p.rx_combiner.adjoint() * channel_for_tx.entries(); // d x N_t
        const CMatrix gram = h_eff * h_eff.adjoint();
        CMatrix v = h_eff.adjoint() * gram.ldlt().solve(CMatrix::Identity(d, d));
        for (int i = 0; i < d; ++i)
            v.col(i) /= v.col(i).norm();
        p.tx_precoder = std::move(v);
        p.stream_gains = (p.rx_combiner.adjoint() * channel_for_tx.entries() * p.tx_precoder).diagonal();
        return p;
    }

    PrecoderPair build_precoders(const ChannelMatrix &true_channel, const ChannelMatrix &fed_back, int d,
                                 PrecoderStrategy strategy, CombinerSource combiner)
    {
        const ChannelMatrix &rx = combiner == CombinerSource::true_channel ? true_channel : fed_back;
        return strategy == PrecoderStrategy::svd ? svd_precoders(fed_back, rx, d) : zf_precoders(fed_back, rx, d);
    }

    CMatrix effective_channel(const ChannelMatrix &h, const PrecoderPair &p)
    {
        return p.rx_combiner.adjoint() * h.entries() * p.tx_precoder;
    }

    CVector transmit_block(const CVector &x, const ChannelMatrix &h, const PrecoderPair &p,
                           const std::optional<NoiseModel> &noise, Rng &rng)
    {
        if (x.size() != p.num_streams())
            throw std::invalid_argument("symbol block length must equal the stream count");
        if (p.tx_precoder.rows() != h.num_tx() || p.rx_combiner.rows() != h.num_rx())
            throw std::invalid_argument("precoder dimensions do not match the channel");
        CVector y = h.entries() * (p.tx_precoder * x);
        if (noise)
            y += mjscc::draw_noise(*noise, h.num_rx(), rng);
        return p.rx_combiner.adjoint() * y;
    }

    EqualizedLink::EqualizedLink(const ChannelMatrix &h, const PrecoderPair &p, bool equalize)
    {
        if (p.tx_precoder.rows() != h.num_tx() || p.rx_combiner.rows() != h.num_rx())
            throw std::invalid_argument("precoder dimensions do not match the channel");
        w_ = p.rx_combiner.adjoint();
        if (equalize)
            w_ = p.stream_gains.cwiseInverse().asDiagonal() * w_;
        m_ = w_ * h.entries() * p.tx_precoder;
    }

    CMatrix EqualizedLink::draw_noise(int num_symbols, const std::optional<NoiseModel> &noise, Rng &rng) const
    {
        const int blocks = num_blocks(num_symbols, num_streams());
        if (!noise)
            return CMatrix::Zero(num_rx(), blocks);
        CMatrix n(num_rx(), blocks);
        for (int b = 0; b < blocks; ++b)
            n.col(b) = mjscc::draw_noise(*noise, num_rx(), rng);
        return n;
    }

    CVector EqualizedLink::forward(const CVector &z, const CMatrix &noise_blocks) const
    {
        const int d = num_streams();
        const auto k = static_cast<int>(z.size());
        const int blocks = num_blocks(k, d);
        if (noise_blocks.cols() != blocks || noise_blocks.rows() != num_rx())
            throw std::invalid_argument("noise block matrix has the wrong shape");

        CVector padded = CVector::Zero(static_cast<Eigen::Index>(blocks) * d);
        padded.head(k) = z;
        const Eigen::Map<const CMatrix> x(padded.data(), d, blocks);
        const CMatrix xhat = m_ * x + w_ * noise_blocks;
        return Eigen::Map<const CVector>(xhat.data(), k);
    }

    CVector EqualizedLink::backward(const CVector &grad_zhat) const
    {
        const int d = num_streams();
        const auto k = static_cast<int>(grad_zhat.size());
        const int blocks = num_blocks(k, d);
        CVector padded = CVector::Zero(static_cast<Eigen::Index>(blocks) * d);
        padded.head(k) = grad_zhat;
        const Eigen::Map<const CMatrix> g(padded.data(), d, blocks);
        const CMatrix gx = m_.adjoint() * g;
        return Eigen::Map<const CVector>(gx.data(), k);
    }

    CVector transmit_symbols(const CVector &z, const ChannelMatrix &h, const PrecoderPair &p,
                             const std::optional<NoiseModel> &noise, Rng &rng, bool equalize)
    {
        EqualizedLink link(h, p, equalize);
        const CMatrix n = link.draw_noise(static_cast<int>(z.size()), noise, rng);
        return link.forward(z, n);
    }
}
