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

#ifndef MJSCC_CSI_QUANTIZER_HPP
#define MJSCC_CSI_QUANTIZER_HPP

#include "mjscc/mimo_channel.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mjscc
{
    // Scalar codebook applied to every real and imaginary CSI component.
    // index(x) = number of thresholds <= x, so levels[k] lies in [thresholds[k-1], thresholds[k]).
    struct CsiCodebook
    {
        int bits = 0;
        std::vector<double> levels;     // 2^bits, strictly ascending
        std::vector<double> thresholds; // 2^bits - 1, ascending
        std::string fitted_on;          // free-form description of the training sample
        std::string config_hash;        // hash of the channel config the sample came from

        int index_of(double x) const;
        double quantize(double x) const { return levels[static_cast<std::size_t>(index_of(x))]; }
        void validate() const;
    };

    // Samples sorted once, with prefix sums, so each Lloyd iteration costs O(L log n).
    class SortedSamples
    {
    public:
        explicit SortedSamples(std::span<const double> samples);

        std::size_t size() const { return values_.size(); }
        const std::vector<double> &values() const { return values_; }
        std::size_t distinct_count() const { return distinct_; }
        double mean() const;
        double stddev() const;

        // First index whose value is >= t.
        std::size_t lower_index(double t) const;
        // Sum of (x - c)^2 over values[lo, hi).
        double sse(std::size_t lo, std::size_t hi, double c) const;
        double sum(std::size_t lo, std::size_t hi) const { return prefix_[hi] - prefix_[lo]; }

    private:
        std::vector<double> values_;
        std::vector<double> prefix_;
        std::vector<double> prefix_sq_;
        std::size_t distinct_ = 0;
    };

    struct LloydMaxOptions
    {
        double tol = 1e-8;
        int max_iters = 200;
    };

    struct LloydMaxTrace
    {
        double initial_mse = 0.0;        // the uniform starting quantizer
        std::vector<double> mse_history; // after each full (centroid + nearest-neighbor) iteration
        int reseeded_cells = 0;
    };

    // Uniform quantizer with 2^bits equal cells on [lo, hi]; levels at the cell centers.
    CsiCodebook uniform_codebook(int bits, double lo, double hi);

    // Lloyd-Max design starting from the uniform quantizer on mean +/- 4 standard deviations.
    // Empty cells are re-seeded at the sample currently farthest from its level.
    // Throws std::invalid_argument on bits outside [1, 8] or fewer than 2^bits distinct samples.
    CsiCodebook fit_lloyd_max(const SortedSamples &samples, int bits, LloydMaxOptions options = {},
                              LloydMaxTrace *trace = nullptr);
    CsiCodebook fit_lloyd_max(std::span<const double> samples, int bits, LloydMaxOptions options = {},
                              LloydMaxTrace *trace = nullptr);

    double quantizer_mse(const SortedSamples &samples, const CsiCodebook &codebook);
    double quantizer_mse(std::span<const double> samples, const CsiCodebook &codebook);

    struct QuantizedCsi
    {
        Eigen::MatrixXi real_index;
        Eigen::MatrixXi imag_index;
        ChannelMatrix recovered;
        int bits = 0;

        // Feedback payload: 2 * N_t * N_r * b bits.
        long payload_bits() const { return 2L * real_index.size() * bits; }
    };

    QuantizedCsi quantize_csi(const ChannelMatrix &h, const CsiCodebook &codebook);
    ChannelMatrix dequantize_csi(const Eigen::MatrixXi &real_index, const Eigen::MatrixXi &imag_index,
                                 const CsiCodebook &codebook);

    // ||H - Hhat||_F^2 / ||H||_F^2 for one realization.
    double nmse(const ChannelMatrix &h, const ChannelMatrix &h_hat);

    // Real and imaginary parts of every entry of num_channels fresh realizations.
    std::vector<double> pooled_channel_samples(const ClusterConfig &config, int num_channels, Rng &rng);

    // One fitted codebook per bit depth, all trained on the same pooled sample.
    class CodebookSet
    {
    public:
        CodebookSet() = default;
        void add(CsiCodebook cb);
        const CsiCodebook &at(int bits) const;
        bool contains(int bits) const { return books_.count(bits) != 0; }
        std::vector<int> bit_depths() const;

    private:
        std::map<int, CsiCodebook> books_;
    };

    CodebookSet fit_channel_codebooks(const ClusterConfig &config, const std::vector<int> &bits,
                                      int num_channels, std::uint64_t seed, const std::string &config_hash,
                                      LloydMaxOptions options = {});

    // Versioned text file, 17 significant digits per value (bit-exact reload).
    void save_codebook(const std::string &path, const CsiCodebook &codebook);
    CsiCodebook load_codebook(const std::string &path);
}

#endif
