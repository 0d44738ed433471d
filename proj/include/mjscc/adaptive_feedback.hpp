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

#ifndef MJSCC_ADAPTIVE_FEEDBACK_HPP
#define MJSCC_ADAPTIVE_FEEDBACK_HPP

#include "mjscc/quality_evaluator.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mjscc
{
    enum class AllocationPolicy
    {
        uniform,
        group_split,
        min_bits_search,
    };

    std::string to_string(AllocationPolicy p);
    AllocationPolicy parse_policy(const std::string &s);

    // Per-image CSI feedback bits (bits per real CSI element).
    struct AllocationPlan
    {
        std::vector<int> option_bits; // descending
        std::map<int, int> assignment; // source_id -> bits
        double average_bits = 0.0;
        AllocationPolicy policy = AllocationPolicy::uniform;

        int bits_for(int source_id) const;
        // Sum over images of 2 * N_t * N_r * b_i.
        long long total_feedback_bits(int num_tx, int num_rx) const;
        void validate() const;
    };

    struct OutageSpec
    {
        double threshold_psnr_db = 0.0;

        void validate() const; // finite
    };

    struct Outcome
    {
        int source_id = 0;
        double psnr_db = 0.0;
    };

    // |{i : PSNR_i >= threshold}| / M. Any non-NaN threshold is accepted here, including +-inf.
    double success_ratio(std::span<const Outcome> outcomes, double threshold_db);
    double success_ratio(std::span<const Outcome> outcomes, const OutageSpec &spec);

    AllocationPlan uniform_allocation(std::span<const QualityPrediction> predictions, int bits);

    // Sorted by predicted PSNR (ties: ascending source_id). The lower-predicted half gets high_bits,
    // the upper half low_bits; an odd count puts the middle image in the high-bits group.
    AllocationPlan group_split_allocation(std::span<const QualityPrediction> predictions, int high_bits,
                                          int low_bits);

    // bits -> expected PSNR loss (dB) of b-bit feedback relative to perfect CSI.
    using DegradationTable = std::map<int, double>;

    // Per image the smallest b in option_bits with predicted - penalty(b) >= threshold,
    // else max(option_bits).
    AllocationPlan min_bits_search(std::span<const QualityPrediction> predictions, std::vector<int> option_bits,
                                   const OutageSpec &spec, const DegradationTable &table);

    // Per-image PSNR of one shared channel/noise draw under several CSI conditions. Column 0 bits
    // stands for perfect CSI. Image i's draws come from a stream keyed by (seed, source_id,
    // realization) only, so every column and every policy sees the same channel and noise.
    struct OutcomeTable
    {
        std::vector<int> source_ids;
        std::vector<int> bit_depths;
        RMatrix psnr_db;                // images x bit_depths, mean over realizations
        std::vector<double> mean_nmse;  // per bit depth; 0 for perfect CSI
        int realizations = 1;

        int column(int bits) const;
        double psnr(std::size_t image, int bits) const { return psnr_db(static_cast<Eigen::Index>(image), column(bits)); }
        std::vector<Outcome> outcomes_at(int bits) const;
        std::vector<Outcome> outcomes_for(const AllocationPlan &plan) const;
    };

    inline constexpr int kPerfectCsi = 0;

    OutcomeTable simulate_outcomes(const JsccCodec &codec, std::span<const ImageSample> images,
                                   const LinkConfig &link, const CodebookSet &codebooks,
                                   const std::vector<int> &bit_depths, double snr_db, int realizations,
                                   std::uint64_t seed);

    // penalty(b) = max(0, mean_i[PSNR_i(perfect) - PSNR_i(b)]) over `realizations` draws per image.
    DegradationTable calibrate_degradation(const JsccCodec &codec, std::span<const ImageSample> validation,
                                           const LinkConfig &link, const CodebookSet &codebooks,
                                           const std::vector<int> &option_bits, double snr_db, int realizations,
                                           std::uint64_t seed);

    void save_degradation_csv(const std::string &path, const DegradationTable &table);
    DegradationTable load_degradation_csv(const std::string &path);

    struct PolicyResult
    {
        AllocationPlan plan;
        std::vector<Outcome> outcomes;
        double success_ratio = 0.0;
        double average_bits = 0.0;
        long long total_bits = 0;
        double mean_psnr_db = 0.0;
        std::map<int, double> mean_nmse; // per bit depth used by the plan
    };

    // Aggregates a plan against a precomputed table.
    PolicyResult evaluate_plan(const OutcomeTable &table, const AllocationPlan &plan, const OutageSpec &spec,
                               int num_tx, int num_rx);

    struct PolicySpec
    {
        AllocationPolicy policy = AllocationPolicy::uniform;
        std::vector<int> option_bits; // uniform: {b}; group_split: {high, low}; min_bits_search: options
    };

    AllocationPlan make_plan(const PolicySpec &spec, std::span<const QualityPrediction> predictions,
                             const OutageSpec &outage, const DegradationTable *table);

    // predict -> allocate -> channel -> quantize -> mismatched precoders -> transmit -> decode -> PSNR.
    PolicyResult run_adaptive_experiment(const JsccCodec &codec, std::span<const ImageSample> images,
                                         std::span<const QualityPrediction> predictions, const LinkConfig &link,
                                         const CodebookSet &codebooks, const PolicySpec &policy,
                                         const OutageSpec &outage, double snr_db, std::uint64_t seed,
                                         const DegradationTable *table = nullptr);

    // "7,6,5"
    std::string format_bits(const std::vector<int> &bits);
    std::vector<int> parse_bits(const std::string &s);
}

#endif
