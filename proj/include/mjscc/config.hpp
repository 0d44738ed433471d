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

#ifndef MJSCC_CONFIG_HPP
#define MJSCC_CONFIG_HPP

#include "mjscc/jscc_codec.hpp"
#include "mjscc/quality_evaluator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mjscc
{
    // Threshold list: explicit values, or "auto:n" = n interior points of an even grid over the
    // [min, max] range of the test-set labels.
    struct ThresholdSpec
    {
        std::vector<double> values;
        int auto_points = 0; // > 0 selects auto mode

        std::vector<double> resolve(double lo, double hi) const;
        std::string to_string() const;
        static ThresholdSpec parse(const std::string &s);
    };

    enum class PredictorMode
    {
        oracle,
        evaluator,
    };

    // Everything that determines a run's results, plus the seed list and thread count, which do not
    // enter the config hash.
    struct ExperimentConfig
    {
        // channel and link
        int num_clusters = 2;
        int rays_per_cluster = 4;
        double antenna_spacing = 0.5;
        double ray_spread_deg = 7.5;
        int antennas = 16; // N_t = N_r for fig5/fig6 and labeling
        std::vector<int> fig4_antennas{4, 16};
        int streams = 2;
        PrecoderStrategy precoder = PrecoderStrategy::svd;
        CombinerSource combiner = CombinerSource::true_channel;

        // data
        std::string data_source = "synthetic"; // or a CIFAR-10 binary batch path
        int image_side = 8;
        double complexity_mix = 0.5;
        int train_count = 2048;
        int validation_count = 256;
        int test_count = 512;
        std::uint64_t data_seed = 7;

        // models
        CodecSpec codec;
        TrainingConfig training;
        EvaluatorSpec evaluator;
        EvaluatorTrainingConfig evaluator_training;
        std::uint64_t artifact_seed = 1;

        // quantizer
        std::vector<int> quantizer_bits{5, 6, 7};
        int quantizer_fit_channels = 10000;

        // labels and calibration
        double label_snr_db = 6.0;
        int label_realizations = 4;
        int calibration_realizations = 2;

        // sweeps
        std::vector<double> fig4_snr_db{-6.0, 0.0, 6.0, 12.0, 18.0};
        double eval_snr_db = 6.0;
        std::vector<int> fig5_uniform_bits{5, 6, 7};
        std::vector<int> fig5_split{7, 5};
        ThresholdSpec fig5_thresholds{{}, 10};
        PredictorMode fig5_predictor = PredictorMode::oracle;
        std::vector<std::vector<int>> fig6_option_sets{{7}, {7, 6}, {7, 6, 5}};
        ThresholdSpec fig6_thresholds{{}, 3};
        PredictorMode fig6_predictor = PredictorMode::evaluator;

        // not hashed
        std::vector<std::uint64_t> seeds{1, 2, 3};
        int threads = 1;

        void validate() const;
        LinkConfig link(int antennas) const;
        // Union of every bit depth any sweep uses.
        std::vector<int> required_bits() const;

        // Canonical "key = value" text with the version header; round-trips through parse.
        std::string serialize(bool include_unhashed = true) const;
        static ExperimentConfig parse(const std::string &text, const std::string &origin = "<string>");
        static ExperimentConfig load(const std::string &path);
        void save(const std::string &path) const;

        // First 12 hex digits of SHA-1 over the canonical text without seeds and threads.
        std::string hash() const;
    };

    std::vector<std::uint64_t> parse_seed_list(const std::string &s);
}

#endif
