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

#ifndef MJSCC_QUALITY_EVALUATOR_HPP
#define MJSCC_QUALITY_EVALUATOR_HPP

#include "mjscc/jscc_codec.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mjscc
{
    struct QualityPrediction
    {
        int source_id = 0;
        double predicted_psnr_db = 0.0;
        std::optional<double> true_psnr_db;
        std::optional<double> tolerance_db; // predicted - threshold, once a threshold is bound

        QualityPrediction with_threshold(double threshold_db) const
        {
            QualityPrediction q = *this;
            q.tolerance_db = predicted_psnr_db - threshold_db;
            return q;
        }
    };

    // One row of a labeled set (CSV: source_id,true_psnr_db,snr_db,realizations).
    struct QualityLabel
    {
        int source_id = 0;
        double true_psnr_db = 0.0;
        double snr_db = 0.0;
        int realizations = 0;
    };

    // Per image: mean PSNR over `realizations` independent perfect-CSI channel/noise draws.
    // Streams are keyed by (seed, source_id, realization), so labels do not depend on set order.
    std::vector<QualityLabel> label_dataset(const JsccCodec &codec, std::span<const ImageSample> images,
                                            const LinkConfig &link, double snr_db, int realizations,
                                            std::uint64_t seed);

    void save_labels_csv(const std::string &path, const std::vector<QualityLabel> &labels);
    std::vector<QualityLabel> load_labels_csv(const std::string &path);

    // Labels reordered to match `images` by source_id; throws if any image is unlabeled.
    std::vector<double> labels_for(std::span<const ImageSample> images, const std::vector<QualityLabel> &labels);

    struct EvaluatorSpec
    {
        int image_dim = 192;
        int hidden = 64;
        bool bias_only = false; // single-parameter constant predictor

        void validate() const;
    };

    struct EvaluatorTrainingConfig
    {
        double learning_rate = 1e-3;
        int batch_size = 128;
        int epochs = 150;
        std::uint64_t seed = 1;

        void validate() const;
    };

    // Regressor image -> predicted PSNR (dB): N -> hidden (softplus) -> 1 (identity).
    class Evaluator
    {
    public:
        // initial_output seeds the output bias (e.g. the label mean).
        static Evaluator create(const EvaluatorSpec &spec, std::uint64_t seed, double initial_output = 0.0);
        static Evaluator from_checkpoint(const nn::Checkpoint &ckpt);
        nn::Checkpoint to_checkpoint() const;

        const nn::Mlp &network() const { return net_; }
        std::vector<double> &params() { return params_; }
        const std::vector<double> &params() const { return params_; }
        int image_dim() const { return net_.input_dim(); }

        QualityPrediction predict(const ImageSample &s) const;
        std::vector<double> predict_batch(std::span<const ImageSample> images) const;

        // (1/B) sum (prediction - label)^2, with optional gradient.
        double loss(std::span<const ImageSample> images, std::span<const double> labels,
                    std::vector<double> *grad = nullptr) const;

    private:
        explicit Evaluator(std::vector<nn::DenseSpec> layers, std::uint64_t seed);

        nn::Mlp net_;
        std::vector<double> params_;
        std::uint64_t seed_ = 0;
    };

    struct EvaluatorHistory
    {
        std::vector<double> epoch_loss;
    };

    EvaluatorHistory train_evaluator(Evaluator &evaluator, std::span<const ImageSample> images,
                                     std::span<const double> labels, const EvaluatorTrainingConfig &config);

    // Predictions := true labels. Isolates allocation-policy behavior from predictor error.
    std::vector<QualityPrediction> oracle_predictions(std::span<const ImageSample> images,
                                                      const std::vector<QualityLabel> &labels);
    std::vector<QualityPrediction> evaluator_predictions(const Evaluator &evaluator,
                                                         std::span<const ImageSample> images,
                                                         const std::vector<QualityLabel> *labels = nullptr);
}

#endif
