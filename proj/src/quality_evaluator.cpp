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

#include "mjscc/quality_evaluator.hpp"

#include "mjscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace mjscc
{
    std::vector<QualityLabel> label_dataset(const JsccCodec &codec, std::span<const ImageSample> images,
                                            const LinkConfig &link, double snr_db, int realizations,
                                            std::uint64_t seed)
    {
        if (realizations < 1)
            throw std::invalid_argument("need at least one realization per image");
        link.validate();
        const NoiseModel noise = snr_to_noise_variance(snr_db);

        std::vector<double> acc(images.size(), 0.0);
        constexpr std::size_t chunk = 256;
        for (int r = 0; r < realizations; ++r)
            for (std::size_t start = 0; start < images.size(); start += chunk)
            {
                const std::size_t end = std::min(images.size(), start + chunk);
                std::vector<ChannelUse> uses;
                uses.reserve(end - start);
                for (std::size_t i = start; i < end; ++i)
                {
                    Rng rng = make_stream(seed, {0x1ABE1ULL, static_cast<std::uint64_t>(images[i].source_id),
                                                 static_cast<std::uint64_t>(r)});
                    uses.push_back(draw_channel_use(link, noise, codec.symbol_count(), rng));
                }
                const auto batch = images.subspan(start, end - start);
                const RMatrix rec = transmit_images(codec, batch, uses);
                for (std::size_t i = start; i < end; ++i)
                    acc[i] += psnr(images[i], rec.col(static_cast<Eigen::Index>(i - start)));
            }

        std::vector<QualityLabel> out;
        out.reserve(images.size());
        for (std::size_t i = 0; i < images.size(); ++i)
            out.push_back({images[i].source_id, acc[i] / realizations, snr_db, realizations});
        return out;
    }

    void save_labels_csv(const std::string &path, const std::vector<QualityLabel> &labels)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        out << "source_id,true_psnr_db,snr_db,realizations\n";
        char buf[128];
        for (const auto &l : labels)
        {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", l.source_id, l.true_psnr_db, l.snr_db, l.realizations);
            out << buf;
        }
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    std::vector<QualityLabel> load_labels_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        std::string line;
        if (!std::getline(in, line) || line != "source_id,true_psnr_db,snr_db,realizations")
            throw std::runtime_error(path + ": unexpected label CSV header");
        std::vector<QualityLabel> out;
        int lineno = 1;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            std::istringstream is(line);
            std::string f[4];
            for (auto &s : f)
                if (!std::getline(is, s, ','))
                    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 4 fields");
            try
            {
                out.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stoi(f[3])});
            }
            catch (const std::exception &)
            {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed number");
            }
        }
        return out;
    }

    std::vector<double> labels_for(std::span<const ImageSample> images, const std::vector<QualityLabel> &labels)
    {
        std::unordered_map<int, double> by_id;
        for (const auto &l : labels)
            by_id[l.source_id] = l.true_psnr_db;
        std::vector<double> out;
        out.reserve(images.size());
        for (const auto &s : images)
        {
            auto it = by_id.find(s.source_id);
            if (it == by_id.end())
                throw std::invalid_argument("no label for image " + std::to_string(s.source_id));
            out.push_back(it->second);
        }
        return out;
    }

    // ----- Evaluator ---------------------------------------------------------------------

    void EvaluatorSpec::validate() const
    {
        if (image_dim < 1 || (!bias_only && hidden < 1))
            throw std::invalid_argument("evaluator dimensions must be positive");
    }

    void EvaluatorTrainingConfig::validate() const
    {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw std::invalid_argument("learning rate must be nonnegative and finite");
        if (batch_size < 1 || epochs < 0)
            throw std::invalid_argument("invalid evaluator batch size or epoch count");
    }

    Evaluator::Evaluator(std::vector<nn::DenseSpec> layers, std::uint64_t seed) : net_(std::move(layers)), seed_(seed)
    {
        if (net_.output_dim() != 1)
            throw std::invalid_argument("evaluator must output a single value");
        params_.assign(net_.param_count(), 0.0);
    }

    Evaluator Evaluator::create(const EvaluatorSpec &spec, std::uint64_t seed, double initial_output)
    {
        spec.validate();
        using nn::Activation;
        std::vector<nn::DenseSpec> layers;
        if (spec.bias_only)
            layers = {{spec.image_dim, 1, Activation::identity, true}};
        else
            layers = {{spec.image_dim, spec.hidden, Activation::softplus}, {spec.hidden, 1, Activation::identity}};
        Evaluator e(std::move(layers), seed);
        Rng rng = make_stream(seed, {0xE7A1ULL});
        e.net_.init(e.params_, rng);
        e.params_.back() = initial_output; // output bias is the last parameter
        return e;
    }

    nn::Checkpoint Evaluator::to_checkpoint() const
    {
        nn::Checkpoint c;
        c.kind = "quality-evaluator";
        c.layer_spec = nn::to_string(net_.layers());
        c.symbols = 0;
        c.image_dim = net_.input_dim();
        c.seed = seed_;
        c.params = params_;
        return c;
    }

    Evaluator Evaluator::from_checkpoint(const nn::Checkpoint &ckpt)
    {
        if (ckpt.kind != "quality-evaluator")
            throw std::invalid_argument("checkpoint holds a '" + ckpt.kind + "', not an evaluator");
        Evaluator e(nn::parse_layers(ckpt.layer_spec), ckpt.seed);
        if (e.net_.input_dim() != ckpt.image_dim || ckpt.params.size() != e.params_.size())
            throw std::invalid_argument("checkpoint header disagrees with its layer spec");
        e.params_ = ckpt.params;
        return e;
    }

    namespace
    {
        RMatrix stack(std::span<const ImageSample> images, int n)
        {
            RMatrix x(n, static_cast<Eigen::Index>(images.size()));
            for (std::size_t i = 0; i < images.size(); ++i)
            {
                if (images[i].size() != n)
                    throw std::invalid_argument("image " + std::to_string(images[i].source_id) + " has " +
                                                std::to_string(images[i].size()) + " pixels, evaluator expects " +
                                                std::to_string(n));
                x.col(static_cast<Eigen::Index>(i)) = images[i].pixels;
            }
            return x;
        }
    }

    std::vector<double> Evaluator::predict_batch(std::span<const ImageSample> images) const
    {
        const RMatrix y = net_.forward(params_, stack(images, image_dim()));
        return std::vector<double>(y.data(), y.data() + y.size());
    }

    QualityPrediction Evaluator::predict(const ImageSample &s) const
    {
        QualityPrediction q;
        q.source_id = s.source_id;
        q.predicted_psnr_db = predict_batch(std::span<const ImageSample>(&s, 1)).front();
        return q;
    }

    double Evaluator::loss(std::span<const ImageSample> images, std::span<const double> labels,
                           std::vector<double> *grad) const
    {
        if (images.empty() || images.size() != labels.size())
            throw std::invalid_argument("evaluator loss needs one label per image");
        nn::MlpCache cache;
        const RMatrix y = net_.forward(params_, stack(images, image_dim()), grad ? &cache : nullptr);
        const Eigen::Map<const RVector> t(labels.data(), static_cast<Eigen::Index>(labels.size()));
        const RVector diff = y.row(0).transpose() - t;
        const double b = static_cast<double>(labels.size());
        const double l = diff.squaredNorm() / b;
        if (grad)
        {
            grad->assign(params_.size(), 0.0);
            const RMatrix dy = (2.0 / b) * diff.transpose();
            net_.backward(params_, cache, dy, *grad);
        }
        return l;
    }

    EvaluatorHistory train_evaluator(Evaluator &evaluator, std::span<const ImageSample> images,
                                     std::span<const double> labels, const EvaluatorTrainingConfig &config)
    {
        config.validate();
        if (images.empty() || images.size() != labels.size())
            throw std::invalid_argument("training the evaluator needs a nonempty labeled set");
        EvaluatorHistory hist;
        Rng rng = make_stream(config.seed, {0xE7A1ULL, 0x7EA1ULL});
        nn::Adam opt(evaluator.params().size());
        std::vector<std::size_t> order(images.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<ImageSample> batch;
        std::vector<double> target, grad;
        std::size_t step = 0;
        for (int epoch = 0; epoch < config.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), rng);
            double acc = 0.0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size))
            {
                const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
                batch.clear();
                target.clear();
                for (std::size_t i = start; i < end; ++i)
                {
                    batch.push_back(images[order[i]]);
                    target.push_back(labels[order[i]]);
                }
                const double l = evaluator.loss(batch, target, &grad);
                if (!std::isfinite(l))
                    throw NonFiniteLossError(step);
                opt.step(evaluator.params(), grad, config.learning_rate);
                ++step;
                acc += l;
                ++batches;
            }
            hist.epoch_loss.push_back(acc / static_cast<double>(batches));
        }
        return hist;
    }

    std::vector<QualityPrediction> oracle_predictions(std::span<const ImageSample> images,
                                                      const std::vector<QualityLabel> &labels)
    {
        const auto truth = labels_for(images, labels);
        std::vector<QualityPrediction> out(images.size());
        for (std::size_t i = 0; i < images.size(); ++i)
        {
            out[i].source_id = images[i].source_id;
            out[i].predicted_psnr_db = truth[i];
            out[i].true_psnr_db = truth[i];
        }
        return out;
    }

    std::vector<QualityPrediction> evaluator_predictions(const Evaluator &evaluator, std::span<const ImageSample> images,
                                                         const std::vector<QualityLabel> *labels)
    {
        const auto pred = evaluator.predict_batch(images);
        std::vector<double> truth;
        if (labels)
            truth = labels_for(images, *labels);
        std::vector<QualityPrediction> out(images.size());
        for (std::size_t i = 0; i < images.size(); ++i)
        {
            out[i].source_id = images[i].source_id;
            out[i].predicted_psnr_db = pred[i];
            if (labels)
                out[i].true_psnr_db = truth[i];
        }
        return out;
    }
}
