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

#ifndef MJSCC_NN_HPP
#define MJSCC_NN_HPP

#include "mjscc/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace mjscc::nn
{
    enum class Activation
    {
        identity,
        softplus, // smooth ramp
        sigmoid,  // squash to (0, 1)
    };

    // Dense layer followed by an elementwise activation. A constant layer ignores its input and
    // emits its bias only (used for the single-parameter baseline regressor).
    struct DenseSpec
    {
        int in = 0;
        int out = 0;
        Activation act = Activation::identity;
        bool constant = false;
    };

    std::string to_string(const std::vector<DenseSpec> &layers);
    std::vector<DenseSpec> parse_layers(const std::string &text);

    // Per-layer activations kept for the backward pass.
    struct MlpCache
    {
        std::vector<RMatrix> inputs; // input to each layer
        std::vector<RMatrix> pre;    // pre-activation of each layer
        std::vector<RMatrix> post;   // post-activation of each layer
    };

    // Stateless description of a stack of dense layers. Parameters live in a caller-owned flat
    // array: for each layer, W (out x in, column-major) then b (out); constant layers store b only.
    class Mlp
    {
    public:
        Mlp() = default;
        explicit Mlp(std::vector<DenseSpec> layers);

        int input_dim() const { return layers_.front().in; }
        int output_dim() const { return layers_.back().out; }
        std::size_t param_count() const { return total_; }
        const std::vector<DenseSpec> &layers() const { return layers_; }

        // Glorot-uniform weights, zero biases.
        void init(std::span<double> params, Rng &rng) const;

        // x: input_dim x batch. Fills cache when non-null.
        RMatrix forward(std::span<const double> params, const RMatrix &x, MlpCache *cache = nullptr) const;

        // Accumulates dL/dparams into grad; returns dL/dx.
        RMatrix backward(std::span<const double> params, const MlpCache &cache, const RMatrix &grad_out,
                         std::span<double> grad) const;

    private:
        std::vector<DenseSpec> layers_;
        std::vector<std::size_t> offsets_;
        std::size_t total_ = 0;
    };

    // Adaptive-moment descent with the usual defaults.
    class Adam
    {
    public:
        explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
        void step(std::span<double> params, std::span<const double> grad, double lr);
        long steps() const { return t_; }

    private:
        std::vector<double> m_, v_;
        double beta1_, beta2_, eps_;
        long t_ = 0;
    };

    // ----- Checkpoints ---------------------------------------------------------
    // "MJCK" magic, u32 version, string kind, string layer_spec, i32 K, i32 N, u64 seed,
    // u64 parameter count, then f64 parameters in declaration order.
    struct Checkpoint
    {
        std::string kind;
        std::string layer_spec;
        int symbols = 0;
        int image_dim = 0;
        std::uint64_t seed = 0;
        std::vector<double> params;
    };

    void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
    Checkpoint load_checkpoint(const std::string &path);
}

#endif
