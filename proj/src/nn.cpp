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

#include "mjscc/nn.hpp"

#include "binary_io.hpp"

#include <cmath>
#include <sstream>

namespace mjscc::nn
{
    namespace
    {
        const char *act_name(Activation a)
        {
            switch (a)
            {
            case Activation::identity: return "identity";
            case Activation::softplus: return "softplus";
            case Activation::sigmoid: return "sigmoid";
            }
            return "?";
        }

        Activation parse_act(const std::string &s)
        {
            if (s == "identity")
                return Activation::identity;
            if (s == "softplus")
                return Activation::softplus;
            if (s == "sigmoid")
                return Activation::sigmoid;
            throw std::invalid_argument("unknown activation '" + s + "'");
        }

        double sigmoid(double x)
        {
            if (x >= 0.0)
                return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        }

        double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

        void apply(Activation a, const RMatrix &pre, RMatrix &post)
        {
            switch (a)
            {
            case Activation::identity: post = pre; break;
            case Activation::softplus: post = pre.unaryExpr([](double x) { return softplus(x); }); break;
            case Activation::sigmoid: post = pre.unaryExpr([](double x) { return sigmoid(x); }); break;
            }
        }

        // dL/dpre from dL/dpost.
        RMatrix act_backward(Activation a, const RMatrix &pre, const RMatrix &post, const RMatrix &g)
        {
            switch (a)
            {
            case Activation::identity: return g;
            case Activation::softplus: return g.cwiseProduct(pre.unaryExpr([](double x) { return sigmoid(x); }));
            case Activation::sigmoid: return g.cwiseProduct(post.cwiseProduct((1.0 - post.array()).matrix()));
            }
            return g;
        }

        std::size_t layer_params(const DenseSpec &l)
        {
            return (l.constant ? 0 : static_cast<std::size_t>(l.out) * l.in) + static_cast<std::size_t>(l.out);
        }
    }

    std::string to_string(const std::vector<DenseSpec> &layers)
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < layers.size(); ++i)
        {
            if (i)
                os << ';';
            os << (layers[i].constant ? "const(" : "dense(") << layers[i].in << ',' << layers[i].out << ','
               << act_name(layers[i].act) << ')';
        }
        return os.str();
    }

    std::vector<DenseSpec> parse_layers(const std::string &text)
    {
        std::vector<DenseSpec> out;
        std::istringstream is(text);
        std::string item;
        while (std::getline(is, item, ';'))
        {
            const auto open = item.find('('), close = item.rfind(')');
            if (open == std::string::npos || close == std::string::npos || close < open)
                throw std::invalid_argument("bad layer spec '" + item + "'");
            DenseSpec l;
            const std::string kind = item.substr(0, open);
            if (kind == "const")
                l.constant = true;
            else if (kind != "dense")
                throw std::invalid_argument("unknown layer kind '" + kind + "'");
            std::istringstream fields(item.substr(open + 1, close - open - 1));
            std::string in, outd, act;
            if (!std::getline(fields, in, ',') || !std::getline(fields, outd, ',') || !std::getline(fields, act))
                throw std::invalid_argument("bad layer fields '" + item + "'");
            l.in = std::stoi(in);
            l.out = std::stoi(outd);
            l.act = parse_act(act);
            out.push_back(l);
        }
        if (out.empty())
            throw std::invalid_argument("empty layer spec");
        return out;
    }

    Mlp::Mlp(std::vector<DenseSpec> layers) : layers_(std::move(layers))
    {
        if (layers_.empty())
            throw std::invalid_argument("network needs at least one layer");
        for (std::size_t i = 0; i < layers_.size(); ++i)
        {
            const auto &l = layers_[i];
            if (l.in < 1 || l.out < 1)
                throw std::invalid_argument("layer dimensions must be positive");
            if (i > 0 && l.in != layers_[i - 1].out)
                throw std::invalid_argument("layer " + std::to_string(i) + " input does not match previous output");
            offsets_.push_back(total_);
            total_ += layer_params(l);
        }
    }

    void Mlp::init(std::span<double> params, Rng &rng) const
    {
        if (params.size() != total_)
            throw std::invalid_argument("parameter array has the wrong size");
        for (std::size_t i = 0; i < layers_.size(); ++i)
        {
            const auto &l = layers_[i];
            double *p = params.data() + offsets_[i];
            if (!l.constant)
            {
                const double a = std::sqrt(6.0 / (l.in + l.out));
                std::uniform_real_distribution<double> uni(-a, a);
                for (std::size_t k = 0; k < static_cast<std::size_t>(l.out) * l.in; ++k)
                    *p++ = uni(rng);
            }
            for (int k = 0; k < l.out; ++k)
                *p++ = 0.0;
        }
    }

    RMatrix Mlp::forward(std::span<const double> params, const RMatrix &x, MlpCache *cache) const
    {
        if (params.size() != total_)
            throw std::invalid_argument("parameter array has the wrong size");
        if (x.rows() != input_dim())
            throw std::invalid_argument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                                        std::to_string(input_dim()));
        if (cache)
        {
            cache->inputs.assign(layers_.size(), {});
            cache->pre.assign(layers_.size(), {});
            cache->post.assign(layers_.size(), {});
        }
        RMatrix cur = x;
        for (std::size_t i = 0; i < layers_.size(); ++i)
        {
            const auto &l = layers_[i];
            const double *p = params.data() + offsets_[i];
            RMatrix pre;
            if (l.constant)
            {
                Eigen::Map<const RVector> b(p, l.out);
                pre = b.replicate(1, cur.cols());
            }
            else
            {
                Eigen::Map<const RMatrix> w(p, l.out, l.in);
                Eigen::Map<const RVector> b(p + static_cast<std::size_t>(l.out) * l.in, l.out);
                pre = w * cur;
                pre.colwise() += b;
            }
            RMatrix post;
            apply(l.act, pre, post);
            if (cache)
            {
                cache->inputs[i] = std::move(cur);
                cache->pre[i] = std::move(pre);
                cache->post[i] = post;
            }
            cur = std::move(post);
        }
        return cur;
    }

    RMatrix Mlp::backward(std::span<const double> params, const MlpCache &cache, const RMatrix &grad_out,
                          std::span<double> grad) const
    {
        if (grad.size() != total_ || params.size() != total_)
            throw std::invalid_argument("gradient array has the wrong size");
        RMatrix g = grad_out;
        for (std::size_t ii = layers_.size(); ii-- > 0;)
        {
            const auto &l = layers_[ii];
            const RMatrix gpre = act_backward(l.act, cache.pre[ii], cache.post[ii], g);
            double *gp = grad.data() + offsets_[ii];
            if (l.constant)
            {
                Eigen::Map<RVector> gb(gp, l.out);
                gb += gpre.rowwise().sum();
                g = RMatrix::Zero(l.in, gpre.cols());
            }
            else
            {
                Eigen::Map<RMatrix> gw(gp, l.out, l.in);
                Eigen::Map<RVector> gb(gp + static_cast<std::size_t>(l.out) * l.in, l.out);
                gw.noalias() += gpre * cache.inputs[ii].transpose();
                gb += gpre.rowwise().sum();
                Eigen::Map<const RMatrix> w(params.data() + offsets_[ii], l.out, l.in);
                g = w.transpose() * gpre;
            }
        }
        return g;
    }

    Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
        : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps)
    {
    }

    void Adam::step(std::span<double> params, std::span<const double> grad, double lr)
    {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw std::invalid_argument("optimizer state does not match the parameter count");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < m_.size(); ++i)
        {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
        }
    }

    // ----- Checkpoints -----------------------------------------------------------

    static constexpr char kCkptMagic[4] = {'M', 'J', 'C', 'K'};
    static constexpr std::uint32_t kCkptVersion = 1;

    void save_checkpoint(const std::string &path, const Checkpoint &ckpt)
    {
        detail::BinaryWriter w(path);
        w.put_bytes(kCkptMagic, 4);
        w.put<std::uint32_t>(kCkptVersion);
        w.put_string(ckpt.kind);
        w.put_string(ckpt.layer_spec);
        w.put<std::int32_t>(ckpt.symbols);
        w.put<std::int32_t>(ckpt.image_dim);
        w.put<std::uint64_t>(ckpt.seed);
        w.put<std::uint64_t>(ckpt.params.size());
        w.put_bytes(ckpt.params.data(), ckpt.params.size() * sizeof(double));
        w.finish();
    }

    Checkpoint load_checkpoint(const std::string &path)
    {
        detail::BinaryReader r(path);
        char magic[4];
        r.get_bytes(magic, 4);
        if (std::memcmp(magic, kCkptMagic, 4) != 0)
            throw FormatError("not a checkpoint file", 0);
        const auto version = r.get<std::uint32_t>();
        if (version != kCkptVersion)
            throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
        Checkpoint c;
        c.kind = r.get_string();
        c.layer_spec = r.get_string();
        c.symbols = r.get<std::int32_t>();
        c.image_dim = r.get<std::int32_t>();
        c.seed = r.get<std::uint64_t>();
        const auto n = r.get<std::uint64_t>();
        const std::size_t avail = r.size() - r.offset();
        if (n > avail / sizeof(double))
            // Offset of the first parameter that is not fully present.
            throw FormatError("parameter payload shorter than declared count",
                              r.offset() + avail / sizeof(double) * sizeof(double));
        c.params.resize(n);
        r.get_bytes(c.params.data(), n * sizeof(double));
        if (!r.at_end())
            throw FormatError("trailing bytes after parameters", r.offset());
        return c;
    }
}
