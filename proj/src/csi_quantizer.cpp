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

#include "mjscc/csi_quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mjscc
{
    int CsiCodebook::index_of(double x) const
    {
        return static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
    }

    void CsiCodebook::validate() const
    {
        if (bits < 1 || bits > 8)
            throw std::invalid_argument("codebook bit depth must be in [1, 8]");
        const std::size_t n = std::size_t{1} << bits;
        if (levels.size() != n || thresholds.size() != n - 1)
            throw std::invalid_argument("codebook has the wrong number of levels or thresholds");
        for (std::size_t k = 0; k + 1 < n; ++k)
        {
            if (!(levels[k] < levels[k + 1]))
                throw std::invalid_argument("codebook levels must be strictly ascending");
            if (!(thresholds[k] >= levels[k] && thresholds[k] <= levels[k + 1]))
                throw std::invalid_argument("codebook thresholds must interleave the levels");
        }
    }

    // ----- SortedSamples -----------------------------------------------------

    SortedSamples::SortedSamples(std::span<const double> samples) : values_(samples.begin(), samples.end())
    {
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("samples must be finite");
        std::sort(values_.begin(), values_.end());
        prefix_.assign(values_.size() + 1, 0.0);
        prefix_sq_.assign(values_.size() + 1, 0.0);
        for (std::size_t i = 0; i < values_.size(); ++i)
        {
            prefix_[i + 1] = prefix_[i] + values_[i];
            prefix_sq_[i + 1] = prefix_sq_[i] + values_[i] * values_[i];
            if (i == 0 || values_[i] != values_[i - 1])
                ++distinct_;
        }
    }

    double SortedSamples::mean() const
    {
        return values_.empty() ? 0.0 : prefix_.back() / static_cast<double>(values_.size());
    }

    double SortedSamples::stddev() const
    {
        if (values_.empty())
            return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, prefix_sq_.back() / static_cast<double>(values_.size()) - m * m));
    }

    std::size_t SortedSamples::lower_index(double t) const
    {
        return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), t) - values_.begin());
    }

    double SortedSamples::sse(std::size_t lo, std::size_t hi, double c) const
    {
        if (hi <= lo)
            return 0.0;
        const double n = static_cast<double>(hi - lo);
        const double s1 = prefix_[hi] - prefix_[lo];
        const double s2 = prefix_sq_[hi] - prefix_sq_[lo];
        return std::max(0.0, s2 - 2.0 * c * s1 + n * c * c);
    }

    // ----- Lloyd-Max ---------------------------------------------------------

    namespace
    {
        void set_midpoint_thresholds(CsiCodebook &cb)
        {
            cb.thresholds.resize(cb.levels.size() - 1);
            for (std::size_t k = 0; k + 1 < cb.levels.size(); ++k)
                cb.thresholds[k] = 0.5 * (cb.levels[k] + cb.levels[k + 1]);
        }

        // Cell k covers sorted indices [bounds[k], bounds[k+1]).
        std::vector<std::size_t> cell_bounds(const SortedSamples &s, const CsiCodebook &cb)
        {
            std::vector<std::size_t> b(cb.levels.size() + 1);
            b.front() = 0;
            b.back() = s.size();
            for (std::size_t k = 0; k < cb.thresholds.size(); ++k)
                b[k + 1] = s.lower_index(cb.thresholds[k]);
            return b;
        }

        double total_sse(const SortedSamples &s, const CsiCodebook &cb, const std::vector<std::size_t> &b)
        {
            double acc = 0.0;
            for (std::size_t k = 0; k < cb.levels.size(); ++k)
                acc += s.sse(b[k], b[k + 1], cb.levels[k]);
            return acc;
        }
    }

    CsiCodebook uniform_codebook(int bits, double lo, double hi)
    {
        if (bits < 1 || bits > 8)
            throw std::invalid_argument("bit depth must be in [1, 8]");
        if (!(hi > lo))
            throw std::invalid_argument("uniform quantizer range must be non-empty");
        CsiCodebook cb;
        cb.bits = bits;
        const std::size_t n = std::size_t{1} << bits;
        const double step = (hi - lo) / static_cast<double>(n);
        cb.levels.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            cb.levels[k] = lo + (static_cast<double>(k) + 0.5) * step;
        set_midpoint_thresholds(cb);
        cb.fitted_on = "uniform";
        return cb;
    }

    CsiCodebook fit_lloyd_max(const SortedSamples &samples, int bits, LloydMaxOptions options, LloydMaxTrace *trace)
    {
        if (bits < 1 || bits > 8)
            throw std::invalid_argument("bit depth must be in [1, 8]");
        const std::size_t n_levels = std::size_t{1} << bits;
        if (samples.distinct_count() < n_levels)
            throw std::invalid_argument("degenerate sample: " + std::to_string(samples.distinct_count()) +
                                        " distinct values for " + std::to_string(n_levels) + " levels");
        if (!(options.tol >= 0.0) || options.max_iters < 0)
            throw std::invalid_argument("invalid Lloyd-Max options");

        const double mu = samples.mean(), sd = samples.stddev();
        CsiCodebook cb = uniform_codebook(bits, mu - 4.0 * sd, mu + 4.0 * sd);
        const double count = static_cast<double>(samples.size());

        auto bounds = cell_bounds(samples, cb);
        double mse = total_sse(samples, cb, bounds) / count;
        if (trace)
        {
            trace->initial_mse = mse;
            trace->mse_history.clear();
            trace->reseeded_cells = 0;
        }

        const auto &v = samples.values();
        for (int iter = 0; iter < options.max_iters && mse > 0.0; ++iter)
        {
            // Centroid step on the current partition.
            std::vector<std::size_t> empty;
            for (std::size_t k = 0; k < n_levels; ++k)
            {
                if (bounds[k + 1] > bounds[k])
                    cb.levels[k] = samples.sum(bounds[k], bounds[k + 1]) / static_cast<double>(bounds[k + 1] - bounds[k]);
                else
                    empty.push_back(k);
            }
            // Splitting rule: move each empty level onto the sample farthest from its level.
            // In a sorted cell the farthest sample is one of the two endpoints.
            for (std::size_t e : empty)
            {
                double best = -1.0;
                double where = cb.levels[e];
                for (std::size_t k = 0; k < n_levels; ++k)
                {
                    if (bounds[k + 1] <= bounds[k])
                        continue;
                    for (std::size_t idx : {bounds[k], bounds[k + 1] - 1})
                    {
                        const double dist = std::abs(v[idx] - cb.levels[k]);
                        if (dist > best)
                        {
                            best = dist;
                            where = v[idx];
                        }
                    }
                }
                cb.levels[e] = where;
                // Treat the re-seeded sample as its own cell for any further empty levels.
                const std::size_t pos = samples.lower_index(where);
                for (std::size_t k = 0; k < n_levels; ++k)
                    if (bounds[k] <= pos && pos < bounds[k + 1])
                    {
                        if (pos == bounds[k])
                            ++bounds[k];
                        else if (pos + 1 == bounds[k + 1])
                            --bounds[k + 1];
                        break;
                    }
                if (trace)
                    ++trace->reseeded_cells;
            }
            if (!empty.empty())
                std::sort(cb.levels.begin(), cb.levels.end());

            // Nearest-neighbor step.
            set_midpoint_thresholds(cb);
            bounds = cell_bounds(samples, cb);
            const double next = total_sse(samples, cb, bounds) / count;
            if (trace)
                trace->mse_history.push_back(next);
            const double rel_change = mse > 0.0 ? (mse - next) / mse : 0.0;
            mse = next;
            if (empty.empty() && rel_change < options.tol)
                break;
        }

        std::ostringstream desc;
        desc << "lloyd-max n=" << samples.size() << " mean=" << mu << " std=" << sd;
        cb.fitted_on = desc.str();
        cb.validate();
        return cb;
    }

    CsiCodebook fit_lloyd_max(std::span<const double> samples, int bits, LloydMaxOptions options, LloydMaxTrace *trace)
    {
        return fit_lloyd_max(SortedSamples(samples), bits, options, trace);
    }

    double quantizer_mse(const SortedSamples &samples, const CsiCodebook &codebook)
    {
        if (samples.size() == 0)
            throw std::invalid_argument("no samples");
        return total_sse(samples, codebook, cell_bounds(samples, codebook)) / static_cast<double>(samples.size());
    }

    double quantizer_mse(std::span<const double> samples, const CsiCodebook &codebook)
    {
        if (samples.empty())
            throw std::invalid_argument("no samples");
        double acc = 0.0;
        for (double x : samples)
        {
            const double e = x - codebook.quantize(x);
            acc += e * e;
        }
        return acc / static_cast<double>(samples.size());
    }

    // ----- CSI quantization ---------------------------------------------------

    QuantizedCsi quantize_csi(const ChannelMatrix &h, const CsiCodebook &codebook)
    {
        const auto &e = h.entries();
        QuantizedCsi q;
        q.bits = codebook.bits;
        q.real_index.resize(e.rows(), e.cols());
        q.imag_index.resize(e.rows(), e.cols());
        for (Eigen::Index r = 0; r < e.rows(); ++r)
            for (Eigen::Index c = 0; c < e.cols(); ++c)
            {
                q.real_index(r, c) = codebook.index_of(e(r, c).real());
                q.imag_index(r, c) = codebook.index_of(e(r, c).imag());
            }
        q.recovered = dequantize_csi(q.real_index, q.imag_index, codebook);
        return q;
    }

    ChannelMatrix dequantize_csi(const Eigen::MatrixXi &real_index, const Eigen::MatrixXi &imag_index,
                                 const CsiCodebook &codebook)
    {
        if (real_index.rows() != imag_index.rows() || real_index.cols() != imag_index.cols())
            throw std::invalid_argument("index matrices differ in shape");
        const int n = static_cast<int>(codebook.levels.size());
        CMatrix h(real_index.rows(), real_index.cols());
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c)
            {
                const int ir = real_index(r, c), ii = imag_index(r, c);
                if (ir < 0 || ir >= n || ii < 0 || ii >= n)
                    throw std::invalid_argument("quantization index out of range");
                h(r, c) = cdouble(codebook.levels[static_cast<std::size_t>(ir)], codebook.levels[static_cast<std::size_t>(ii)]);
            }
        return ChannelMatrix(std::move(h));
    }

    double nmse(const ChannelMatrix &h, const ChannelMatrix &h_hat)
    {
        if (h.num_rx() != h_hat.num_rx() || h.num_tx() != h_hat.num_tx())
            throw std::invalid_argument("nmse: channel shapes differ");
        const double denom = h.entries().squaredNorm();
        if (denom == 0.0)
            throw std::invalid_argument("nmse: reference channel is zero");
        return (h.entries() - h_hat.entries()).squaredNorm() / denom;
    }

    std::vector<double> pooled_channel_samples(const ClusterConfig &config, int num_channels, Rng &rng)
    {
        if (num_channels < 1)
            throw std::invalid_argument("need at least one channel for the codebook sample");
        std::vector<double> out;
        out.reserve(2 * static_cast<std::size_t>(num_channels) * config.num_rx() * config.num_tx());
        for (int i = 0; i < num_channels; ++i)
        {
            const CMatrix h = draw_channel_entries(config, rng);
            for (Eigen::Index k = 0; k < h.size(); ++k)
            {
                out.push_back(h(k).real());
                out.push_back(h(k).imag());
            }
        }
        return out;
    }

    // ----- CodebookSet ---------------------------------------------------------

    void CodebookSet::add(CsiCodebook cb)
    {
        cb.validate();
        const int b = cb.bits;
        books_[b] = std::move(cb);
    }

    const CsiCodebook &CodebookSet::at(int bits) const
    {
        auto it = books_.find(bits);
        if (it == books_.end())
            throw std::invalid_argument("no codebook fitted for " + std::to_string(bits) + " bits");
        return it->second;
    }

    std::vector<int> CodebookSet::bit_depths() const
    {
        std::vector<int> out;
        for (const auto &kv : books_)
            out.push_back(kv.first);
        return out;
    }

    CodebookSet fit_channel_codebooks(const ClusterConfig &config, const std::vector<int> &bits, int num_channels,
                                      std::uint64_t seed, const std::string &config_hash, LloydMaxOptions options)
    {
        Rng rng = make_stream(seed, {0xC0DEB00CULL});
        const SortedSamples samples(pooled_channel_samples(config, num_channels, rng));
        CodebookSet set;
        for (int b : bits)
        {
            CsiCodebook cb = fit_lloyd_max(samples, b, options);
            std::ostringstream desc;
            desc << "clustered channel " << config.num_rx() << "x" << config.num_tx() << " N_cl=" << config.num_clusters
                 << " N_ray=" << config.rays_per_cluster << " channels=" << num_channels << " seed=" << seed
                 << " (pooled re/im, n=" << samples.size() << ")";
            cb.fitted_on = desc.str();
            cb.config_hash = config_hash;
            set.add(std::move(cb));
        }
        return set;
    }

    // ----- Persistence -------------------------------------------------------

    static constexpr const char *kCodebookMagic = "mjscc-csi-codebook";
    static constexpr int kCodebookVersion = 1;

    static std::string exact(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    void save_codebook(const std::string &path, const CsiCodebook &codebook)
    {
        codebook.validate();
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        out << kCodebookMagic << ' ' << kCodebookVersion << '\n';
        out << "bits " << codebook.bits << '\n';
        out << "config_hash " << (codebook.config_hash.empty() ? "-" : codebook.config_hash) << '\n';
        out << "fitted_on " << codebook.fitted_on << '\n';
        out << "levels " << codebook.levels.size() << '\n';
        for (double v : codebook.levels)
            out << exact(v) << '\n';
        out << "thresholds " << codebook.thresholds.size() << '\n';
        for (double v : codebook.thresholds)
            out << exact(v) << '\n';
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    CsiCodebook load_codebook(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        auto fail = [&](const std::string &msg) { return std::runtime_error(path + ": " + msg); };

        std::string magic;
        int version = 0;
        if (!(in >> magic >> version) || magic != kCodebookMagic)
            throw fail("not a codebook file");
        if (version != kCodebookVersion)
            throw fail("unsupported codebook version " + std::to_string(version));

        CsiCodebook cb;
        std::string key;
        auto expect = [&](const char *k) {
            if (!(in >> key) || key != k)
                throw fail(std::string("expected '") + k + "'");
        };
        expect("bits");
        in >> cb.bits;
        expect("config_hash");
        in >> cb.config_hash;
        if (cb.config_hash == "-")
            cb.config_hash.clear();
        expect("fitted_on");
        std::getline(in >> std::ws, cb.fitted_on);

        auto read_list = [&](const char *k, std::vector<double> &dst) {
            expect(k);
            std::size_t n = 0;
            if (!(in >> n) || n > 256)
                throw fail(std::string("bad count for ") + k);
            dst.resize(n);
            for (auto &v : dst)
            {
                std::string tok;
                if (!(in >> tok))
                    throw fail("truncated value list");
                char *end = nullptr;
                v = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str() || *end != '\0')
                    throw fail("bad number '" + tok + "'");
            }
        };
        read_list("levels", cb.levels);
        read_list("thresholds", cb.thresholds);
        try
        {
            cb.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw fail(e.what());
        }
        return cb;
    }
}
