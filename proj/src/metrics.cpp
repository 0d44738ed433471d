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

#include "mjscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mjscc
{
    double psnr(const RVector &reference, const RVector &reconstruction)
    {
        if (reference.size() != reconstruction.size())
            throw std::invalid_argument("psnr: length mismatch (" + std::to_string(reference.size()) + " vs " +
                                        std::to_string(reconstruction.size()) + ")");
        if (reference.size() == 0)
            throw std::invalid_argument("psnr: empty image");
        const double mse = ((reference - reconstruction) * kPixelMax).squaredNorm() / static_cast<double>(reference.size());
        if (mse == 0.0)
            return kPsnrCapDb;
        return std::min(kPsnrCapDb, 10.0 * std::log10(kPixelMax * kPixelMax / mse));
    }

    double psnr(const ImageSample &s, const RVector &reconstruction) { return psnr(s.pixels, reconstruction); }

    double mean(std::span<const double> v)
    {
        if (v.empty())
            throw std::invalid_argument("mean of an empty list");
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    double variance(std::span<const double> v)
    {
        const double m = mean(v);
        double acc = 0.0;
        for (double x : v)
            acc += (x - m) * (x - m);
        return acc / static_cast<double>(v.size());
    }

    std::vector<double> average_ranks(std::span<const double> v)
    {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> ranks(v.size());
        for (std::size_t i = 0; i < idx.size();)
        {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
                ++j;
            const double r = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                ranks[idx[k]] = r;
            i = j + 1;
        }
        return ranks;
    }

    double pearson(std::span<const double> a, std::span<const double> b)
    {
        if (a.size() != b.size() || a.size() < 2)
            throw std::invalid_argument("correlation needs two equal-length lists of at least 2 values");
        const double ma = mean(a), mb = mean(b);
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        if (saa == 0.0 || sbb == 0.0)
            return 0.0;
        return sab / std::sqrt(saa * sbb);
    }

    double spearman(std::span<const double> a, std::span<const double> b)
    {
        const auto ra = average_ranks(a), rb = average_ranks(b);
        return pearson(ra, rb);
    }
}
