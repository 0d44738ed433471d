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

#ifndef MJSCC_METRICS_HPP
#define MJSCC_METRICS_HPP

#include "mjscc/image.hpp"

#include <span>
#include <vector>

namespace mjscc
{
    inline constexpr double kPsnrCapDb = 60.0;
    inline constexpr double kPixelMax = 255.0;

    // 10 log10(MAX^2 / MSE) with MAX = 255. Pixels are stored in [0, 1] and rescaled to the
    // 8-bit range here, the single conversion point. Capped at kPsnrCapDb (also for MSE = 0).
    double psnr(const RVector &reference, const RVector &reconstruction);
    double psnr(const ImageSample &s, const RVector &reconstruction);

    double mean(std::span<const double> v);
    double variance(std::span<const double> v); // population variance

    // Ranks with ties averaged (1-based).
    std::vector<double> average_ranks(std::span<const double> v);
    double pearson(std::span<const double> a, std::span<const double> b);
    double spearman(std::span<const double> a, std::span<const double> b);
}

#endif
