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

#ifndef MJSCC_IMAGE_HPP
#define MJSCC_IMAGE_HPP

#include "mjscc/common.hpp"

namespace mjscc
{
    // Flattened H x W x C image, channel-interleaved (HWC order), pixels in [0, 1].
    struct ImageSample
    {
        RVector pixels;
        int source_id = 0;
        int component = -1; // synthetic mixture tag: 0 smooth, 1 texture; -1 for real data

        int size() const { return static_cast<int>(pixels.size()); }
        void validate() const
        {
            if (pixels.size() == 0)
                throw std::invalid_argument("image has no pixels");
            if (!(pixels.minCoeff() >= 0.0 && pixels.maxCoeff() <= 1.0))
                throw std::invalid_argument("image pixels must lie in [0, 1]");
        }
    };
}

#endif
