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

#ifndef MJSCC_DATASET_HPP
#define MJSCC_DATASET_HPP

#include "mjscc/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mjscc
{
    inline constexpr int kCifarSide = 32;
    inline constexpr int kCifarChannels = 3;
    inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarSide * kCifarSide * kCifarChannels; // 3073

    // CIFAR-10 binary batch: per record one label byte, then 1024 R, 1024 G, 1024 B bytes (row-major
    // planes). Pixels are scaled by 1/255 and stored HWC. With crop_side set, keeps the centered
    // crop_side x crop_side patch. source_id = first_id + record index. Labels are ignored.
    // Throws FormatError (with the byte offset of the incomplete record) on a truncated file.
    std::vector<ImageSample> load_cifar_binary(const std::string &path, std::optional<int> crop_side = std::nullopt,
                                               int first_id = 0);

    // Inverse of the loader for 32x32x3 images; pixels are rounded to the nearest 1/255.
    void write_cifar_binary(const std::string &path, const std::vector<ImageSample> &images,
                            const std::vector<std::uint8_t> &labels = {});

    // Deterministic mixture: smooth color gradients (component 0) and high-frequency gratings with
    // pixel noise (component 1). complexity_mix is the probability of the texture component.
    std::vector<ImageSample> synthesize_images(int count, int side, double complexity_mix, std::uint64_t seed,
                                               int first_id = 0);

    // Sum of absolute horizontal and vertical neighbor differences over all channels.
    double total_variation(const ImageSample &s, int side, int channels = 3);

    std::vector<ImageSample> center_crop(const std::vector<ImageSample> &images, int side, int crop_side,
                                         int channels = 3);
}

#endif
