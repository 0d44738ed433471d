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

#include "mjscc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace mjscc
{
    namespace
    {
        ImageSample crop(const ImageSample &s, int side, int crop_side, int channels)
        {
            const int off = (side - crop_side) / 2;
            ImageSample out;
            out.source_id = s.source_id;
            out.component = s.component;
            out.pixels.resize(static_cast<Eigen::Index>(crop_side) * crop_side * channels);
            Eigen::Index k = 0;
            for (int y = 0; y < crop_side; ++y)
                for (int x = 0; x < crop_side; ++x)
                    for (int c = 0; c < channels; ++c)
                        out.pixels(k++) = s.pixels((static_cast<Eigen::Index>(y + off) * side + (x + off)) * channels + c);
            return out;
        }
    }

    std::vector<ImageSample> center_crop(const std::vector<ImageSample> &images, int side, int crop_side, int channels)
    {
        if (crop_side < 1 || crop_side > side)
            throw std::invalid_argument("crop must fit inside the image");
        std::vector<ImageSample> out;
        out.reserve(images.size());
        for (const auto &s : images)
        {
            if (s.size() != side * side * channels)
                throw std::invalid_argument("image size does not match the crop geometry");
            out.push_back(crop(s, side, crop_side, channels));
        }
        return out;
    }

    std::vector<ImageSample> load_cifar_binary(const std::string &path, std::optional<int> crop_side, int first_id)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
        if (bytes.size() % kCifarRecordBytes != 0)
            throw FormatError("truncated CIFAR-10 record (file is " + std::to_string(bytes.size()) + " bytes)",
                              bytes.size() - bytes.size() % kCifarRecordBytes);
        if (crop_side && (*crop_side < 1 || *crop_side > kCifarSide))
            throw std::invalid_argument("crop side must be in [1, 32]");

        const std::size_t records = bytes.size() / kCifarRecordBytes;
        const int plane = kCifarSide * kCifarSide;
        std::vector<ImageSample> out;
        out.reserve(records);
        for (std::size_t r = 0; r < records; ++r)
        {
            const unsigned char *rec = bytes.data() + r * kCifarRecordBytes + 1; // skip label
            ImageSample s;
            s.source_id = first_id + static_cast<int>(r);
            s.pixels.resize(plane * kCifarChannels);
            for (int p = 0; p < plane; ++p)
                for (int c = 0; c < kCifarChannels; ++c)
                    s.pixels(p * kCifarChannels + c) = rec[c * plane + p] / 255.0;
            out.push_back(crop_side ? crop(s, kCifarSide, *crop_side, kCifarChannels) : std::move(s));
        }
        return out;
    }

    void write_cifar_binary(const std::string &path, const std::vector<ImageSample> &images,
                            const std::vector<std::uint8_t> &labels)
    {
        if (!labels.empty() && labels.size() != images.size())
            throw std::invalid_argument("label count must match image count");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        const int plane = kCifarSide * kCifarSide;
        std::vector<unsigned char> rec(kCifarRecordBytes);
        for (std::size_t i = 0; i < images.size(); ++i)
        {
            const auto &s = images[i];
            if (s.size() != plane * kCifarChannels)
                throw std::invalid_argument("CIFAR-10 records hold 32x32x3 images");
            rec[0] = labels.empty() ? 0 : labels[i];
            for (int p = 0; p < plane; ++p)
                for (int c = 0; c < kCifarChannels; ++c)
                {
                    const double v = std::clamp(s.pixels(p * kCifarChannels + c), 0.0, 1.0);
                    rec[1 + c * plane + p] = static_cast<unsigned char>(std::lround(v * 255.0));
                }
            out.write(reinterpret_cast<const char *>(rec.data()), static_cast<std::streamsize>(rec.size()));
        }
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    std::vector<ImageSample> synthesize_images(int count, int side, double complexity_mix, std::uint64_t seed,
                                               int first_id)
    {
        if (count < 1)
            throw std::invalid_argument("image count must be >= 1");
        if (side < 2)
            throw std::invalid_argument("synthetic images need a side of at least 2");
        if (!(complexity_mix >= 0.0 && complexity_mix <= 1.0))
            throw std::invalid_argument("complexity mix must be a probability");

        constexpr int channels = 3;
        const double span = static_cast<double>(side - 1);
        std::vector<ImageSample> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i)
        {
            Rng rng = make_stream(seed, {0x5EEDULL, static_cast<std::uint64_t>(i)});
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

            ImageSample s;
            s.source_id = first_id + i;
            s.component = u01(rng) < complexity_mix ? 1 : 0;
            s.pixels.resize(static_cast<Eigen::Index>(side) * side * channels);

            if (s.component == 0)
            {
                double base[channels];
                for (double &b : base)
                    b = uni(0.25, 0.75);
                const double gx = uni(-0.25, 0.25), gy = uni(-0.25, 0.25);
                for (int y = 0; y < side; ++y)
                    for (int x = 0; x < side; ++x)
                        for (int c = 0; c < channels; ++c)
                            s.pixels((y * side + x) * channels + c) =
                                base[c] + gx * (x / span - 0.5) + gy * (y / span - 0.5);
            }
            else
            {
                double base[channels], tint[channels];
                for (int c = 0; c < channels; ++c)
                {
                    base[c] = uni(0.35, 0.65);
                    tint[c] = uni(0.6, 1.0);
                }
                const double gx = uni(-0.1, 0.1), gy = uni(-0.1, 0.1);
                const double amp = uni(0.1, 0.25);
                const double fx = (u01(rng) < 0.5 ? -1.0 : 1.0) * uni(0.2, 0.4);
                const double fy = (u01(rng) < 0.5 ? -1.0 : 1.0) * uni(0.2, 0.4);
                const double phase = uni(0.0, 2.0 * std::numbers::pi);
                const double noise = uni(0.0, 0.1);
                for (int y = 0; y < side; ++y)
                    for (int x = 0; x < side; ++x)
                    {
                        const double g = std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);
                        for (int c = 0; c < channels; ++c)
                        {
                            const double v = base[c] + gx * (x / span - 0.5) + gy * (y / span - 0.5) +
                                             amp * tint[c] * g + noise * (u01(rng) - 0.5);
                            s.pixels((y * side + x) * channels + c) = std::clamp(v, 0.0, 1.0);
                        }
                    }
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    double total_variation(const ImageSample &s, int side, int channels)
    {
        if (s.size() != side * side * channels)
            throw std::invalid_argument("image size does not match the given geometry");
        auto at = [&](int y, int x, int c) { return s.pixels((static_cast<Eigen::Index>(y) * side + x) * channels + c); };
        double tv = 0.0;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                for (int c = 0; c < channels; ++c)
                {
                    if (x + 1 < side)
                        tv += std::abs(at(y, x + 1, c) - at(y, x, c));
                    if (y + 1 < side)
                        tv += std::abs(at(y + 1, x, c) - at(y, x, c));
                }
        return tv;
    }
}
