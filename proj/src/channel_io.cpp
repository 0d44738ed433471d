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

#include "mjscc/mimo_channel.hpp"

#include "binary_io.hpp"

namespace mjscc
{
    static constexpr char kChannelMagic[4] = {'M', 'J', 'C', 'H'};
    static constexpr std::uint32_t kChannelVersion = 1;

    void write_channel_file(const std::string &path, const ChannelFile &file)
    {
        file.config.validate();
        const int nr = file.config.num_rx(), nt = file.config.num_tx();
        for (const auto &h : file.channels)
            if (h.num_rx() != nr || h.num_tx() != nt)
                throw std::invalid_argument("channel dimensions disagree with the file config");

        detail::BinaryWriter w(path);
        w.put_bytes(kChannelMagic, 4);
        w.put<std::uint32_t>(kChannelVersion);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(file.channels.size()));
        w.put<std::uint32_t>(nr);
        w.put<std::uint32_t>(nt);
        w.put<std::uint64_t>(file.seed);
        w.put<std::int32_t>(file.config.num_clusters);
        w.put<std::int32_t>(file.config.rays_per_cluster);
        w.put<double>(file.config.tx_geometry.spacing_over_wavelength);
        w.put<double>(file.config.rx_geometry.spacing_over_wavelength);
        w.put<double>(file.config.ray_spread_deg);
        w.put<double>(file.config.center_range_rad);
        for (const auto &h : file.channels)
            for (int r = 0; r < nr; ++r)
                for (int c = 0; c < nt; ++c)
                {
                    w.put<double>(h.entries()(r, c).real());
                    w.put<double>(h.entries()(r, c).imag());
                }
        w.finish();
    }

    ChannelFile read_channel_file(const std::string &path)
    {
        detail::BinaryReader r(path);
        char magic[4];
        r.get_bytes(magic, 4);
        if (std::memcmp(magic, kChannelMagic, 4) != 0)
            throw FormatError("not a channel file", 0);
        const auto version = r.get<std::uint32_t>();
        if (version != kChannelVersion)
            throw FormatError("unsupported channel file version " + std::to_string(version), 4);

        ChannelFile file;
        const auto count = r.get<std::uint32_t>();
        const auto nr = static_cast<int>(r.get<std::uint32_t>());
        const auto nt = static_cast<int>(r.get<std::uint32_t>());
        file.seed = r.get<std::uint64_t>();
        file.config.num_clusters = r.get<std::int32_t>();
        file.config.rays_per_cluster = r.get<std::int32_t>();
        file.config.tx_geometry = {nt, r.get<double>()};
        file.config.rx_geometry = {nr, r.get<double>()};
        file.config.ray_spread_deg = r.get<double>();
        file.config.center_range_rad = r.get<double>();
        try
        {
            file.config.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw FormatError(std::string("invalid channel header: ") + e.what(), r.offset());
        }

        file.channels.reserve(count);
        for (std::uint32_t k = 0; k < count; ++k)
        {
            CMatrix h(nr, nt);
            for (int row = 0; row < nr; ++row)
                for (int col = 0; col < nt; ++col)
                {
                    const double re = r.get<double>();
                    const double im = r.get<double>();
                    h(row, col) = cdouble(re, im);
                }
            file.channels.emplace_back(std::move(h));
        }
        if (!r.at_end())
            throw FormatError("trailing bytes after channel payload", r.offset());
        return file;
    }
}
