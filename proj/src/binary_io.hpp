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

#ifndef MJSCC_SRC_BINARY_IO_HPP
#define MJSCC_SRC_BINARY_IO_HPP

#include "mjscc/common.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

// Little helpers for the fixed-layout binary files (channel fixtures, checkpoints).
// Files are little endian; we only target little-endian hosts.
static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace mjscc::detail
{
    class BinaryWriter
    {
    public:
        explicit BinaryWriter(const std::string &path) : out_(path, std::ios::binary | std::ios::trunc)
        {
            if (!out_)
                throw std::runtime_error("cannot open '" + path + "' for writing");
        }

        template <class T>
        void put(T value)
        {
            static_assert(std::is_trivially_copyable_v<T>);
            out_.write(reinterpret_cast<const char *>(&value), sizeof(T));
        }

        void put_bytes(const void *data, std::size_t n) { out_.write(static_cast<const char *>(data), n); }

        void put_string(const std::string &s)
        {
            put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
            put_bytes(s.data(), s.size());
        }

        void finish()
        {
            out_.flush();
            if (!out_)
                throw std::runtime_error("write failed");
        }

    private:
        std::ofstream out_;
    };

    // Reads the whole file up front so truncation errors can report exact byte offsets.
    class BinaryReader
    {
    public:
        explicit BinaryReader(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw std::runtime_error("cannot open '" + path + "' for reading");
            buf_.assign(std::istreambuf_iterator<char>(in), {});
        }

        template <class T>
        T get()
        {
            static_assert(std::is_trivially_copyable_v<T>);
            require(sizeof(T));
            T v;
            std::memcpy(&v, buf_.data() + pos_, sizeof(T));
            pos_ += sizeof(T);
            return v;
        }

        void get_bytes(void *dst, std::size_t n)
        {
            require(n);
            std::memcpy(dst, buf_.data() + pos_, n);
            pos_ += n;
        }

        std::string get_string(std::uint32_t max_len = 1u << 20)
        {
            const auto n = get<std::uint32_t>();
            if (n > max_len)
                throw FormatError("string length field too large", pos_ - 4);
            std::string s(n, '\0');
            get_bytes(s.data(), n);
            return s;
        }

        std::size_t offset() const { return pos_; }
        std::size_t size() const { return buf_.size(); }
        bool at_end() const { return pos_ == buf_.size(); }

    private:
        void require(std::size_t n) const
        {
            if (pos_ + n > buf_.size())
                throw FormatError("truncated file", pos_);
        }

        std::vector<char> buf_;
        std::size_t pos_ = 0;
    };
}

#endif
