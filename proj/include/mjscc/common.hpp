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

#ifndef MJSCC_COMMON_HPP
#define MJSCC_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace mjscc
{
    using cdouble = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using RMatrix = Eigen::MatrixXd;
    using RVector = Eigen::VectorXd;

    // Every random draw in the library goes through an explicit stream of this type.
    using Rng = std::mt19937_64;

    // Mixes a base seed with a list of tags into an independent stream seed (splitmix64 chain).
    std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

    inline Rng make_stream(std::uint64_t base, std::initializer_list<std::uint64_t> tags)
    {
        return Rng(derive_seed(base, tags));
    }

    // ----- Error types ------------------------------------------------------
    // Plain precondition violations use std::invalid_argument; the classes below
    // carry extra context that callers (and the C API) dispatch on.

    class RankDeficientError : public std::runtime_error
    {
    public:
        RankDeficientError(const std::string &what, int usable_streams)
            : std::runtime_error(what), usable_streams_(usable_streams) {}
        int usable_streams() const noexcept { return usable_streams_; }

    private:
        int usable_streams_;
    };

    class FormatError : public std::runtime_error
    {
    public:
        FormatError(const std::string &what, std::uint64_t byte_offset)
            : std::runtime_error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
              byte_offset_(byte_offset) {}
        std::uint64_t byte_offset() const noexcept { return byte_offset_; }

    private:
        std::uint64_t byte_offset_;
    };

    class NonFiniteLossError : public std::runtime_error
    {
    public:
        explicit NonFiniteLossError(std::size_t batch_index)
            : std::runtime_error("non-finite loss in batch " + std::to_string(batch_index)),
              batch_index_(batch_index) {}
        std::size_t batch_index() const noexcept { return batch_index_; }

    private:
        std::size_t batch_index_;
    };
}

#endif
