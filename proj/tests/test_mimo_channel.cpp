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

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace mjscc;

TEST_CASE("array response at broadside is flat")
{
    const CVector a = array_response({4, 0.5}, 0.0);
    REQUIRE(a.size() == 4);
    for (int k = 0; k < 4; ++k)
    {
        CHECK(a(k).real() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(std::abs(a(k).imag()) < 1e-15);
    }
}

TEST_CASE("array response at endfire alternates sign")
{
    const CVector a = array_response({2, 0.5}, std::numbers::pi / 2);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(a(0) - cdouble(s, 0)) < 1e-15);
    CHECK(std::abs(a(1) - cdouble(-s, 0)) < 1e-15);
}

TEST_CASE("array response has unit norm and the stated phase progression")
{
    const CVector a = array_response({8, 0.5}, 0.3);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    for (int k = 0; k < 8; ++k)
    {
        const cdouble want = std::exp(cdouble(0, -2.0 * std::numbers::pi * 0.5 * k * std::sin(0.3))) / std::sqrt(8.0);
        CHECK(std::abs(a(k) - want) < 1e-14);
    }
}

TEST_CASE("invalid geometry and cluster configs are rejected")
{
    CHECK_THROWS_AS(array_response({0, 0.5}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(array_response({4, 0.0}, 0.0), std::invalid_argument);
    ClusterConfig c;
    c.num_clusters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ClusterConfig{};
    c.rays_per_cluster = 0;
    Rng rng(1);
    CHECK_THROWS_AS(generate_channel(c, rng), std::invalid_argument);
}

TEST_CASE("generated channel has the configured shape and a valid SVD")
{
    Rng rng = make_stream(42, {1});
    const ClusterConfig cfg = ClusterConfig::square(16, 16, 2, 4);
    for (int t = 0; t < 50; ++t)
    {
        const ChannelMatrix h = generate_channel(cfg, rng);
        REQUIRE(h.num_rx() == 16);
        REQUIRE(h.num_tx() == 16);
        const CMatrix &u = h.svd_u();
        const CMatrix &v = h.svd_v();
        const RVector &s = h.svd_sigma();
        CMatrix sig = CMatrix::Zero(16, 16);
        for (int i = 0; i < s.size(); ++i)
            sig(i, i) = s(i);
        const double resid = (h.entries() - u * sig * v.adjoint()).norm() / h.entries().norm();
        CHECK(resid < 1e-10);
        CHECK((u.adjoint() * u - CMatrix::Identity(16, 16)).norm() < 1e-10);
        CHECK((v.adjoint() * v - CMatrix::Identity(16, 16)).norm() < 1e-10);
        for (int i = 1; i < s.size(); ++i)
            CHECK(s(i) <= s(i - 1));
        CHECK(s.minCoeff() >= 0.0);
    }
}

TEST_CASE("rank is bounded by the number of paths")
{
    Rng rng = make_stream(3, {});
    const ChannelMatrix h = generate_channel(ClusterConfig::square(16, 16, 1, 2), rng);
    const RVector &s = h.svd_sigma();
    CHECK(s(1) > 1e-8 * s(0));
    CHECK(s(2) < 1e-10 * s(0));
}

TEST_CASE("same seed gives the same channel, different seed a different one")
{
    const ClusterConfig cfg = ClusterConfig::square(4, 4);
    Rng a = make_stream(9, {1}), b = make_stream(9, {1}), c = make_stream(9, {2});
    const CMatrix ha = draw_channel_entries(cfg, a);
    CHECK((ha - draw_channel_entries(cfg, b)).norm() == 0.0);
    CHECK((ha - draw_channel_entries(cfg, c)).norm() > 0.0);
    Rng d = make_stream(9, {1});
    CHECK((generate_channel(cfg, d).entries() - ha).norm() == 0.0);
    CHECK(d() == b());
}

TEST_CASE("channel entries are zero-mean with unit average power")
{
    // Per entry E|h|^2 = Nt Nr / (Ncl Nray) * Ncl Nray * E|alpha|^2 / (Nt Nr) = 1.
    const ClusterConfig cfg = ClusterConfig::square(8, 8);
    Rng rng = make_stream(11, {});
    const int draws = 4000;
    double power = 0.0, re_mean = 0.0, re_var = 0.0;
    for (int t = 0; t < draws; ++t)
    {
        const CMatrix h = draw_channel_entries(cfg, rng);
        power += h.squaredNorm();
        re_mean += h.real().sum();
        re_var += h.real().squaredNorm();
    }
    const double entries = 64.0 * draws;
    CHECK(power / entries == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(re_mean / entries) < 0.02);
    CHECK(re_var / entries == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("noise has the requested per-dimension variance and shares draws across levels")
{
    const NoiseModel m(0.25);
    Rng rng = make_stream(5, {});
    double acc = 0.0, re = 0.0;
    const int n = 200000;
    const CVector v = draw_noise(m, n, rng);
    acc = v.squaredNorm() / n;
    re = v.real().squaredNorm() / n;
    CHECK(acc == doctest::Approx(0.25).epsilon(0.02));
    CHECK(re == doctest::Approx(0.125).epsilon(0.02));

    Rng r1 = make_stream(6, {}), r2 = make_stream(6, {});
    const CVector a = draw_noise(NoiseModel(1.0), 16, r1);
    const CVector b = draw_noise(NoiseModel(4.0), 16, r2);
    CHECK((b - 2.0 * a).norm() < 1e-12);
}

TEST_CASE("noise model rejects non-positive variance and converts SNR")
{
    CHECK_THROWS_AS(NoiseModel(0.0), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel(NAN), std::invalid_argument);
    CHECK(snr_to_noise_variance(0.0).variance() == doctest::Approx(1.0));
    CHECK(snr_to_noise_variance(10.0).variance() == doctest::Approx(0.1));
    CHECK(snr_to_noise_variance(-6.0).variance() == doctest::Approx(std::pow(10.0, 0.6)));
    Rng rng(1);
    CHECK_THROWS_AS(draw_noise(NoiseModel(1.0), 0, rng), std::invalid_argument);
}

TEST_CASE("channel fixture files round-trip bit-exactly and reject truncation")
{
    const std::string dir = testutil::scratch_dir("chfile");
    ChannelFile f;
    f.config = ClusterConfig::square(4, 2, 2, 3);
    f.seed = 77;
    Rng rng = make_stream(77, {});
    for (int i = 0; i < 5; ++i)
        f.channels.push_back(generate_channel(f.config, rng));
    const std::string path = dir + "/ch.bin";
    write_channel_file(path, f);
    const ChannelFile g = read_channel_file(path);
    CHECK(g.seed == 77);
    CHECK(g.config.num_tx() == 4);
    CHECK(g.config.num_rx() == 2);
    CHECK(g.config.rays_per_cluster == 3);
    REQUIRE(g.channels.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK((g.channels[static_cast<std::size_t>(i)].entries() - f.channels[static_cast<std::size_t>(i)].entries()).norm() == 0.0);

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3);
    try
    {
        read_channel_file(path);
        FAIL("expected a format error");
    }
    catch (const FormatError &e)
    {
        CHECK(e.byte_offset() <= size - 3);
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }

    std::ofstream(dir + "/bad.bin") << "XXXX";
    CHECK_THROWS_AS(read_channel_file(dir + "/bad.bin"), FormatError);
}
