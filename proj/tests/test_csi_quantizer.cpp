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

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace mjscc;

namespace
{
    // Closed-form Gaussian quantities for an independent Lloyd-Max oracle.
    double pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
    double cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

    // E[(X - c)^2 ; a < X < b] for standard normal X.
    double cell_mse(double a, double b, double c)
    {
        const double p = cdf(b) - cdf(a);
        const double m1 = pdf(a) - pdf(b);                                                       // E[X; cell]
        auto xphi = [](double x) { return std::isfinite(x) ? x * pdf(x) : 0.0; };
        const double m2 = p + xphi(a) - xphi(b);                                                 // E[X^2; cell]
        return m2 - 2.0 * c * m1 + c * c * p;
    }

    double gaussian_mse(const std::vector<double> &levels, const std::vector<double> &thresholds)
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < levels.size(); ++k)
        {
            const double a = k == 0 ? -INFINITY : thresholds[k - 1];
            const double b = k + 1 == levels.size() ? INFINITY : thresholds[k];
            acc += cell_mse(a, b, levels[k]);
        }
        return acc;
    }

    // Lloyd iteration on the exact density.
    double oracle_lloyd_mse(int bits)
    {
        const int L = 1 << bits;
        std::vector<double> c(L), t(L - 1);
        for (int k = 0; k < L; ++k)
            c[k] = -3.0 + 6.0 * (k + 0.5) / L;
        for (int it = 0; it < 20000; ++it)
        {
            for (int k = 0; k + 1 < L; ++k)
                t[k] = 0.5 * (c[k] + c[k + 1]);
            for (int k = 0; k < L; ++k)
            {
                const double a = k == 0 ? -INFINITY : t[k - 1];
                const double b = k + 1 == L ? INFINITY : t[k];
                c[k] = (pdf(a) - pdf(b)) / (cdf(b) - cdf(a));
            }
        }
        for (int k = 0; k + 1 < L; ++k)
            t[k] = 0.5 * (c[k] + c[k + 1]);
        return gaussian_mse(c, t);
    }

    std::vector<double> gaussian_samples(std::size_t n, std::uint64_t seed)
    {
        Rng rng = make_stream(seed, {0x6A55});
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<double> v(n);
        for (auto &x : v)
            x = nd(rng);
        return v;
    }
}

TEST_CASE("oracle reproduces the classical Gaussian Lloyd-Max values")
{
    CHECK(oracle_lloyd_mse(1) == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(1e-9));
    CHECK(oracle_lloyd_mse(2) == doctest::Approx(0.1175).epsilon(1e-3));
    CHECK(oracle_lloyd_mse(3) == doctest::Approx(0.03454).epsilon(1e-3));
}

TEST_CASE("fitted codebooks match the Gaussian oracle")
{
    const auto x = gaussian_samples(400000, 1);
    const SortedSamples s(x);
    const double tol[] = {0.01, 0.02, 0.02, 0.02};
    for (int bits = 1; bits <= 4; ++bits)
    {
        const CsiCodebook cb = fit_lloyd_max(s, bits);
        const double true_mse = gaussian_mse(cb.levels, cb.thresholds);
        CHECK(true_mse == doctest::Approx(oracle_lloyd_mse(bits)).epsilon(tol[bits - 1]));
    }
    const CsiCodebook one = fit_lloyd_max(s, 1);
    CHECK(one.levels[0] == doctest::Approx(-std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01));
    CHECK(one.levels[1] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01));
    CHECK(std::abs(one.thresholds[0]) < 0.01);
}

TEST_CASE("Lloyd-Max beats the uniform start and never increases the distortion")
{
    const auto x = gaussian_samples(50000, 2);
    const SortedSamples s(x);
    for (int bits = 1; bits <= 8; ++bits)
    {
        LloydMaxTrace trace;
        const CsiCodebook cb = fit_lloyd_max(s, bits, {}, &trace);
        REQUIRE(!trace.mse_history.empty());
        CHECK(trace.mse_history.front() <= trace.initial_mse * (1 + 1e-12));
        for (std::size_t i = 1; i < trace.mse_history.size(); ++i)
            CHECK(trace.mse_history[i] <= trace.mse_history[i - 1] * (1 + 1e-12));
        const CsiCodebook uni = uniform_codebook(bits, s.mean() - 4 * s.stddev(), s.mean() + 4 * s.stddev());
        CHECK(quantizer_mse(s, cb) < quantizer_mse(s, uni));
        CHECK(quantizer_mse(s, cb) == doctest::Approx(quantizer_mse(std::span<const double>(x), cb)).epsilon(1e-9));
    }
}

TEST_CASE("codebook structure invariants")
{
    const auto x = gaussian_samples(20000, 3);
    for (int bits = 1; bits <= 6; ++bits)
    {
        const CsiCodebook cb = fit_lloyd_max(x, bits);
        REQUIRE(cb.levels.size() == (1u << bits));
        REQUIRE(cb.thresholds.size() == (1u << bits) - 1);
        for (std::size_t k = 1; k < cb.levels.size(); ++k)
        {
            CHECK(cb.levels[k] > cb.levels[k - 1]);
            CHECK(cb.thresholds[k - 1] == doctest::Approx(0.5 * (cb.levels[k - 1] + cb.levels[k])));
        }
        CHECK_NOTHROW(cb.validate());
    }
}

TEST_CASE("index_of assigns boundary values to the upper cell")
{
    CsiCodebook cb;
    cb.bits = 1;
    cb.levels = {-1.0, 1.0};
    cb.thresholds = {0.0};
    CHECK(cb.index_of(-0.5) == 0);
    CHECK(cb.index_of(0.0) == 1);
    CHECK(cb.index_of(1e9) == 1);
    CHECK(cb.quantize(-3.0) == -1.0);
}

TEST_CASE("degenerate samples are rejected")
{
    std::vector<double> same(100, 0.5);
    CHECK_THROWS_AS(fit_lloyd_max(same, 1), std::invalid_argument);
    std::vector<double> three{0.0, 1.0, 2.0};
    CHECK_THROWS_AS(fit_lloyd_max(three, 2), std::invalid_argument);
    CHECK_NOTHROW(fit_lloyd_max(three, 1));
    const auto x = gaussian_samples(1000, 4);
    CHECK_THROWS_AS(fit_lloyd_max(x, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_lloyd_max(x, 9), std::invalid_argument);
}

TEST_CASE("empty cells are re-seeded on heavily clustered data")
{
    // Two tight clusters far apart: a uniform start leaves most cells empty.
    std::vector<double> x;
    for (int i = 0; i < 500; ++i)
    {
        x.push_back(-10.0 + 1e-3 * i);
        x.push_back(10.0 + 1e-3 * i);
    }
    LloydMaxTrace trace;
    const CsiCodebook cb = fit_lloyd_max(x, 3, {}, &trace);
    CHECK_NOTHROW(cb.validate());
    CHECK(quantizer_mse(std::span<const double>(x), cb) < 0.5);
}

TEST_CASE("CSI quantization: payload size, recovery and NMSE monotonicity")
{
    const ClusterConfig cfg = ClusterConfig::square(16, 16);
    Rng fit_rng = make_stream(10, {});
    const auto samples = pooled_channel_samples(cfg, 1000, fit_rng);
    CHECK(samples.size() == 1000u * 16 * 16 * 2);

    Rng rng = make_stream(11, {});
    std::vector<ChannelMatrix> hs;
    for (int i = 0; i < 200; ++i)
        hs.push_back(generate_channel(cfg, rng));

    double prev = INFINITY;
    for (int bits : {2, 4, 6, 8})
    {
        const CsiCodebook cb = fit_lloyd_max(samples, bits);
        double acc = 0.0;
        for (const auto &h : hs)
        {
            const QuantizedCsi q = quantize_csi(h, cb);
            CHECK(q.payload_bits() == 2L * 256 * bits);
            CHECK((q.recovered.entries() - dequantize_csi(q.real_index, q.imag_index, cb).entries()).norm() == 0.0);
            acc += nmse(h, q.recovered);
        }
        const double m = acc / 200.0;
        CHECK(m < prev);
        prev = m;
    }
    CHECK(nmse(hs[0], hs[0]) == 0.0);
    CHECK_THROWS_AS(nmse(ChannelMatrix(CMatrix::Zero(2, 2)), hs[0]), std::invalid_argument);
}

TEST_CASE("codebook files round-trip bit-exactly")
{
    const std::string dir = testutil::scratch_dir("codebook");
    const auto x = gaussian_samples(5000, 5);
    CsiCodebook cb = fit_lloyd_max(x, 5);
    cb.fitted_on = "5000 gaussian samples";
    cb.config_hash = "abc123";
    save_codebook(dir + "/cb.txt", cb);
    const CsiCodebook back = load_codebook(dir + "/cb.txt");
    CHECK(back.bits == 5);
    CHECK(back.levels == cb.levels);
    CHECK(back.thresholds == cb.thresholds);
    CHECK(back.fitted_on == cb.fitted_on);
    CHECK(back.config_hash == cb.config_hash);

    std::ofstream(dir + "/bad.txt") << "mjscc-csi-codebook 1\nbits 2\nconfig_hash -\nfitted_on x\nlevels 3\n1 2 3\n";
    CHECK_THROWS(load_codebook(dir + "/bad.txt"));
}

TEST_CASE("codebook sets fit every requested depth from one pooled sample")
{
    const CodebookSet set = fit_channel_codebooks(ClusterConfig::square(4, 4), {3, 5}, 300, 9, "h");
    CHECK(set.contains(3));
    CHECK(set.contains(5));
    CHECK_FALSE(set.contains(4));
    CHECK_THROWS(set.at(4));
    CHECK(set.at(5).config_hash == "h");
    const CodebookSet again = fit_channel_codebooks(ClusterConfig::square(4, 4), {3, 5}, 300, 9, "h");
    CHECK(again.at(5).levels == set.at(5).levels);
}
