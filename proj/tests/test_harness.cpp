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

#include "mjscc/config.hpp"
#include "mjscc/dataset.hpp"
#include "mjscc/experiment.hpp"
#include "mjscc/metrics.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mjscc;

namespace
{
    // Small enough for a unit test, large enough to exercise every stage.
    ExperimentConfig tiny_config()
    {
        ExperimentConfig c;
        c.image_side = 2;
        c.codec.image_dim = 12;
        c.codec.symbols = 4;
        c.codec.hidden = 8;
        c.evaluator.image_dim = 12;
        c.evaluator.hidden = 4;
        c.train_count = 32;
        c.validation_count = 8;
        c.test_count = 16;
        c.training.epochs = 2;
        c.training.batch_size = 16;
        c.evaluator_training.epochs = 3;
        c.evaluator_training.batch_size = 16;
        c.antennas = 4;
        c.fig4_antennas = {2, 4};
        c.fig4_snr_db = {0.0, 12.0};
        c.quantizer_fit_channels = 50;
        c.label_realizations = 1;
        c.calibration_realizations = 1;
        c.fig5_thresholds = ThresholdSpec::parse("auto:3");
        c.fig6_thresholds = ThresholdSpec::parse("auto:2");
        c.seeds = {1, 2};
        return c;
    }
}

TEST_CASE("PSNR conversion examples")
{
    const RVector a = RVector::Constant(12, 0.4);
    CHECK(psnr(a, a) == kPsnrCapDb);
    // One gray level everywhere: 10 log10(255^2) = 48.13 dB.
    const RVector b = a.array() + 1.0 / 255.0;
    CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)));
    CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-5));
    // Full-scale error: MSE = 255^2, 0 dB.
    CHECK(psnr(RVector::Zero(4), RVector::Ones(4)) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(psnr(a, RVector::Zero(3)), std::invalid_argument);
    double prev = INFINITY;
    for (double e : {0.001, 0.01, 0.05, 0.2, 0.7})
    {
        const double p = psnr(a, RVector(a.array() + e));
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("rank statistics")
{
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 8, 16, 32}, z{5, 4, 3, 2, 1};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
    CHECK(pearson(x, x) == doctest::Approx(1.0));
    CHECK(variance(x) == doctest::Approx(2.0));
}

TEST_CASE("CIFAR binary batches round-trip bit-exactly")
{
    const std::string dir = testutil::scratch_dir("cifar");
    std::vector<ImageSample> imgs(3);
    for (int n = 0; n < 3; ++n)
    {
        imgs[n].pixels.resize(kCifarSide * kCifarSide * kCifarChannels);
        for (Eigen::Index i = 0; i < imgs[n].pixels.size(); ++i)
            imgs[n].pixels(i) = static_cast<double>((i * 31 + n * 7) % 256) / 255.0;
    }
    write_cifar_binary(dir + "/b.bin", imgs, {1, 2, 3});
    CHECK(std::filesystem::file_size(dir + "/b.bin") == 3 * kCifarRecordBytes);
    const auto back = load_cifar_binary(dir + "/b.bin", std::nullopt, 10);
    REQUIRE(back.size() == 3);
    for (int n = 0; n < 3; ++n)
    {
        CHECK(back[n].source_id == 10 + n);
        CHECK(back[n].pixels == imgs[n].pixels);
        CHECK(back[n].size() == 32 * 32 * 3);
    }

    // Raw layout: label byte, then the R plane; pixel (0,1) red sits at record offset 2.
    std::ifstream in(dir + "/b.bin", std::ios::binary);
    unsigned char rec[4];
    in.read(reinterpret_cast<char *>(rec), 4);
    CHECK(rec[0] == 1);
    CHECK(rec[2] == static_cast<unsigned char>(std::lround(imgs[0].pixels(3) * 255.0)));

    const auto crop = load_cifar_binary(dir + "/b.bin", 8);
    REQUIRE(crop[0].size() == 8 * 8 * 3);
    // Top-left of the centered crop is source pixel (12, 12).
    CHECK(crop[0].pixels(0) == imgs[0].pixels((12 * 32 + 12) * 3));
    CHECK(center_crop(imgs, 32, 8)[0].pixels == crop[0].pixels);

    std::filesystem::resize_file(dir + "/b.bin", 2 * kCifarRecordBytes + 100);
    try
    {
        load_cifar_binary(dir + "/b.bin");
        FAIL("expected a format error");
    }
    catch (const FormatError &e)
    {
        CHECK(e.byte_offset() == 2 * kCifarRecordBytes);
    }

    std::vector<ImageSample> zero(1);
    zero[0].pixels = RVector::Zero(32 * 32 * 3);
    write_cifar_binary(dir + "/z.bin", zero);
    const auto z = load_cifar_binary(dir + "/z.bin");
    CHECK(z[0].pixels.maxCoeff() == 0.0);
}

TEST_CASE("synthetic images: determinism and complexity separation")
{
    const auto a = synthesize_images(40, 8, 0.5, 3);
    const auto b = synthesize_images(40, 8, 0.5, 3);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        CHECK(a[i].pixels == b[i].pixels);
        CHECK_NOTHROW(a[i].validate());
        CHECK(a[i].source_id == static_cast<int>(i));
    }
    const auto smooth = synthesize_images(30, 8, 0.0, 4);
    const auto texture = synthesize_images(30, 8, 1.0, 4);
    double max_smooth = 0.0, min_texture = INFINITY;
    for (const auto &s : smooth)
    {
        CHECK(s.component == 0);
        max_smooth = std::max(max_smooth, total_variation(s, 8));
    }
    for (const auto &s : texture)
    {
        CHECK(s.component == 1);
        min_texture = std::min(min_texture, total_variation(s, 8));
    }
    CHECK(max_smooth < min_texture);
    CHECK(synthesize_images(5, 8, 0.5, 3, 100)[0].source_id == 100);
    CHECK_THROWS_AS(synthesize_images(0, 8, 0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_images(3, 8, 1.5, 3), std::invalid_argument);
}

TEST_CASE("config text round-trips and fails fast")
{
    const ExperimentConfig d;
    CHECK_NOTHROW(d.validate());
    const ExperimentConfig back = ExperimentConfig::parse(d.serialize());
    CHECK(back.serialize() == d.serialize());
    CHECK(back.hash() == d.hash());
    CHECK(d.hash().size() == 12);

    ExperimentConfig t = tiny_config();
    const ExperimentConfig tb = ExperimentConfig::parse(t.serialize());
    CHECK(tb.serialize() == t.serialize());
    CHECK(tb.codec.image_dim == 12);

    CHECK_THROWS(ExperimentConfig::parse(d.serialize() + "link.antenas = 8\n"));
    CHECK_THROWS(ExperimentConfig::parse("mjscc-config 1\nlink.antennas = 8\nlink.antennas = 4\n"));
    CHECK_THROWS(ExperimentConfig::parse("mjscc-config 2\n"));
    CHECK_THROWS(ExperimentConfig::parse("link.antennas = 8\n"));
    CHECK_THROWS(ExperimentConfig::parse("mjscc-config 1\nlink.antennas = many\n"));
    CHECK_THROWS(ExperimentConfig::parse("mjscc-config 1\nlink.streams = 40\n"));

    const ExperimentConfig partial = ExperimentConfig::parse("mjscc-config 1\n# comment\nlink.antennas = 8\n");
    CHECK(partial.antennas == 8);
    CHECK(partial.test_count == d.test_count);
}

TEST_CASE("the config hash ignores seeds and threads only")
{
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.seeds = {9, 10};
    b.threads = 4;
    CHECK(a.hash() == b.hash());
    b.training.epochs = 29;
    CHECK(a.hash() != b.hash());
    ExperimentConfig c = a;
    c.artifact_seed = 2;
    CHECK(a.hash() != c.hash());
    CHECK(parse_seed_list("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
    CHECK_THROWS(parse_seed_list(""));
}

TEST_CASE("automatic thresholds are interior grid points")
{
    const ThresholdSpec s = ThresholdSpec::parse("auto:3");
    const auto v = s.resolve(10.0, 30.0);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 15.0);
    CHECK(v[1] == 20.0);
    CHECK(v[2] == 25.0);
    CHECK(s.to_string() == "auto:3");
    const ThresholdSpec e = ThresholdSpec::parse("20,25.5");
    CHECK(e.resolve(0, 1) == std::vector<double>{20.0, 25.5});
    CHECK_THROWS(ThresholdSpec::parse("auto:0"));
}

TEST_CASE("metrics CSV lines round-trip exactly")
{
    MetricsRecord r;
    r.policy = "group_split";
    r.option_bits = "7/5";
    r.threshold_db = 27.123456789012345;
    r.snr_db = 6.0;
    r.success_ratio = 1.0 / 3.0;
    r.avg_bits = 6.0;
    r.total_bits = 1572864;
    r.mean_psnr_db = 29.000000000000004;
    r.seed = 3;
    r.figure = 5;
    r.antennas = 16;
    r.config_hash = "0123456789ab";
    r.wall_clock_s = 1.5;
    const MetricsRecord back = parse_csv_line(to_csv_line(r));
    CHECK(back.threshold_db == r.threshold_db);
    CHECK(back.success_ratio == r.success_ratio);
    CHECK(back.mean_psnr_db == r.mean_psnr_db);
    CHECK(back.total_bits == r.total_bits);
    CHECK(back.option_bits == r.option_bits);
    CHECK(to_csv_line(back) == to_csv_line(r));
    CHECK(to_csv_line(r).find("1.5") == std::string::npos);
    CHECK_THROWS(parse_csv_line("a,b,c"));
}

TEST_CASE("record checks catch broken invariants")
{
    MetricsRecord r;
    r.policy = "uniform";
    r.option_bits = "6";
    r.figure = 5;
    r.antennas = 16;
    r.config_hash = "h";
    std::vector<MetricsRecord> rows;
    for (double th : {20.0, 25.0, 30.0})
    {
        r.threshold_db = th;
        r.success_ratio = 1.0 - th / 40.0;
        rows.push_back(r);
    }
    CHECK(check_records(rows).empty());
    rows[2].success_ratio = 0.9;
    CHECK_FALSE(check_records(rows).empty());
    rows[2].success_ratio = 1.5;
    CHECK_FALSE(check_records(rows).empty());
    rows[2].success_ratio = 0.1;
    rows[2].mean_psnr_db = NAN;
    CHECK_FALSE(check_records(rows).empty());
}

TEST_CASE("aggregation averages over seeds")
{
    MetricsRecord r;
    r.policy = "uniform";
    r.option_bits = "6";
    r.figure = 5;
    r.threshold_db = 20.0;
    r.config_hash = "h";
    std::vector<MetricsRecord> rows;
    for (int s = 1; s <= 4; ++s)
    {
        r.seed = static_cast<std::uint64_t>(s);
        r.success_ratio = 0.1 * s;
        rows.push_back(r);
    }
    r.threshold_db = 25.0;
    rows.push_back(r);
    const auto agg = aggregate(rows);
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].mean.success_ratio == doctest::Approx(0.25));
    CHECK(agg[0].mean.seed == 4);
    CHECK(agg[0].success_ratio_min == doctest::Approx(0.1));
    CHECK(agg[0].success_ratio_max == doctest::Approx(0.4));
    CHECK(agg[1].mean.seed == 1);
}

TEST_CASE("parallel_for covers every index and propagates exceptions")
{
    for (int threads : {1, 3})
    {
        std::vector<std::atomic<int>> hits(50);
        parallel_for(50, threads, [&](std::size_t i) { hits[i]++; });
        for (const auto &h : hits)
            CHECK(h.load() == 1);
        CHECK_THROWS_AS(parallel_for(10, threads,
                                     [](std::size_t i) {
                                         if (i == 7)
                                             throw std::runtime_error("boom");
                                     }),
                        std::runtime_error);
    }
}

TEST_CASE("a tiny pipeline writes consistent rows and regenerates them bit-identically")
{
    const std::string dir = testutil::scratch_dir("pipeline");
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg = tiny_config();
    std::string hash;
    std::vector<MetricsRecord> rows5;
    {
        Pipeline p(cfg, dir);
        hash = p.config_hash();
        CHECK(hash == cfg.hash());
        for (int fig : {4, 5, 6})
        {
            const auto rows = p.run_figure(fig, cfg.seeds);
            CHECK_FALSE(rows.empty());
            CHECK(check_records(rows).empty());
            write_metrics_csv(dir + "/fig" + std::to_string(fig) + ".csv", rows);
            if (fig == 5)
                rows5 = rows;
        }
        INFO(p.violations().size());
        for (const auto &v : p.violations())
            MESSAGE(v);
        CHECK(p.violations().empty());
        CHECK(std::filesystem::exists(p.artifact_dir() + "/config.txt"));
        CHECK(std::filesystem::exists(p.artifact_dir() + "/evaluator.ckpt"));
    }
    const auto disk = read_metrics_csv(dir + "/fig5.csv");
    REQUIRE(disk.size() == rows5.size());
    for (std::size_t i = 0; i < disk.size(); ++i)
        CHECK(to_csv_line(disk[i]) == to_csv_line(rows5[i]));

    // Fresh process state: everything comes from the archived config and cached artifacts.
    const auto regen = regenerate_rows(dir, hash, 5, 2);
    std::vector<std::string> want, got;
    for (const auto &r : rows5)
        if (r.seed == 2)
            want.push_back(to_csv_line(r));
    for (const auto &r : regen)
        got.push_back(to_csv_line(r));
    CHECK(got == want);

    // Artifacts rebuilt from scratch match the cached ones.
    const std::string dir2 = testutil::scratch_dir("pipeline_fresh");
    std::filesystem::remove_all(dir2);
    Pipeline fresh(cfg, dir2);
    const auto again = fresh.run_seed(5, 2);
    std::vector<std::string> got2;
    for (const auto &r : again)
        got2.push_back(to_csv_line(r));
    CHECK(got2 == want);

    CHECK_THROWS(regenerate_rows(dir, "ffffffffffff", 5, 1));
}
