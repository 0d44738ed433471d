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

#include "mjscc/mjscc.h"

#include "mjscc/experiment.hpp"
#include "mjscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace mjscc;

struct mjscc_config
{
    ExperimentConfig cfg;
};

struct mjscc_pipeline
{
    Pipeline pipeline;
    std::string out_dir;
    std::string summary;
    std::vector<std::string> violations;
};

namespace
{
    thread_local std::string last_error;

    template <class F>
    mjscc_status guard(F &&f)
    {
        try
        {
            last_error.clear();
            return f();
        }
        catch (const FormatError &e)
        {
            last_error = e.what();
            return MJSCC_ERR_FORMAT;
        }
        catch (const RankDeficientError &e)
        {
            last_error = e.what();
            return MJSCC_ERR_RANK_DEFICIENT;
        }
        catch (const NonFiniteLossError &e)
        {
            last_error = e.what();
            return MJSCC_ERR_NON_FINITE;
        }
        catch (const std::invalid_argument &e)
        {
            last_error = e.what();
            return MJSCC_ERR_INVALID_ARGUMENT;
        }
        catch (const std::out_of_range &e)
        {
            last_error = e.what();
            return MJSCC_ERR_INVALID_ARGUMENT;
        }
        catch (const std::runtime_error &e)
        {
            last_error = e.what();
            return MJSCC_ERR_IO;
        }
        catch (const std::exception &e)
        {
            last_error = e.what();
            return MJSCC_ERR_INTERNAL;
        }
        catch (...)
        {
            last_error = "unknown error";
            return MJSCC_ERR_INTERNAL;
        }
    }

    mjscc_status fail(mjscc_status s, const std::string &msg)
    {
        last_error = msg;
        return s;
    }

    mjscc_status copy_out(const std::string &text, char *buf, std::size_t size, std::size_t *needed)
    {
        if (needed)
            *needed = text.size() + 1;
        if (!buf && size == 0 && needed)
            return MJSCC_OK; // size query
        if (!buf || size < text.size() + 1)
            return fail(MJSCC_ERR_BUFFER_TOO_SMALL, "buffer holds " + std::to_string(size) + " bytes, need " +
                                                        std::to_string(text.size() + 1));
        std::memcpy(buf, text.c_str(), text.size() + 1);
        return MJSCC_OK;
    }

    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    std::vector<int> antenna_list(const ExperimentConfig &c)
    {
        std::set<int> s(c.fig4_antennas.begin(), c.fig4_antennas.end());
        s.insert(c.antennas);
        return {s.begin(), s.end()};
    }
}

extern "C" {

const char *mjscc_version(void) { return "0.1.0"; }

const char *mjscc_status_name(mjscc_status status)
{
    switch (status)
    {
    case MJSCC_OK:
        return "ok";
    case MJSCC_ERR_INVALID_ARGUMENT:
        return "invalid argument";
    case MJSCC_ERR_IO:
        return "i/o error";
    case MJSCC_ERR_FORMAT:
        return "format error";
    case MJSCC_ERR_RANK_DEFICIENT:
        return "rank deficient";
    case MJSCC_ERR_NON_FINITE:
        return "non-finite loss";
    case MJSCC_ERR_BUFFER_TOO_SMALL:
        return "buffer too small";
    case MJSCC_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

const char *mjscc_last_error(void) { return last_error.c_str(); }

mjscc_status mjscc_config_default(mjscc_config **out)
{
    if (!out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null output handle");
    return guard([&] {
        *out = new mjscc_config{};
        return MJSCC_OK;
    });
}

mjscc_status mjscc_config_load(const char *path, mjscc_config **out)
{
    if (!path || !out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *out = new mjscc_config{ExperimentConfig::load(path)};
        return MJSCC_OK;
    });
}

mjscc_status mjscc_config_parse(const char *text, mjscc_config **out)
{
    if (!text || !out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *out = new mjscc_config{ExperimentConfig::parse(text)};
        return MJSCC_OK;
    });
}

void mjscc_config_free(mjscc_config *config) { delete config; }

mjscc_status mjscc_config_set_seeds(mjscc_config *config, const uint64_t *seeds, size_t count)
{
    if (!config || (!seeds && count))
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    if (count == 0)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "seed list is empty");
    config->cfg.seeds.assign(seeds, seeds + count);
    last_error.clear();
    return MJSCC_OK;
}

size_t mjscc_config_seed_count(const mjscc_config *config) { return config ? config->cfg.seeds.size() : 0; }

mjscc_status mjscc_config_seeds(const mjscc_config *config, uint64_t *out, size_t capacity)
{
    if (!config || !out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    if (capacity < config->cfg.seeds.size())
        return fail(MJSCC_ERR_BUFFER_TOO_SMALL, "seed buffer too small");
    std::copy(config->cfg.seeds.begin(), config->cfg.seeds.end(), out);
    last_error.clear();
    return MJSCC_OK;
}

mjscc_status mjscc_config_hash(const mjscc_config *config, char *buf, size_t size)
{
    if (!config)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null config");
    return guard([&] { return copy_out(config->cfg.hash(), buf, size, nullptr); });
}

mjscc_status mjscc_config_serialize(const mjscc_config *config, char *buf, size_t size, size_t *needed)
{
    if (!config)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null config");
    return guard([&] { return copy_out(config->cfg.serialize(true), buf, size, needed); });
}

mjscc_status mjscc_pipeline_create(const mjscc_config *config, const char *out_dir, mjscc_log_fn log, void *user,
                                   mjscc_pipeline **out)
{
    if (!config || !out_dir || !out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        LogSink sink;
        if (log)
            sink = [log, user](const std::string &m) { log(m.c_str(), user); };
        *out = new mjscc_pipeline{Pipeline(config->cfg, out_dir, sink), out_dir, {}, {}};
        return MJSCC_OK;
    });
}

void mjscc_pipeline_free(mjscc_pipeline *pipeline) { delete pipeline; }

mjscc_status mjscc_fit_quantizer(mjscc_pipeline *p)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    return guard([&] {
        const auto &cfg = p->pipeline.config();
        const auto &books = p->pipeline.codebooks();
        // NMSE on fresh channels must fall as the bit depth grows.
        const ClusterConfig cc = cfg.link(cfg.antennas).channel;
        Rng rng = make_stream(cfg.artifact_seed, {0xF17ULL});
        std::vector<ChannelMatrix> hs;
        for (int i = 0; i < 256; ++i)
            hs.push_back(generate_channel(cc, rng));
        std::ostringstream s;
        double prev = INFINITY;
        for (int b : books.bit_depths())
        {
            const auto &cb = books.at(b);
            cb.validate();
            double acc = 0.0;
            for (const auto &h : hs)
                acc += nmse(h, quantize_csi(h, cb).recovered);
            const double v = acc / static_cast<double>(hs.size());
            s << b << " bits: " << cb.levels.size() << " levels, NMSE " << fmt("%.4e", v) << " ("
              << fmt("%.2f", 10.0 * std::log10(v)) << " dB)\n";
            if (!(v < prev))
                p->violations.push_back("NMSE does not decrease at " + std::to_string(b) + " bits");
            prev = v;
        }
        s << "codebooks in " << p->pipeline.artifact_dir() << "\n";
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_train_codec(mjscc_pipeline *p)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    return guard([&] {
        const auto &cfg = p->pipeline.config();
        std::ostringstream s;
        for (int a : antenna_list(cfg))
        {
            const auto &codec = p->pipeline.codec(a);
            const auto &loss = p->pipeline.codec_epoch_loss(a);
            const auto &test = p->pipeline.test_set();
            const OutcomeTable t = simulate_outcomes(codec, test, cfg.link(a), CodebookSet{}, {kPerfectCsi},
                                                     cfg.training.train_snr_db, 1, derive_seed(cfg.artifact_seed, {0x7E57ULL}));
            const double m = t.psnr_db.col(0).mean();
            s << a << "x" << a << ": ";
            if (loss.empty())
                s << "cached";
            else
                s << loss.size() << " epochs, loss " << fmt("%.5f", loss.front()) << " -> " << fmt("%.5f", loss.back());
            s << ", test PSNR " << fmt("%.2f", m) << " dB at " << fmt("%g", cfg.training.train_snr_db) << " dB SNR\n";
            for (double l : loss)
                if (!std::isfinite(l))
                    p->violations.push_back("non-finite training loss");
            if (loss.size() >= 2 && !(loss.back() < loss.front()))
                p->violations.push_back("codec loss did not decrease for " + std::to_string(a) + " antennas");
            if (!std::isfinite(m))
                p->violations.push_back("non-finite test PSNR");
        }
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_label(mjscc_pipeline *p)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    return guard([&] {
        std::ostringstream s;
        auto describe = [&](const char *name, const std::vector<QualityLabel> &labels) {
            std::vector<double> v;
            for (const auto &l : labels)
            {
                v.push_back(l.true_psnr_db);
                if (!std::isfinite(l.true_psnr_db) || l.true_psnr_db > kPsnrCapDb)
                    p->violations.push_back(std::string(name) + " label of image " + std::to_string(l.source_id) +
                                            " is not a finite capped PSNR");
            }
            s << name << ": " << v.size() << " labels, mean " << fmt("%.2f", mean(v)) << " dB, range ["
              << fmt("%.2f", *std::min_element(v.begin(), v.end())) << ", "
              << fmt("%.2f", *std::max_element(v.begin(), v.end())) << "] dB\n";
        };
        describe("train", p->pipeline.train_labels());
        describe("test", p->pipeline.test_labels());
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_train_evaluator(mjscc_pipeline *p)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    return guard([&] {
        const auto &e = p->pipeline.evaluator();
        const auto &test = p->pipeline.test_set();
        const auto truth = labels_for(test, p->pipeline.test_labels());
        const auto pred = e.predict_batch(test);
        const double base = mean(labels_for(p->pipeline.train_set(), p->pipeline.train_labels()));
        double mse = 0.0, mse_base = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i)
        {
            mse += (pred[i] - truth[i]) * (pred[i] - truth[i]);
            mse_base += (base - truth[i]) * (base - truth[i]);
        }
        mse /= static_cast<double>(truth.size());
        mse_base /= static_cast<double>(truth.size());
        const double rho = spearman(pred, truth);
        std::ostringstream s;
        s << "held-out MSE " << fmt("%.4f", mse) << " dB^2 vs constant-mean " << fmt("%.4f", mse_base)
          << " dB^2, Spearman " << fmt("%.4f", rho) << "\n";
        if (!(mse < mse_base))
            p->violations.push_back("evaluator does not beat the constant-mean baseline");
        if (!std::isfinite(rho))
            p->violations.push_back("non-finite rank correlation");
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_calibrate(mjscc_pipeline *p)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    return guard([&] {
        const auto &table = p->pipeline.degradation();
        std::ostringstream s;
        double prev = INFINITY;
        for (const auto &[b, pen] : table)
        {
            s << b << " bits: penalty " << fmt("%.4f", pen) << " dB\n";
            if (!std::isfinite(pen) || pen < 0.0)
                p->violations.push_back("invalid penalty at " + std::to_string(b) + " bits");
            if (pen > prev)
                s << "  note: penalty rises from " << b - 1 << " to " << b << " bits (Monte Carlo noise)\n";
            prev = pen;
        }
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_sweep(mjscc_pipeline *p, int figure)
{
    if (!p)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null pipeline");
    if (figure < 4 || figure > 6)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "figure must be 4, 5 or 6");
    return guard([&] {
        const std::size_t before = p->pipeline.violations().size();
        const auto rows = p->pipeline.run_figure(figure, p->pipeline.config().seeds);
        const std::string path = p->out_dir + "/fig" + std::to_string(figure) + ".csv";
        write_metrics_csv(path, rows);
        const auto &v = p->pipeline.violations();
        p->violations.insert(p->violations.end(), v.begin() + static_cast<std::ptrdiff_t>(before), v.end());
        std::ostringstream s;
        s << rows.size() << " rows for " << p->pipeline.config().seeds.size() << " seed(s) written to " << path << "\n";
        for (const auto &r : aggregate(rows))
        {
            const auto &m = r.mean;
            s << "  " << m.antennas << "x" << m.antennas << " " << m.policy << " [" << m.option_bits << "] snr "
              << fmt("%g", m.snr_db) << " th " << fmt("%.2f", m.threshold_db) << ": success "
              << fmt("%.4f", m.success_ratio) << ", avg bits " << fmt("%.3f", m.avg_bits) << ", total bits "
              << m.total_bits << ", PSNR " << fmt("%.3f", m.mean_psnr_db) << " dB\n";
        }
        p->summary = s.str();
        return MJSCC_OK;
    });
}

mjscc_status mjscc_report(const char *out_dir, char *summary, size_t size, size_t *needed, size_t *violations)
{
    if (!out_dir)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null output directory");
    return guard([&] {
        std::vector<std::string> files;
        for (const auto &entry : fs::directory_iterator(out_dir))
        {
            const std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name.rfind("fig", 0) == 0 && entry.path().extension() == ".csv")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("no fig*.csv files under " + std::string(out_dir));
        std::vector<MetricsRecord> rows;
        for (const auto &f : files)
        {
            auto r = read_metrics_csv(f);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        const auto problems = check_records(rows);
        const auto agg = aggregate(rows);
        const std::string path = std::string(out_dir) + "/report.csv";
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out)
                throw std::runtime_error("cannot open '" + path + "' for writing");
            out << report_csv_header() << "\n";
            for (const auto &r : agg)
                out << to_report_line(r) << "\n";
        }
        std::ostringstream s;
        s << rows.size() << " rows from " << files.size() << " file(s), " << agg.size() << " aggregated points -> "
          << path << "\n";
        for (const auto &pr : problems)
            s << "violation: " << pr << "\n";
        if (violations)
            *violations = problems.size();
        if (!summary && !needed)
            return MJSCC_OK;
        return copy_out(s.str(), summary, size, needed);
    });
}

mjscc_status mjscc_regenerate(const char *out_dir, const char *config_hash, int figure, uint64_t seed,
                              const char *csv_path)
{
    if (!out_dir || !config_hash || !csv_path)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        write_metrics_csv(csv_path, regenerate_rows(out_dir, config_hash, figure, seed));
        return MJSCC_OK;
    });
}

const char *mjscc_pipeline_summary(const mjscc_pipeline *p) { return p ? p->summary.c_str() : ""; }

size_t mjscc_pipeline_violation_count(const mjscc_pipeline *p) { return p ? p->violations.size() : 0; }

const char *mjscc_pipeline_violation(const mjscc_pipeline *p, size_t index)
{
    if (!p || index >= p->violations.size())
        return nullptr;
    return p->violations[index].c_str();
}

mjscc_status mjscc_psnr(const double *reference, const double *reconstruction, size_t n, double *out_db)
{
    if (!reference || !reconstruction || !out_db)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        const auto len = static_cast<Eigen::Index>(n);
        *out_db = psnr(RVector(Eigen::Map<const RVector>(reference, len)),
                       RVector(Eigen::Map<const RVector>(reconstruction, len)));
        return MJSCC_OK;
    });
}

mjscc_status mjscc_success_ratio(const double *psnr_db, size_t n, double threshold_db, double *out)
{
    if (!psnr_db || !out)
        return fail(MJSCC_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        std::vector<Outcome> o(n);
        for (size_t i = 0; i < n; ++i)
            o[i] = {static_cast<int>(i), psnr_db[i]};
        *out = success_ratio(o, threshold_db);
        return MJSCC_OK;
    });
}

} // extern "C"
