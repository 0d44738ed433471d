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

// Command-line front end. Talks to the library only through the C interface.
#include "mjscc/mjscc.h"

#include <CLI11.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace
{
    struct Options
    {
        std::string config_path;
        std::string seeds;
        std::string out_dir = "mjscc-out";
        int figure = 0;
        bool quiet = false;
    };

    void log_line(const char *msg, void *)
    {
        std::fprintf(stderr, "[mjscc] %s\n", msg);
    }

    int report_error(const char *what, mjscc_status s)
    {
        std::fprintf(stderr, "error: %s failed (%s): %s\n", what, mjscc_status_name(s), mjscc_last_error());
        return 2;
    }

    std::vector<uint64_t> parse_seeds(const std::string &s)
    {
        std::vector<uint64_t> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ','))
        {
            if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
                throw CLI::ValidationError("--seeds", "expected comma-separated unsigned integers, got '" + s + "'");
            out.push_back(std::stoull(tok));
        }
        if (out.empty())
            throw CLI::ValidationError("--seeds", "seed list is empty");
        return out;
    }

    // Builds the pipeline, runs one stage, prints its summary and broken invariants.
    int run_stage(const Options &o, const char *name, mjscc_status (*stage)(mjscc_pipeline *, int), int arg)
    {
        mjscc_config *cfg = nullptr;
        mjscc_status s = o.config_path.empty() ? mjscc_config_default(&cfg) : mjscc_config_load(o.config_path.c_str(), &cfg);
        if (s != MJSCC_OK)
            return report_error("loading the config", s);
        if (!o.seeds.empty())
        {
            const auto seeds = parse_seeds(o.seeds);
            if ((s = mjscc_config_set_seeds(cfg, seeds.data(), seeds.size())) != MJSCC_OK)
            {
                mjscc_config_free(cfg);
                return report_error("setting seeds", s);
            }
        }
        char hash[16];
        mjscc_config_hash(cfg, hash, sizeof hash);
        mjscc_pipeline *p = nullptr;
        s = mjscc_pipeline_create(cfg, o.out_dir.c_str(), o.quiet ? nullptr : log_line, nullptr, &p);
        mjscc_config_free(cfg);
        if (s != MJSCC_OK)
            return report_error("creating the pipeline", s);
        if ((s = stage(p, arg)) != MJSCC_OK)
        {
            mjscc_pipeline_free(p);
            return report_error(name, s);
        }
        std::printf("%s (config %s)\n%s", name, hash, mjscc_pipeline_summary(p));
        const size_t bad = mjscc_pipeline_violation_count(p);
        for (size_t i = 0; i < bad; ++i)
            std::printf("INVARIANT VIOLATED: %s\n", mjscc_pipeline_violation(p, i));
        mjscc_pipeline_free(p);
        return bad == 0 ? 0 : 1;
    }

    template <mjscc_status (*F)(mjscc_pipeline *)>
    mjscc_status no_arg(mjscc_pipeline *p, int) { return F(p); }
}

int main(int argc, char **argv)
{
    CLI::App app{"mimo-jscc: deep JSCC image transmission over MIMO with adaptive CSI feedback"};
    app.require_subcommand(1);
    Options o;
    int rc = 0;

    auto common = [&](CLI::App *sub) {
        sub->add_option("-c,--config", o.config_path, "config file (versioned key = value); defaults if omitted");
        sub->add_option("-s,--seeds", o.seeds, "comma-separated seed list, overrides the config");
        sub->add_option("-o,--out", o.out_dir, "output directory (artifacts and CSV)")->capture_default_str();
        sub->add_flag("-q,--quiet", o.quiet, "no progress log on stderr");
    };

    auto *fit = app.add_subcommand("fit-quantizer", "fit Lloyd-Max CSI codebooks");
    auto *train = app.add_subcommand("train-codec", "train the JSCC codec for every antenna setting");
    auto *label = app.add_subcommand("label", "label train and test images with achieved PSNR");
    auto *train_eval = app.add_subcommand("train-evaluator", "train the quality evaluator");
    auto *calibrate = app.add_subcommand("calibrate", "measure PSNR loss per feedback bit depth");
    auto *sweep = app.add_subcommand("sweep", "run a figure sweep and write fig<N>.csv");
    auto *report = app.add_subcommand("report", "aggregate fig*.csv over seeds into report.csv");
    for (auto *sub : {fit, train, label, train_eval, calibrate, sweep})
        common(sub);
    sweep->add_option("-f,--figure", o.figure, "figure to reproduce")->required()->check(CLI::IsMember({4, 5, 6}));
    report->add_option("-o,--out", o.out_dir, "directory holding fig*.csv")->capture_default_str();

    fit->callback([&] { rc = run_stage(o, "fit-quantizer", no_arg<mjscc_fit_quantizer>, 0); });
    train->callback([&] { rc = run_stage(o, "train-codec", no_arg<mjscc_train_codec>, 0); });
    label->callback([&] { rc = run_stage(o, "label", no_arg<mjscc_label>, 0); });
    train_eval->callback([&] { rc = run_stage(o, "train-evaluator", no_arg<mjscc_train_evaluator>, 0); });
    calibrate->callback([&] { rc = run_stage(o, "calibrate", no_arg<mjscc_calibrate>, 0); });
    sweep->callback([&] { rc = run_stage(o, "sweep", mjscc_sweep, o.figure); });
    report->callback([&] {
        size_t needed = 0, bad = 0;
        mjscc_status s = mjscc_report(o.out_dir.c_str(), nullptr, 0, &needed, &bad);
        if (s != MJSCC_OK && s != MJSCC_ERR_BUFFER_TOO_SMALL)
        {
            rc = report_error("report", s);
            return;
        }
        std::string text(needed, '\0');
        if ((s = mjscc_report(o.out_dir.c_str(), text.data(), text.size(), &needed, &bad)) != MJSCC_OK)
        {
            rc = report_error("report", s);
            return;
        }
        std::printf("%s", text.c_str());
        rc = bad == 0 ? 0 : 1;
    });

    CLI11_PARSE(app, argc, argv);
    return rc;
}
