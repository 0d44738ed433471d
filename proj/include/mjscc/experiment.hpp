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

#ifndef MJSCC_EXPERIMENT_HPP
#define MJSCC_EXPERIMENT_HPP

#include "mjscc/adaptive_feedback.hpp"
#include "mjscc/config.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mjscc
{
    // One CSV row. wall_clock_s is kept in memory and in logs only, so rows regenerate bit-identically.
    struct MetricsRecord
    {
        std::string policy;      // uniform, group_split, min_bits_search, perfect_csi
        std::string option_bits; // "7/6/5"; "-" for perfect CSI
        double threshold_db = 0.0;
        double snr_db = 0.0;
        double success_ratio = 0.0;
        double avg_bits = 0.0;
        long long total_bits = 0;
        double mean_psnr_db = 0.0;
        std::uint64_t seed = 0;
        int figure = 0;
        int antennas = 0;
        std::string config_hash;
        double wall_clock_s = 0.0;

        bool finite() const;
    };

    std::string metrics_csv_header();
    std::string to_csv_line(const MetricsRecord &r);
    MetricsRecord parse_csv_line(const std::string &line);
    void write_metrics_csv(const std::string &path, const std::vector<MetricsRecord> &rows);
    std::vector<MetricsRecord> read_metrics_csv(const std::string &path);

    using LogSink = std::function<void(const std::string &)>;

    // Lazily builds (or loads from <out>/artifacts/<config hash>/) every artifact a sweep needs:
    // codebooks, per-antenna codecs, labels, the evaluator and the degradation table.
    class Pipeline
    {
    public:
        Pipeline(ExperimentConfig config, std::string out_dir, LogSink log = {});

        const ExperimentConfig &config() const { return config_; }
        const std::string &config_hash() const { return hash_; }
        std::string artifact_dir() const;

        const std::vector<ImageSample> &train_set();
        const std::vector<ImageSample> &validation_set();
        const std::vector<ImageSample> &test_set();

        const CodebookSet &codebooks();
        const JsccCodec &codec(int antennas);
        const JsccCodec &codec() { return codec(config_.antennas); }
        // Per-epoch loss of a codec trained in this process; empty when it came from the cache.
        const std::vector<double> &codec_epoch_loss(int antennas) const;
        const std::vector<QualityLabel> &train_labels();
        const std::vector<QualityLabel> &test_labels();
        const Evaluator &evaluator();
        const DegradationTable &degradation();

        std::vector<QualityPrediction> predictions(PredictorMode mode);
        std::vector<double> thresholds(const ThresholdSpec &spec);

        // Rows of one figure (4, 5 or 6) for one seed. Appends broken invariants to violations().
        std::vector<MetricsRecord> run_seed(int figure, std::uint64_t seed);
        // All seeds; artifacts are prepared first, then seeds run on config.threads workers.
        std::vector<MetricsRecord> run_figure(int figure, const std::vector<std::uint64_t> &seeds);

        const std::vector<std::string> &violations() const { return violations_; }

    private:
        void log(const std::string &msg) const;
        void prepare(int figure);
        void check_rows(int figure, const std::vector<MetricsRecord> &rows, std::vector<std::string> &out) const;
        std::vector<MetricsRecord> seed_rows(int figure, std::uint64_t seed, std::vector<std::string> &violations);

        ExperimentConfig config_;
        std::string out_dir_;
        std::string hash_;
        LogSink log_;

        std::optional<std::vector<ImageSample>> train_, validation_, test_;
        std::optional<CodebookSet> codebooks_;
        std::map<int, JsccCodec> codecs_;
        std::map<int, std::vector<double>> codec_loss_;
        std::optional<std::vector<QualityLabel>> train_labels_, test_labels_;
        std::optional<Evaluator> evaluator_;
        std::optional<DegradationTable> degradation_;
        std::vector<std::string> violations_;
    };

    // Re-runs one seed of one figure from the config archived under <out>/artifacts/<hash>/.
    std::vector<MetricsRecord> regenerate_rows(const std::string &out_dir, const std::string &config_hash, int figure,
                                               std::uint64_t seed, LogSink log = {});

    // Mean over seeds of every (figure, antennas, policy, option_bits, threshold, snr, hash) group.
    struct ReportRow
    {
        MetricsRecord mean; // seed field holds the number of seeds averaged
        double success_ratio_min = 0.0;
        double success_ratio_max = 0.0;
    };
    std::vector<ReportRow> aggregate(const std::vector<MetricsRecord> &rows);
    std::string report_csv_header();
    std::string to_report_line(const ReportRow &r);
    // Checks that hold for any sweep output: finite fields, success ratio in [0,1] and
    // non-increasing in threshold per policy.
    std::vector<std::string> check_records(const std::vector<MetricsRecord> &rows);

    // Runs body(i) for i in [0, n) on up to `threads` workers. Exceptions are rethrown after join.
    void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> &body);
}

#endif
