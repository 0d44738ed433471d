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

#include "mjscc/experiment.hpp"

#include "mjscc/dataset.hpp"
#include "mjscc/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace fs = std::filesystem;

namespace mjscc
{
    // ----- CSV ---------------------------------------------------------------------------

    namespace
    {
        std::string g17(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        std::string slash_bits(const std::vector<int> &bits)
        {
            std::string s;
            for (std::size_t i = 0; i < bits.size(); ++i)
                s += (i ? "/" : "") + std::to_string(bits[i]);
            return s;
        }
    }

    bool MetricsRecord::finite() const
    {
        return std::isfinite(threshold_db) && std::isfinite(snr_db) && std::isfinite(success_ratio) &&
               std::isfinite(avg_bits) && std::isfinite(mean_psnr_db);
    }

    std::string metrics_csv_header()
    {
        return "policy,option_bits,threshold_db,snr_db,success_ratio,avg_bits,total_bits,mean_psnr_db,seed,"
               "figure,antennas,config_hash";
    }

    std::string to_csv_line(const MetricsRecord &r)
    {
        return r.policy + "," + r.option_bits + "," + g17(r.threshold_db) + "," + g17(r.snr_db) + "," +
               g17(r.success_ratio) + "," + g17(r.avg_bits) + "," + std::to_string(r.total_bits) + "," +
               g17(r.mean_psnr_db) + "," + std::to_string(r.seed) + "," + std::to_string(r.figure) + "," +
               std::to_string(r.antennas) + "," + r.config_hash;
    }

    MetricsRecord parse_csv_line(const std::string &line)
    {
        std::vector<std::string> f;
        std::istringstream is(line);
        std::string cell;
        while (std::getline(is, cell, ','))
            f.push_back(cell);
        if (f.size() != 12)
            throw std::invalid_argument("metrics row has " + std::to_string(f.size()) + " fields, expected 12");
        MetricsRecord r;
        try
        {
            r.policy = f[0];
            r.option_bits = f[1];
            r.threshold_db = std::stod(f[2]);
            r.snr_db = std::stod(f[3]);
            r.success_ratio = std::stod(f[4]);
            r.avg_bits = std::stod(f[5]);
            r.total_bits = std::stoll(f[6]);
            r.mean_psnr_db = std::stod(f[7]);
            r.seed = std::stoull(f[8]);
            r.figure = std::stoi(f[9]);
            r.antennas = std::stoi(f[10]);
            r.config_hash = f[11];
        }
        catch (const std::exception &)
        {
            throw std::invalid_argument("malformed number in metrics row '" + line + "'");
        }
        return r;
    }

    void write_metrics_csv(const std::string &path, const std::vector<MetricsRecord> &rows)
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        out << metrics_csv_header() << "\n";
        for (const auto &r : rows)
            out << to_csv_line(r) << "\n";
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    std::vector<MetricsRecord> read_metrics_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        std::string line;
        if (!std::getline(in, line) || line != metrics_csv_header())
            throw std::runtime_error(path + ": not a metrics CSV");
        std::vector<MetricsRecord> rows;
        int lineno = 1;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            try
            {
                rows.push_back(parse_csv_line(line));
            }
            catch (const std::invalid_argument &e)
            {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        return rows;
    }

    // ----- parallel ----------------------------------------------------------------------

    void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> &body)
    {
        const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                    }
                }
            });
        for (auto &t : pool)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

    // ----- pipeline ----------------------------------------------------------------------

    namespace
    {
        constexpr std::uint64_t kTrainSplit = 1, kValidationSplit = 2, kTestSplit = 3;
    }

    Pipeline::Pipeline(ExperimentConfig config, std::string out_dir, LogSink log)
        : config_(std::move(config)), out_dir_(std::move(out_dir)), log_(std::move(log))
    {
        config_.validate();
        hash_ = config_.hash();
        fs::create_directories(artifact_dir());
        const std::string archived = artifact_dir() + "/config.txt";
        if (!fs::exists(archived))
        {
            ExperimentConfig c = config_;
            c.save(archived);
        }
    }

    std::string Pipeline::artifact_dir() const { return out_dir_ + "/artifacts/" + hash_; }

    void Pipeline::log(const std::string &msg) const
    {
        if (log_)
            log_(msg);
    }

    namespace
    {
        std::vector<ImageSample> load_split(const ExperimentConfig &c, std::uint64_t split)
        {
            const int first = split == kTrainSplit ? 0
                              : split == kValidationSplit ? c.train_count
                                                         : c.train_count + c.validation_count;
            const int count = split == kTrainSplit ? c.train_count
                              : split == kValidationSplit ? c.validation_count
                                                          : c.test_count;
            if (c.data_source == "synthetic")
                return synthesize_images(count, c.image_side, c.complexity_mix, derive_seed(c.data_seed, {split}),
                                         first);
            auto all = load_cifar_binary(c.data_source, c.image_side, 0);
            if (all.size() < static_cast<std::size_t>(first + count))
                throw std::runtime_error(c.data_source + " holds " + std::to_string(all.size()) + " images, the config needs " +
                                         std::to_string(c.train_count + c.validation_count + c.test_count));
            return {all.begin() + first, all.begin() + first + count};
        }
    }

    const std::vector<ImageSample> &Pipeline::train_set()
    {
        if (!train_)
            train_ = load_split(config_, kTrainSplit);
        return *train_;
    }

    const std::vector<ImageSample> &Pipeline::validation_set()
    {
        if (!validation_)
            validation_ = load_split(config_, kValidationSplit);
        return *validation_;
    }

    const std::vector<ImageSample> &Pipeline::test_set()
    {
        if (!test_)
            test_ = load_split(config_, kTestSplit);
        return *test_;
    }

    const CodebookSet &Pipeline::codebooks()
    {
        if (codebooks_)
            return *codebooks_;
        CodebookSet set;
        bool cached = true;
        for (int b : config_.quantizer_bits)
            cached = cached && fs::exists(artifact_dir() + "/codebook_" + std::to_string(b) + ".txt");
        if (cached)
        {
            for (int b : config_.quantizer_bits)
                set.add(load_codebook(artifact_dir() + "/codebook_" + std::to_string(b) + ".txt"));
            log("loaded cached codebooks");
        }
        else
        {
            log("fitting Lloyd-Max codebooks on " + std::to_string(config_.quantizer_fit_channels) + " channels");
            set = fit_channel_codebooks(config_.link(config_.antennas).channel, config_.quantizer_bits,
                                        config_.quantizer_fit_channels, derive_seed(config_.artifact_seed, {0xC0DEB00CULL}),
                                        hash_);
            for (int b : config_.quantizer_bits)
                save_codebook(artifact_dir() + "/codebook_" + std::to_string(b) + ".txt", set.at(b));
        }
        codebooks_ = std::move(set);
        return *codebooks_;
    }

    const JsccCodec &Pipeline::codec(int antennas)
    {
        if (auto it = codecs_.find(antennas); it != codecs_.end())
            return it->second;
        const std::string path = artifact_dir() + "/codec_" + std::to_string(antennas) + ".ckpt";
        if (fs::exists(path))
        {
            log("loaded cached codec for " + std::to_string(antennas) + "x" + std::to_string(antennas));
            return codecs_.emplace(antennas, JsccCodec::from_checkpoint(nn::load_checkpoint(path))).first->second;
        }
        const auto n = static_cast<std::uint64_t>(antennas);
        JsccCodec c = JsccCodec::create(config_.codec, derive_seed(config_.artifact_seed, {0xC0DECULL, n}));
        TrainingConfig tc = config_.training;
        tc.seed = derive_seed(config_.artifact_seed, {0x7EA1ULL, n});
        log("training codec for " + std::to_string(antennas) + "x" + std::to_string(antennas) + " (" +
            std::to_string(tc.epochs) + " epochs)");
        const auto hist = train(c, train_set(), config_.link(antennas), tc);
        codec_loss_[antennas] = hist.epoch_loss;
        nn::save_checkpoint(path, c.to_checkpoint());
        return codecs_.emplace(antennas, std::move(c)).first->second;
    }

    const std::vector<double> &Pipeline::codec_epoch_loss(int antennas) const
    {
        static const std::vector<double> empty;
        auto it = codec_loss_.find(antennas);
        return it == codec_loss_.end() ? empty : it->second;
    }

    const std::vector<QualityLabel> &Pipeline::train_labels()
    {
        if (train_labels_)
            return *train_labels_;
        const std::string path = artifact_dir() + "/labels_train.csv";
        if (fs::exists(path))
            train_labels_ = load_labels_csv(path);
        else
        {
            log("labeling training images");
            train_labels_ = label_dataset(codec(), train_set(), config_.link(config_.antennas), config_.label_snr_db,
                                          config_.label_realizations, derive_seed(config_.artifact_seed, {0x1ABE1ULL}));
            save_labels_csv(path, *train_labels_);
        }
        return *train_labels_;
    }

    const std::vector<QualityLabel> &Pipeline::test_labels()
    {
        if (test_labels_)
            return *test_labels_;
        const std::string path = artifact_dir() + "/labels_test.csv";
        if (fs::exists(path))
            test_labels_ = load_labels_csv(path);
        else
        {
            log("labeling test images");
            test_labels_ = label_dataset(codec(), test_set(), config_.link(config_.antennas), config_.label_snr_db,
                                         config_.label_realizations, derive_seed(config_.artifact_seed, {0x1ABE1ULL}));
            save_labels_csv(path, *test_labels_);
        }
        return *test_labels_;
    }

    const Evaluator &Pipeline::evaluator()
    {
        if (evaluator_)
            return *evaluator_;
        const std::string path = artifact_dir() + "/evaluator.ckpt";
        if (fs::exists(path))
        {
            evaluator_ = Evaluator::from_checkpoint(nn::load_checkpoint(path));
            return *evaluator_;
        }
        const auto &labels = train_labels();
        const auto y = labels_for(train_set(), labels);
        Evaluator e = Evaluator::create(config_.evaluator, derive_seed(config_.artifact_seed, {0xE7A1ULL}), mean(y));
        EvaluatorTrainingConfig tc = config_.evaluator_training;
        tc.seed = derive_seed(config_.artifact_seed, {0xE7A1ULL, 0x7EA1ULL});
        log("training quality evaluator (" + std::to_string(tc.epochs) + " epochs)");
        train_evaluator(e, train_set(), y, tc);
        nn::save_checkpoint(path, e.to_checkpoint());
        evaluator_ = std::move(e);
        return *evaluator_;
    }

    const DegradationTable &Pipeline::degradation()
    {
        if (degradation_)
            return *degradation_;
        const std::string path = artifact_dir() + "/degradation.csv";
        if (fs::exists(path))
            degradation_ = load_degradation_csv(path);
        else
        {
            log("calibrating feedback degradation");
            degradation_ = calibrate_degradation(codec(), validation_set(), config_.link(config_.antennas), codebooks(),
                                                 config_.quantizer_bits, config_.eval_snr_db,
                                                 config_.calibration_realizations, config_.artifact_seed);
            save_degradation_csv(path, *degradation_);
        }
        return *degradation_;
    }

    std::vector<QualityPrediction> Pipeline::predictions(PredictorMode mode)
    {
        if (mode == PredictorMode::oracle)
            return oracle_predictions(test_set(), test_labels());
        return evaluator_predictions(evaluator(), test_set(), &test_labels());
    }

    std::vector<double> Pipeline::thresholds(const ThresholdSpec &spec)
    {
        if (spec.auto_points <= 0)
            return spec.values;
        double lo = INFINITY, hi = -INFINITY;
        for (const auto &l : test_labels())
        {
            lo = std::min(lo, l.true_psnr_db);
            hi = std::max(hi, l.true_psnr_db);
        }
        return spec.resolve(lo, hi);
    }

    void Pipeline::prepare(int figure)
    {
        if (figure == 4)
        {
            test_set();
            for (int a : config_.fig4_antennas)
                codec(a);
            return;
        }
        if (figure != 5 && figure != 6)
            throw std::invalid_argument("figure must be 4, 5 or 6");
        codebooks();
        codec();
        test_labels();
        const PredictorMode mode = figure == 5 ? config_.fig5_predictor : config_.fig6_predictor;
        if (mode == PredictorMode::evaluator)
            evaluator();
        if (figure == 6)
            degradation();
    }

    std::vector<MetricsRecord> Pipeline::seed_rows(int figure, std::uint64_t seed, std::vector<std::string> &violations)
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<MetricsRecord> rows;
        auto base = [&](int antennas) {
            MetricsRecord r;
            r.seed = seed;
            r.figure = figure;
            r.antennas = antennas;
            r.config_hash = hash_;
            return r;
        };
        const auto &test = test_set();

        if (figure == 4)
        {
            for (int a : config_.fig4_antennas)
                for (double snr : config_.fig4_snr_db)
                {
                    const OutcomeTable t =
                        simulate_outcomes(codecs_.at(a), test, config_.link(a), CodebookSet{}, {kPerfectCsi}, snr, 1, seed);
                    const auto outcomes = t.outcomes_at(kPerfectCsi);
                    MetricsRecord r = base(a);
                    r.policy = "perfect_csi";
                    r.option_bits = "-";
                    r.snr_db = snr;
                    r.threshold_db = 0.0;
                    r.success_ratio = success_ratio(outcomes, 0.0);
                    r.mean_psnr_db = t.psnr_db.col(0).mean();
                    rows.push_back(r);
                }
        }
        else
        {
            const int a = config_.antennas;
            const LinkConfig link = config_.link(a);
            const auto preds = predictions(figure == 5 ? config_.fig5_predictor : config_.fig6_predictor);
            const auto ths = thresholds(figure == 5 ? config_.fig5_thresholds : config_.fig6_thresholds);
            std::set<int> bits;
            if (figure == 5)
            {
                bits.insert(config_.fig5_uniform_bits.begin(), config_.fig5_uniform_bits.end());
                bits.insert(config_.fig5_split.begin(), config_.fig5_split.end());
            }
            else
                for (const auto &s : config_.fig6_option_sets)
                    bits.insert(s.begin(), s.end());
            const OutcomeTable t = simulate_outcomes(codecs_.at(a), test, link, *codebooks_,
                                                     std::vector<int>(bits.rbegin(), bits.rend()), config_.eval_snr_db,
                                                     1, seed);
            auto emit = [&](const PolicyResult &res, double th) {
                MetricsRecord r = base(a);
                r.policy = to_string(res.plan.policy);
                r.option_bits = slash_bits(res.plan.option_bits);
                r.threshold_db = th;
                r.snr_db = config_.eval_snr_db;
                r.success_ratio = res.success_ratio;
                r.avg_bits = res.average_bits;
                r.total_bits = res.total_bits;
                r.mean_psnr_db = res.mean_psnr_db;
                rows.push_back(r);
            };
            for (double th : ths)
            {
                const OutageSpec spec{th};
                if (figure == 5)
                {
                    for (int b : config_.fig5_uniform_bits)
                        emit(evaluate_plan(t, uniform_allocation(preds, b), spec, a, a), th);
                    const auto plan = group_split_allocation(preds, config_.fig5_split[0], config_.fig5_split[1]);
                    if (preds.size() % 2 == 0 && plan.average_bits != 0.5 * (config_.fig5_split[0] + config_.fig5_split[1]))
                        violations.push_back("group split average bits is not (high+low)/2");
                    emit(evaluate_plan(t, plan, spec, a, a), th);
                }
                else
                {
                    std::vector<long long> totals;
                    for (const auto &opts : config_.fig6_option_sets)
                    {
                        const auto plan = min_bits_search(preds, opts, spec, *degradation_);
                        const long long cap = static_cast<long long>(preds.size()) * 2LL * a * a * opts.front();
                        const auto res = evaluate_plan(t, plan, spec, a, a);
                        if (res.total_bits > cap)
                            violations.push_back("min-bits total exceeds the all-max budget at " + g17(th) + " dB");
                        emit(res, th);
                    }
                    // Supersets of an option set never need more bits.
                    const auto &sets = config_.fig6_option_sets;
                    for (std::size_t i = 0; i < sets.size(); ++i)
                        for (std::size_t j = 0; j < sets.size(); ++j)
                        {
                            const bool subset = i != j && std::all_of(sets[i].begin(), sets[i].end(), [&](int b) {
                                                    return std::find(sets[j].begin(), sets[j].end(), b) != sets[j].end();
                                                });
                            const auto &ri = rows[rows.size() - sets.size() + i];
                            const auto &rj = rows[rows.size() - sets.size() + j];
                            if (subset && rj.total_bits > ri.total_bits)
                                violations.push_back("option set " + rj.option_bits + " needs more bits than " +
                                                     ri.option_bits + " at " + g17(th) + " dB");
                        }
                }
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto &r : rows)
            r.wall_clock_s = secs;
        for (const auto &v : check_records(rows))
            violations.push_back(v);
        return rows;
    }

    std::vector<MetricsRecord> Pipeline::run_seed(int figure, std::uint64_t seed)
    {
        prepare(figure);
        return seed_rows(figure, seed, violations_);
    }

    std::vector<MetricsRecord> Pipeline::run_figure(int figure, const std::vector<std::uint64_t> &seeds)
    {
        if (seeds.empty())
            throw std::invalid_argument("need at least one seed");
        prepare(figure);
        std::vector<std::vector<MetricsRecord>> per_seed(seeds.size());
        std::vector<std::vector<std::string>> per_seed_violations(seeds.size());
        parallel_for(seeds.size(), config_.threads, [&](std::size_t i) {
            per_seed[i] = seed_rows(figure, seeds[i], per_seed_violations[i]);
        });
        std::vector<MetricsRecord> rows;
        for (std::size_t i = 0; i < seeds.size(); ++i)
        {
            log("figure " + std::to_string(figure) + " seed " + std::to_string(seeds[i]) + ": " +
                std::to_string(per_seed[i].size()) + " rows in " +
                g17(per_seed[i].empty() ? 0.0 : per_seed[i].front().wall_clock_s) + " s");
            rows.insert(rows.end(), per_seed[i].begin(), per_seed[i].end());
            violations_.insert(violations_.end(), per_seed_violations[i].begin(), per_seed_violations[i].end());
        }
        return rows;
    }

    std::vector<MetricsRecord> regenerate_rows(const std::string &out_dir, const std::string &config_hash, int figure,
                                               std::uint64_t seed, LogSink log)
    {
        const std::string path = out_dir + "/artifacts/" + config_hash + "/config.txt";
        if (!fs::exists(path))
            throw std::runtime_error("no archived config for hash " + config_hash + " under " + out_dir);
        ExperimentConfig c = ExperimentConfig::load(path);
        if (c.hash() != config_hash)
            throw std::runtime_error("archived config at " + path + " hashes to " + c.hash());
        Pipeline p(std::move(c), out_dir, std::move(log));
        return p.run_seed(figure, seed);
    }

    // ----- report ------------------------------------------------------------------------

    std::vector<std::string> check_records(const std::vector<MetricsRecord> &rows)
    {
        std::vector<std::string> out;
        using Key = std::tuple<std::string, int, int, std::string, std::string, double, std::uint64_t>;
        std::map<Key, std::vector<std::pair<double, double>>> curves;
        for (const auto &r : rows)
        {
            if (!r.finite())
                out.push_back("non-finite field in a " + r.policy + " row (seed " + std::to_string(r.seed) + ")");
            if (!(r.success_ratio >= 0.0 && r.success_ratio <= 1.0))
                out.push_back("success ratio outside [0,1] in a " + r.policy + " row");
            curves[{r.config_hash, r.figure, r.antennas, r.policy, r.option_bits, r.snr_db, r.seed}].emplace_back(
                r.threshold_db, r.success_ratio);
        }
        for (auto &[key, pts] : curves)
        {
            std::sort(pts.begin(), pts.end());
            for (std::size_t i = 1; i < pts.size(); ++i)
                if (pts[i].second > pts[i - 1].second)
                    out.push_back("success ratio of " + std::get<3>(key) + " " + std::get<4>(key) +
                                  " increases with the threshold at " + g17(pts[i].first) + " dB");
        }
        return out;
    }

    std::vector<ReportRow> aggregate(const std::vector<MetricsRecord> &rows)
    {
        using Key = std::tuple<std::string, int, int, std::string, std::string, double, double>;
        std::map<Key, std::vector<const MetricsRecord *>> groups;
        for (const auto &r : rows)
            groups[{r.config_hash, r.figure, r.antennas, r.policy, r.option_bits, r.threshold_db, r.snr_db}].push_back(&r);
        std::vector<ReportRow> out;
        for (const auto &[key, g] : groups)
        {
            ReportRow rr;
            rr.mean = *g.front();
            const double n = static_cast<double>(g.size());
            double sr = 0, ab = 0, tb = 0, mp = 0;
            rr.success_ratio_min = INFINITY;
            rr.success_ratio_max = -INFINITY;
            for (const auto *r : g)
            {
                sr += r->success_ratio;
                ab += r->avg_bits;
                tb += static_cast<double>(r->total_bits);
                mp += r->mean_psnr_db;
                rr.success_ratio_min = std::min(rr.success_ratio_min, r->success_ratio);
                rr.success_ratio_max = std::max(rr.success_ratio_max, r->success_ratio);
            }
            rr.mean.success_ratio = sr / n;
            rr.mean.avg_bits = ab / n;
            rr.mean.total_bits = std::llround(tb / n);
            rr.mean.mean_psnr_db = mp / n;
            rr.mean.seed = g.size();
            out.push_back(rr);
        }
        return out;
    }

    std::string report_csv_header()
    {
        return "figure,antennas,policy,option_bits,threshold_db,snr_db,success_ratio,success_ratio_min,"
               "success_ratio_max,avg_bits,total_bits,mean_psnr_db,seeds,config_hash";
    }

    std::string to_report_line(const ReportRow &r)
    {
        const auto &m = r.mean;
        return std::to_string(m.figure) + "," + std::to_string(m.antennas) + "," + m.policy + "," + m.option_bits + "," +
               g17(m.threshold_db) + "," + g17(m.snr_db) + "," + g17(m.success_ratio) + "," + g17(r.success_ratio_min) +
               "," + g17(r.success_ratio_max) + "," + g17(m.avg_bits) + "," + std::to_string(m.total_bits) + "," +
               g17(m.mean_psnr_db) + "," + std::to_string(m.seed) + "," + m.config_hash;
    }
}
