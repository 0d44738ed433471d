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

#include "mjscc/adaptive_feedback.hpp"

#include "mjscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mjscc
{
    std::string to_string(AllocationPolicy p)
    {
        switch (p)
        {
        case AllocationPolicy::uniform:
            return "uniform";
        case AllocationPolicy::group_split:
            return "group_split";
        case AllocationPolicy::min_bits_search:
            return "min_bits_search";
        }
        return "?";
    }

    AllocationPolicy parse_policy(const std::string &s)
    {
        if (s == "uniform")
            return AllocationPolicy::uniform;
        if (s == "group_split")
            return AllocationPolicy::group_split;
        if (s == "min_bits_search")
            return AllocationPolicy::min_bits_search;
        throw std::invalid_argument("unknown allocation policy '" + s + "'");
    }

    std::string format_bits(const std::vector<int> &bits)
    {
        std::string out;
        for (std::size_t i = 0; i < bits.size(); ++i)
            out += (i ? "," : "") + std::to_string(bits[i]);
        return out;
    }

    std::vector<int> parse_bits(const std::string &s)
    {
        std::vector<int> out;
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, ','))
        {
            std::size_t used = 0;
            int v = 0;
            try
            {
                v = std::stoi(tok, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != tok.size())
                throw std::invalid_argument("bad bit depth '" + tok + "' in '" + s + "'");
            out.push_back(v);
        }
        if (out.empty())
            throw std::invalid_argument("empty bit list");
        return out;
    }

    // ----- plans -------------------------------------------------------------------------

    int AllocationPlan::bits_for(int source_id) const
    {
        auto it = assignment.find(source_id);
        if (it == assignment.end())
            throw std::out_of_range("no allocation for image " + std::to_string(source_id));
        return it->second;
    }

    long long AllocationPlan::total_feedback_bits(int num_tx, int num_rx) const
    {
        long long total = 0;
        for (const auto &[id, b] : assignment)
            total += 2LL * num_tx * num_rx * b;
        return total;
    }

    void AllocationPlan::validate() const
    {
        if (option_bits.empty())
            throw std::invalid_argument("allocation plan has no options");
        if (!std::is_sorted(option_bits.rbegin(), option_bits.rend()) ||
            std::adjacent_find(option_bits.begin(), option_bits.end()) != option_bits.end())
            throw std::invalid_argument("option bits must be strictly descending");
        double sum = 0.0;
        for (const auto &[id, b] : assignment)
        {
            if (std::find(option_bits.begin(), option_bits.end(), b) == option_bits.end())
                throw std::invalid_argument("image " + std::to_string(id) + " assigned " + std::to_string(b) +
                                            " bits, not an option");
            sum += b;
        }
        if (!assignment.empty() && average_bits != sum / static_cast<double>(assignment.size()))
            throw std::invalid_argument("average bits disagrees with the assignment");
    }

    void OutageSpec::validate() const
    {
        if (!std::isfinite(threshold_psnr_db))
            throw std::invalid_argument("outage threshold must be finite");
    }

    double success_ratio(std::span<const Outcome> outcomes, double threshold_db)
    {
        if (outcomes.empty())
            throw std::invalid_argument("success ratio of an empty outcome list");
        if (std::isnan(threshold_db))
            throw std::invalid_argument("outage threshold is NaN");
        const auto ok = std::count_if(outcomes.begin(), outcomes.end(),
                                      [&](const Outcome &o) { return o.psnr_db >= threshold_db; });
        return static_cast<double>(ok) / static_cast<double>(outcomes.size());
    }

    double success_ratio(std::span<const Outcome> outcomes, const OutageSpec &spec)
    {
        spec.validate();
        return success_ratio(outcomes, spec.threshold_psnr_db);
    }

    namespace
    {
        void finish(AllocationPlan &plan)
        {
            double sum = 0.0;
            for (const auto &[id, b] : plan.assignment)
                sum += b;
            plan.average_bits = sum / static_cast<double>(plan.assignment.size());
            plan.validate();
        }

        void require_predictions(std::span<const QualityPrediction> p)
        {
            if (p.empty())
                throw std::invalid_argument("allocation needs at least one prediction");
            std::set<int> ids;
            for (const auto &q : p)
            {
                if (!std::isfinite(q.predicted_psnr_db))
                    throw std::invalid_argument("non-finite prediction for image " + std::to_string(q.source_id));
                if (!ids.insert(q.source_id).second)
                    throw std::invalid_argument("duplicate source_id " + std::to_string(q.source_id));
            }
        }
    }

    AllocationPlan uniform_allocation(std::span<const QualityPrediction> predictions, int bits)
    {
        require_predictions(predictions);
        if (bits < 1)
            throw std::invalid_argument("bit depth must be >= 1");
        AllocationPlan plan;
        plan.policy = AllocationPolicy::uniform;
        plan.option_bits = {bits};
        for (const auto &q : predictions)
            plan.assignment[q.source_id] = bits;
        finish(plan);
        return plan;
    }

    AllocationPlan group_split_allocation(std::span<const QualityPrediction> predictions, int high_bits, int low_bits)
    {
        require_predictions(predictions);
        if (!(high_bits > low_bits) || low_bits < 1)
            throw std::invalid_argument("group split needs high_bits > low_bits >= 1");
        std::vector<const QualityPrediction *> order;
        for (const auto &q : predictions)
            order.push_back(&q);
        std::sort(order.begin(), order.end(), [](const QualityPrediction *a, const QualityPrediction *b) {
            if (a->predicted_psnr_db != b->predicted_psnr_db)
                return a->predicted_psnr_db < b->predicted_psnr_db;
            return a->source_id < b->source_id;
        });
        const std::size_t high_count = (order.size() + 1) / 2; // lower-predicted half, plus the odd one
        AllocationPlan plan;
        plan.policy = AllocationPolicy::group_split;
        plan.option_bits = {high_bits, low_bits};
        for (std::size_t i = 0; i < order.size(); ++i)
            plan.assignment[order[i]->source_id] = i < high_count ? high_bits : low_bits;
        finish(plan);
        return plan;
    }

    AllocationPlan min_bits_search(std::span<const QualityPrediction> predictions, std::vector<int> option_bits,
                                   const OutageSpec &spec, const DegradationTable &table)
    {
        require_predictions(predictions);
        spec.validate();
        if (option_bits.empty())
            throw std::invalid_argument("min-bits search needs at least one option");
        for (int b : option_bits)
        {
            auto it = table.find(b);
            if (it == table.end())
                throw std::invalid_argument("degradation table has no entry for " + std::to_string(b) + " bits");
            if (!std::isfinite(it->second) || it->second < 0.0)
                throw std::invalid_argument("degradation penalty for " + std::to_string(b) +
                                            " bits must be finite and >= 0");
        }
        AllocationPlan plan;
        plan.policy = AllocationPolicy::min_bits_search;
        plan.option_bits = option_bits;
        plan.validate(); // ordering of the options
        const int max_bits = option_bits.front();
        for (const auto &q : predictions)
        {
            int chosen = max_bits;
            for (auto it = option_bits.rbegin(); it != option_bits.rend(); ++it) // ascending
                if (q.predicted_psnr_db - table.at(*it) >= spec.threshold_psnr_db)
                {
                    chosen = *it;
                    break;
                }
            plan.assignment[q.source_id] = chosen;
        }
        finish(plan);
        return plan;
    }

    // ----- outcome tables ----------------------------------------------------------------

    int OutcomeTable::column(int bits) const
    {
        auto it = std::find(bit_depths.begin(), bit_depths.end(), bits);
        if (it == bit_depths.end())
            throw std::out_of_range("outcome table has no column for " + std::to_string(bits) + " bits");
        return static_cast<int>(it - bit_depths.begin());
    }

    std::vector<Outcome> OutcomeTable::outcomes_at(int bits) const
    {
        const int c = column(bits);
        std::vector<Outcome> out(source_ids.size());
        for (std::size_t i = 0; i < source_ids.size(); ++i)
            out[i] = {source_ids[i], psnr_db(static_cast<Eigen::Index>(i), c)};
        return out;
    }

    std::vector<Outcome> OutcomeTable::outcomes_for(const AllocationPlan &plan) const
    {
        if (plan.assignment.size() != source_ids.size())
            throw std::invalid_argument("plan covers " + std::to_string(plan.assignment.size()) + " images, table " +
                                        std::to_string(source_ids.size()));
        std::vector<Outcome> out(source_ids.size());
        for (std::size_t i = 0; i < source_ids.size(); ++i)
            out[i] = {source_ids[i], psnr(i, plan.bits_for(source_ids[i]))};
        return out;
    }

    OutcomeTable simulate_outcomes(const JsccCodec &codec, std::span<const ImageSample> images,
                                   const LinkConfig &link, const CodebookSet &codebooks,
                                   const std::vector<int> &bit_depths, double snr_db, int realizations,
                                   std::uint64_t seed)
    {
        link.validate();
        if (images.empty() || bit_depths.empty())
            throw std::invalid_argument("outcome table needs images and bit depths");
        if (realizations < 1)
            throw std::invalid_argument("need at least one realization per image");
        for (int b : bit_depths)
            if (b != kPerfectCsi && !codebooks.contains(b))
                throw std::invalid_argument("no codebook fitted for " + std::to_string(b) + " bits");
        const NoiseModel noise = snr_to_noise_variance(snr_db);
        const int symbols = codec.symbol_count();

        OutcomeTable t;
        t.bit_depths = bit_depths;
        t.realizations = realizations;
        t.psnr_db = RMatrix::Zero(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(bit_depths.size()));
        t.mean_nmse.assign(bit_depths.size(), 0.0);
        for (const auto &s : images)
            t.source_ids.push_back(s.source_id);

        constexpr std::size_t chunk = 256;
        for (int r = 0; r < realizations; ++r)
            for (std::size_t start = 0; start < images.size(); start += chunk)
            {
                const std::size_t end = std::min(images.size(), start + chunk);
                std::vector<ChannelMatrix> hs;
                std::vector<CMatrix> ns;
                for (std::size_t i = start; i < end; ++i)
                {
                    Rng rng = make_stream(seed, {0xADA97ULL, static_cast<std::uint64_t>(images[i].source_id),
                                                 static_cast<std::uint64_t>(r)});
                    hs.push_back(generate_channel(link.channel, rng));
                    const PrecoderPair p = build_precoders(hs.back(), hs.back(), link.streams, link.strategy,
                                                           link.combiner);
                    ns.push_back(EqualizedLink(hs.back(), p, link.equalize).draw_noise(symbols, noise, rng));
                }
                const auto batch = images.subspan(start, end - start);
                for (std::size_t c = 0; c < bit_depths.size(); ++c)
                {
                    const int b = bit_depths[c];
                    std::vector<ChannelUse> uses;
                    uses.reserve(hs.size());
                    for (std::size_t k = 0; k < hs.size(); ++k)
                    {
                        std::optional<QuantizedCsi> fb;
                        if (b != kPerfectCsi)
                        {
                            fb = quantize_csi(hs[k], codebooks.at(b));
                            t.mean_nmse[c] += nmse(hs[k], fb->recovered);
                        }
                        const ChannelMatrix &fed = fb ? fb->recovered : hs[k];
                        const PrecoderPair p = build_precoders(hs[k], fed, link.streams, link.strategy, link.combiner);
                        EqualizedLink eq(hs[k], p, link.equalize);
                        uses.push_back(ChannelUse{hs[k], std::move(fb), std::move(eq), ns[k]});
                    }
                    const RMatrix rec = transmit_images(codec, batch, uses);
                    for (std::size_t i = start; i < end; ++i)
                        t.psnr_db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) +=
                            psnr(images[i], rec.col(static_cast<Eigen::Index>(i - start)));
                }
            }
        t.psnr_db /= static_cast<double>(realizations);
        for (double &v : t.mean_nmse)
            v /= static_cast<double>(images.size()) * realizations;
        return t;
    }

    DegradationTable calibrate_degradation(const JsccCodec &codec, std::span<const ImageSample> validation,
                                           const LinkConfig &link, const CodebookSet &codebooks,
                                           const std::vector<int> &option_bits, double snr_db, int realizations,
                                           std::uint64_t seed)
    {
        std::vector<int> cols{kPerfectCsi};
        cols.insert(cols.end(), option_bits.begin(), option_bits.end());
        const OutcomeTable t = simulate_outcomes(codec, validation, link, codebooks, cols, snr_db, realizations,
                                                 derive_seed(seed, {0xCA1BULL}));
        DegradationTable table;
        const auto perfect = t.psnr_db.col(0);
        for (std::size_t c = 1; c < cols.size(); ++c)
        {
            const double loss = (perfect - t.psnr_db.col(static_cast<Eigen::Index>(c))).mean();
            table[cols[c]] = std::max(0.0, loss);
        }
        return table;
    }

    void save_degradation_csv(const std::string &path, const DegradationTable &table)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        out << "bits,penalty_db\n";
        char buf[64];
        for (const auto &[b, p] : table)
        {
            std::snprintf(buf, sizeof buf, "%d,%.17g\n", b, p);
            out << buf;
        }
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    DegradationTable load_degradation_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open '" + path + "'");
        std::string line;
        if (!std::getline(in, line) || line != "bits,penalty_db")
            throw std::runtime_error(path + ": unexpected degradation CSV header");
        DegradationTable t;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error(path + ": malformed row '" + line + "'");
            t[std::stoi(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
        }
        return t;
    }

    PolicyResult evaluate_plan(const OutcomeTable &table, const AllocationPlan &plan, const OutageSpec &spec,
                               int num_tx, int num_rx)
    {
        PolicyResult r;
        r.plan = plan;
        r.outcomes = table.outcomes_for(plan);
        r.success_ratio = success_ratio(r.outcomes, spec);
        r.average_bits = plan.average_bits;
        r.total_bits = plan.total_feedback_bits(num_tx, num_rx);
        double acc = 0.0;
        for (const auto &o : r.outcomes)
            acc += o.psnr_db;
        r.mean_psnr_db = acc / static_cast<double>(r.outcomes.size());
        for (const auto &[id, b] : plan.assignment)
            r.mean_nmse[b] = table.mean_nmse[static_cast<std::size_t>(table.column(b))];
        return r;
    }

    AllocationPlan make_plan(const PolicySpec &spec, std::span<const QualityPrediction> predictions,
                             const OutageSpec &outage, const DegradationTable *table)
    {
        switch (spec.policy)
        {
        case AllocationPolicy::uniform:
            if (spec.option_bits.size() != 1)
                throw std::invalid_argument("uniform policy takes exactly one bit depth");
            return uniform_allocation(predictions, spec.option_bits[0]);
        case AllocationPolicy::group_split:
            if (spec.option_bits.size() != 2)
                throw std::invalid_argument("group split takes (high, low) bit depths");
            return group_split_allocation(predictions, spec.option_bits[0], spec.option_bits[1]);
        case AllocationPolicy::min_bits_search:
            if (!table)
                throw std::invalid_argument("min-bits search needs a degradation table");
            return min_bits_search(predictions, spec.option_bits, outage, *table);
        }
        throw std::invalid_argument("unknown policy");
    }

    PolicyResult run_adaptive_experiment(const JsccCodec &codec, std::span<const ImageSample> images,
                                         std::span<const QualityPrediction> predictions, const LinkConfig &link,
                                         const CodebookSet &codebooks, const PolicySpec &policy,
                                         const OutageSpec &outage, double snr_db, std::uint64_t seed,
                                         const DegradationTable *table)
    {
        if (predictions.size() != images.size())
            throw std::invalid_argument("need one prediction per image");
        const AllocationPlan plan = make_plan(policy, predictions, outage, table);
        const OutcomeTable t = simulate_outcomes(codec, images, link, codebooks, plan.option_bits, snr_db, 1, seed);
        return evaluate_plan(t, plan, outage, link.channel.num_tx(), link.channel.num_rx());
    }
}
