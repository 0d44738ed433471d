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

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mjscc
{
    namespace
    {
        constexpr const char *kHeader = "mjscc-config 1";

        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        std::vector<std::string> split(const std::string &s, char sep)
        {
            std::vector<std::string> out;
            std::string cur;
            std::istringstream is(s);
            while (std::getline(is, cur, sep))
                out.push_back(trim(cur));
            if (!s.empty() && s.back() == sep)
                out.emplace_back();
            return out;
        }

        std::string fmt_double(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        double to_double(const std::string &s)
        {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(s, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != s.size() || !std::isfinite(v))
                throw std::invalid_argument("expected a finite number, got '" + s + "'");
            return v;
        }

        long long to_integer(const std::string &s)
        {
            std::size_t used = 0;
            long long v = 0;
            try
            {
                v = std::stoll(s, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != s.size())
                throw std::invalid_argument("expected an integer, got '" + s + "'");
            return v;
        }

        int to_int(const std::string &s)
        {
            const long long v = to_integer(s);
            if (v < INT32_MIN || v > INT32_MAX)
                throw std::invalid_argument("integer out of range: '" + s + "'");
            return static_cast<int>(v);
        }

        std::uint64_t to_u64(const std::string &s)
        {
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument("expected an unsigned integer, got '" + s + "'");
            try
            {
                return std::stoull(s);
            }
            catch (const std::exception &)
            {
                throw std::invalid_argument("unsigned integer out of range: '" + s + "'");
            }
        }

        template <class T, class F>
        std::string join(const std::vector<T> &v, F f, char sep = ',')
        {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if (i)
                    out += sep;
                out += f(v[i]);
            }
            return out;
        }

        std::vector<int> int_list(const std::string &s)
        {
            std::vector<int> out;
            for (const auto &t : split(s, ','))
                out.push_back(to_int(t));
            if (out.empty())
                throw std::invalid_argument("empty list");
            return out;
        }

        std::vector<double> double_list(const std::string &s)
        {
            std::vector<double> out;
            for (const auto &t : split(s, ','))
                out.push_back(to_double(t));
            if (out.empty())
                throw std::invalid_argument("empty list");
            return out;
        }

        std::string predictor_name(PredictorMode m) { return m == PredictorMode::oracle ? "oracle" : "evaluator"; }

        PredictorMode parse_predictor(const std::string &s)
        {
            if (s == "oracle")
                return PredictorMode::oracle;
            if (s == "evaluator")
                return PredictorMode::evaluator;
            throw std::invalid_argument("predictor must be 'oracle' or 'evaluator'");
        }

        struct Key
        {
            const char *name;
            bool hashed;
            std::function<std::string(const ExperimentConfig &)> get;
            std::function<void(ExperimentConfig &, const std::string &)> set;
        };

        auto itos = [](int v) { return std::to_string(v); };

        const std::vector<Key> &keys()
        {
            using C = ExperimentConfig;
            using S = const std::string &;
            static const std::vector<Key> k = {
                {"channel.clusters", true, [](const C &c) { return itos(c.num_clusters); },
                 [](C &c, S v) { c.num_clusters = to_int(v); }},
                {"channel.rays", true, [](const C &c) { return itos(c.rays_per_cluster); },
                 [](C &c, S v) { c.rays_per_cluster = to_int(v); }},
                {"channel.spacing", true, [](const C &c) { return fmt_double(c.antenna_spacing); },
                 [](C &c, S v) { c.antenna_spacing = to_double(v); }},
                {"channel.ray_spread_deg", true, [](const C &c) { return fmt_double(c.ray_spread_deg); },
                 [](C &c, S v) { c.ray_spread_deg = to_double(v); }},
                {"link.antennas", true, [](const C &c) { return itos(c.antennas); },
                 [](C &c, S v) { c.antennas = to_int(v); }},
                {"link.streams", true, [](const C &c) { return itos(c.streams); },
                 [](C &c, S v) { c.streams = to_int(v); }},
                {"link.precoder", true,
                 [](const C &c) { return std::string(c.precoder == PrecoderStrategy::svd ? "svd" : "zero_forcing"); },
                 [](C &c, S v) {
                     if (v == "svd")
                         c.precoder = PrecoderStrategy::svd;
                     else if (v == "zero_forcing")
                         c.precoder = PrecoderStrategy::zero_forcing;
                     else
                         throw std::invalid_argument("precoder must be 'svd' or 'zero_forcing'");
                 }},
                {"link.combiner", true,
                 [](const C &c) { return std::string(c.combiner == CombinerSource::true_channel ? "true" : "fed_back"); },
                 [](C &c, S v) {
                     if (v == "true")
                         c.combiner = CombinerSource::true_channel;
                     else if (v == "fed_back")
                         c.combiner = CombinerSource::fed_back_channel;
                     else
                         throw std::invalid_argument("combiner must be 'true' or 'fed_back'");
                 }},
                {"data.source", true, [](const C &c) { return c.data_source; },
                 [](C &c, S v) { c.data_source = v; }},
                {"data.image_side", true, [](const C &c) { return itos(c.image_side); },
                 [](C &c, S v) { c.image_side = to_int(v); }},
                {"data.complexity_mix", true, [](const C &c) { return fmt_double(c.complexity_mix); },
                 [](C &c, S v) { c.complexity_mix = to_double(v); }},
                {"data.train_count", true, [](const C &c) { return itos(c.train_count); },
                 [](C &c, S v) { c.train_count = to_int(v); }},
                {"data.validation_count", true, [](const C &c) { return itos(c.validation_count); },
                 [](C &c, S v) { c.validation_count = to_int(v); }},
                {"data.test_count", true, [](const C &c) { return itos(c.test_count); },
                 [](C &c, S v) { c.test_count = to_int(v); }},
                {"data.seed", true, [](const C &c) { return std::to_string(c.data_seed); },
                 [](C &c, S v) { c.data_seed = to_u64(v); }},
                {"codec.symbols", true, [](const C &c) { return itos(c.codec.symbols); },
                 [](C &c, S v) { c.codec.symbols = to_int(v); }},
                {"codec.hidden", true, [](const C &c) { return itos(c.codec.hidden); },
                 [](C &c, S v) { c.codec.hidden = to_int(v); }},
                {"train.lr", true, [](const C &c) { return fmt_double(c.training.learning_rate); },
                 [](C &c, S v) { c.training.learning_rate = to_double(v); }},
                {"train.batch", true, [](const C &c) { return itos(c.training.batch_size); },
                 [](C &c, S v) { c.training.batch_size = to_int(v); }},
                {"train.epochs", true, [](const C &c) { return itos(c.training.epochs); },
                 [](C &c, S v) { c.training.epochs = to_int(v); }},
                {"train.snr_db", true, [](const C &c) { return fmt_double(c.training.train_snr_db); },
                 [](C &c, S v) { c.training.train_snr_db = to_double(v); }},
                {"evaluator.hidden", true, [](const C &c) { return itos(c.evaluator.hidden); },
                 [](C &c, S v) { c.evaluator.hidden = to_int(v); }},
                {"evaluator.lr", true, [](const C &c) { return fmt_double(c.evaluator_training.learning_rate); },
                 [](C &c, S v) { c.evaluator_training.learning_rate = to_double(v); }},
                {"evaluator.batch", true, [](const C &c) { return itos(c.evaluator_training.batch_size); },
                 [](C &c, S v) { c.evaluator_training.batch_size = to_int(v); }},
                {"evaluator.epochs", true, [](const C &c) { return itos(c.evaluator_training.epochs); },
                 [](C &c, S v) { c.evaluator_training.epochs = to_int(v); }},
                {"artifact_seed", true, [](const C &c) { return std::to_string(c.artifact_seed); },
                 [](C &c, S v) { c.artifact_seed = to_u64(v); }},
                {"quantizer.bits", true, [](const C &c) { return join(c.quantizer_bits, itos); },
                 [](C &c, S v) { c.quantizer_bits = int_list(v); }},
                {"quantizer.fit_channels", true, [](const C &c) { return itos(c.quantizer_fit_channels); },
                 [](C &c, S v) { c.quantizer_fit_channels = to_int(v); }},
                {"label.snr_db", true, [](const C &c) { return fmt_double(c.label_snr_db); },
                 [](C &c, S v) { c.label_snr_db = to_double(v); }},
                {"label.realizations", true, [](const C &c) { return itos(c.label_realizations); },
                 [](C &c, S v) { c.label_realizations = to_int(v); }},
                {"calibrate.realizations", true, [](const C &c) { return itos(c.calibration_realizations); },
                 [](C &c, S v) { c.calibration_realizations = to_int(v); }},
                {"fig4.antennas", true, [](const C &c) { return join(c.fig4_antennas, itos); },
                 [](C &c, S v) { c.fig4_antennas = int_list(v); }},
                {"fig4.snr_db", true, [](const C &c) { return join(c.fig4_snr_db, fmt_double); },
                 [](C &c, S v) { c.fig4_snr_db = double_list(v); }},
                {"sweep.snr_db", true, [](const C &c) { return fmt_double(c.eval_snr_db); },
                 [](C &c, S v) { c.eval_snr_db = to_double(v); }},
                {"fig5.uniform_bits", true, [](const C &c) { return join(c.fig5_uniform_bits, itos); },
                 [](C &c, S v) { c.fig5_uniform_bits = int_list(v); }},
                {"fig5.split", true, [](const C &c) { return join(c.fig5_split, itos); },
                 [](C &c, S v) { c.fig5_split = int_list(v); }},
                {"fig5.thresholds", true, [](const C &c) { return c.fig5_thresholds.to_string(); },
                 [](C &c, S v) { c.fig5_thresholds = ThresholdSpec::parse(v); }},
                {"fig5.predictor", true, [](const C &c) { return predictor_name(c.fig5_predictor); },
                 [](C &c, S v) { c.fig5_predictor = parse_predictor(v); }},
                {"fig6.option_sets", true,
                 [](const C &c) {
                     return join(c.fig6_option_sets, [](const std::vector<int> &s) { return join(s, itos); }, '|');
                 },
                 [](C &c, S v) {
                     c.fig6_option_sets.clear();
                     for (const auto &set : split(v, '|'))
                         c.fig6_option_sets.push_back(int_list(set));
                 }},
                {"fig6.thresholds", true, [](const C &c) { return c.fig6_thresholds.to_string(); },
                 [](C &c, S v) { c.fig6_thresholds = ThresholdSpec::parse(v); }},
                {"fig6.predictor", true, [](const C &c) { return predictor_name(c.fig6_predictor); },
                 [](C &c, S v) { c.fig6_predictor = parse_predictor(v); }},
                {"seeds", false,
                 [](const C &c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
                 [](C &c, S v) { c.seeds = parse_seed_list(v); }},
                {"threads", false, [](const C &c) { return itos(c.threads); },
                 [](C &c, S v) { c.threads = to_int(v); }},
            };
            return k;
        }
    }

    std::vector<std::uint64_t> parse_seed_list(const std::string &s)
    {
        std::vector<std::uint64_t> out;
        for (const auto &t : split(s, ','))
            out.push_back(to_u64(t));
        if (out.empty())
            throw std::invalid_argument("seed list is empty");
        return out;
    }

    std::vector<double> ThresholdSpec::resolve(double lo, double hi) const
    {
        if (auto_points <= 0)
            return values;
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi))
            throw std::invalid_argument("automatic thresholds need a finite label range");
        std::vector<double> out;
        for (int k = 0; k < auto_points; ++k)
            out.push_back(lo + (hi - lo) * (k + 1) / (auto_points + 1));
        return out;
    }

    std::string ThresholdSpec::to_string() const
    {
        if (auto_points > 0)
            return "auto:" + std::to_string(auto_points);
        return join(values, fmt_double);
    }

    ThresholdSpec ThresholdSpec::parse(const std::string &s)
    {
        ThresholdSpec t;
        if (s.rfind("auto:", 0) == 0)
        {
            t.auto_points = to_int(s.substr(5));
            if (t.auto_points < 1)
                throw std::invalid_argument("auto threshold count must be >= 1");
        }
        else
            t.values = double_list(s);
        return t;
    }

    void ExperimentConfig::validate() const
    {
        auto need = [](bool ok, const std::string &what) {
            if (!ok)
                throw std::invalid_argument("config: " + what);
        };
        link(antennas).validate();
        need(!fig4_antennas.empty(), "fig4.antennas is empty");
        for (int a : fig4_antennas)
            link(a).validate();
        need(!data_source.empty(), "data.source is empty");
        need(image_side >= 2 && image_side <= 32, "data.image_side must be in [2, 32]");
        need(complexity_mix >= 0.0 && complexity_mix <= 1.0, "data.complexity_mix must be in [0, 1]");
        need(train_count >= 1 && validation_count >= 1 && test_count >= 2, "data counts too small");
        need(codec.image_dim == image_side * image_side * 3, "codec input size disagrees with data.image_side");
        codec.validate();
        training.validate();
        evaluator.validate();
        need(evaluator.image_dim == codec.image_dim, "evaluator input size disagrees with the codec");
        evaluator_training.validate();
        need(!quantizer_bits.empty(), "quantizer.bits is empty");
        for (int b : quantizer_bits)
            need(b >= 1 && b <= 16, "quantizer bit depths must be in [1, 16]");
        need(quantizer_fit_channels >= 1, "quantizer.fit_channels must be >= 1");
        need(label_realizations >= 1 && calibration_realizations >= 1, "realization counts must be >= 1");
        need(!fig4_snr_db.empty(), "fig4.snr_db is empty");
        need(!fig5_uniform_bits.empty(), "fig5.uniform_bits is empty");
        need(fig5_split.size() == 2 && fig5_split[0] > fig5_split[1], "fig5.split must be 'high,low' with high > low");
        need(fig5_thresholds.auto_points > 0 || !fig5_thresholds.values.empty(), "fig5.thresholds is empty");
        need(fig6_thresholds.auto_points > 0 || !fig6_thresholds.values.empty(), "fig6.thresholds is empty");
        need(!fig6_option_sets.empty(), "fig6.option_sets is empty");
        for (const auto &s : fig6_option_sets)
        {
            need(!s.empty(), "empty fig6 option set");
            for (std::size_t i = 1; i < s.size(); ++i)
                need(s[i - 1] > s[i], "fig6 option sets must be strictly descending");
        }
        const auto req = required_bits();
        for (int b : req)
            need(std::find(quantizer_bits.begin(), quantizer_bits.end(), b) != quantizer_bits.end(),
                 "quantizer.bits lacks " + std::to_string(b) + " bits used by a sweep");
        need(!seeds.empty(), "seed list is empty");
        need(threads >= 1, "threads must be >= 1");
    }

    LinkConfig ExperimentConfig::link(int n) const
    {
        LinkConfig l;
        l.channel = ClusterConfig::square(n, n, num_clusters, rays_per_cluster);
        l.channel.tx_geometry.spacing_over_wavelength = antenna_spacing;
        l.channel.rx_geometry.spacing_over_wavelength = antenna_spacing;
        l.channel.ray_spread_deg = ray_spread_deg;
        l.streams = streams;
        l.strategy = precoder;
        l.combiner = combiner;
        return l;
    }

    std::vector<int> ExperimentConfig::required_bits() const
    {
        std::set<int> s(fig5_uniform_bits.begin(), fig5_uniform_bits.end());
        s.insert(fig5_split.begin(), fig5_split.end());
        for (const auto &o : fig6_option_sets)
            s.insert(o.begin(), o.end());
        return {s.rbegin(), s.rend()};
    }

    std::string ExperimentConfig::serialize(bool include_unhashed) const
    {
        std::string out = std::string(kHeader) + "\n";
        for (const auto &k : keys())
            if (k.hashed || include_unhashed)
                out += std::string(k.name) + " = " + k.get(*this) + "\n";
        return out;
    }

    ExperimentConfig ExperimentConfig::parse(const std::string &text, const std::string &origin)
    {
        ExperimentConfig c;
        std::istringstream in(text);
        std::string raw;
        int lineno = 0;
        bool header = false;
        std::set<std::string> seen;
        while (std::getline(in, raw))
        {
            ++lineno;
            const auto hash = raw.find('#');
            const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (line.empty())
                continue;
            const std::string where = origin + ":" + std::to_string(lineno) + ": ";
            if (!header)
            {
                if (line != kHeader)
                    throw std::invalid_argument(where + "expected '" + kHeader + "' as the first line");
                header = true;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument(where + "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            auto it = std::find_if(keys().begin(), keys().end(), [&](const Key &k) { return key == k.name; });
            if (it == keys().end())
                throw std::invalid_argument(where + "unknown key '" + key + "'");
            if (!seen.insert(key).second)
                throw std::invalid_argument(where + "duplicate key '" + key + "'");
            try
            {
                it->set(c, value);
            }
            catch (const std::invalid_argument &e)
            {
                throw std::invalid_argument(where + key + ": " + e.what());
            }
        }
        if (!header)
            throw std::invalid_argument(origin + ": missing '" + kHeader + "' header");
        c.codec.image_dim = c.image_side * c.image_side * 3;
        c.evaluator.image_dim = c.codec.image_dim;
        c.validate();
        return c;
    }

    ExperimentConfig ExperimentConfig::load(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open config '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    void ExperimentConfig::save(const std::string &path) const
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        out << serialize(true);
        if (!out)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    std::string ExperimentConfig::hash() const
    {
        const std::string text = serialize(false);
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha1(), nullptr) != 1)
            throw std::runtime_error("SHA-1 digest failed");
        static const char *hex = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < 6; ++i)
        {
            out += hex[md[i] >> 4];
            out += hex[md[i] & 15];
        }
        return out;
    }
}
