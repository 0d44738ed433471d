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

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mjscc
{
    void ArrayGeometry::validate() const
    {
        if (num_elements < 1)
            throw std::invalid_argument("array needs at least one element");
        if (!(spacing_over_wavelength > 0.0) || !std::isfinite(spacing_over_wavelength))
            throw std::invalid_argument("antenna spacing must be positive");
    }

    void ClusterConfig::validate() const
    {
        if (num_clusters < 1 || rays_per_cluster < 1)
            throw std::invalid_argument("cluster count and rays per cluster must be >= 1");
        if (!(ray_spread_deg >= 0.0) || !(center_range_rad >= 0.0))
            throw std::invalid_argument("angle spread parameters must be nonnegative");
        tx_geometry.validate();
        rx_geometry.validate();
    }

    ClusterConfig ClusterConfig::square(int num_tx, int num_rx, int clusters, int rays)
    {
        ClusterConfig c;
        c.num_clusters = clusters;
        c.rays_per_cluster = rays;
        c.tx_geometry = {num_tx, 0.5};
        c.rx_geometry = {num_rx, 0.5};
        return c;
    }

    ChannelMatrix::ChannelMatrix(CMatrix entries) : entries_(std::move(entries))
    {
        if (entries_.rows() < 1 || entries_.cols() < 1)
            throw std::invalid_argument("channel matrix must be non-empty");

        Eigen::JacobiSVD<CMatrix> svd(entries_, Eigen::ComputeFullU | Eigen::ComputeFullV);
        u_ = svd.matrixU();
        v_ = svd.matrixV();
        sigma_ = svd.singularValues();

        const Eigen::Index rank_slots = sigma_.size();
        auto pivot_phase = [](const auto &col) {
            Eigen::Index k = 0;
            col.cwiseAbs().maxCoeff(&k);
            const double mag = std::abs(col(k));
            return mag > 0.0 ? col(k) / mag : cdouble(1.0, 0.0);
        };
        for (Eigen::Index i = 0; i < u_.cols(); ++i)
        {
            const cdouble rot = std::conj(pivot_phase(u_.col(i)));
            u_.col(i) *= rot;
            if (i < rank_slots)
                v_.col(i) *= rot;
        }
        // Right-singular vectors without a paired left vector (N_t > N_r) get their own rotation.
        for (Eigen::Index i = rank_slots; i < v_.cols(); ++i)
            v_.col(i) *= std::conj(pivot_phase(v_.col(i)));
    }

    NoiseModel::NoiseModel(double variance_per_complex_dim) : variance_(variance_per_complex_dim)
    {
        if (!(variance_ > 0.0) || !std::isfinite(variance_))
            throw std::invalid_argument("noise variance must be positive and finite");
    }

    CVector array_response(const ArrayGeometry &geometry, double azimuth)
    {
        const int n = geometry.num_elements;
        if (n < 1)
            throw std::invalid_argument("array needs at least one element");
        if (!(geometry.spacing_over_wavelength > 0.0))
            throw std::invalid_argument("element spacing must be positive");
        const double phase_step = -2.0 * std::numbers::pi * geometry.spacing_over_wavelength * std::sin(azimuth);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        CVector a(n);
        for (int k = 0; k < n; ++k)
            a(k) = std::polar(scale, phase_step * k);
        return a;
    }

    static double laplacian(Rng &rng, double std_dev)
    {
        if (std_dev == 0.0)
            return 0.0;
        std::uniform_real_distribution<double> uni(-0.5, 0.5);
        const double u = uni(rng);
        const double b = std_dev / std::numbers::sqrt2;
        return -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
    }

    CMatrix draw_channel_entries(const ClusterConfig &config, Rng &rng)
    {
        config.validate();
        const int nt = config.num_tx(), nr = config.num_rx();
        const int paths = config.num_clusters * config.rays_per_cluster;
        const double gain = std::sqrt(static_cast<double>(nt) * nr / paths);
        const double spread = config.ray_spread_deg * std::numbers::pi / 180.0;

        std::uniform_real_distribution<double> center(-config.center_range_rad, config.center_range_rad);
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

        CMatrix h = CMatrix::Zero(nr, nt);
        for (int i = 0; i < config.num_clusters; ++i)
        {
            const double center_rx = center(rng);
            const double center_tx = center(rng);
            for (int l = 0; l < config.rays_per_cluster; ++l)
            {
                const double phi_r = center_rx + laplacian(rng, spread);
                const double phi_t = center_tx + laplacian(rng, spread);
                const double re = gauss(rng);
                const double im = gauss(rng);
                const cdouble alpha(re, im);
                h.noalias() += alpha * array_response(config.rx_geometry, phi_r) *
                               array_response(config.tx_geometry, phi_t).adjoint();
            }
        }
        h *= gain;
        return h;
    }

    ChannelMatrix generate_channel(const ClusterConfig &config, Rng &rng)
    {
        return ChannelMatrix(draw_channel_entries(config, rng));
    }

    CVector draw_noise(const NoiseModel &model, int dim, Rng &rng)
    {
        if (dim < 1)
            throw std::invalid_argument("noise dimension must be >= 1");
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double scale = std::sqrt(model.variance() / 2.0);
        CVector n(dim);
        for (int k = 0; k < dim; ++k)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            n(k) = cdouble(scale * re, scale * im);
        }
        return n;
    }

    NoiseModel snr_to_noise_variance(double snr_db)
    {
        return NoiseModel(std::pow(10.0, -snr_db / 10.0));
    }
}
