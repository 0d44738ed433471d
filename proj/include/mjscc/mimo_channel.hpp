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

#ifndef MJSCC_MIMO_CHANNEL_HPP
#define MJSCC_MIMO_CHANNEL_HPP

#include "mjscc/common.hpp"

#include <string>
#include <vector>

namespace mjscc
{
    // Uniform linear array. The spacing is the element distance over the carrier wavelength.
    struct ArrayGeometry
    {
        int num_elements = 1;
        double spacing_over_wavelength = 0.5;

        void validate() const;
    };

    // Narrowband clustered (Saleh-Valenzuela style) mmWave channel.
    // Cluster-center azimuths are uniform on [-center_range, center_range]; rays are the center
    // plus a Laplacian offset with standard deviation ray_spread_deg.
    struct ClusterConfig
    {
        int num_clusters = 2;
        int rays_per_cluster = 4;
        ArrayGeometry tx_geometry{16, 0.5};
        ArrayGeometry rx_geometry{16, 0.5};
        double ray_spread_deg = 7.5;
        double center_range_rad = 1.5707963267948966; // pi/2

        int num_tx() const { return tx_geometry.num_elements; }
        int num_rx() const { return rx_geometry.num_elements; }
        void validate() const;

        // Convenience: N_t x N_r with half-wavelength arrays and the default cluster layout.
        static ClusterConfig square(int num_tx, int num_rx, int clusters = 2, int rays = 4);
    };

    // A channel realization H (N_r x N_t) with its SVD H = U diag(sigma) V^H, computed on
    // construction. Each left-singular vector is rotated so its largest-magnitude entry is real
    // positive; the paired right-singular vector gets the same rotation.
    class ChannelMatrix
    {
    public:
        ChannelMatrix() = default;
        explicit ChannelMatrix(CMatrix entries);

        const CMatrix &entries() const { return entries_; }
        const CMatrix &svd_u() const { return u_; }
        const RVector &svd_sigma() const { return sigma_; }
        const CMatrix &svd_v() const { return v_; }

        int num_rx() const { return static_cast<int>(entries_.rows()); }
        int num_tx() const { return static_cast<int>(entries_.cols()); }

    private:
        CMatrix entries_;
        CMatrix u_;
        RVector sigma_;
        CMatrix v_;
    };

    // AWGN per receive antenna; the variance is per complex dimension (E|n|^2).
    class NoiseModel
    {
    public:
        explicit NoiseModel(double variance_per_complex_dim);
        double variance() const { return variance_; }

    private:
        double variance_;
    };

    // a(phi) = 1/sqrt(N) [1, e^{-j 2 pi (d/lambda) sin phi}, ..., e^{-j 2 pi (d/lambda)(N-1) sin phi}]^T
    CVector array_response(const ArrayGeometry &geometry, double azimuth);

    // Draws the entries of one realization; generate_channel wraps this and adds the SVD.
    // Both consume the stream identically.
    CMatrix draw_channel_entries(const ClusterConfig &config, Rng &rng);
    ChannelMatrix generate_channel(const ClusterConfig &config, Rng &rng);

    // Circularly-symmetric complex Gaussian; real and imaginary parts each carry variance/2.
    // Draws unit-variance values first and scales, so streams are shared across noise levels.
    CVector draw_noise(const NoiseModel &model, int dim, Rng &rng);

    // Unit transmit power per stream: sigma_n^2 = 10^(-snr_db/10).
    NoiseModel snr_to_noise_variance(double snr_db);

    // ----- Binary fixture files ---------------------------------------------
    // Layout (little endian): "MJCH" magic, u32 version, u32 count, u32 N_r, u32 N_t, u64 seed,
    // i32 N_cl, i32 N_ray, f64 tx spacing, f64 rx spacing, f64 ray spread (deg), f64 center range,
    // then per realization N_r*N_t row-major (re, im) f64 pairs.
    struct ChannelFile
    {
        ClusterConfig config;
        std::uint64_t seed = 0;
        std::vector<ChannelMatrix> channels;
    };

    void write_channel_file(const std::string &path, const ChannelFile &file);
    ChannelFile read_channel_file(const std::string &path);
}

#endif
