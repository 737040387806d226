// SPDX-License-Identifier: Apache-2.0
//
// cskit - compressive sensing toolkit for wireless channels and spectra
// Copyright (C) 2026 The cskit authors
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

#ifndef CSKIT_CHANNEL_HPP
#define CSKIT_CHANNEL_HPP

#include "cskit/common.hpp"

#include <optional>

namespace cskit {

// ---------------------------------------------------------------------------
// Geometry-based stochastic channel model (cluster/subpath sum over a ULA)
// ---------------------------------------------------------------------------

struct GscmConfig {
    Eigen::Index num_clusters = 3;       // scattering clusters
    Eigen::Index subpaths_per_cluster = 4;
    Eigen::Index antenna_count = 64;     // ULA elements
    double angle_spread = 0.03;          // radians, full width around a cluster center
    double gain_variance = 1.0;          // per-subpath gains are i.i.d. CN(0, gain_variance)
    // Draw cluster centers from the array's resolvable beam grid instead of
    // the continuous field of view; distinct clusters then occupy distinct
    // orthogonal beams.
    bool grid_angles = false;
    // OFDM blocks the static snapshot spans; receivers may average pilot
    // estimates across them.
    Eigen::Index num_blocks = 8;

    void validate() const;
};

struct GscmPath {
    cxd gain;
    double angle; // radians
};

// Half-wavelength ULA response, phase reference at element 0, unit norm:
// beta(theta)[m] = exp(-j*pi*m*sin(theta)) / sqrt(count).
CVec steering_vector(Eigen::Index count, double angle);

// Cluster centers uniform over [-pi/2, pi/2); subpath angles uniform within
// +-angle_spread/2 of their center; gains i.i.d. complex Gaussian.
std::vector<GscmPath> gscm_draw_paths(const GscmConfig &config, Rng &rng);

// h = sum of gain * steering_vector(angle) over the given paths.
CVec gscm_sum_paths(const std::vector<GscmPath> &paths, Eigen::Index antenna_count);

// ---------------------------------------------------------------------------
// Virtual channel model: angle-delay-Doppler resolution-bin coefficients
// ---------------------------------------------------------------------------

enum class SparsityPlacement {
    Product, // nonzeros on the Cartesian product of angular and delay-Doppler picks
    Union,   // each angular pick paired with one random delay-Doppler bin and vice versa
};

struct VcmConfig {
    Eigen::Index max_aoas = 16;   // N_R, resolvable angles of arrival
    Eigen::Index max_aods = 16;   // N_T, resolvable angles of departure
    Eigen::Index max_delays = 48; // L, delay taps c in [0, L)
    Eigen::Index max_doppler = 4; // M, Doppler bins d in [-M, M]

    double symbol_duration = 1e-3; // seconds; subcarrier spacing is 1/symbol_duration
    double bandwidth = 0.0;        // hertz; 0 means subcarriers / symbol_duration
    Eigen::Index subcarriers = 64; // K
    Eigen::Index guard_band = 0;   // zeroed subcarriers, split across both band edges
    Eigen::Index num_symbols = 16; // time-grid length; Doppler is resolved over this window

    Eigen::Index subpaths_per_bin = 4; // N, used when aggregating physical paths

    Eigen::Index angular_sparsity_min = 1;
    Eigen::Index angular_sparsity_max = 10;
    Eigen::Index dd_sparsity_min = 1; // delay-Doppler composite
    Eigen::Index dd_sparsity_max = 10;

    Eigen::Index delay_spread_bins = 48;  // occupied delay extent, <= max_delays
    Eigen::Index doppler_spread_bins = 9; // occupied Doppler extent (odd), <= 2M+1

    SparsityPlacement placement = SparsityPlacement::Product;

    // Antenna pair evaluated when collapsing the MIMO response to a scalar
    // (subcarrier, time) grid. Element 0 would null the angular phases.
    Eigen::Index rx_element = 1;
    Eigen::Index tx_element = 1;

    double subcarrier_spacing() const { return 1.0 / symbol_duration; }
    double effective_bandwidth() const {
        return bandwidth > 0.0 ? bandwidth : static_cast<double>(subcarriers) * subcarrier_spacing();
    }
    // Doppler-normalization window: the full simulated time axis.
    double observation_time() const { return static_cast<double>(num_symbols) * symbol_duration; }

    void validate() const;
};

// Sparse 4-index tensor H_v(a, b, c, d) with shape (N_R, N_T, L, 2M+1);
// d is stored in [-M, M].
struct VirtualCoefficients {
    struct Entry {
        Eigen::Index a, b, c, d;
        cxd value;
    };

    Eigen::Index n_rx = 0, n_tx = 0, n_delay = 0, max_doppler = 0;
    std::vector<Entry> entries;
    Eigen::Index true_sparsity = 0; // always the realized nonzero count

    Eigen::Index nonzero_count() const { return static_cast<Eigen::Index>(entries.size()); }
};

// Draw s_ang angular bins and s_dd delay-Doppler bins uniformly from their
// configured ranges and place complex Gaussian values per the configured
// placement mode. Throws ConfigError when a requested sparsity exceeds the
// available bin count.
VirtualCoefficients draw_virtual_coefficients(const VcmConfig &config, std::uint64_t seed);

// Physical propagation path, parameters in natural units.
struct PhysicalPath {
    cxd gain;         // beta_n
    double theta_rx;  // normalized spatial frequency in [0, 1)
    double theta_tx;  // normalized spatial frequency in [0, 1)
    double delay;     // seconds
    double doppler;   // hertz
};

// Dirichlet smoothing kernel f_N(theta) = (1/N) * sum_{a=0}^{N-1} e^{-j*2*pi*a*theta}.
cxd dirichlet_kernel(Eigen::Index n, double theta);

// Two-dimensional sinc kernel e^{-j*pi*x} * sin(pi x) sin(pi y) / (pi^2 x y),
// with the removable singularities filled by their limits.
cxd sinc2d(double x, double y);

// Bin physical paths onto the virtual grid: each path lands in its nearest
// resolution bin and contributes its gain weighted by the angular Dirichlet
// kernels and the delay-Doppler sinc kernel. An empty path list yields the
// all-zero tensor. Paths outside the configured spreads throw ConfigError.
VirtualCoefficients aggregate_physical_paths(const std::vector<PhysicalPath> &paths, const VcmConfig &config);

// ---------------------------------------------------------------------------
// Realizations and OFDM framing
// ---------------------------------------------------------------------------

// Complex channel grids. cfr is indexed (subcarrier, time); cir holds the
// unitary inverse DFT of each cfr column, so cfr = F * cir exactly.
struct ChannelRealization {
    CMat cir;
    CMat cfr;
    Eigen::Index true_sparsity = 0;

    // synthesis metadata
    std::string model;             // "gscm" or "vcm"
    Eigen::Index component_count = 0; // generators visible in a single grid column
                                      // (VCM: distinct delay bins; GSCM: clusters)
    Eigen::Index guard_band = 0;   // zeroed cfr rows (split across band edges)
    Eigen::Index delay_extent = 1; // channel memory in taps, for CP validation
    std::uint64_t seed = 0;

    Eigen::Index subcarriers() const { return cfr.rows(); }
    Eigen::Index time_slots() const { return cfr.cols(); }
};

// True for subcarrier rows zeroed by the guard band (leading ceil(g/2),
// trailing floor(g/2)).
bool is_guard_subcarrier(Eigen::Index subcarrier, Eigen::Index total, Eigen::Index guard_band);

// GSCM realization: the ULA snapshot is stored as the single cfr column (one
// grid cell per element) and its unitary inverse DFT, the compact beamspace
// profile, as the cir column. Optionally reports the drawn paths.
ChannelRealization gscm_channel(const GscmConfig &config, std::uint64_t seed,
                                std::vector<GscmPath> *drawn_paths = nullptr);

// Evaluate the virtual-coefficient expansion on the configured
// (subcarrier, time) grid for the configured antenna pair, zero the guard
// band, and attach the inverse-DFT delay response.
ChannelRealization vcm_cfr(const VirtualCoefficients &hv, const VcmConfig &config);

// Convenience: draw coefficients and evaluate the grid in one step.
ChannelRealization vcm_channel(const VcmConfig &config, std::uint64_t seed);

struct OfdmFrameSpec {
    Eigen::Index pilot_separation = 4;
    Eigen::Index cp_length = -1; // -1: use the realization's delay extent
    cxd pilot_value = {1.0, 0.0};
};

// One simulated OFDM exchange. Frequency-domain model: Y = X .* H + N.
struct OfdmFrame {
    CMat data_symbols;                        // X, zero on guard subcarriers
    std::vector<Eigen::Index> pilot_locations; // I, comb over all subcarriers
    CVec pilot_values;                        // P, aligned with I (zero inside the guard band)
    Eigen::Index cp_length = 0;
    CMat received;        // Y
    double noise_variance = 0.0;
    CMat channel;         // clean H the frame was generated with (scoring reference)
    Eigen::Index guard_band = 0;

    Eigen::Index subcarriers() const { return received.rows(); }
    Eigen::Index blocks() const { return received.cols(); }
};

// Fill the grid with 16-QAM data and comb pilots, apply the channel
// multiplicatively, and add complex AWGN scaled so that the per-sample SNR
// over non-guard subcarriers equals snr_db (use infinity to disable noise).
// Throws ConfigError when the cyclic prefix is shorter than the channel
// memory (inter-symbol interference is not modeled).
OfdmFrame ofdm_roundtrip(const ChannelRealization &channel, const OfdmFrameSpec &spec, double snr_db,
                         std::uint64_t seed);

} // namespace cskit

#endif
