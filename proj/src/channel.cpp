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

#include "cskit/channel.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace cskit {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// GSCM
// ---------------------------------------------------------------------------

void GscmConfig::validate() const {
    if (num_clusters < 1 || subpaths_per_cluster < 1 || antenna_count < 1)
        throw ConfigError("GscmConfig: cluster, subpath and antenna counts must be >= 1");
    if (angle_spread < 0.0)
        throw ConfigError("GscmConfig: angle spread must be non-negative");
    if (gain_variance <= 0.0)
        throw ConfigError("GscmConfig: gain variance must be positive");
    if (num_blocks < 1)
        throw ConfigError("GscmConfig: block count must be >= 1");
}

CVec steering_vector(Eigen::Index count, double angle) {
    CVec v(count);
    const double scale = 1.0 / std::sqrt(static_cast<double>(count));
    const double spatial = pi * std::sin(angle);
    for (Eigen::Index m = 0; m < count; ++m) {
        const double phi = -spatial * static_cast<double>(m);
        v(m) = scale * cxd(std::cos(phi), std::sin(phi));
    }
    return v;
}

std::vector<GscmPath> gscm_draw_paths(const GscmConfig &config, Rng &rng) {
    config.validate();
    // Gains are i.i.d. CN(0, gain_variance) per subpath, so the channel energy
    // grows with the number of paths.
    std::vector<GscmPath> paths;
    paths.reserve(static_cast<std::size_t>(config.num_clusters * config.subpaths_per_cluster));
    for (Eigen::Index i = 0; i < config.num_clusters; ++i) {
        double center;
        if (config.grid_angles) {
            // Resolvable beams of an M-element half-wavelength ULA: sin(theta)
            // on the uniform grid 2a/M - 1.
            const auto a = rng.uniform_int(0, config.antenna_count - 1);
            center = std::asin(2.0 * static_cast<double>(a) / static_cast<double>(config.antenna_count) - 1.0);
        } else {
            center = rng.uniform(-pi / 2.0, pi / 2.0);
        }
        for (Eigen::Index j = 0; j < config.subpaths_per_cluster; ++j) {
            GscmPath p;
            p.angle = center + rng.uniform(-config.angle_spread / 2.0, config.angle_spread / 2.0);
            p.gain = rng.complex_gaussian(config.gain_variance);
            paths.push_back(p);
        }
    }
    return paths;
}

CVec gscm_sum_paths(const std::vector<GscmPath> &paths, Eigen::Index antenna_count) {
    CVec h = CVec::Zero(antenna_count);
    for (const GscmPath &p : paths)
        h += p.gain * steering_vector(antenna_count, p.angle);
    return h;
}

ChannelRealization gscm_channel(const GscmConfig &config, std::uint64_t seed, std::vector<GscmPath> *drawn_paths) {
    config.validate();
    Rng rng(seed);
    std::vector<GscmPath> paths = gscm_draw_paths(config, rng);

    // The ULA snapshot plays the role of the observed frequency-domain grid
    // (one "subcarrier" per element); its inverse DFT is the compact beamspace
    // representation stored as the impulse response.
    ChannelRealization out;
    const CVec snapshot = gscm_sum_paths(paths, config.antenna_count);
    out.cfr = snapshot.replicate(1, config.num_blocks);
    out.cir = (unitary_dft_matrix(config.antenna_count).adjoint() * snapshot).replicate(1, config.num_blocks);
    out.true_sparsity = config.num_clusters;
    out.component_count = config.num_clusters;
    if (config.grid_angles) {
        // Colliding clusters merge into one beam.
        std::set<Eigen::Index> beams;
        for (const GscmPath &p : paths) {
            const double frac = (std::sin(p.angle) + 1.0) * static_cast<double>(config.antenna_count) / 2.0;
            beams.insert(static_cast<Eigen::Index>(std::llround(frac)) % config.antenna_count);
        }
        out.component_count = static_cast<Eigen::Index>(beams.size());
    }
    out.model = "gscm";
    out.guard_band = 0;
    out.delay_extent = config.antenna_count;
    out.seed = seed;
    if (drawn_paths)
        *drawn_paths = std::move(paths);
    return out;
}

// ---------------------------------------------------------------------------
// VCM
// ---------------------------------------------------------------------------

void VcmConfig::validate() const {
    if (max_aoas < 1 || max_aods < 1 || max_delays < 1 || max_doppler < 0)
        throw ConfigError("VcmConfig: grid dimensions must be positive (max_doppler >= 0)");
    if (symbol_duration <= 0.0)
        throw ConfigError("VcmConfig: symbol duration must be positive");
    if (subcarriers < 1 || num_symbols < 1)
        throw ConfigError("VcmConfig: grid sizes must be positive");
    if (guard_band < 0 || guard_band >= subcarriers)
        throw ConfigError("VcmConfig: guard band must be in [0, subcarriers)");
    if (subpaths_per_bin < 1)
        throw ConfigError("VcmConfig: subpaths per bin must be >= 1");
    if (angular_sparsity_min < 1 || angular_sparsity_min > angular_sparsity_max)
        throw ConfigError("VcmConfig: bad angular sparsity range");
    if (dd_sparsity_min < 1 || dd_sparsity_min > dd_sparsity_max)
        throw ConfigError("VcmConfig: bad delay-Doppler sparsity range");
    if (delay_spread_bins < 1 || delay_spread_bins > max_delays)
        throw ConfigError("VcmConfig: delay spread must be in [1, max_delays]");
    if (doppler_spread_bins < 1 || doppler_spread_bins > 2 * max_doppler + 1)
        throw ConfigError("VcmConfig: Doppler spread must be in [1, 2*max_doppler+1]");
    if (doppler_spread_bins % 2 == 0)
        throw ConfigError("VcmConfig: Doppler spread must be odd (bins are centered on zero)");
    if (rx_element < 0 || rx_element >= max_aoas || tx_element < 0 || tx_element >= max_aods)
        throw ConfigError("VcmConfig: antenna elements outside the array");
    // Delay taps beyond the bandwidth-supported extent would alias.
    if (static_cast<double>(max_delays) > effective_bandwidth() * symbol_duration + 1e-9)
        throw ConfigError("VcmConfig: max_delays exceeds bandwidth * symbol_duration");
}

VirtualCoefficients draw_virtual_coefficients(const VcmConfig &config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);

    const Eigen::Index angular_bins = config.max_aoas * config.max_aods;
    const Eigen::Index dd_bins = config.delay_spread_bins * config.doppler_spread_bins;
    const Eigen::Index half_spread = (config.doppler_spread_bins - 1) / 2;

    const auto s_ang = static_cast<Eigen::Index>(rng.uniform_int(config.angular_sparsity_min, config.angular_sparsity_max));
    const auto s_dd = static_cast<Eigen::Index>(rng.uniform_int(config.dd_sparsity_min, config.dd_sparsity_max));
    if (s_ang > angular_bins)
        throw ConfigError("draw_virtual_coefficients: angular sparsity exceeds angular bin count");
    if (s_dd > dd_bins)
        throw ConfigError("draw_virtual_coefficients: delay-Doppler sparsity exceeds bin count");

    const auto ang_flat = rng.choose_distinct(static_cast<std::size_t>(angular_bins), static_cast<std::size_t>(s_ang));
    const auto dd_flat = rng.choose_distinct(static_cast<std::size_t>(dd_bins), static_cast<std::size_t>(s_dd));

    auto unflatten_ang = [&](std::size_t flat) {
        return std::pair<Eigen::Index, Eigen::Index>{static_cast<Eigen::Index>(flat) % config.max_aoas,
                                                     static_cast<Eigen::Index>(flat) / config.max_aoas};
    };
    auto unflatten_dd = [&](std::size_t flat) {
        const Eigen::Index c = static_cast<Eigen::Index>(flat) % config.delay_spread_bins;
        const Eigen::Index d = static_cast<Eigen::Index>(flat) / config.delay_spread_bins - half_spread;
        return std::pair<Eigen::Index, Eigen::Index>{c, d};
    };

    VirtualCoefficients hv;
    hv.n_rx = config.max_aoas;
    hv.n_tx = config.max_aods;
    hv.n_delay = config.max_delays;
    hv.max_doppler = config.max_doppler;

    if (config.placement == SparsityPlacement::Product) {
        for (std::size_t ai : ang_flat)
            for (std::size_t di : dd_flat) {
                const auto [a, b] = unflatten_ang(ai);
                const auto [c, d] = unflatten_dd(di);
                hv.entries.push_back({a, b, c, d, rng.complex_gaussian()});
            }
    } else {
        // Union placement: each pick is completed with one random bin from the
        // other domain; duplicate 4-tuples collapse, so the label is the
        // realized count.
        std::set<std::array<Eigen::Index, 4>> seen;
        auto place = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index d) {
            if (seen.insert({a, b, c, d}).second)
                hv.entries.push_back({a, b, c, d, rng.complex_gaussian()});
        };
        for (std::size_t ai : ang_flat) {
            const auto [a, b] = unflatten_ang(ai);
            const auto [c, d] = unflatten_dd(static_cast<std::size_t>(rng.uniform_int(0, dd_bins - 1)));
            place(a, b, c, d);
        }
        for (std::size_t di : dd_flat) {
            const auto [c, d] = unflatten_dd(di);
            const auto [a, b] = unflatten_ang(static_cast<std::size_t>(rng.uniform_int(0, angular_bins - 1)));
            place(a, b, c, d);
        }
    }

    hv.true_sparsity = hv.nonzero_count();
    return hv;
}

cxd dirichlet_kernel(Eigen::Index n, double theta) {
    if (n < 1)
        throw std::invalid_argument("dirichlet_kernel: N must be >= 1");
    cxd acc(0.0, 0.0);
    for (Eigen::Index a = 0; a < n; ++a) {
        const double phi = -2.0 * pi * static_cast<double>(a) * theta;
        acc += cxd(std::cos(phi), std::sin(phi));
    }
    return acc / static_cast<double>(n);
}

namespace {

double sinc1d(double x) {
    if (std::abs(x) < 1e-12)
        return 1.0;
    return std::sin(pi * x) / (pi * x);
}

} // namespace

cxd sinc2d(double x, double y) {
    const double phi = -pi * x;
    return cxd(std::cos(phi), std::sin(phi)) * (sinc1d(x) * sinc1d(y));
}

VirtualCoefficients aggregate_physical_paths(const std::vector<PhysicalPath> &paths, const VcmConfig &config) {
    config.validate();
    const double w = config.effective_bandwidth();
    const double t_obs = config.observation_time();
    const Eigen::Index half_spread = (config.doppler_spread_bins - 1) / 2;

    VirtualCoefficients hv;
    hv.n_rx = config.max_aoas;
    hv.n_tx = config.max_aods;
    hv.n_delay = config.max_delays;
    hv.max_doppler = config.max_doppler;

    // Accumulate into a map keyed by the home bin of each path.
    std::vector<VirtualCoefficients::Entry> &entries = hv.entries;
    auto find_or_add = [&entries](Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index d) -> cxd & {
        for (auto &e : entries)
            if (e.a == a && e.b == b && e.c == c && e.d == d)
                return e.value;
        entries.push_back({a, b, c, d, cxd(0.0, 0.0)});
        return entries.back().value;
    };

    for (const PhysicalPath &p : paths) {
        if (p.theta_rx < 0.0 || p.theta_rx >= 1.0 || p.theta_tx < 0.0 || p.theta_tx >= 1.0)
            throw ConfigError("aggregate_physical_paths: spatial frequencies must lie in [0, 1)");
        // Nearest grid point; the angular grid wraps.
        const Eigen::Index a =
            static_cast<Eigen::Index>(std::llround(p.theta_rx * static_cast<double>(config.max_aoas))) % config.max_aoas;
        const Eigen::Index b =
            static_cast<Eigen::Index>(std::llround(p.theta_tx * static_cast<double>(config.max_aods))) % config.max_aods;
        const Eigen::Index c = static_cast<Eigen::Index>(std::llround(p.delay * w));
        const Eigen::Index d = static_cast<Eigen::Index>(std::llround(p.doppler * t_obs));
        if (c < 0 || c >= config.delay_spread_bins)
            throw ConfigError("aggregate_physical_paths: path delay outside the configured spread");
        if (d < -half_spread || d > half_spread)
            throw ConfigError("aggregate_physical_paths: path Doppler outside the configured spread");

        const cxd contribution =
            p.gain * dirichlet_kernel(config.max_aoas, static_cast<double>(a) / static_cast<double>(config.max_aoas) - p.theta_rx) *
            std::conj(dirichlet_kernel(config.max_aods, static_cast<double>(b) / static_cast<double>(config.max_aods) - p.theta_tx)) *
            sinc2d(static_cast<double>(d) - t_obs * p.doppler, static_cast<double>(c) - w * p.delay);
        find_or_add(a, b, c, d) += contribution;
    }

    // Cancellations and zero-gain paths must not count as occupied bins.
    std::erase_if(entries, [](const VirtualCoefficients::Entry &e) { return e.value == cxd(0.0, 0.0); });

    hv.true_sparsity = hv.nonzero_count();
    return hv;
}

ChannelRealization vcm_cfr(const VirtualCoefficients &hv, const VcmConfig &config) {
    config.validate();
    if (hv.n_rx != config.max_aoas || hv.n_tx != config.max_aods || hv.n_delay != config.max_delays ||
        hv.max_doppler != config.max_doppler)
        throw ConfigError("vcm_cfr: coefficient tensor shape does not match the configuration");

    const Eigen::Index k = config.subcarriers;
    const Eigen::Index n_t = config.num_symbols;
    const double delta_f = config.subcarrier_spacing();
    const double w = config.effective_bandwidth();
    const double t_obs = config.observation_time();
    const double pair_scale = 1.0 / std::sqrt(static_cast<double>(config.max_aoas * config.max_aods));

    CMat grid = CMat::Zero(k, n_t);
    CVec freq_phase(k), time_phase(n_t);
    for (const auto &entry : hv.entries) {
        if (entry.a < 0 || entry.a >= hv.n_rx || entry.b < 0 || entry.b >= hv.n_tx || entry.c < 0 ||
            entry.c >= hv.n_delay || entry.d < -hv.max_doppler || entry.d > hv.max_doppler)
            throw ConfigError("vcm_cfr: coefficient entry outside the tensor");

        // Virtual steering/response phases for the configured antenna pair.
        const double rx_phi = -2.0 * pi * static_cast<double>(config.rx_element) * static_cast<double>(entry.a) /
                              static_cast<double>(config.max_aoas);
        const double tx_phi = 2.0 * pi * static_cast<double>(config.tx_element) * static_cast<double>(entry.b) /
                              static_cast<double>(config.max_aods);
        const cxd weight = entry.value * pair_scale * cxd(std::cos(rx_phi + tx_phi), std::sin(rx_phi + tx_phi));

        for (Eigen::Index j = 0; j < k; ++j) {
            const double phi = -2.0 * pi * (static_cast<double>(entry.c) / w) * static_cast<double>(j) * delta_f;
            freq_phase(j) = cxd(std::cos(phi), std::sin(phi));
        }
        for (Eigen::Index i = 0; i < n_t; ++i) {
            const double phi = 2.0 * pi * (static_cast<double>(entry.d) / t_obs) * static_cast<double>(i) * config.symbol_duration;
            time_phase(i) = cxd(std::cos(phi), std::sin(phi));
        }
        grid += weight * (freq_phase * time_phase.transpose());
    }

    for (Eigen::Index j = 0; j < k; ++j)
        if (is_guard_subcarrier(j, k, config.guard_band))
            grid.row(j).setZero();

    std::set<Eigen::Index> delay_bins;
    for (const auto &entry : hv.entries)
        delay_bins.insert(entry.c);

    ChannelRealization out;
    out.cfr = grid;
    out.cir = unitary_dft_matrix(k).adjoint() * grid;
    out.true_sparsity = hv.true_sparsity;
    out.component_count = static_cast<Eigen::Index>(delay_bins.size());
    out.model = "vcm";
    out.guard_band = config.guard_band;
    out.delay_extent = config.max_delays;
    return out;
}

ChannelRealization vcm_channel(const VcmConfig &config, std::uint64_t seed) {
    ChannelRealization out = vcm_cfr(draw_virtual_coefficients(config, seed), config);
    out.seed = seed;
    return out;
}

// ---------------------------------------------------------------------------
// OFDM framing
// ---------------------------------------------------------------------------

bool is_guard_subcarrier(Eigen::Index subcarrier, Eigen::Index total, Eigen::Index guard_band) {
    const Eigen::Index head = (guard_band + 1) / 2;
    const Eigen::Index tail = guard_band / 2;
    return subcarrier < head || subcarrier >= total - tail;
}

namespace {

cxd draw_16qam(Rng &rng) {
    // {+-1, +-3} per rail, unit average power.
    const double re = static_cast<double>(2 * rng.uniform_int(0, 3) - 3);
    const double im = static_cast<double>(2 * rng.uniform_int(0, 3) - 3);
    return cxd(re, im) / std::sqrt(10.0);
}

} // namespace

OfdmFrame ofdm_roundtrip(const ChannelRealization &channel, const OfdmFrameSpec &spec, double snr_db,
                         std::uint64_t seed) {
    const Eigen::Index k = channel.subcarriers();
    const Eigen::Index blocks = channel.time_slots();
    if (spec.pilot_separation < 1 || spec.pilot_separation > k)
        throw ConfigError("ofdm_roundtrip: pilot separation must be in [1, subcarriers]");
    const Eigen::Index cp = spec.cp_length < 0 ? channel.delay_extent : spec.cp_length;
    if (cp < channel.delay_extent)
        throw ConfigError("ofdm_roundtrip: cyclic prefix (" + std::to_string(cp) + ") shorter than channel memory (" +
                          std::to_string(channel.delay_extent) + "); inter-symbol interference is not modeled");

    OfdmFrame frame;
    frame.cp_length = cp;
    frame.guard_band = channel.guard_band;
    frame.channel = channel.cfr;
    for (Eigen::Index i = 0; i < k; i += spec.pilot_separation)
        frame.pilot_locations.push_back(i);
    frame.pilot_values.resize(static_cast<Eigen::Index>(frame.pilot_locations.size()));

    Rng rng(seed);
    frame.data_symbols = CMat::Zero(k, blocks);
    for (Eigen::Index j = 0; j < blocks; ++j) {
        for (Eigen::Index i = 0; i < k; ++i) {
            if (is_guard_subcarrier(i, k, channel.guard_band))
                continue; // guard subcarriers transmit nothing
            if (i % spec.pilot_separation == 0)
                frame.data_symbols(i, j) = spec.pilot_value;
            else
                frame.data_symbols(i, j) = draw_16qam(rng);
        }
    }
    for (std::size_t p = 0; p < frame.pilot_locations.size(); ++p) {
        const Eigen::Index i = frame.pilot_locations[p];
        frame.pilot_values(static_cast<Eigen::Index>(p)) =
            is_guard_subcarrier(i, k, channel.guard_band) ? cxd(0.0, 0.0) : spec.pilot_value;
    }

    // Per-sample SNR over the active (non-guard) grid.
    double signal_power = 0.0;
    Eigen::Index active = 0;
    for (Eigen::Index j = 0; j < blocks; ++j)
        for (Eigen::Index i = 0; i < k; ++i)
            if (!is_guard_subcarrier(i, k, channel.guard_band)) {
                signal_power += std::norm(frame.data_symbols(i, j) * channel.cfr(i, j));
                ++active;
            }
    if (active > 0)
        signal_power /= static_cast<double>(active);

    double noise_var = 0.0;
    if (std::isfinite(snr_db))
        noise_var = signal_power / std::pow(10.0, snr_db / 10.0);
    frame.noise_variance = noise_var;

    frame.received.resize(k, blocks);
    for (Eigen::Index j = 0; j < blocks; ++j)
        for (Eigen::Index i = 0; i < k; ++i) {
            const cxd noise = noise_var > 0.0 ? rng.complex_gaussian(noise_var) : cxd(0.0, 0.0);
            frame.received(i, j) = frame.data_symbols(i, j) * channel.cfr(i, j) + noise;
        }
    return frame;
}

} // namespace cskit
