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

#ifndef CSKIT_PIPELINE_HPP
#define CSKIT_PIPELINE_HPP

#include "cskit/channel.hpp"
#include "cskit/dictionary.hpp"
#include "cskit/estimator.hpp"

#include <filesystem>
#include <optional>

namespace cskit {

// ---------------------------------------------------------------------------
// Channel estimation
// ---------------------------------------------------------------------------

struct ChannelEstimate {
    std::string method; // "LS", "DFT-known-s", "Proposed", "Oracle"
    CMat cfr_estimate;
    CMat cir_estimate;
    double mse = 0.0; // ||H - Hhat||_F^2 / ||H||_F^2 over non-guard subcarriers
    std::optional<Eigen::Index> estimated_sparsity;
    bool degenerate = false; // a predicted sparsity of 0 zeroed the estimate
};

// Relative squared error restricted to non-guard subcarrier rows.
double normalized_mse(const CMat &truth, const CMat &estimate, Eigen::Index guard_band);

// Per-pilot least squares H = Y / P, linearly interpolated across subcarriers
// between pilots (edges hold the nearest pilot); guard rows stay zero.
// Near-zero pilots are skipped with a logged warning.
ChannelEstimate estimate_ls(const OfdmFrame &frame);

// Sparsity-aware estimate: extract features from the LS grid, predict the
// sparsity level per time column, and sparse-code each LS column over the
// dictionary at that level. `forced_sparsity` bypasses the regressor and
// reproduces the known-sparsity variant through the identical code path.
ChannelEstimate estimate_proposed(const OfdmFrame &frame, const Dictionary &dict, const SparsityRegressor &model,
                                  std::optional<Eigen::Index> forced_sparsity = std::nullopt);

// Baseline: sparse-code the LS grid over the unitary DFT basis at a known
// sparsity level, either shared or per time column.
ChannelEstimate estimate_dft_known_s(const OfdmFrame &frame, Eigen::Index s);
ChannelEstimate estimate_dft_known_s(const OfdmFrame &frame, const std::vector<Eigen::Index> &per_column_s);

// Genie benchmark: least-squares coefficients of the LS grid on the true
// support (one code per time column).
ChannelEstimate estimate_oracle(const OfdmFrame &frame, const Dictionary &dict,
                                const std::vector<SparseCode> &true_codes);

// ---------------------------------------------------------------------------
// Spectrum sensing
// ---------------------------------------------------------------------------

struct SpectrumObservation {
    RVec psd;
    double bin_hz_start = 852e6;
    double bin_width_hz = 20e3;
    std::optional<Eigen::Index> occupied_band_count; // label, when synthetic
    std::vector<std::uint8_t> occupied;              // per-bin hypothesis (1 = PU present), when known

    Eigen::Index bins() const { return psd.size(); }
};

struct SpectrumGeometry {
    double bin_hz_start = 852e6;
    double bin_width_hz = 20e3;
    Eigen::Index min_band_width = 6; // bins
    Eigen::Index max_band_width = 10;
    Eigen::Index power_averages = 16; // periodograms averaged per PSD estimate
};

// Draw `bands` disjoint occupied bands (separated by at least one vacant
// bin). Vacant bins carry unit-variance complex noise power; occupied bins
// add a signal component so that the mean occupied/vacant power ratio is
// 1 + 10^(snr_db/10). The label is the band count. Throws ConfigError when
// the bands cannot fit.
SpectrumObservation synthesize_spectrum(Eigen::Index bands, Eigen::Index bins, double snr_db, std::uint64_t seed,
                                        const SpectrumGeometry &geometry = {});

struct PsdFile {
    double bin_hz_start = 0.0;
    double bin_width_hz = 0.0;
    Eigen::Index bins = 0;
    bool labeled = false;
    std::vector<SpectrumObservation> observations;
};

// CSV schema: one metadata line "bin_hz_start,bin_width_hz,n_bins[,labeled]",
// then one observation per row (leading integer label when labeled). Values
// round-trip exactly. Malformed rows raise ParseError naming the line.
PsdFile ingest_psd(const std::filesystem::path &path);
void export_psd_csv(const std::filesystem::path &path, const std::vector<SpectrumObservation> &observations);

// Feature extraction + regression on the PSD vector. The dictionary is only
// consulted when the model was trained with dictionary-product features.
Eigen::Index estimate_spectrum_sparsity(const SpectrumObservation &obs, const Dictionary *dict,
                                        const SparsityRegressor &model);

} // namespace cskit

#endif
