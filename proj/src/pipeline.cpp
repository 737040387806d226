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

#include "cskit/pipeline.hpp"
#include "cskit/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cskit {

// ---------------------------------------------------------------------------
// Channel estimation
// ---------------------------------------------------------------------------

double normalized_mse(const CMat &truth, const CMat &estimate, Eigen::Index guard_band) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
        throw std::invalid_argument("normalized_mse: shape mismatch");
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        if (is_guard_subcarrier(i, truth.rows(), guard_band))
            continue;
        num += (truth.row(i) - estimate.row(i)).squaredNorm();
        den += truth.row(i).squaredNorm();
    }
    if (den == 0.0)
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

ChannelEstimate estimate_ls(const OfdmFrame &frame) {
    const Eigen::Index k = frame.subcarriers();
    const Eigen::Index blocks = frame.blocks();

    ChannelEstimate est;
    est.method = "LS";
    est.cfr_estimate = CMat::Zero(k, blocks);

    std::vector<Eigen::Index> rows;
    std::vector<std::size_t> pilot_idx;
    for (std::size_t p = 0; p < frame.pilot_locations.size(); ++p) {
        const cxd pv = frame.pilot_values(static_cast<Eigen::Index>(p));
        if (std::abs(pv) < 1e-300) {
            if (!is_guard_subcarrier(frame.pilot_locations[p], k, frame.guard_band))
                std::cerr << "warning: estimate_ls: skipping near-zero pilot at subcarrier "
                          << frame.pilot_locations[p] << "\n";
            continue;
        }
        rows.push_back(frame.pilot_locations[p]);
        pilot_idx.push_back(p);
    }

    for (Eigen::Index j = 0; j < blocks; ++j) {
        if (rows.empty())
            break;
        // Per-pilot least squares, then linear interpolation between pilots.
        std::vector<cxd> at_pilot(rows.size());
        for (std::size_t p = 0; p < rows.size(); ++p) {
            const cxd pv = frame.pilot_values(static_cast<Eigen::Index>(pilot_idx[p]));
            at_pilot[p] = frame.received(rows[p], j) / pv;
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            if (is_guard_subcarrier(i, k, frame.guard_band))
                continue;
            const auto upper = std::lower_bound(rows.begin(), rows.end(), i);
            cxd value;
            if (upper == rows.begin()) {
                value = at_pilot.front();
            } else if (upper == rows.end()) {
                value = at_pilot.back();
            } else {
                const auto hi = static_cast<std::size_t>(upper - rows.begin());
                const auto lo = hi - 1;
                if (rows[hi] == i) {
                    value = at_pilot[hi];
                } else {
                    const double t = static_cast<double>(i - rows[lo]) / static_cast<double>(rows[hi] - rows[lo]);
                    value = at_pilot[lo] * (1.0 - t) + at_pilot[hi] * t;
                }
            }
            est.cfr_estimate(i, j) = value;
        }
    }

    est.cir_estimate = unitary_dft_matrix(k).adjoint() * est.cfr_estimate;
    est.mse = normalized_mse(frame.channel, est.cfr_estimate, frame.guard_band);
    return est;
}

namespace {

Eigen::Index median_of(std::vector<Eigen::Index> v) {
    if (v.empty())
        return 0;
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

} // namespace

ChannelEstimate estimate_proposed(const OfdmFrame &frame, const Dictionary &dict, const SparsityRegressor &model,
                                  std::optional<Eigen::Index> forced_sparsity) {
    const Eigen::Index k = frame.subcarriers();
    if (dict.signal_dim() != k)
        throw ConfigError("estimate_proposed: dictionary dimension does not match the subcarrier count");

    const ChannelEstimate ls = estimate_ls(frame);
    const FeatureEncoding enc = feature_encoding_from_name(model.feature_encoding);
    CMat transform;
    if (model.feature_transform == "dictionary")
        transform = dict.atoms;
    else
        transform = unitary_dft_matrix(k);
    if (!forced_sparsity && model.input_dim() != feature_dimension(k, transform.cols(), enc))
        throw ConfigError("estimate_proposed: model feature dimension does not match the frame");

    ChannelEstimate est;
    est.method = "Proposed";
    est.cfr_estimate = CMat::Zero(k, frame.blocks());

    std::vector<Eigen::Index> levels;
    for (Eigen::Index j = 0; j < frame.blocks(); ++j) {
        Eigen::Index s_hat;
        if (forced_sparsity) {
            s_hat = *forced_sparsity;
        } else {
            const RVec v = extract_features(ls.cfr_estimate.col(j), transform, enc);
            s_hat = predict_sparsity(model, v);
        }
        s_hat = std::min(s_hat, dict.atom_count());
        levels.push_back(s_hat);
        if (s_hat == 0) {
            est.degenerate = true; // zero estimate for this column
            continue;
        }
        const SparseCode code = omp(ls.cfr_estimate.col(j), dict.atoms, OmpStop::sparsity(s_hat));
        est.cfr_estimate.col(j) = reconstruct(dict.atoms, code);
    }

    est.estimated_sparsity = median_of(levels);
    est.cir_estimate = unitary_dft_matrix(k).adjoint() * est.cfr_estimate;
    est.mse = normalized_mse(frame.channel, est.cfr_estimate, frame.guard_band);
    return est;
}

ChannelEstimate estimate_dft_known_s(const OfdmFrame &frame, Eigen::Index s) {
    return estimate_dft_known_s(frame, std::vector<Eigen::Index>(static_cast<std::size_t>(frame.blocks()), s));
}

ChannelEstimate estimate_dft_known_s(const OfdmFrame &frame, const std::vector<Eigen::Index> &per_column_s) {
    const Eigen::Index k = frame.subcarriers();
    if (static_cast<Eigen::Index>(per_column_s.size()) != frame.blocks())
        throw ConfigError("estimate_dft_known_s: need one sparsity per time column");
    for (Eigen::Index s : per_column_s)
        if (s < 1 || s > k)
            throw ConfigError("estimate_dft_known_s: sparsity must be in [1, subcarriers]");

    const ChannelEstimate ls = estimate_ls(frame);
    const CMat f = unitary_dft_matrix(k);

    ChannelEstimate est;
    est.method = "DFT-known-s";
    est.cfr_estimate = CMat::Zero(k, frame.blocks());
    for (Eigen::Index j = 0; j < frame.blocks(); ++j) {
        const SparseCode code =
            omp(ls.cfr_estimate.col(j), f, OmpStop::sparsity(per_column_s[static_cast<std::size_t>(j)]));
        est.cfr_estimate.col(j) = reconstruct(f, code);
    }
    est.estimated_sparsity = median_of(per_column_s);
    est.cir_estimate = f.adjoint() * est.cfr_estimate;
    est.mse = normalized_mse(frame.channel, est.cfr_estimate, frame.guard_band);
    return est;
}

ChannelEstimate estimate_oracle(const OfdmFrame &frame, const Dictionary &dict,
                                const std::vector<SparseCode> &true_codes) {
    const Eigen::Index k = frame.subcarriers();
    if (dict.signal_dim() != k)
        throw ConfigError("estimate_oracle: dictionary dimension does not match the subcarrier count");
    if (static_cast<Eigen::Index>(true_codes.size()) != frame.blocks())
        throw ConfigError("estimate_oracle: need one true code per time column");

    const ChannelEstimate ls = estimate_ls(frame);

    ChannelEstimate est;
    est.method = "Oracle";
    est.cfr_estimate = CMat::Zero(k, frame.blocks());
    std::vector<Eigen::Index> levels;
    for (Eigen::Index j = 0; j < frame.blocks(); ++j) {
        const auto &code = true_codes[static_cast<std::size_t>(j)];
        levels.push_back(code.sparsity());
        if (code.support.empty())
            continue;
        CMat d_s(k, code.sparsity());
        for (Eigen::Index i = 0; i < code.sparsity(); ++i)
            d_s.col(i) = dict.atoms.col(code.support[static_cast<std::size_t>(i)]);
        // Least squares on the known support.
        Eigen::CompleteOrthogonalDecomposition<CMat> cod(d_s);
        cod.setThreshold(1e-12);
        est.cfr_estimate.col(j) = d_s * cod.solve(ls.cfr_estimate.col(j));
    }
    est.estimated_sparsity = median_of(levels);
    est.cir_estimate = unitary_dft_matrix(k).adjoint() * est.cfr_estimate;
    est.mse = normalized_mse(frame.channel, est.cfr_estimate, frame.guard_band);
    return est;
}

// ---------------------------------------------------------------------------
// Spectrum sensing
// ---------------------------------------------------------------------------

SpectrumObservation synthesize_spectrum(Eigen::Index bands, Eigen::Index bins, double snr_db, std::uint64_t seed,
                                        const SpectrumGeometry &geometry) {
    if (bins < 1)
        throw ConfigError("synthesize_spectrum: need at least one bin");
    if (bands < 0 || bands > bins)
        throw ConfigError("synthesize_spectrum: band count must be in [0, bins]");
    if (!std::isfinite(snr_db))
        throw ConfigError("synthesize_spectrum: SNR must be finite");
    if (geometry.min_band_width < 1 || geometry.min_band_width > geometry.max_band_width)
        throw ConfigError("synthesize_spectrum: bad band width range");
    if (geometry.power_averages < 1)
        throw ConfigError("synthesize_spectrum: need at least one periodogram average");

    Rng rng(seed);
    std::vector<Eigen::Index> widths(static_cast<std::size_t>(bands));
    Eigen::Index total_width = 0;
    for (auto &w : widths) {
        w = static_cast<Eigen::Index>(rng.uniform_int(geometry.min_band_width, geometry.max_band_width));
        total_width += w;
    }
    // One mandatory vacant bin between consecutive bands.
    const Eigen::Index slack = bins - total_width - std::max<Eigen::Index>(0, bands - 1);
    if (slack < 0)
        throw ConfigError("synthesize_spectrum: " + std::to_string(bands) + " bands do not fit in " +
                          std::to_string(bins) + " bins");

    // Distribute the slack over the bands+1 gaps (stars and bars).
    std::vector<Eigen::Index> gaps(static_cast<std::size_t>(bands) + 1, 0);
    if (bands > 0 && slack > 0) {
        auto cuts = rng.choose_distinct(static_cast<std::size_t>(slack + bands), static_cast<std::size_t>(bands));
        std::sort(cuts.begin(), cuts.end());
        Eigen::Index prev = -1;
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            gaps[i] = static_cast<Eigen::Index>(cuts[i]) - prev - 1;
            prev = static_cast<Eigen::Index>(cuts[i]);
        }
        gaps[cuts.size()] = slack + bands - 1 - prev;
    }

    SpectrumObservation obs;
    obs.bin_hz_start = geometry.bin_hz_start;
    obs.bin_width_hz = geometry.bin_width_hz;
    obs.occupied_band_count = bands;
    obs.occupied.assign(static_cast<std::size_t>(bins), 0);

    Eigen::Index pos = 0;
    for (Eigen::Index b = 0; b < bands; ++b) {
        pos += gaps[static_cast<std::size_t>(b)];
        for (Eigen::Index w = 0; w < widths[static_cast<std::size_t>(b)]; ++w)
            obs.occupied[static_cast<std::size_t>(pos++)] = 1;
        pos += 1; // mandatory separator
    }

    // Unit-variance noise everywhere; occupied bins add a PU component with
    // variance snr_linear, so E[occupied] / E[vacant] = 1 + snr_linear. Each
    // PSD value averages several independent periodograms.
    const double snr_linear = std::pow(10.0, snr_db / 10.0);
    obs.psd.resize(bins);
    for (Eigen::Index i = 0; i < bins; ++i) {
        double acc = 0.0;
        for (Eigen::Index a = 0; a < geometry.power_averages; ++a) {
            cxd sample = rng.complex_gaussian(1.0);
            if (obs.occupied[static_cast<std::size_t>(i)])
                sample += rng.complex_gaussian(snr_linear);
            acc += std::norm(sample);
        }
        obs.psd(i) = acc / static_cast<double>(geometry.power_averages);
    }
    return obs;
}

PsdFile ingest_psd(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw MissingArtifactError("cannot open " + path.string());

    auto fail = [&path](std::size_t line, const std::string &what) {
        throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
    };

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        fail(1, "missing metadata line");
    ++line_no;

    auto split = [](const std::string &s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!s.empty() && s.back() == ',')
            cells.push_back("");
        return cells;
    };
    auto to_double = [&fail](const std::string &cell, std::size_t line) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception &) {
            fail(line, "non-numeric cell '" + cell + "'");
        }
        if (used != cell.size())
            fail(line, "non-numeric cell '" + cell + "'");
        return v;
    };

    PsdFile file;
    {
        const auto cells = split(line);
        if (cells.size() != 3 && !(cells.size() == 4 && cells[3] == "labeled"))
            fail(1, "metadata line must be bin_hz_start,bin_width_hz,n_bins[,labeled]");
        file.bin_hz_start = to_double(cells[0], 1);
        file.bin_width_hz = to_double(cells[1], 1);
        const double n = to_double(cells[2], 1);
        if (n < 1 || n != std::floor(n) || n > (1 << 24))
            fail(1, "bad bin count '" + cells[2] + "'");
        file.bins = static_cast<Eigen::Index>(n);
        file.labeled = cells.size() == 4;
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto cells = split(line);
        const std::size_t expected = static_cast<std::size_t>(file.bins) + (file.labeled ? 1 : 0);
        if (cells.size() != expected)
            fail(line_no, "expected " + std::to_string(expected) + " columns, got " + std::to_string(cells.size()));

        SpectrumObservation obs;
        obs.bin_hz_start = file.bin_hz_start;
        obs.bin_width_hz = file.bin_width_hz;
        std::size_t c = 0;
        if (file.labeled) {
            const double label = to_double(cells[c++], line_no);
            if (label < 0 || label != std::floor(label))
                fail(line_no, "bad label '" + cells[0] + "'");
            obs.occupied_band_count = static_cast<Eigen::Index>(label);
        }
        obs.psd.resize(file.bins);
        for (Eigen::Index i = 0; i < file.bins; ++i)
            obs.psd(i) = to_double(cells[c++], line_no);
        file.observations.push_back(std::move(obs));
    }
    return file;
}

void export_psd_csv(const std::filesystem::path &path, const std::vector<SpectrumObservation> &observations) {
    if (observations.empty())
        throw ConfigError("export_psd_csv: nothing to export");
    const Eigen::Index bins = observations.front().bins();
    const bool labeled = observations.front().occupied_band_count.has_value();
    std::ostringstream os;
    os << format_double(observations.front().bin_hz_start) << ',' << format_double(observations.front().bin_width_hz)
       << ',' << bins;
    if (labeled)
        os << ",labeled";
    os << '\n';
    for (const SpectrumObservation &obs : observations) {
        if (obs.bins() != bins || obs.occupied_band_count.has_value() != labeled)
            throw ConfigError("export_psd_csv: observations disagree on shape or labeling");
        if (labeled)
            os << *obs.occupied_band_count << ',';
        for (Eigen::Index i = 0; i < bins; ++i) {
            os << format_double(obs.psd(i));
            os << (i + 1 < bins ? ',' : '\n');
        }
    }
    write_file_atomic(path, os.str());
}

Eigen::Index estimate_spectrum_sparsity(const SpectrumObservation &obs, const Dictionary *dict,
                                        const SparsityRegressor &model) {
    CVec y(obs.bins());
    for (Eigen::Index i = 0; i < obs.bins(); ++i)
        y(i) = cxd(obs.psd(i), 0.0);

    const FeatureEncoding enc = feature_encoding_from_name(model.feature_encoding);
    CMat transform;
    if (model.feature_transform == "dictionary") {
        if (!dict)
            throw MissingArtifactError("estimate_spectrum_sparsity: model expects dictionary features but no dictionary given");
        transform = dict->atoms;
    } else if (model.feature_transform == "identity") {
        transform = CMat::Identity(obs.bins(), obs.bins());
    } else {
        transform = unitary_dft_matrix(obs.bins());
    }
    if (model.input_dim() != feature_dimension(obs.bins(), transform.cols(), enc))
        throw ConfigError("estimate_spectrum_sparsity: model feature dimension does not match the observation");
    return predict_sparsity(model, extract_features(y, transform, enc));
}

} // namespace cskit
