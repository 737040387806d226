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

#include <doctest.h>

#include "cskit/io.hpp"
#include "cskit/pipeline.hpp"

#include <filesystem>
#include <fstream>

using namespace cskit;
namespace fs = std::filesystem;

namespace {

ChannelRealization flat_channel(Eigen::Index k, Eigen::Index blocks, cxd value) {
    ChannelRealization chan;
    chan.cfr = CMat::Constant(k, blocks, value);
    chan.cir = unitary_dft_matrix(k).adjoint() * chan.cfr;
    chan.model = "vcm";
    chan.guard_band = 0;
    chan.delay_extent = 1;
    return chan;
}

VcmConfig small_vcm() {
    VcmConfig cfg;
    cfg.max_aoas = 8;
    cfg.max_aods = 8;
    cfg.subcarriers = 32;
    cfg.num_symbols = 4;
    cfg.max_delays = 8;
    cfg.delay_spread_bins = 8;
    cfg.guard_band = 0;
    cfg.angular_sparsity_max = 4;
    cfg.dd_sparsity_max = 4;
    return cfg;
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "cskit_pipeline_tests";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("LS with pilots everywhere and no noise is exact") {
    const ChannelRealization chan = vcm_channel(small_vcm(), 3);
    OfdmFrameSpec spec;
    spec.pilot_separation = 1;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, std::numeric_limits<double>::infinity(), 5);
    const ChannelEstimate est = estimate_ls(frame);
    CHECK(est.method == "LS");
    CHECK((est.cfr_estimate - chan.cfr).norm() <= 1e-12 * chan.cfr.norm());
    CHECK(est.mse <= 1e-24);
    CHECK_FALSE(est.estimated_sparsity.has_value());
}

TEST_CASE("LS comb interpolation is exact on a frequency-flat channel") {
    const ChannelRealization chan = flat_channel(32, 2, cxd(0.8, -0.6));
    OfdmFrameSpec spec;
    spec.pilot_separation = 4;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, std::numeric_limits<double>::infinity(), 7);
    const ChannelEstimate est = estimate_ls(frame);
    CHECK(est.mse <= 1e-24);
}

TEST_CASE("LS matches an independently coded pilot-plus-interpolation oracle") {
    const ChannelRealization chan = vcm_channel(small_vcm(), 11);
    OfdmFrameSpec spec;
    spec.pilot_separation = 4;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, 0.0, 13);
    const ChannelEstimate est = estimate_ls(frame);

    // oracle: direct per-pilot division and linear interpolation, plain loops
    const Eigen::Index k = frame.subcarriers();
    for (Eigen::Index j = 0; j < frame.blocks(); ++j) {
        std::vector<Eigen::Index> pilots;
        std::vector<cxd> values;
        for (Eigen::Index i = 0; i < k; i += 4) {
            pilots.push_back(i);
            values.push_back(frame.received(i, j) / frame.data_symbols(i, j));
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            cxd expected;
            if (i <= pilots.front()) {
                expected = values.front();
            } else if (i >= pilots.back()) {
                expected = values.back();
            } else {
                std::size_t hi = 0;
                while (pilots[hi] < i)
                    ++hi;
                if (pilots[hi] == i) {
                    expected = values[hi];
                } else {
                    const double t = static_cast<double>(i - pilots[hi - 1]) /
                                     static_cast<double>(pilots[hi] - pilots[hi - 1]);
                    expected = values[hi - 1] * (1.0 - t) + values[hi] * t;
                }
            }
            CHECK(std::abs(est.cfr_estimate(i, j) - expected) < 1e-12);
        }
    }
}

TEST_CASE("proposed estimator is near-exact on a dictionary-representable channel") {
    // channel columns equal one atom of the dictionary
    Dictionary dict;
    dict.atoms = unitary_dft_matrix(32);
    ChannelRealization chan;
    chan.cfr = dict.atoms.col(3).replicate(1, 2) * cxd(2.0, 1.0);
    chan.cir = unitary_dft_matrix(32).adjoint() * chan.cfr;
    chan.model = "vcm";
    chan.guard_band = 0;
    chan.delay_extent = 32;

    OfdmFrameSpec spec;
    spec.pilot_separation = 1;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, std::numeric_limits<double>::infinity(), 17);
    const SparsityRegressor unused = make_regressor(4, 2, 1);
    const ChannelEstimate est = estimate_proposed(frame, dict, unused, 1);
    CHECK(est.mse < 1e-10);
    CHECK(est.estimated_sparsity.value() == 1);
    CHECK_FALSE(est.degenerate);
}

TEST_CASE("forcing the sparsity reproduces a hand-rolled known-s pipeline bit-exactly") {
    const ChannelRealization chan = vcm_channel(small_vcm(), 19);
    OfdmFrameSpec spec;
    spec.pilot_separation = 2;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, 5.0, 23);

    Rng rng(29);
    Dictionary dict;
    dict.atoms.resize(32, 48);
    for (Eigen::Index j = 0; j < 48; ++j) {
        for (Eigen::Index i = 0; i < 32; ++i)
            dict.atoms(i, j) = rng.complex_gaussian();
        dict.atoms.col(j) /= dict.atoms.col(j).norm();
    }
    const SparsityRegressor unused = make_regressor(4, 2, 1);
    const ChannelEstimate est = estimate_proposed(frame, dict, unused, 3);

    const ChannelEstimate ls = estimate_ls(frame);
    CMat expected(32, frame.blocks());
    for (Eigen::Index j = 0; j < frame.blocks(); ++j)
        expected.col(j) = reconstruct(dict.atoms, omp(ls.cfr_estimate.col(j), dict.atoms, OmpStop::sparsity(3)));
    CHECK(est.cfr_estimate == expected);
}

TEST_CASE("DFT baseline with s = K reproduces the LS grid") {
    const ChannelRealization chan = vcm_channel(small_vcm(), 31);
    OfdmFrameSpec spec;
    spec.pilot_separation = 2;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, 10.0, 37);
    const ChannelEstimate ls = estimate_ls(frame);
    const ChannelEstimate est = estimate_dft_known_s(frame, 32);
    CHECK((est.cfr_estimate - ls.cfr_estimate).norm() <= 1e-8 * ls.cfr_estimate.norm());
}

TEST_CASE("DFT baseline recovers a one-tap delay channel with s = 1") {
    // single delay tap: flat magnitude, pure frequency ramp
    const Eigen::Index k = 32;
    const CMat f = unitary_dft_matrix(k);
    ChannelRealization chan;
    chan.cir = CMat::Zero(k, 1);
    chan.cir(2, 0) = cxd(1.5, -0.5);
    chan.cfr = f * chan.cir;
    chan.model = "vcm";
    chan.guard_band = 0;
    chan.delay_extent = 3;
    OfdmFrameSpec spec;
    spec.pilot_separation = 1;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, std::numeric_limits<double>::infinity(), 41);
    const ChannelEstimate est = estimate_dft_known_s(frame, 1);
    CHECK(est.mse < 1e-20);
}

TEST_CASE("oracle coefficients solve the normal equations on the true support") {
    const ChannelRealization chan = vcm_channel(small_vcm(), 43);
    OfdmFrameSpec spec;
    spec.pilot_separation = 2;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, 3.0, 47);

    Rng rng(53);
    Dictionary dict;
    dict.atoms.resize(32, 40);
    for (Eigen::Index j = 0; j < 40; ++j) {
        for (Eigen::Index i = 0; i < 32; ++i)
            dict.atoms(i, j) = rng.complex_gaussian();
        dict.atoms.col(j) /= dict.atoms.col(j).norm();
    }
    std::vector<SparseCode> codes(static_cast<std::size_t>(frame.blocks()));
    for (auto &code : codes) {
        code.support = {4, 17, 31};
        code.coefficients = CVec::Ones(3);
    }
    const ChannelEstimate est = estimate_oracle(frame, dict, codes);

    const ChannelEstimate ls = estimate_ls(frame);
    for (Eigen::Index j = 0; j < frame.blocks(); ++j) {
        CMat d_s(32, 3);
        d_s << dict.atoms.col(4), dict.atoms.col(17), dict.atoms.col(31);
        const CVec coeffs = (d_s.adjoint() * d_s).ldlt().solve(d_s.adjoint() * ls.cfr_estimate.col(j));
        CHECK((est.cfr_estimate.col(j) - d_s * coeffs).norm() < 1e-9);
    }
}

TEST_CASE("oracle mse vanishes on noiseless representable channels and dominates known-s") {
    Dictionary dict;
    dict.atoms = unitary_dft_matrix(32);
    ChannelRealization chan;
    chan.cfr = (dict.atoms.col(5) * cxd(1.0, 0.5) + dict.atoms.col(20) * cxd(-0.7, 0.2)).replicate(1, 2);
    chan.cir = unitary_dft_matrix(32).adjoint() * chan.cfr;
    chan.model = "vcm";
    chan.guard_band = 0;
    chan.delay_extent = 32;
    OfdmFrameSpec spec;
    spec.pilot_separation = 1;
    const OfdmFrame frame = ofdm_roundtrip(chan, spec, std::numeric_limits<double>::infinity(), 59);

    std::vector<SparseCode> codes(2);
    for (auto &code : codes) {
        code.support = {5, 20};
        code.coefficients = CVec::Ones(2);
    }
    const ChannelEstimate oracle = estimate_oracle(frame, dict, codes);
    CHECK(oracle.mse < 1e-20);

    const SparsityRegressor unused = make_regressor(4, 2, 1);
    const ChannelEstimate known_s = estimate_proposed(frame, dict, unused, 2);
    CHECK(oracle.mse <= known_s.mse + 1e-18);
}

TEST_CASE("normalized mse ignores guards and global phase") {
    CMat truth = CMat::Random(16, 3);
    CHECK(normalized_mse(truth, truth, 4) == 0.0);

    const cxd phase = std::polar(1.0, 1.234);
    CMat estimate = truth * 0.9;
    const double base = normalized_mse(truth, estimate, 0);
    const double rotated = normalized_mse(CMat(truth * phase), CMat(estimate * phase), 0);
    CHECK(base == doctest::Approx(rotated).epsilon(1e-12));

    // values in the guard rows are invisible to the metric
    CMat estimate2 = truth;
    estimate2.row(0).setConstant(cxd(99.0, 99.0));
    estimate2.row(15).setConstant(cxd(-99.0, 0.0));
    CHECK(normalized_mse(truth, estimate2, 2) == 0.0);
}

TEST_CASE("synthetic spectra have the advertised structure") {
    SUBCASE("no bands means all-vacant and label zero") {
        const SpectrumObservation obs = synthesize_spectrum(0, 100, 5.0, 3);
        CHECK(obs.occupied_band_count.value() == 0);
        for (auto o : obs.occupied)
            CHECK(o == 0);
    }

    SUBCASE("three bands form three separated occupied runs") {
        const SpectrumObservation obs = synthesize_spectrum(3, 200, 30.0, 5);
        CHECK(obs.occupied_band_count.value() == 3);
        Eigen::Index runs = 0;
        for (std::size_t i = 0; i < obs.occupied.size(); ++i)
            if (obs.occupied[i] && (i == 0 || !obs.occupied[i - 1]))
                ++runs;
        CHECK(runs == 3);
        // at 30 dB the occupied bins visibly dominate
        double occ = 0, vac = 0;
        Eigen::Index n_occ = 0, n_vac = 0;
        for (Eigen::Index i = 0; i < obs.bins(); ++i) {
            if (obs.occupied[static_cast<std::size_t>(i)]) {
                occ += obs.psd(i);
                ++n_occ;
            } else {
                vac += obs.psd(i);
                ++n_vac;
            }
        }
        CHECK(occ / n_occ > 100.0 * (vac / n_vac));
    }

    SUBCASE("occupied-to-vacant power ratio tracks the SNR within 0.3 dB") {
        // one large observation: 10^4 bins, half occupied
        SpectrumGeometry geom;
        geom.min_band_width = 50;
        geom.max_band_width = 50;
        const SpectrumObservation obs = synthesize_spectrum(100, 10000, 6.0, 7, geom);
        double occ = 0, vac = 0;
        Eigen::Index n_occ = 0, n_vac = 0;
        for (Eigen::Index i = 0; i < obs.bins(); ++i) {
            if (obs.occupied[static_cast<std::size_t>(i)]) {
                occ += obs.psd(i);
                ++n_occ;
            } else {
                vac += obs.psd(i);
                ++n_vac;
            }
        }
        const double est_snr_db = 10.0 * std::log10(occ / n_occ / (vac / n_vac) - 1.0);
        CHECK(std::abs(est_snr_db - 6.0) <= 0.3);
    }

    SUBCASE("impossible band layouts are rejected") {
        CHECK_THROWS_AS((void)synthesize_spectrum(30, 20, 5.0, 1), ConfigError);
        CHECK_THROWS_AS((void)synthesize_spectrum(20, 100, 5.0, 1), ConfigError); // widths >= 6 cannot fit
    }
}

TEST_CASE("PSD CSV ingest round-trips losslessly and errors with line numbers") {
    const fs::path dir = temp_dir();

    std::vector<SpectrumObservation> observations;
    for (std::uint64_t s = 0; s < 10; ++s)
        observations.push_back(synthesize_spectrum(static_cast<Eigen::Index>(s % 4), 50, 8.0, 100 + s));
    const fs::path file = dir / "roundtrip.csv";
    export_psd_csv(file, observations);

    const PsdFile loaded = ingest_psd(file);
    CHECK(loaded.labeled);
    CHECK(loaded.bins == 50);
    REQUIRE(loaded.observations.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(loaded.observations[i].occupied_band_count == observations[i].occupied_band_count);
        CHECK(loaded.observations[i].psd == observations[i].psd); // bit-exact doubles
    }

    // re-export reproduces the file byte for byte
    const fs::path file2 = dir / "roundtrip2.csv";
    export_psd_csv(file2, loaded.observations);
    std::ifstream a(file, std::ios::binary), b(file2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    SUBCASE("short row names its line") {
        const fs::path bad = dir / "bad_row.csv";
        write_file_atomic(bad, "0,20000,4\n1,2,3,4\n1,2,3\n");
        try {
            (void)ingest_psd(bad);
            FAIL("expected ParseError");
        } catch (const ParseError &e) {
            CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        }
    }

    SUBCASE("non-numeric cell names its line") {
        const fs::path bad = dir / "bad_cell.csv";
        write_file_atomic(bad, "0,20000,3\n1,2,3\n1,oops,3\n");
        try {
            (void)ingest_psd(bad);
            FAIL("expected ParseError");
        } catch (const ParseError &e) {
            const std::string what = e.what();
            CHECK(what.find(":3:") != std::string::npos);
            CHECK(what.find("oops") != std::string::npos);
        }
    }

    SUBCASE("unlabeled files parse without labels") {
        const fs::path plain = dir / "plain.csv";
        write_file_atomic(plain, "852000000,20000,3\n1.5,2.5,3.5\n");
        const PsdFile p = ingest_psd(plain);
        CHECK_FALSE(p.labeled);
        REQUIRE(p.observations.size() == 1);
        CHECK_FALSE(p.observations[0].occupied_band_count.has_value());
        CHECK(p.observations[0].psd(2) == 3.5);
    }
}

TEST_CASE("spectrum sparsity estimation clamps negative outputs to zero") {
    SpectrumObservation obs = synthesize_spectrum(0, 40, 5.0, 9);
    SparsityRegressor m = make_regressor(feature_dimension(40, 40, FeatureEncoding::TransformSorted), 2, 1);
    m.hidden.setZero();
    m.output.setZero();
    m.label_mean = -0.7;
    m.label_scale = 1.0;
    m.clamp_max = 40;
    m.feature_encoding = "transform-sorted";
    m.feature_transform = "identity";
    CHECK(estimate_spectrum_sparsity(obs, nullptr, m) == 0);
}
