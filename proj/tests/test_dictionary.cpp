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

#include "cskit/dictionary.hpp"

#include <algorithm>

using namespace cskit;

namespace {

CMat random_unit_atoms(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
    Rng rng(seed);
    CMat d(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i)
            d(i, j) = rng.complex_gaussian();
        d.col(j) /= d.col(j).norm();
    }
    return d;
}

CMat random_signals(Eigen::Index n, Eigen::Index l, std::uint64_t seed) {
    Rng rng(seed);
    CMat y(n, l);
    for (Eigen::Index c = 0; c < l; ++c)
        for (Eigen::Index r = 0; r < n; ++r)
            y(r, c) = rng.complex_gaussian();
    return y;
}

// Exactly s-sparse signals over a ground-truth dictionary.
CMat sparse_signals(const CMat &dict, Eigen::Index l, Eigen::Index s, std::uint64_t seed) {
    Rng rng(seed);
    CMat y = CMat::Zero(dict.rows(), l);
    for (Eigen::Index c = 0; c < l; ++c) {
        const auto support = rng.choose_distinct(static_cast<std::size_t>(dict.cols()), static_cast<std::size_t>(s));
        for (std::size_t i : support) {
            const double mag = rng.uniform(0.5, 1.5);
            const double ph = rng.uniform(0.0, 6.283185307179586);
            y.col(c) += dict.col(static_cast<Eigen::Index>(i)) * (mag * cxd(std::cos(ph), std::sin(ph)));
        }
    }
    return y;
}

} // namespace

TEST_CASE("multidomain init concatenates exactly-fitting domain sets") {
    TrainingCorpus corpus;
    corpus.angle_strong = random_signals(8, 10, 1);
    corpus.delay_strong = random_signals(8, 10, 2);
    corpus.doppler_strong = random_signals(8, 10, 3);
    const Dictionary dict = multidomain_init(corpus, 30);
    REQUIRE(dict.atom_count() == 30);
    CHECK(dict.provenance.init_scheme == "multidomain");
    for (Eigen::Index j = 0; j < 30; ++j)
        CHECK(dict.atoms.col(j).norm() == doctest::Approx(1.0).epsilon(1e-10));
    // first atoms come from the angle set, normalized
    CHECK((dict.atoms.col(0) - corpus.angle_strong.col(0) / corpus.angle_strong.col(0).norm()).norm() < 1e-12);
}

TEST_CASE("multidomain init selects a balanced subset of 256 atoms") {
    // Tag each set by the sign pattern of a reserved coordinate so the
    // provenance of every atom is recoverable.
    TrainingCorpus corpus;
    corpus.angle_strong = random_signals(12, 300, 4);
    corpus.delay_strong = random_signals(12, 300, 5);
    corpus.doppler_strong = random_signals(12, 300, 6);
    corpus.angle_strong.row(0) = Eigen::RowVectorXcd::Constant(300, cxd(100.0, 0.0));
    corpus.delay_strong.row(0) = Eigen::RowVectorXcd::Constant(300, cxd(0.0, 100.0));
    corpus.doppler_strong.row(0) = Eigen::RowVectorXcd::Constant(300, cxd(-100.0, 0.0));
    const Dictionary dict = multidomain_init(corpus, 256);
    REQUIRE(dict.atom_count() == 256);
    Eigen::Index from_angle = 0, from_delay = 0, from_doppler = 0;
    for (Eigen::Index j = 0; j < 256; ++j) {
        const cxd tag = dict.atoms(0, j);
        if (tag.real() > 0)
            ++from_angle;
        else if (tag.imag() > 0)
            ++from_delay;
        else
            ++from_doppler;
    }
    CHECK(from_angle == 86); // 256 = 86 + 85 + 85, remainder to the angle set
    CHECK(from_delay == 85);
    CHECK(from_doppler == 85);
}

TEST_CASE("multidomain init falls back to the general set and errors when exhausted") {
    TrainingCorpus corpus;
    corpus.angle_strong = random_signals(8, 4, 7);
    corpus.delay_strong = random_signals(8, 4, 8);
    corpus.doppler_strong = random_signals(8, 4, 9);
    corpus.general = random_signals(8, 20, 10);
    const Dictionary dict = multidomain_init(corpus, 24);
    CHECK(dict.atom_count() == 24);

    corpus.general = CMat();
    CHECK_THROWS_AS((void)multidomain_init(corpus, 24), ConfigError);
}

TEST_CASE("ksvd learns back an exactly sparse corpus from a perturbed start") {
    const Eigen::Index n = 16, k = 32, s = 3, l = 800;
    const CMat truth = random_unit_atoms(n, k, 20);
    const CMat y = sparse_signals(truth, l, s, 21);

    Rng rng(22);
    Dictionary init;
    init.atoms = truth;
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i)
            init.atoms(i, j) += 0.05 * rng.complex_gaussian();
        init.atoms.col(j) /= init.atoms.col(j).norm();
    }

    const KsvdResult result = ksvd(y, init, s, 20);
    REQUIRE(result.objective.size() == 21);
    CHECK(std::sqrt(result.objective.back()) <= 1e-3 * y.norm());
    for (std::size_t i = 1; i < result.objective.size(); ++i)
        CHECK(result.objective[i] <= result.objective[i - 1] * (1.0 + 1e-9) + 1e-30);
    for (Eigen::Index j = 0; j < k; ++j)
        CHECK(result.dictionary.atoms.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ksvd with zero iterations returns the normalized start unchanged") {
    Dictionary init;
    init.atoms = random_signals(8, 12, 30); // not normalized
    const KsvdResult result = ksvd(random_signals(8, 50, 31), init, 2, 0);
    CHECK(result.objective.empty());
    for (Eigen::Index j = 0; j < 12; ++j) {
        CHECK(result.dictionary.atoms.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
        const CVec expected = init.atoms.col(j) / init.atoms.col(j).norm();
        CHECK((result.dictionary.atoms.col(j) - expected).norm() < 1e-12);
    }
}

TEST_CASE("ksvd end-to-end representation error does not exceed the initial one") {
    const Eigen::Index n = 12, k = 24, s = 3, l = 300;
    const CMat y = random_signals(n, l, 40);
    Dictionary init;
    init.atoms = random_unit_atoms(n, k, 41);
    const KsvdResult result = ksvd(y, init, s, 8);

    auto representation_error = [&](const CMat &atoms) {
        double acc = 0;
        for (Eigen::Index c = 0; c < l; ++c) {
            const SparseCode code = omp(y.col(c), atoms, OmpStop::sparsity(s));
            acc += code.residual_norm * code.residual_norm;
        }
        return acc;
    };
    CHECK(representation_error(result.dictionary.atoms) <= representation_error(init.atoms) * (1.0 + 1e-9));
}

TEST_CASE("ksvd tolerates a degenerate corpus of identical columns") {
    CMat y(6, 40);
    Rng rng(50);
    CVec col(6);
    for (Eigen::Index i = 0; i < 6; ++i)
        col(i) = rng.complex_gaussian();
    for (Eigen::Index c = 0; c < 40; ++c)
        y.col(c) = col;
    Dictionary init;
    init.atoms = random_unit_atoms(6, 8, 51);
    const KsvdResult result = ksvd(y, init, 2, 5);
    for (std::size_t i = 1; i < result.objective.size(); ++i)
        CHECK(result.objective[i] <= result.objective[i - 1] * (1.0 + 1e-9) + 1e-30);
    CHECK(result.objective.back() <= 1e-18 * y.squaredNorm() + 1e-20);
}

TEST_CASE("coherence of an orthonormal basis is zero and of a duplicate pair is one") {
    Dictionary ortho;
    ortho.atoms = unitary_dft_matrix(8);
    CHECK(coherence(ortho) < 1e-12);

    Dictionary dup;
    dup.atoms = random_unit_atoms(8, 5, 60);
    dup.atoms.col(4) = dup.atoms.col(1);
    CHECK(coherence(dup) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coherence matches the brute-force pairwise maximum") {
    Dictionary dict;
    dict.atoms = random_unit_atoms(16, 32, 61);
    double expected = 0;
    const CMat gram = dict.atoms.adjoint() * dict.atoms;
    for (Eigen::Index i = 0; i < 32; ++i)
        for (Eigen::Index j = 0; j < 32; ++j)
            if (i != j)
                expected = std::max(expected, std::abs(gram(i, j)));
    CHECK(coherence(dict) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("atom DFT profile of the DFT basis itself is all ones") {
    Dictionary dict;
    dict.atoms = unitary_dft_matrix(16);
    for (Eigen::Index v : atom_dft_profile(dict, 0.99))
        CHECK(v == 1);
}

TEST_CASE("atom DFT profile of an impulse atom matches a direct DFT count") {
    Dictionary dict;
    dict.atoms = CMat::Zero(16, 16);
    dict.atoms(3, 0) = 1.0; // impulse: flat spectrum
    for (Eigen::Index j = 1; j < 16; ++j)
        dict.atoms(j % 16, j) = 1.0;
    const auto profile = atom_dft_profile(dict, 0.95);
    // independent oracle: the impulse spreads evenly over all 16 bins
    const Eigen::Index expected = dft_sparsity(dict.atoms.col(0), 0.95, unitary_dft_matrix(16));
    CHECK(profile[0] == expected);
    CHECK(expected == 16); // 16 equal bins, 95% needs all but 0.8 of them, rounded up by the slack rule
}
