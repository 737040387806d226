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

#include "cskit/common.hpp"

#include <set>

using namespace cskit;

TEST_CASE("seed derivation separates stages and indices") {
    const std::uint64_t master = 42;
    CHECK(derive_seed(master, "a", 0) != derive_seed(master, "b", 0));
    CHECK(derive_seed(master, "a", 0) != derive_seed(master, "a", 1));
    CHECK(derive_seed(master, "a", 7) == derive_seed(master, "a", 7));
    CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
}

TEST_CASE("rng streams are reproducible") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.gaussian() == b.gaussian());
    }
}

TEST_CASE("uniform_int respects bounds") {
    Rng rng(9);
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-3, 5);
        CHECK(v >= -3);
        CHECK(v <= 5);
    }
    CHECK(rng.uniform_int(7, 7) == 7);
}

TEST_CASE("gaussian moments are sane") {
    Rng rng(5);
    double sum = 0, sum2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("complex gaussian variance parameter") {
    Rng rng(6);
    double acc = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        acc += std::norm(rng.complex_gaussian(2.5));
    CHECK(acc / n == doctest::Approx(2.5).epsilon(0.03));
}

TEST_CASE("choose_distinct returns distinct in-range values") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto picks = rng.choose_distinct(20, 7);
        std::set<std::size_t> seen(picks.begin(), picks.end());
        CHECK(seen.size() == 7);
        for (std::size_t v : picks)
            CHECK(v < 20);
    }
    CHECK_THROWS_AS((void)rng.choose_distinct(3, 4), std::invalid_argument);
}

TEST_CASE("unitary DFT preserves norms to 1e-10") {
    for (Eigen::Index k : {1, 2, 16, 64, 128}) {
        const CMat f = unitary_dft_matrix(k);
        Rng rng(static_cast<std::uint64_t>(k));
        CVec v(k);
        for (Eigen::Index i = 0; i < k; ++i)
            v(i) = rng.complex_gaussian();
        CHECK(std::abs((f * v).norm() - v.norm()) <= 1e-10 * v.norm());
        CHECK((f.adjoint() * (f * v) - v).norm() <= 1e-10 * v.norm());
    }
}
