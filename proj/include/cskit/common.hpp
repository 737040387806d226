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

#ifndef CSKIT_COMMON_HPP
#define CSKIT_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cskit {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto process exit codes.
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing and seed derivation
// ---------------------------------------------------------------------------

// FNV-1a 64-bit. Used for config/artifact fingerprints, not cryptography.
std::uint64_t fnv1a64(const void *data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s);

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed fan-out: every stochastic stage receives
// derive_seed(master, stage_tag, index). Reordering or parallelizing stages
// cannot change any stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

// ---------------------------------------------------------------------------
// Deterministic random source
//
// All draws are synthesized from raw mt19937_64 output with explicit
// arithmetic, so a (config, seed) pair pins the byte-exact result
// independently of the standard library's distribution internals.
// ---------------------------------------------------------------------------

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [lo, hi], inclusive. Rejection sampling, no modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Standard normal via Box-Muller.
    double gaussian();

    // Circularly-symmetric complex normal with E|z|^2 = variance.
    cxd complex_gaussian(double variance = 1.0);

    // `count` distinct values from [0, n), in draw order. Partial Fisher-Yates.
    std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t count);

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Unitary DFT
// ---------------------------------------------------------------------------

// K x K unitary DFT matrix: F(a,b) = exp(-2*pi*i*a*b/K) / sqrt(K).
// Satisfies F^H F = I, so ||F v|| = ||v|| for all v.
CMat unitary_dft_matrix(Eigen::Index k);

} // namespace cskit

#endif
