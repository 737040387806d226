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

#ifndef CSKIT_SPARSE_HPP
#define CSKIT_SPARSE_HPP

#include "cskit/common.hpp"

#include <optional>

namespace cskit {

// Sparse representation of a signal: ordered support indices (selection order)
// with the matching complex coefficients and the final residual 2-norm.
// residual_history(i) is the residual norm after i+1 selections.
struct SparseCode {
    std::vector<Eigen::Index> support;
    CVec coefficients;
    double residual_norm = 0.0;
    std::vector<double> residual_history;

    Eigen::Index sparsity() const { return static_cast<Eigen::Index>(support.size()); }
};

// Stopping rule for OMP: run until `max_sparsity` atoms are selected or the
// residual norm drops to `tolerance`, whichever happens first. At least one
// of the two must be set.
struct OmpStop {
    std::optional<Eigen::Index> max_sparsity;
    std::optional<double> tolerance;

    static OmpStop sparsity(Eigen::Index s) { return {s, std::nullopt}; }
    static OmpStop residual(double eps) { return {std::nullopt, eps}; }
};

// Orthogonal matching pursuit over a matrix of unit-norm atoms.
//
// Greedy selection by maximal |<residual, atom>| (lowest index wins exact
// ties); coefficients are re-solved by least squares on the accumulated
// support each iteration, so the residual stays orthogonal to the selected
// atoms. Least squares goes through the normal equations (pivot tolerance
// 1e-12) and falls back to a rank-revealing pseudoinverse on deficiency.
//
// A zero input yields an empty code with residual 0.
SparseCode omp(const CVec &y, const CMat &atoms, const OmpStop &stop);

// ŷ = sum_i atoms[:, support(i)] * coefficients(i)
CVec reconstruct(const CMat &atoms, const SparseCode &code);

// Smallest number of largest-magnitude unitary-DFT coefficients of y whose
// cumulative energy reaches energy_fraction * ||y||^2. Returns 0 for y = 0.
Eigen::Index dft_sparsity(const CVec &y, double energy_fraction);

// Same, reusing a precomputed unitary DFT matrix of matching size.
Eigen::Index dft_sparsity(const CVec &y, double energy_fraction, const CMat &dft);

// Compressive measurement operator y_c = Phi * y, m < n.
struct MeasurementMatrix {
    CMat phi;
    std::string scheme; // "gaussian" unless constructed otherwise

    Eigen::Index measurements() const { return phi.rows(); }
    Eigen::Index dimension() const { return phi.cols(); }
};

// i.i.d. CN(0, 1/m) entries, so columns have unit expected norm.
MeasurementMatrix gaussian_measurement(Eigen::Index m, Eigen::Index n, std::uint64_t seed);

// Recovery guideline m >= c * s * log(n / m). Advisory only, never enforced.
bool satisfies_measurement_guideline(Eigen::Index m, Eigen::Index n, Eigen::Index s, double c = 2.0);

// Sparse recovery from compressed measurements: OMP over the composed matrix
// Phi * Psi with per-column renormalization. The returned code is expressed
// in Psi coordinates (coefficients already rescaled), so the reconstruction
// is Psi * w. residual_norm is measured in the compressed domain.
// s > m is allowed but logs a warning (beyond the recovery guarantee).
SparseCode compressive_recover(const CVec &y_c, const MeasurementMatrix &phi, const CMat &psi, Eigen::Index s);

} // namespace cskit

#endif
