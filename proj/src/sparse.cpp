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

#include "cskit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace cskit {

namespace {

constexpr double kPivotTolerance = 1e-12;

// Least squares on the selected columns. Normal equations first; on a pivot
// below tolerance (numerically dependent support) re-solve with a
// rank-revealing decomposition.
CVec solve_support(const CMat &atoms_s, const CVec &y) {
    const CMat gram = atoms_s.adjoint() * atoms_s;
    const CVec rhs = atoms_s.adjoint() * y;
    Eigen::LDLT<CMat> ldlt(gram);
    bool degenerate = ldlt.info() != Eigen::Success;
    if (!degenerate) {
        const auto d = ldlt.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        const double dmin = d.cwiseAbs().minCoeff();
        degenerate = !(dmin > kPivotTolerance * std::max(dmax, 1.0));
    }
    if (degenerate) {
        Eigen::CompleteOrthogonalDecomposition<CMat> cod(atoms_s);
        cod.setThreshold(kPivotTolerance);
        return cod.solve(y);
    }
    return ldlt.solve(rhs);
}

} // namespace

SparseCode omp(const CVec &y, const CMat &atoms, const OmpStop &stop) {
    const Eigen::Index n = atoms.rows();
    const Eigen::Index k = atoms.cols();
    if (y.size() != n)
        throw std::invalid_argument("omp: signal dimension does not match atom dimension");
    if (!stop.max_sparsity && !stop.tolerance)
        throw std::invalid_argument("omp: no stopping rule given");
    Eigen::Index s_max = k;
    if (stop.max_sparsity) {
        if (*stop.max_sparsity < 0 || *stop.max_sparsity > k)
            throw std::invalid_argument("omp: max_sparsity outside [0, column count]");
        s_max = *stop.max_sparsity;
    }

    SparseCode code;
    const double y_norm = y.norm();
    code.residual_norm = y_norm;
    if (y_norm == 0.0 || (stop.tolerance && y_norm <= *stop.tolerance))
        return code;

    CVec residual = y;
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    CMat selected(n, 0);

    while (code.sparsity() < s_max) {
        const CVec corr = atoms.adjoint() * residual;
        Eigen::Index best = -1;
        double best_mag = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (used[static_cast<std::size_t>(i)])
                continue;
            const double mag = std::abs(corr(i));
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        // Residual already orthogonal to every remaining atom: nothing to gain.
        if (best < 0 || best_mag <= 1e-13 * y_norm)
            break;

        used[static_cast<std::size_t>(best)] = 1;
        code.support.push_back(best);
        selected.conservativeResize(Eigen::NoChange, selected.cols() + 1);
        selected.col(selected.cols() - 1) = atoms.col(best);

        code.coefficients = solve_support(selected, y);
        residual = y - selected * code.coefficients;
        code.residual_norm = residual.norm();
        code.residual_history.push_back(code.residual_norm);

        if (stop.tolerance && code.residual_norm <= *stop.tolerance)
            break;
    }
    return code;
}

CVec reconstruct(const CMat &atoms, const SparseCode &code) {
    CVec out = CVec::Zero(atoms.rows());
    if (code.coefficients.size() != code.sparsity())
        throw std::invalid_argument("reconstruct: support/coefficient length mismatch");
    for (Eigen::Index i = 0; i < code.sparsity(); ++i) {
        const Eigen::Index idx = code.support[static_cast<std::size_t>(i)];
        if (idx < 0 || idx >= atoms.cols())
            throw std::out_of_range("reconstruct: support index outside dictionary");
        out += atoms.col(idx) * code.coefficients(i);
    }
    return out;
}

Eigen::Index dft_sparsity(const CVec &y, double energy_fraction) {
    return dft_sparsity(y, energy_fraction, unitary_dft_matrix(y.size()));
}

Eigen::Index dft_sparsity(const CVec &y, double energy_fraction, const CMat &dft) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw std::invalid_argument("dft_sparsity: energy fraction must be in (0, 1]");
    if (dft.rows() != y.size())
        throw std::invalid_argument("dft_sparsity: DFT size mismatch");
    const double total = y.squaredNorm();
    if (total == 0.0)
        return 0;

    // Coefficients of the expansion y = F w; unitarity keeps total energy.
    const CVec w = dft.adjoint() * y;
    std::vector<double> energy(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i)
        energy[static_cast<std::size_t>(i)] = std::norm(w(i));
    std::sort(energy.begin(), energy.end(), std::greater<double>());

    // Absolute slack of 1e-12 * total absorbs round-off: a signal whose energy
    // is entirely in j bins must report j even at energy_fraction = 1.
    const double target = energy_fraction * total - 1e-12 * total;
    double cum = 0.0;
    Eigen::Index count = 0;
    for (double e : energy) {
        cum += e;
        ++count;
        if (cum >= target)
            return count;
    }
    return static_cast<Eigen::Index>(energy.size());
}

MeasurementMatrix gaussian_measurement(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    if (m < 1 || n < 1 || m >= n)
        throw std::invalid_argument("gaussian_measurement: need 1 <= m < n");
    Rng rng(seed);
    CMat phi(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            phi(i, j) = rng.complex_gaussian(1.0 / static_cast<double>(m));
    return {std::move(phi), "gaussian"};
}

bool satisfies_measurement_guideline(Eigen::Index m, Eigen::Index n, Eigen::Index s, double c) {
    if (m < 1 || m >= n || s < 1)
        return false;
    return static_cast<double>(m) >= c * static_cast<double>(s) * std::log(static_cast<double>(n) / static_cast<double>(m));
}

SparseCode compressive_recover(const CVec &y_c, const MeasurementMatrix &phi, const CMat &psi, Eigen::Index s) {
    if (phi.phi.rows() != y_c.size())
        throw std::invalid_argument("compressive_recover: measurement length mismatch");
    if (phi.phi.cols() != psi.rows())
        throw std::invalid_argument("compressive_recover: Phi/Psi dimension mismatch");
    if (s < 0 || s > psi.cols())
        throw std::invalid_argument("compressive_recover: sparsity outside [0, atom count]");
    if (s > phi.measurements())
        std::cerr << "warning: compressive_recover: s=" << s << " exceeds m=" << phi.measurements()
                  << ", beyond the recovery guarantee\n";

    CMat composed = phi.phi * psi;
    RVec norms(composed.cols());
    for (Eigen::Index j = 0; j < composed.cols(); ++j) {
        const double nj = composed.col(j).norm();
        norms(j) = nj;
        if (nj > 0.0)
            composed.col(j) /= nj;
    }

    SparseCode code = omp(y_c, composed, OmpStop::sparsity(s));
    for (Eigen::Index i = 0; i < code.sparsity(); ++i) {
        const double nj = norms(code.support[static_cast<std::size_t>(i)]);
        if (nj > 0.0)
            code.coefficients(i) /= nj;
    }
    return code;
}

} // namespace cskit
