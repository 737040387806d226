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

#include "cskit/dictionary.hpp"

#include <cmath>
#include <iostream>

namespace cskit {

namespace {

constexpr double kDuplicateCoherence = 1.0 - 1e-8;
constexpr double kPowerIterTol = 1e-10;

bool near_duplicate(const CMat &atoms, Eigen::Index filled, const CVec &candidate) {
    for (Eigen::Index j = 0; j < filled; ++j)
        if (std::abs(atoms.col(j).dot(candidate)) > kDuplicateCoherence)
            return true;
    return false;
}

// Evenly-strided column picks so a subset stays representative of its set.
std::vector<Eigen::Index> strided_indices(Eigen::Index available, Eigen::Index take) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(take));
    for (Eigen::Index i = 0; i < take; ++i)
        idx.push_back(i * available / take);
    return idx;
}

} // namespace

Dictionary multidomain_init(const TrainingCorpus &corpus, Eigen::Index k) {
    if (k < 1)
        throw ConfigError("multidomain_init: atom count must be positive");
    const CMat *sets[3] = {&corpus.angle_strong, &corpus.delay_strong, &corpus.doppler_strong};
    const Eigen::Index n = corpus.general.rows() > 0 ? corpus.general.rows() : sets[0]->rows();
    for (const CMat *s : sets)
        if (s->rows() != n && s->cols() > 0)
            throw ConfigError("multidomain_init: corpus sets disagree on signal dimension");
    if (corpus.general.cols() > 0 && corpus.general.rows() != n)
        throw ConfigError("multidomain_init: corpus sets disagree on signal dimension");

    // Balanced quotas: equal thirds of k, remainder to angle then delay.
    Eigen::Index quota[3];
    const Eigen::Index base = k / 3;
    const Eigen::Index rem = k % 3;
    for (int i = 0; i < 3; ++i)
        quota[i] = base + (i < rem ? 1 : 0);
    // A short set hands its shortfall to the others (angle, delay, doppler order).
    for (int round = 0; round < 3; ++round) {
        for (int i = 0; i < 3; ++i) {
            const Eigen::Index have = sets[i]->cols();
            if (quota[i] > have) {
                Eigen::Index spill = quota[i] - have;
                quota[i] = have;
                for (int j = 0; j < 3 && spill > 0; ++j) {
                    if (j == i)
                        continue;
                    const Eigen::Index room = sets[j]->cols() - quota[j];
                    const Eigen::Index add = std::min(room, spill);
                    quota[j] += add;
                    spill -= add;
                }
            }
        }
    }

    CMat atoms(n, k);
    Eigen::Index filled = 0;
    auto try_add = [&](const CVec &col) {
        if (filled >= k)
            return;
        const double nm = col.norm();
        if (nm <= 0.0)
            return;
        CVec unit = col / nm;
        if (near_duplicate(atoms, filled, unit))
            return;
        atoms.col(filled++) = unit;
    };

    for (int i = 0; i < 3; ++i)
        for (Eigen::Index idx : strided_indices(sets[i]->cols(), quota[i]))
            try_add(sets[i]->col(idx));

    // Backfill: unused domain columns first, then the general set.
    if (filled < k) {
        for (int i = 0; i < 3 && filled < k; ++i)
            for (Eigen::Index c = 0; c < sets[i]->cols() && filled < k; ++c)
                try_add(sets[i]->col(c));
        for (Eigen::Index c = 0; c < corpus.general.cols() && filled < k; ++c)
            try_add(corpus.general.col(c));
    }
    if (filled < k)
        throw ConfigError("multidomain_init: corpus cannot supply " + std::to_string(k) + " distinct atoms (got " +
                          std::to_string(filled) + ")");

    Dictionary dict;
    dict.atoms = std::move(atoms);
    dict.provenance.init_scheme = "multidomain";
    return dict;
}

namespace {

struct ColumnCode {
    std::vector<Eigen::Index> support;
    CVec coeffs;
};

CVec column_residual(const CMat &y, Eigen::Index c, const CMat &d, const ColumnCode &code) {
    CVec r = y.col(c);
    for (std::size_t i = 0; i < code.support.size(); ++i)
        r -= d.col(code.support[i]) * code.coeffs(static_cast<Eigen::Index>(i));
    return r;
}

// Dominant singular triplet of e by power iteration on e e^H, warm-started
// from the current atom. Returns sigma (0 means degenerate input).
double dominant_direction(const CMat &e, CVec &u) {
    double sigma_prev = 0.0;
    for (int it = 0; it < 200; ++it) {
        CVec r = e.adjoint() * u;
        const double sigma = r.norm();
        if (sigma == 0.0)
            return 0.0;
        CVec u_next = e * r;
        const double un = u_next.norm();
        if (un == 0.0)
            return 0.0;
        u_next /= un;
        const double delta = (u_next - u).norm();
        u = u_next;
        if (delta < kPowerIterTol && std::abs(sigma - sigma_prev) <= kPowerIterTol * sigma)
            return sigma;
        sigma_prev = sigma;
    }
    return sigma_prev;
}

} // namespace

KsvdResult ksvd(const CMat &training, const Dictionary &init, Eigen::Index s, Eigen::Index num_iterations) {
    const Eigen::Index n = training.rows();
    const Eigen::Index l = training.cols();
    const Eigen::Index k = init.atom_count();
    if (init.signal_dim() != n)
        throw ConfigError("ksvd: dictionary/training dimension mismatch");
    if (s < 1 || s > k)
        throw ConfigError("ksvd: sparsity must be in [1, atom count]");
    if (num_iterations < 0)
        throw ConfigError("ksvd: iteration count must be non-negative");

    KsvdResult result;
    CMat d = init.atoms;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double nm = d.col(j).norm();
        if (nm <= 0.0)
            throw ConfigError("ksvd: initial dictionary has a zero atom");
        d.col(j) /= nm;
    }

    result.dictionary.provenance = init.provenance;
    result.dictionary.provenance.iterations = num_iterations;
    result.dictionary.provenance.target_sparsity = s;
    if (num_iterations == 0) {
        result.dictionary.atoms = std::move(d);
        return result;
    }

    std::vector<ColumnCode> codes(static_cast<std::size_t>(l));
    std::vector<double> res2(static_cast<std::size_t>(l), 0.0);

    for (Eigen::Index iter = 1; iter <= num_iterations; ++iter) {
        // (a) Sparse coding. A fresh OMP code replaces the previous one only
        // if it fits the column at least as well, so this stage cannot raise
        // the objective.
        for (Eigen::Index c = 0; c < l; ++c) {
            SparseCode cand = omp(training.col(c), d, OmpStop::sparsity(s));
            auto &code = codes[static_cast<std::size_t>(c)];
            bool accept = true;
            if (iter > 1) {
                const double prev = column_residual(training, c, d, code).squaredNorm();
                accept = cand.residual_norm * cand.residual_norm <= prev;
                if (!accept)
                    res2[static_cast<std::size_t>(c)] = prev;
            }
            if (accept) {
                code.support = std::move(cand.support);
                code.coeffs = std::move(cand.coefficients);
                res2[static_cast<std::size_t>(c)] = cand.residual_norm * cand.residual_norm;
            }
        }
        if (iter == 1) {
            double obj0 = 0.0;
            for (double v : res2)
                obj0 += v;
            result.objective.push_back(obj0);
        }

        // (b) Sequential atom updates.
        for (Eigen::Index j = 0; j < k; ++j) {
            std::vector<Eigen::Index> users;
            std::vector<Eigen::Index> slot; // position of atom j inside each user's support
            for (Eigen::Index c = 0; c < l; ++c) {
                const auto &sup = codes[static_cast<std::size_t>(c)].support;
                for (std::size_t p = 0; p < sup.size(); ++p)
                    if (sup[p] == j) {
                        users.push_back(c);
                        slot.push_back(static_cast<Eigen::Index>(p));
                        break;
                    }
            }

            if (users.empty()) {
                // Dead atom: replace with the worst-represented training column.
                Eigen::Index worst = -1;
                double worst_err = -1.0;
                for (Eigen::Index c = 0; c < l; ++c)
                    if (res2[static_cast<std::size_t>(c)] > worst_err && training.col(c).norm() > 0.0) {
                        worst_err = res2[static_cast<std::size_t>(c)];
                        worst = c;
                    }
                if (worst >= 0) {
                    CVec cand = training.col(worst) / training.col(worst).norm();
                    bool dup = false;
                    for (Eigen::Index m = 0; m < k && !dup; ++m)
                        dup = m != j && std::abs(d.col(m).dot(cand)) > kDuplicateCoherence;
                    if (!dup) {
                        d.col(j) = cand;
                        std::cerr << "ksvd: iteration " << iter << ": replaced unused atom " << j
                                  << " with training column " << worst << "\n";
                    }
                }
                continue;
            }

            // Restricted residual with atom j's contribution added back.
            CMat e(n, static_cast<Eigen::Index>(users.size()));
            CVec w_old(static_cast<Eigen::Index>(users.size()));
            for (std::size_t uidx = 0; uidx < users.size(); ++uidx) {
                const Eigen::Index c = users[uidx];
                const auto &code = codes[static_cast<std::size_t>(c)];
                const cxd wj = code.coeffs(slot[uidx]);
                e.col(static_cast<Eigen::Index>(uidx)) = column_residual(training, c, d, code) + d.col(j) * wj;
                w_old(static_cast<Eigen::Index>(uidx)) = wj;
            }
            const double cur_err = (e - d.col(j) * w_old.transpose()).squaredNorm();

            CVec u = d.col(j);
            const double sigma = dominant_direction(e, u);
            if (sigma <= 0.0)
                continue;
            u /= u.norm(); // exact renormalization
            const Eigen::RowVectorXcd w_new = u.adjoint() * e;
            const double cand_err = e.squaredNorm() - w_new.squaredNorm();
            if (cand_err > cur_err)
                continue; // power iteration did not beat the current pair
            // Reject updates that would collapse two atoms into one.
            bool dup = false;
            for (Eigen::Index m = 0; m < k && !dup; ++m)
                dup = m != j && std::abs(d.col(m).dot(u)) > kDuplicateCoherence;
            if (dup)
                continue;

            d.col(j) = u;
            for (std::size_t uidx = 0; uidx < users.size(); ++uidx) {
                const Eigen::Index c = users[uidx];
                codes[static_cast<std::size_t>(c)].coeffs(slot[uidx]) = w_new(static_cast<Eigen::Index>(uidx));
                res2[static_cast<std::size_t>(c)] =
                    column_residual(training, c, d, codes[static_cast<std::size_t>(c)]).squaredNorm();
            }
        }

        double obj = 0.0;
        for (Eigen::Index c = 0; c < l; ++c)
            obj += column_residual(training, c, d, codes[static_cast<std::size_t>(c)]).squaredNorm();
        result.objective.push_back(obj);
    }

    result.dictionary.atoms = std::move(d);
    return result;
}

double coherence(const Dictionary &dict) {
    const CMat &d = dict.atoms;
    double best = 0.0;
    for (Eigen::Index i = 0; i < d.cols(); ++i)
        for (Eigen::Index j = i + 1; j < d.cols(); ++j)
            best = std::max(best, std::abs(d.col(i).dot(d.col(j))));
    return best;
}

std::vector<Eigen::Index> atom_dft_profile(const Dictionary &dict, double energy_fraction) {
    const CMat f = unitary_dft_matrix(dict.signal_dim());
    std::vector<Eigen::Index> profile;
    profile.reserve(static_cast<std::size_t>(dict.atom_count()));
    for (Eigen::Index j = 0; j < dict.atom_count(); ++j)
        profile.push_back(dft_sparsity(dict.atoms.col(j), energy_fraction, f));
    return profile;
}

} // namespace cskit
