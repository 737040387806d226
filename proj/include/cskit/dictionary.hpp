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

#ifndef CSKIT_DICTIONARY_HPP
#define CSKIT_DICTIONARY_HPP

#include "cskit/common.hpp"
#include "cskit/sparse.hpp"

namespace cskit {

struct DictionaryProvenance {
    std::string init_scheme;  // "multidomain", "data-columns", ...
    Eigen::Index iterations = 0;
    Eigen::Index target_sparsity = 0;
    std::string training_set_id;
};

// Redundant complex sparsifying transform. Atoms are the columns, each with
// unit Euclidean norm.
struct Dictionary {
    CMat atoms;
    DictionaryProvenance provenance;

    Eigen::Index signal_dim() const { return atoms.rows(); }
    Eigen::Index atom_count() const { return atoms.cols(); }
};

// Training signals, all sharing the row dimension: a general set plus three
// subsets that are strongly sparse in the angle, delay, and Doppler domains.
struct TrainingCorpus {
    CMat general;
    CMat angle_strong;
    CMat delay_strong;
    CMat doppler_strong;
};

// Initial dictionary from the concatenation [angle | delay | doppler],
// normalized to unit atoms. If the concatenation exceeds k columns a balanced
// subset is taken (equal thirds; remainders go to angle, then delay, with
// evenly-strided selection inside each set). If it falls short, the remainder
// is drawn from the general set. Near-duplicate candidates are skipped.
// Throws ConfigError when the corpus cannot supply k distinct atoms.
Dictionary multidomain_init(const TrainingCorpus &corpus, Eigen::Index k);

struct KsvdResult {
    Dictionary dictionary;
    // objective[0] is ||Y - D0 W0||_F^2 after the first sparse-coding pass;
    // objective[i] for i >= 1 is the value at the end of iteration i.
    // Non-increasing by construction.
    std::vector<double> objective;
};

// K-SVD: alternate (a) OMP sparse coding of every training column at max
// sparsity s and (b) sequential atom updates via the dominant singular
// triplet of the restricted residual (power iteration, tolerance 1e-10).
// Both stages keep the previous solution whenever a candidate would not
// improve it, so the recorded objective never increases. Atoms that no
// signal uses are replaced by the worst-represented training column (logged).
KsvdResult ksvd(const CMat &training, const Dictionary &init, Eigen::Index s, Eigen::Index num_iterations);

// max_{i != j} |<D_i, D_j>|
double coherence(const Dictionary &dict);

// Per-atom DFT-domain sparsity at the given energy fraction.
std::vector<Eigen::Index> atom_dft_profile(const Dictionary &dict, double energy_fraction);

} // namespace cskit

#endif
