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

#ifndef CSKIT_IO_HPP
#define CSKIT_IO_HPP

#include "cskit/channel.hpp"
#include "cskit/dictionary.hpp"
#include "cskit/estimator.hpp"

#include <filesystem>

namespace cskit {

// Binary layouts are little-endian; all floating-point payloads are IEEE-754
// 64-bit, so load/save round-trips are bit-exact. See README for the field
// order of each format.

// --- channel realization files (magic "CSKCHAN1") --------------------------

struct RealizationFile {
    std::vector<ChannelRealization> realizations;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

// Header (dimensions, config hash, seed) followed by per-realization grids as
// interleaved real/imag doubles in row-major order.
void save_realizations(const std::filesystem::path &path, const std::vector<ChannelRealization> &realizations,
                       std::uint64_t config_hash, std::uint64_t seed);
RealizationFile load_realizations(const std::filesystem::path &path);

// One CSV row per realization: index, model, true_sparsity, seed, config id.
void export_realization_metadata_csv(const std::filesystem::path &path,
                                     const std::vector<ChannelRealization> &realizations,
                                     const std::string &config_id);

// --- dictionary files (magic "CSKDICT1") -----------------------------------

void save_dictionary(const std::filesystem::path &path, const Dictionary &dict);
Dictionary load_dictionary(const std::filesystem::path &path);

// --- regressor files (magic "CSKMODL1") ------------------------------------

void save_model(const std::filesystem::path &path, const SparsityRegressor &model);
SparsityRegressor load_model(const std::filesystem::path &path);

// --- misc -------------------------------------------------------------------

// FNV-1a 64 fingerprint of a file's bytes.
std::uint64_t file_fingerprint(const std::filesystem::path &path);

// Write via a temporary file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

// Shortest-width decimal with full double round-trip precision ("%.17g").
std::string format_double(double v);

} // namespace cskit

#endif
