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

#ifndef CSKIT_EXPERIMENT_HPP
#define CSKIT_EXPERIMENT_HPP

#include "cskit/pipeline.hpp"

#include <filesystem>

namespace cskit {

// ---------------------------------------------------------------------------
// Declarative experiment configuration (JSON on disk, see README for schema)
// ---------------------------------------------------------------------------

struct DictionaryStageConfig {
    Eigen::Index atoms = 128;
    Eigen::Index target_sparsity = 10;
    Eigen::Index iterations = 25;
    Eigen::Index train_realizations = 120;  // general corpus
    Eigen::Index domain_realizations = 40;  // per domain-strong subset
};

struct EstimatorStageConfig {
    Eigen::Index hidden_units = 10;
    double learning_rate = 0.001;
    Eigen::Index max_epochs = 60;
    Eigen::Index patience = 10;
    std::string optimizer = "lm";
    std::string feature_transform = "dft";           // "dft" or "dictionary"
    std::string feature_encoding = "transform-sorted"; // see FeatureEncoding
    double label_epsilon_rel = 0.0;                  // 0: calibrate automatically
    Eigen::Index calibration_trials = 200;
    Eigen::Index train_systems = 800;
    Eigen::Index test_systems = 150; // held-out, generated with an independent seed stream
    Eigen::Index users_per_system = 4;
    std::vector<double> train_snr_db = {0.0, 4.0, 8.0, 12.0};
};

struct EvalStageConfig {
    double snr_min_db = -20.0;
    double snr_max_db = 0.0;
    double snr_step_db = 2.0;
    Eigen::Index mse_realizations = 100;
    std::vector<double> test_snr_db = {0.0, 4.0, 8.0, 12.0};
    std::vector<Eigen::Index> train_size_sweep = {200, 400, 800, 1600}; // systems
    Eigen::Index sweep_users_per_system = 1;
    Eigen::Index sweep_test_systems = 200;
    std::string sweep_feature_encoding = "transform-sorted"; // compact features keep the sweep fast
    Eigen::Index sweep_max_epochs = 40;
};

struct SpectrumStageConfig {
    Eigen::Index bins = 200;
    double bin_width_hz = 20e3;
    double bin_hz_start = 852e6;
    Eigen::Index band_min = 0;
    Eigen::Index band_max = 10;
    Eigen::Index width_min = 6; // occupied band width, bins
    Eigen::Index width_max = 10;
    Eigen::Index power_averages = 16; // periodograms per PSD estimate
    Eigen::Index train_observations = 2400;
    Eigen::Index test_observations = 600;
    std::vector<double> train_snr_db = {0.0, 5.0, 10.0};
    std::vector<double> test_snr_db = {0.0, 5.0, 10.0};
    // The PSD is already the sparse-domain representation, so the identity
    // transform with the order-statistics encoding is the default.
    std::string feature_transform = "identity";
    std::string feature_encoding = "transform-sorted";
    std::string file; // input for the spectrum-file scenario / ingest-psd
};

struct ExperimentConfig {
    std::string scenario = "channel-vcm"; // channel-vcm | channel-gscm | spectrum-synthetic | spectrum-file
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";

    VcmConfig vcm;   // desk-scale defaults
    GscmConfig gscm; // per-realization cluster count is drawn from the range below
    Eigen::Index gscm_cluster_min = 1;
    Eigen::Index gscm_cluster_max = 10;

    Eigen::Index pilot_separation = 1;
    Eigen::Index cp_length = -1; // -1: channel delay extent

    DictionaryStageConfig dictionary;
    EstimatorStageConfig estimator;
    EvalStageConfig eval;
    SpectrumStageConfig spectrum;

    bool channel_scenario() const { return scenario == "channel-vcm" || scenario == "channel-gscm"; }
    void validate() const;
};

// Restore the full-size simulation dimensions (50x50 angular grid, 128
// subcarriers with a 32-subcarrier guard, 256 atoms, 1000 dictionary
// realizations, 1400 systems of 16 users).
void apply_paper_scale(ExperimentConfig &config);

// Canonical JSON (sorted keys, 2-space indent). serialize(parse(s)) == s for
// any s produced by serialize.
std::string serialize_config(const ExperimentConfig &config);
ExperimentConfig parse_config(const std::string &json_text);
ExperimentConfig load_config_file(const std::filesystem::path &path);

// Fingerprint of the canonical serialization with out_dir blanked, so the
// same experiment written to two directories produces identical artifacts.
std::uint64_t config_hash(const ExperimentConfig &config);

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> timings;         // stage -> seconds
    std::vector<std::pair<std::string, std::uint64_t>> outputs;  // file -> fingerprint
};

void write_manifest(const std::filesystem::path &path, const RunManifest &manifest);
RunManifest read_manifest(const std::filesystem::path &path);

// Manifest exists, matches the config hash, and every listed output is
// present with a matching fingerprint.
bool manifest_valid(const std::filesystem::path &out_dir, const std::string &command, std::uint64_t hash);

// ---------------------------------------------------------------------------
// Commands (shared by the CLI and the test suites)
// ---------------------------------------------------------------------------

void cmd_gen_data(const ExperimentConfig &config);
void cmd_train(const ExperimentConfig &config);

struct ScatterRow {
    Eigen::Index sample = 0;
    double snr_db = 0.0;
    Eigen::Index label = 0;
    Eigen::Index predicted = 0;
    double raw = 0.0;
};

struct MseRow {
    std::string method;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double mse = 0.0;
    std::optional<Eigen::Index> estimated_sparsity;
};

struct SweepRow {
    Eigen::Index train_systems = 0;
    Eigen::Index train_samples = 0;
    double test_mse = 0.0;
};

struct EvalMetrics {
    std::vector<ScatterRow> scatter;
    std::vector<MseRow> mse_rows;
    std::vector<SweepRow> sweep;
    double scatter_mae = 0.0;        // over labels in [1, 10]
    double scatter_exact_rate = 0.0; // ditto
    double spectrum_mae = 0.0;       // spectrum scenarios only
};

EvalMetrics cmd_eval(const ExperimentConfig &config);
void cmd_bench(const ExperimentConfig &config);
void cmd_ingest(const ExperimentConfig &config);

// ---------------------------------------------------------------------------
// Building blocks exposed for the acceptance suite
// ---------------------------------------------------------------------------

struct ChannelArtifacts {
    Dictionary dict;
    SparsityRegressor model;
};

ChannelArtifacts load_channel_artifacts(const ExperimentConfig &config);

// Synthesize the i-th evaluation channel for this config (shared across SNR
// points so method comparisons are paired).
ChannelRealization synth_eval_channel(const ExperimentConfig &config, Eigen::Index index);

// Run LS / DFT-known-s / Proposed / Oracle over `realizations` fresh channels
// at one SNR; four rows per realization.
std::vector<MseRow> evaluate_mse(const ExperimentConfig &config, const ChannelArtifacts &artifacts, double snr_db,
                                 Eigen::Index realizations);

// Predicted-vs-label scatter on the held-out test systems.
std::vector<ScatterRow> evaluate_scatter(const ExperimentConfig &config, const ChannelArtifacts &artifacts);

// Estimator-error vs training-set-size sweep (fresh models, shared test set).
std::vector<SweepRow> evaluate_train_size_sweep(const ExperimentConfig &config, const ChannelArtifacts &artifacts);

struct SpectrumMetrics {
    std::vector<ScatterRow> scatter; // label = true band count
    double mae = 0.0;
};

SpectrumMetrics evaluate_spectrum(const ExperimentConfig &config, const SparsityRegressor &model);

} // namespace cskit

#endif
