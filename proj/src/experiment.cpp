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

#include "cskit/experiment.hpp"
#include "cskit/io.hpp"

#include <json.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cskit {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (scenario != "channel-vcm" && scenario != "channel-gscm" && scenario != "spectrum-synthetic" &&
        scenario != "spectrum-file")
        throw ConfigError("unknown scenario '" + scenario + "'");
    if (channel_scenario()) {
        if (scenario == "channel-vcm")
            vcm.validate();
        else {
            gscm.validate();
            if (gscm_cluster_min < 1 || gscm_cluster_min > gscm_cluster_max)
                throw ConfigError("bad GSCM cluster range");
        }
        if (pilot_separation < 1)
            throw ConfigError("pilot separation must be >= 1");
        if (dictionary.atoms < 1 || dictionary.target_sparsity < 1 || dictionary.iterations < 0)
            throw ConfigError("bad dictionary stage parameters");
        if (dictionary.train_realizations < 0 || dictionary.domain_realizations < 0)
            throw ConfigError("bad dictionary corpus sizes");
    }
    if (estimator.hidden_units < 1 || estimator.max_epochs < 1 || estimator.learning_rate <= 0.0)
        throw ConfigError("bad estimator hyperparameters");
    if (estimator.train_snr_db.empty())
        throw ConfigError("estimator.train_snr_db must not be empty");
    if (eval.snr_step_db <= 0.0 || eval.snr_min_db > eval.snr_max_db)
        throw ConfigError("bad eval SNR grid");
    if (eval.test_snr_db.empty())
        throw ConfigError("eval.test_snr_db must not be empty");
    if (spectrum.bins < 1 || spectrum.band_min < 0 || spectrum.band_min > spectrum.band_max)
        throw ConfigError("bad spectrum stage parameters");
    if (spectrum.width_min < 1 || spectrum.width_min > spectrum.width_max)
        throw ConfigError("bad spectrum band width range");
}

void apply_paper_scale(ExperimentConfig &config) {
    config.vcm.max_aoas = 50;
    config.vcm.max_aods = 50;
    config.vcm.max_delays = 9;
    config.vcm.max_doppler = 4;
    config.vcm.subcarriers = 128;
    config.vcm.guard_band = 32;
    config.vcm.num_symbols = 16;
    config.vcm.delay_spread_bins = 9;
    config.vcm.doppler_spread_bins = 9;
    config.pilot_separation = 4;
    config.gscm.antenna_count = 128;
    config.dictionary.atoms = 256;
    config.dictionary.train_realizations = 1000;
    config.dictionary.domain_realizations = 200;
    config.estimator.train_systems = 1400;
    config.estimator.users_per_system = 16;
    config.eval.mse_realizations = 1000;
    config.spectrum.train_observations = 36000;
    config.spectrum.test_observations = 12000;
}

namespace {

json range_json(Eigen::Index lo, Eigen::Index hi) { return json::array({lo, hi}); }

void read_range(const json &j, const char *key, Eigen::Index &lo, Eigen::Index &hi) {
    if (!j.contains(key))
        return;
    const json &r = j.at(key);
    if (!r.is_array() || r.size() != 2)
        throw ConfigError(std::string("config: '") + key + "' must be a [min, max] pair");
    lo = r[0].get<Eigen::Index>();
    hi = r[1].get<Eigen::Index>();
}

template <typename T> void maybe(const json &j, const char *key, T &out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

} // namespace

std::string serialize_config(const ExperimentConfig &c) {
    json j;
    j["scenario"] = c.scenario;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;

    json vcm;
    vcm["max_aoas"] = c.vcm.max_aoas;
    vcm["max_aods"] = c.vcm.max_aods;
    vcm["max_delays"] = c.vcm.max_delays;
    vcm["max_doppler"] = c.vcm.max_doppler;
    vcm["symbol_duration"] = c.vcm.symbol_duration;
    vcm["bandwidth"] = c.vcm.bandwidth;
    vcm["subcarriers"] = c.vcm.subcarriers;
    vcm["guard_band"] = c.vcm.guard_band;
    vcm["num_symbols"] = c.vcm.num_symbols;
    vcm["subpaths_per_bin"] = c.vcm.subpaths_per_bin;
    vcm["angular_sparsity"] = range_json(c.vcm.angular_sparsity_min, c.vcm.angular_sparsity_max);
    vcm["dd_sparsity"] = range_json(c.vcm.dd_sparsity_min, c.vcm.dd_sparsity_max);
    vcm["delay_spread_bins"] = c.vcm.delay_spread_bins;
    vcm["doppler_spread_bins"] = c.vcm.doppler_spread_bins;
    vcm["placement"] = c.vcm.placement == SparsityPlacement::Product ? "product" : "union";
    vcm["rx_element"] = c.vcm.rx_element;
    vcm["tx_element"] = c.vcm.tx_element;

    json gscm;
    gscm["clusters"] = range_json(c.gscm_cluster_min, c.gscm_cluster_max);
    gscm["subpaths_per_cluster"] = c.gscm.subpaths_per_cluster;
    gscm["antenna_count"] = c.gscm.antenna_count;
    gscm["angle_spread"] = c.gscm.angle_spread;
    gscm["gain_variance"] = c.gscm.gain_variance;
    gscm["grid_angles"] = c.gscm.grid_angles;
    gscm["num_blocks"] = c.gscm.num_blocks;

    json channel;
    channel["pilot_separation"] = c.pilot_separation;
    channel["cp_length"] = c.cp_length;
    channel["vcm"] = vcm;
    channel["gscm"] = gscm;
    j["channel"] = channel;

    json dict;
    dict["atoms"] = c.dictionary.atoms;
    dict["target_sparsity"] = c.dictionary.target_sparsity;
    dict["iterations"] = c.dictionary.iterations;
    dict["train_realizations"] = c.dictionary.train_realizations;
    dict["domain_realizations"] = c.dictionary.domain_realizations;
    j["dictionary"] = dict;

    json est;
    est["hidden_units"] = c.estimator.hidden_units;
    est["learning_rate"] = c.estimator.learning_rate;
    est["max_epochs"] = c.estimator.max_epochs;
    est["patience"] = c.estimator.patience;
    est["optimizer"] = c.estimator.optimizer;
    est["feature_transform"] = c.estimator.feature_transform;
    est["feature_encoding"] = c.estimator.feature_encoding;
    est["label_epsilon_rel"] = c.estimator.label_epsilon_rel;
    est["calibration_trials"] = c.estimator.calibration_trials;
    est["train_systems"] = c.estimator.train_systems;
    est["test_systems"] = c.estimator.test_systems;
    est["users_per_system"] = c.estimator.users_per_system;
    est["train_snr_db"] = c.estimator.train_snr_db;
    j["estimator"] = est;

    json ev;
    ev["snr_min_db"] = c.eval.snr_min_db;
    ev["snr_max_db"] = c.eval.snr_max_db;
    ev["snr_step_db"] = c.eval.snr_step_db;
    ev["mse_realizations"] = c.eval.mse_realizations;
    ev["test_snr_db"] = c.eval.test_snr_db;
    ev["train_size_sweep"] = c.eval.train_size_sweep;
    ev["sweep_users_per_system"] = c.eval.sweep_users_per_system;
    ev["sweep_test_systems"] = c.eval.sweep_test_systems;
    ev["sweep_feature_encoding"] = c.eval.sweep_feature_encoding;
    ev["sweep_max_epochs"] = c.eval.sweep_max_epochs;
    j["eval"] = ev;

    json spec;
    spec["bins"] = c.spectrum.bins;
    spec["bin_width_hz"] = c.spectrum.bin_width_hz;
    spec["bin_hz_start"] = c.spectrum.bin_hz_start;
    spec["bands"] = range_json(c.spectrum.band_min, c.spectrum.band_max);
    spec["band_width"] = range_json(c.spectrum.width_min, c.spectrum.width_max);
    spec["train_observations"] = c.spectrum.train_observations;
    spec["test_observations"] = c.spectrum.test_observations;
    spec["train_snr_db"] = c.spectrum.train_snr_db;
    spec["test_snr_db"] = c.spectrum.test_snr_db;
    spec["power_averages"] = c.spectrum.power_averages;
    spec["feature_transform"] = c.spectrum.feature_transform;
    spec["feature_encoding"] = c.spectrum.feature_encoding;
    spec["file"] = c.spectrum.file;
    j["spectrum"] = spec;

    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig c;
    try {
        maybe(j, "scenario", c.scenario);
        maybe(j, "seed", c.seed);
        maybe(j, "out_dir", c.out_dir);

        if (j.contains("channel")) {
            const json &ch = j.at("channel");
            maybe(ch, "pilot_separation", c.pilot_separation);
            maybe(ch, "cp_length", c.cp_length);
            if (ch.contains("vcm")) {
                const json &v = ch.at("vcm");
                maybe(v, "max_aoas", c.vcm.max_aoas);
                maybe(v, "max_aods", c.vcm.max_aods);
                maybe(v, "max_delays", c.vcm.max_delays);
                maybe(v, "max_doppler", c.vcm.max_doppler);
                maybe(v, "symbol_duration", c.vcm.symbol_duration);
                maybe(v, "bandwidth", c.vcm.bandwidth);
                maybe(v, "subcarriers", c.vcm.subcarriers);
                maybe(v, "guard_band", c.vcm.guard_band);
                maybe(v, "num_symbols", c.vcm.num_symbols);
                maybe(v, "subpaths_per_bin", c.vcm.subpaths_per_bin);
                read_range(v, "angular_sparsity", c.vcm.angular_sparsity_min, c.vcm.angular_sparsity_max);
                read_range(v, "dd_sparsity", c.vcm.dd_sparsity_min, c.vcm.dd_sparsity_max);
                maybe(v, "delay_spread_bins", c.vcm.delay_spread_bins);
                maybe(v, "doppler_spread_bins", c.vcm.doppler_spread_bins);
                if (v.contains("placement")) {
                    const std::string p = v.at("placement").get<std::string>();
                    if (p == "product")
                        c.vcm.placement = SparsityPlacement::Product;
                    else if (p == "union")
                        c.vcm.placement = SparsityPlacement::Union;
                    else
                        throw ConfigError("config: placement must be 'product' or 'union'");
                }
                maybe(v, "rx_element", c.vcm.rx_element);
                maybe(v, "tx_element", c.vcm.tx_element);
            }
            if (ch.contains("gscm")) {
                const json &g = ch.at("gscm");
                read_range(g, "clusters", c.gscm_cluster_min, c.gscm_cluster_max);
                maybe(g, "subpaths_per_cluster", c.gscm.subpaths_per_cluster);
                maybe(g, "antenna_count", c.gscm.antenna_count);
                maybe(g, "angle_spread", c.gscm.angle_spread);
                maybe(g, "gain_variance", c.gscm.gain_variance);
                maybe(g, "grid_angles", c.gscm.grid_angles);
                maybe(g, "num_blocks", c.gscm.num_blocks);
            }
        }
        if (j.contains("dictionary")) {
            const json &d = j.at("dictionary");
            maybe(d, "atoms", c.dictionary.atoms);
            maybe(d, "target_sparsity", c.dictionary.target_sparsity);
            maybe(d, "iterations", c.dictionary.iterations);
            maybe(d, "train_realizations", c.dictionary.train_realizations);
            maybe(d, "domain_realizations", c.dictionary.domain_realizations);
        }
        if (j.contains("estimator")) {
            const json &e = j.at("estimator");
            maybe(e, "hidden_units", c.estimator.hidden_units);
            maybe(e, "learning_rate", c.estimator.learning_rate);
            maybe(e, "max_epochs", c.estimator.max_epochs);
            maybe(e, "patience", c.estimator.patience);
            maybe(e, "optimizer", c.estimator.optimizer);
            maybe(e, "feature_transform", c.estimator.feature_transform);
            maybe(e, "feature_encoding", c.estimator.feature_encoding);
            maybe(e, "label_epsilon_rel", c.estimator.label_epsilon_rel);
            maybe(e, "calibration_trials", c.estimator.calibration_trials);
            maybe(e, "train_systems", c.estimator.train_systems);
            maybe(e, "test_systems", c.estimator.test_systems);
            maybe(e, "users_per_system", c.estimator.users_per_system);
            maybe(e, "train_snr_db", c.estimator.train_snr_db);
        }
        if (j.contains("eval")) {
            const json &e = j.at("eval");
            maybe(e, "snr_min_db", c.eval.snr_min_db);
            maybe(e, "snr_max_db", c.eval.snr_max_db);
            maybe(e, "snr_step_db", c.eval.snr_step_db);
            maybe(e, "mse_realizations", c.eval.mse_realizations);
            maybe(e, "test_snr_db", c.eval.test_snr_db);
            maybe(e, "train_size_sweep", c.eval.train_size_sweep);
            maybe(e, "sweep_users_per_system", c.eval.sweep_users_per_system);
            maybe(e, "sweep_test_systems", c.eval.sweep_test_systems);
            maybe(e, "sweep_feature_encoding", c.eval.sweep_feature_encoding);
            maybe(e, "sweep_max_epochs", c.eval.sweep_max_epochs);
        }
        if (j.contains("spectrum")) {
            const json &s = j.at("spectrum");
            maybe(s, "bins", c.spectrum.bins);
            maybe(s, "bin_width_hz", c.spectrum.bin_width_hz);
            maybe(s, "bin_hz_start", c.spectrum.bin_hz_start);
            read_range(s, "bands", c.spectrum.band_min, c.spectrum.band_max);
            read_range(s, "band_width", c.spectrum.width_min, c.spectrum.width_max);
            maybe(s, "train_observations", c.spectrum.train_observations);
            maybe(s, "test_observations", c.spectrum.test_observations);
            maybe(s, "train_snr_db", c.spectrum.train_snr_db);
            maybe(s, "test_snr_db", c.spectrum.test_snr_db);
            maybe(s, "power_averages", c.spectrum.power_averages);
            maybe(s, "feature_transform", c.spectrum.feature_transform);
            maybe(s, "feature_encoding", c.spectrum.feature_encoding);
            maybe(s, "file", c.spectrum.file);
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config_file(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t config_hash(const ExperimentConfig &config) {
    ExperimentConfig canonical = config;
    canonical.out_dir.clear();
    return fnv1a64(serialize_config(canonical));
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string &s) { return std::stoull(s, nullptr, 16); }

fs::path manifest_path(const fs::path &out_dir, const std::string &command) {
    return out_dir / (command + "_manifest.json");
}

} // namespace

void write_manifest(const fs::path &path, const RunManifest &m) {
    json j;
    j["command"] = m.command;
    j["config_hash"] = hex64(m.config_hash);
    j["seed"] = m.seed;
    json timings = json::array();
    for (const auto &[stage, seconds] : m.timings)
        timings.push_back({{"stage", stage}, {"seconds", seconds}});
    j["timings"] = timings;
    json outputs = json::array();
    for (const auto &[file, hash] : m.outputs)
        outputs.push_back({{"path", file}, {"fnv64", hex64(hash)}});
    j["outputs"] = outputs;
    write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw MissingArtifactError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.config_hash = parse_hex64(j.at("config_hash").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto &t : j.at("timings"))
            m.timings.emplace_back(t.at("stage").get<std::string>(), t.at("seconds").get<double>());
        for (const auto &o : j.at("outputs"))
            m.outputs.emplace_back(o.at("path").get<std::string>(), parse_hex64(o.at("fnv64").get<std::string>()));
        return m;
    } catch (const json::exception &e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
}

bool manifest_valid(const fs::path &out_dir, const std::string &command, std::uint64_t hash) {
    const fs::path path = manifest_path(out_dir, command);
    if (!fs::exists(path))
        return false;
    try {
        const RunManifest m = read_manifest(path);
        if (m.command != command || m.config_hash != hash)
            return false;
        for (const auto &[file, expected] : m.outputs)
            if (file_fingerprint(out_dir / file) != expected)
                return false;
        return true;
    } catch (const std::exception &) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Shared building blocks
// ---------------------------------------------------------------------------

namespace {

struct StageTimer {
    RunManifest &manifest;

    template <typename Fn> void run(const std::string &stage, Fn &&fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        manifest.timings.emplace_back(stage, dt.count());
        std::cerr << "[" << manifest.command << "] " << stage << ": " << dt.count() << " s\n";
    }
};

void add_output(RunManifest &m, const fs::path &out_dir, const std::string &name) {
    m.outputs.emplace_back(name, file_fingerprint(out_dir / name));
}

OfdmFrameSpec frame_spec(const ExperimentConfig &cfg) {
    OfdmFrameSpec spec;
    spec.pilot_separation = cfg.pilot_separation;
    spec.cp_length = cfg.cp_length;
    return spec;
}

Eigen::Index signal_dim(const ExperimentConfig &cfg) {
    return cfg.scenario == "channel-gscm" ? cfg.gscm.antenna_count : cfg.vcm.subcarriers;
}

ChannelRealization synth_channel_impl(const ExperimentConfig &cfg, std::string_view tag, Eigen::Index index) {
    const std::uint64_t seed = derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(index));
    if (cfg.scenario == "channel-gscm") {
        GscmConfig g = cfg.gscm;
        Rng r(derive_seed(cfg.seed, std::string(tag) + "/clusters", static_cast<std::uint64_t>(index)));
        g.num_clusters = static_cast<Eigen::Index>(r.uniform_int(cfg.gscm_cluster_min, cfg.gscm_cluster_max));
        return gscm_channel(g, seed);
    }
    return vcm_channel(cfg.vcm, seed);
}

std::vector<ChannelRealization> synth_batch(const ExperimentConfig &cfg, std::string_view tag, Eigen::Index count) {
    std::vector<ChannelRealization> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i)
        out.push_back(synth_channel_impl(cfg, tag, i));
    return out;
}

// Domain-strong variants of the VCM configuration: force single-bin sparsity
// in the complementary domains so each set is dominated by one domain.
VcmConfig angle_strong_config(const VcmConfig &base) {
    VcmConfig v = base;
    v.dd_sparsity_min = 1;
    v.dd_sparsity_max = 1;
    return v;
}

VcmConfig delay_strong_config(const VcmConfig &base) {
    VcmConfig v = base;
    v.angular_sparsity_min = 1;
    v.angular_sparsity_max = 1;
    v.doppler_spread_bins = 1;
    v.dd_sparsity_max = std::min(base.dd_sparsity_max, v.delay_spread_bins);
    v.dd_sparsity_min = std::min(base.dd_sparsity_min, v.dd_sparsity_max);
    return v;
}

VcmConfig doppler_strong_config(const VcmConfig &base) {
    VcmConfig v = base;
    v.angular_sparsity_min = 1;
    v.angular_sparsity_max = 1;
    v.delay_spread_bins = 1;
    v.dd_sparsity_max = std::min(base.dd_sparsity_max, v.doppler_spread_bins);
    v.dd_sparsity_min = std::min(base.dd_sparsity_min, v.dd_sparsity_max);
    return v;
}

std::vector<ChannelRealization> synth_domain_batch(const ExperimentConfig &cfg, const std::string &domain,
                                                   Eigen::Index count) {
    std::vector<ChannelRealization> out;
    out.reserve(static_cast<std::size_t>(count));
    const std::string tag = "dict-" + domain;
    for (Eigen::Index i = 0; i < count; ++i) {
        const std::uint64_t seed = derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(i));
        if (cfg.scenario == "channel-gscm") {
            // GSCM sparsity lives in the angle domain only, so every
            // domain-strong subset is built from few-cluster realizations.
            GscmConfig g = cfg.gscm;
            if (domain == "angle") {
                g.num_clusters = 1;
            } else {
                Rng r(derive_seed(cfg.seed, tag + "/clusters", static_cast<std::uint64_t>(i)));
                g.num_clusters = static_cast<Eigen::Index>(r.uniform_int(1, 2));
            }
            out.push_back(gscm_channel(g, seed));
        } else {
            VcmConfig v = domain == "angle"  ? angle_strong_config(cfg.vcm)
                          : domain == "delay" ? delay_strong_config(cfg.vcm)
                                              : doppler_strong_config(cfg.vcm);
            out.push_back(vcm_cfr(draw_virtual_coefficients(v, seed), v));
        }
    }
    return out;
}

CMat realization_columns(const std::vector<ChannelRealization> &batch) {
    if (batch.empty())
        return {};
    const Eigen::Index n = batch.front().subcarriers();
    Eigen::Index total = 0;
    for (const auto &r : batch)
        total += r.time_slots();
    CMat cols(n, total);
    Eigen::Index at = 0;
    for (const auto &r : batch) {
        cols.middleCols(at, r.time_slots()) = r.cfr;
        at += r.time_slots();
    }
    return cols;
}

CMat feature_transform_matrix(const std::string &kind, const Dictionary &dict, Eigen::Index n) {
    if (kind == "dictionary")
        return dict.atoms;
    if (kind == "dft")
        return unitary_dft_matrix(n);
    if (kind == "identity")
        return CMat::Identity(n, n);
    throw ConfigError("unknown feature transform '" + kind + "'");
}

struct SampleBatch {
    RMat features; // p x N, samples as columns
    RVec labels;
    std::vector<double> snr_db;
};

// Observation/label pairs contributed by one frame: for time-varying grids,
// one pair per user column; a static snapshot (GSCM) is averaged across its
// blocks instead, the standard pilot-averaging receiver step.
std::vector<std::pair<CVec, CVec>> frame_observations(const ChannelRealization &chan, const ChannelEstimate &ls,
                                                      Eigen::Index users) {
    std::vector<std::pair<CVec, CVec>> out;
    if (chan.model == "gscm") {
        out.emplace_back(ls.cfr_estimate.rowwise().mean(), chan.cfr.col(0));
        return out;
    }
    const Eigen::Index uu = std::min<Eigen::Index>(users, chan.time_slots());
    for (Eigen::Index u = 0; u < uu; ++u) {
        const Eigen::Index col = u * chan.time_slots() / uu;
        out.emplace_back(ls.cfr_estimate.col(col), chan.cfr.col(col));
    }
    return out;
}

// One labeled sample per (system, user): the label comes from the clean
// channel column, the features from the LS estimate of a noisy frame.
SampleBatch collect_channel_samples(const ExperimentConfig &cfg, const Dictionary &dict, double eps_rel,
                                    const CMat &transform, FeatureEncoding enc, const std::string &tag,
                                    const std::vector<ChannelRealization> &systems, Eigen::Index users,
                                    const std::vector<double> &snr_list) {
    const Eigen::Index n = signal_dim(cfg);
    const Eigen::Index p = feature_dimension(n, transform.cols(), enc);

    std::vector<RVec> feats;
    std::vector<double> labels, snrs;
    for (std::size_t i = 0; i < systems.size(); ++i) {
        const ChannelRealization &chan = systems[i];
        const double snr = snr_list[i % snr_list.size()];
        const OfdmFrame frame =
            ofdm_roundtrip(chan, frame_spec(cfg), snr, derive_seed(cfg.seed, tag + "/frame", static_cast<std::uint64_t>(i)));
        const ChannelEstimate ls = estimate_ls(frame);
        for (const auto &[obs, clean] : frame_observations(chan, ls, users)) {
            const double norm = clean.norm();
            const double label =
                norm > 0.0 ? static_cast<double>(label_sparsity(clean, dict, eps_rel * norm)) : 0.0;
            feats.push_back(extract_features(obs, transform, enc));
            labels.push_back(label);
            snrs.push_back(snr);
        }
    }

    SampleBatch batch;
    batch.features.resize(p, static_cast<Eigen::Index>(feats.size()));
    batch.labels.resize(static_cast<Eigen::Index>(feats.size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
        batch.features.col(static_cast<Eigen::Index>(i)) = feats[i];
        batch.labels(static_cast<Eigen::Index>(i)) = labels[i];
    }
    batch.snr_db = std::move(snrs);
    return batch;
}

SpectrumObservation synth_spectrum_obs(const ExperimentConfig &cfg, const std::string &tag, Eigen::Index index,
                                       const std::vector<double> &snr_list) {
    SpectrumGeometry geom;
    geom.bin_hz_start = cfg.spectrum.bin_hz_start;
    geom.bin_width_hz = cfg.spectrum.bin_width_hz;
    geom.min_band_width = cfg.spectrum.width_min;
    geom.max_band_width = cfg.spectrum.width_max;
    geom.power_averages = cfg.spectrum.power_averages;
    Rng bands_rng(derive_seed(cfg.seed, tag + "/bands", static_cast<std::uint64_t>(index)));
    const auto bands = static_cast<Eigen::Index>(bands_rng.uniform_int(cfg.spectrum.band_min, cfg.spectrum.band_max));
    const double snr = snr_list[static_cast<std::size_t>(index) % snr_list.size()];
    return synthesize_spectrum(bands, cfg.spectrum.bins, snr, derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(index)),
                               geom);
}

SampleBatch spectrum_samples(const ExperimentConfig &cfg, const std::vector<SpectrumObservation> &observations,
                             FeatureEncoding enc, const std::vector<double> &snr_list) {
    const Eigen::Index bins = cfg.spectrum.bins;
    const Dictionary no_dict;
    const CMat f = feature_transform_matrix(cfg.spectrum.feature_transform, no_dict, bins);
    const Eigen::Index p = feature_dimension(bins, bins, enc);
    SampleBatch batch;
    batch.features.resize(p, static_cast<Eigen::Index>(observations.size()));
    batch.labels.resize(static_cast<Eigen::Index>(observations.size()));
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const SpectrumObservation &obs = observations[i];
        CVec y(bins);
        for (Eigen::Index b = 0; b < bins; ++b)
            y(b) = cxd(obs.psd(b), 0.0);
        batch.features.col(static_cast<Eigen::Index>(i)) = extract_features(y, f, enc);
        batch.labels(static_cast<Eigen::Index>(i)) =
            obs.occupied_band_count ? static_cast<double>(*obs.occupied_band_count) : 0.0;
        batch.snr_db.push_back(snr_list[i % snr_list.size()]);
    }
    return batch;
}

// file names shared across commands
constexpr const char *kDictGeneral = "dict_general.chan";
constexpr const char *kDictAngle = "dict_angle.chan";
constexpr const char *kDictDelay = "dict_delay.chan";
constexpr const char *kDictDoppler = "dict_doppler.chan";
constexpr const char *kEstTrain = "est_train.chan";
constexpr const char *kEstTest = "est_test.chan";
constexpr const char *kEstTrainMeta = "est_train_meta.csv";
constexpr const char *kEstTestMeta = "est_test_meta.csv";
constexpr const char *kSpectrumTrain = "spectrum_train.csv";
constexpr const char *kSpectrumTest = "spectrum_test.csv";
constexpr const char *kDictionary = "dictionary.dict";
constexpr const char *kKsvdObjective = "ksvd_objective.csv";
constexpr const char *kModel = "model.bin";
constexpr const char *kLoss = "loss.csv";

std::vector<SpectrumObservation> synth_spectrum_batch(const ExperimentConfig &cfg, const std::string &tag,
                                                      Eigen::Index count, const std::vector<double> &snr_list) {
    std::vector<SpectrumObservation> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i)
        out.push_back(synth_spectrum_obs(cfg, tag, i, snr_list));
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

void cmd_gen_data(const ExperimentConfig &cfg) {
    cfg.validate();
    if (cfg.scenario == "spectrum-file")
        throw ConfigError("gen-data: the spectrum-file scenario reads external data; use ingest-psd");
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const std::uint64_t hash = config_hash(cfg);

    RunManifest manifest;
    manifest.command = "gen-data";
    manifest.config_hash = hash;
    manifest.seed = cfg.seed;
    StageTimer timer{manifest};

    write_file_atomic(out / "config.json", serialize_config(cfg));
    manifest.outputs.emplace_back("config.json", file_fingerprint(out / "config.json"));

    if (cfg.channel_scenario()) {
        timer.run("dictionary-corpus", [&] {
            save_realizations(out / kDictGeneral, synth_batch(cfg, "dict-general", cfg.dictionary.train_realizations),
                              hash, cfg.seed);
            save_realizations(out / kDictAngle, synth_domain_batch(cfg, "angle", cfg.dictionary.domain_realizations),
                              hash, cfg.seed);
            save_realizations(out / kDictDelay, synth_domain_batch(cfg, "delay", cfg.dictionary.domain_realizations),
                              hash, cfg.seed);
            save_realizations(out / kDictDoppler,
                              synth_domain_batch(cfg, "doppler", cfg.dictionary.domain_realizations), hash, cfg.seed);
        });
        timer.run("estimator-corpus", [&] {
            const auto train = synth_batch(cfg, "est-train", cfg.estimator.train_systems);
            const auto test = synth_batch(cfg, "est-test", cfg.estimator.test_systems);
            save_realizations(out / kEstTrain, train, hash, cfg.seed);
            save_realizations(out / kEstTest, test, hash, cfg.seed);
            export_realization_metadata_csv(out / kEstTrainMeta, train, hex64(hash));
            export_realization_metadata_csv(out / kEstTestMeta, test, hex64(hash));
        });
        for (const char *name : {kDictGeneral, kDictAngle, kDictDelay, kDictDoppler, kEstTrain, kEstTest,
                                 kEstTrainMeta, kEstTestMeta})
            add_output(manifest, out, name);
    } else {
        timer.run("spectrum-corpus", [&] {
            export_psd_csv(out / kSpectrumTrain, synth_spectrum_batch(cfg, "spectrum-train",
                                                                      cfg.spectrum.train_observations,
                                                                      cfg.spectrum.train_snr_db));
            export_psd_csv(out / kSpectrumTest, synth_spectrum_batch(cfg, "spectrum-test",
                                                                     cfg.spectrum.test_observations,
                                                                     cfg.spectrum.test_snr_db));
        });
        add_output(manifest, out, kSpectrumTrain);
        add_output(manifest, out, kSpectrumTest);
    }

    write_manifest(manifest_path(out, "gen-data"), manifest);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

std::vector<ChannelRealization> load_batch(const fs::path &out, const char *name, std::uint64_t hash) {
    const fs::path path = out / name;
    if (!fs::exists(path))
        throw MissingArtifactError("missing dataset " + path.string() + " (run gen-data first)");
    RealizationFile file = load_realizations(path);
    if (file.config_hash != hash)
        throw ConfigError("dataset " + path.string() + " was generated with a different config");
    return std::move(file.realizations);
}

void write_loss_csv(const fs::path &path, const TrainResult &result) {
    std::ostringstream os;
    os << "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e)
        os << e << ',' << format_double(result.train_loss[e]) << ',' << format_double(result.val_loss[e]) << '\n';
    write_file_atomic(path, os.str());
}

} // namespace

void cmd_train(const ExperimentConfig &cfg) {
    cfg.validate();
    if (cfg.scenario == "spectrum-file")
        throw ConfigError("train: the spectrum-file scenario has no labels to train on");
    const fs::path out(cfg.out_dir);
    const std::uint64_t hash = config_hash(cfg);

    if (manifest_valid(out, "train", hash)) {
        std::cerr << "[train] artifacts up to date, skipping\n";
        return;
    }

    RunManifest manifest;
    manifest.command = "train";
    manifest.config_hash = hash;
    manifest.seed = cfg.seed;
    StageTimer timer{manifest};

    if (cfg.channel_scenario()) {
        TrainingCorpus corpus;
        timer.run("load-corpus", [&] {
            corpus.general = realization_columns(load_batch(out, kDictGeneral, hash));
            corpus.angle_strong = realization_columns(load_batch(out, kDictAngle, hash));
            corpus.delay_strong = realization_columns(load_batch(out, kDictDelay, hash));
            corpus.doppler_strong = realization_columns(load_batch(out, kDictDoppler, hash));
        });

        Dictionary dict;
        bool dict_reused = false;
        if (fs::exists(out / kDictionary)) {
            Dictionary existing = load_dictionary(out / kDictionary);
            if (existing.provenance.training_set_id == hex64(hash)) {
                dict = std::move(existing);
                dict_reused = true;
                std::cerr << "[train] dictionary up to date, skipping K-SVD\n";
            }
        }
        if (!dict_reused) {
            KsvdResult ksvd_result;
            timer.run("multidomain-init", [&] { dict = multidomain_init(corpus, cfg.dictionary.atoms); });
            timer.run("ksvd", [&] {
                dict.provenance.training_set_id = hex64(hash);
                ksvd_result = ksvd(corpus.general, dict, cfg.dictionary.target_sparsity, cfg.dictionary.iterations);
                dict = std::move(ksvd_result.dictionary);
            });
            save_dictionary(out / kDictionary, dict);
            std::ostringstream os;
            os << "iteration,objective\n";
            for (std::size_t i = 0; i < ksvd_result.objective.size(); ++i)
                os << i << ',' << format_double(ksvd_result.objective[i]) << '\n';
            write_file_atomic(out / kKsvdObjective, os.str());
        }

        double eps_rel = cfg.estimator.label_epsilon_rel;
        if (eps_rel <= 0.0) {
            // Calibration set: fresh noiseless channels labeled with their
            // construction sparsity.
            timer.run("calibrate-label-tolerance", [&] {
                const Eigen::Index trials = cfg.estimator.calibration_trials;
                CMat signals(signal_dim(cfg), trials);
                std::vector<Eigen::Index> targets;
                for (Eigen::Index i = 0; i < trials; ++i) {
                    const ChannelRealization chan = synth_channel_impl(cfg, "calibration", i);
                    signals.col(i) = chan.cfr.col(i % chan.time_slots());
                    targets.push_back(std::clamp<Eigen::Index>(chan.component_count, 1, dict.atom_count()));
                }
                const LabelCalibration cal = calibrate_label_tolerance(dict, signals, targets);
                eps_rel = cal.epsilon_rel;
                std::cerr << "[train] label tolerance eps_rel=" << eps_rel << " (calibration accuracy " << cal.accuracy
                          << ")\n";
            });
        }

        const FeatureEncoding enc = feature_encoding_from_name(cfg.estimator.feature_encoding);
        const CMat transform = feature_transform_matrix(cfg.estimator.feature_transform, dict, signal_dim(cfg));

        SampleBatch samples;
        timer.run("label-and-features", [&] {
            const auto systems = load_batch(out, kEstTrain, hash);
            samples = collect_channel_samples(cfg, dict, eps_rel, transform, enc, "est-train", systems,
                                              cfg.estimator.users_per_system, cfg.estimator.train_snr_db);
        });

        TrainResult result;
        timer.run("train-regressor", [&] {
            LabeledDataset dataset =
                split_dataset(samples.features, samples.labels, derive_seed(cfg.seed, "split"));
            TrainingHyperparams hp;
            hp.learning_rate = cfg.estimator.learning_rate;
            hp.max_epochs = cfg.estimator.max_epochs;
            hp.patience = cfg.estimator.patience;
            hp.hidden_units = cfg.estimator.hidden_units;
            hp.optimizer = cfg.estimator.optimizer;
            hp.seed = derive_seed(cfg.seed, "model-init");
            result = train(dataset, hp);
        });
        result.model.clamp_max = dict.atom_count();
        result.model.feature_encoding = feature_encoding_name(enc);
        result.model.feature_transform = cfg.estimator.feature_transform;
        result.model.label_epsilon_rel = eps_rel;
        save_model(out / kModel, result.model);
        write_loss_csv(out / kLoss, result);

        for (const char *name : {kDictionary, kKsvdObjective, kModel, kLoss})
            add_output(manifest, out, name);
    } else {
        const fs::path train_csv = out / kSpectrumTrain;
        if (!fs::exists(train_csv))
            throw MissingArtifactError("missing dataset " + train_csv.string() + " (run gen-data first)");
        PsdFile file;
        timer.run("load-corpus", [&] { file = ingest_psd(train_csv); });
        if (!file.labeled)
            throw ConfigError("train: spectrum training data has no labels");

        const FeatureEncoding enc = feature_encoding_from_name(cfg.spectrum.feature_encoding);
        SampleBatch samples;
        timer.run("features", [&] { samples = spectrum_samples(cfg, file.observations, enc, cfg.spectrum.train_snr_db); });

        TrainResult result;
        timer.run("train-regressor", [&] {
            LabeledDataset dataset =
                split_dataset(samples.features, samples.labels, derive_seed(cfg.seed, "split"));
            TrainingHyperparams hp;
            hp.learning_rate = cfg.estimator.learning_rate;
            hp.max_epochs = cfg.estimator.max_epochs;
            hp.patience = cfg.estimator.patience;
            hp.hidden_units = cfg.estimator.hidden_units;
            hp.optimizer = cfg.estimator.optimizer;
            hp.seed = derive_seed(cfg.seed, "model-init");
            result = train(dataset, hp);
        });
        result.model.clamp_max = cfg.spectrum.bins;
        result.model.feature_encoding = feature_encoding_name(enc);
        result.model.feature_transform = cfg.spectrum.feature_transform;
        result.model.label_epsilon_rel = 0.0;
        save_model(out / kModel, result.model);
        write_loss_csv(out / kLoss, result);

        add_output(manifest, out, kModel);
        add_output(manifest, out, kLoss);
    }

    write_manifest(manifest_path(out, "train"), manifest);
}

// ---------------------------------------------------------------------------
// eval building blocks
// ---------------------------------------------------------------------------

ChannelArtifacts load_channel_artifacts(const ExperimentConfig &cfg) {
    const fs::path out(cfg.out_dir);
    if (!fs::exists(out / kDictionary) || !fs::exists(out / kModel))
        throw MissingArtifactError("missing trained artifacts in " + out.string() + " (run train first)");
    ChannelArtifacts a;
    a.dict = load_dictionary(out / kDictionary);
    a.model = load_model(out / kModel);

    const FeatureEncoding enc = feature_encoding_from_name(a.model.feature_encoding);
    const Eigen::Index n = signal_dim(cfg);
    const Eigen::Index cols = a.model.feature_transform == "dictionary" ? a.dict.atom_count() : n;
    if (a.dict.signal_dim() != n)
        throw ConfigError("dictionary dimension " + std::to_string(a.dict.signal_dim()) +
                          " does not match the configured signal dimension " + std::to_string(n));
    if (a.model.input_dim() != feature_dimension(n, cols, enc))
        throw ConfigError("model feature dimension " + std::to_string(a.model.input_dim()) +
                          " does not match the configured features (" +
                          std::to_string(feature_dimension(n, cols, enc)) + ")");
    return a;
}

ChannelRealization synth_eval_channel(const ExperimentConfig &cfg, Eigen::Index index) {
    return synth_channel_impl(cfg, "mse-chan", index);
}

std::vector<MseRow> evaluate_mse(const ExperimentConfig &cfg, const ChannelArtifacts &artifacts, double snr_db,
                                 Eigen::Index realizations) {
    const double eps_rel = artifacts.model.label_epsilon_rel > 0.0 ? artifacts.model.label_epsilon_rel : 1e-3;
    std::vector<MseRow> rows;
    rows.reserve(static_cast<std::size_t>(realizations) * 4);

    for (Eigen::Index r = 0; r < realizations; ++r) {
        const ChannelRealization chan = synth_eval_channel(cfg, r);
        const std::uint64_t frame_seed =
            derive_seed(cfg.seed, "mse-frame", splitmix64(std::bit_cast<std::uint64_t>(snr_db)) ^ static_cast<std::uint64_t>(r));
        const OfdmFrame frame = ofdm_roundtrip(chan, frame_spec(cfg), snr_db, frame_seed);

        // Genie inputs from the clean channel: the labeling support per column
        // and the DFT-domain sparsity per column.
        std::vector<SparseCode> true_codes;
        std::vector<Eigen::Index> dft_s;
        const CMat f = unitary_dft_matrix(chan.subcarriers());
        for (Eigen::Index j = 0; j < chan.time_slots(); ++j) {
            const CVec clean = chan.cfr.col(j);
            const double norm = clean.norm();
            true_codes.push_back(norm > 0.0 ? omp(clean, artifacts.dict.atoms, OmpStop::residual(eps_rel * norm))
                                            : SparseCode{});
            dft_s.push_back(norm > 0.0 ? std::max<Eigen::Index>(1, dft_sparsity(clean, 0.99, f)) : 1);
        }

        auto push = [&](const ChannelEstimate &est) {
            MseRow row;
            row.method = est.method;
            row.snr_db = snr_db;
            row.seed = chan.seed;
            row.mse = est.mse;
            row.estimated_sparsity = est.estimated_sparsity;
            rows.push_back(std::move(row));
        };
        push(estimate_ls(frame));
        push(estimate_dft_known_s(frame, dft_s));
        push(estimate_proposed(frame, artifacts.dict, artifacts.model));
        push(estimate_oracle(frame, artifacts.dict, true_codes));
    }
    return rows;
}

std::vector<ScatterRow> evaluate_scatter(const ExperimentConfig &cfg, const ChannelArtifacts &artifacts) {
    const FeatureEncoding enc = feature_encoding_from_name(artifacts.model.feature_encoding);
    const CMat transform = feature_transform_matrix(artifacts.model.feature_transform, artifacts.dict, signal_dim(cfg));
    const double eps_rel = artifacts.model.label_epsilon_rel;

    std::vector<ScatterRow> rows;
    Eigen::Index sample = 0;
    for (Eigen::Index i = 0; i < cfg.estimator.test_systems; ++i) {
        const ChannelRealization chan = synth_channel_impl(cfg, "est-test", i);
        const double snr = cfg.eval.test_snr_db[static_cast<std::size_t>(i) % cfg.eval.test_snr_db.size()];
        const OfdmFrame frame =
            ofdm_roundtrip(chan, frame_spec(cfg), snr, derive_seed(cfg.seed, "est-test/frame", static_cast<std::uint64_t>(i)));
        const ChannelEstimate ls = estimate_ls(frame);
        for (const auto &[obs, clean] : frame_observations(chan, ls, cfg.estimator.users_per_system)) {
            const double norm = clean.norm();
            ScatterRow row;
            row.sample = sample++;
            row.snr_db = snr;
            row.label = norm > 0.0 ? label_sparsity(clean, artifacts.dict, eps_rel * norm) : 0;
            const RVec v = extract_features(obs, transform, enc);
            row.raw = artifacts.model.forward(v);
            row.predicted = predict_sparsity(artifacts.model, v);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepRow> evaluate_train_size_sweep(const ExperimentConfig &cfg, const ChannelArtifacts &artifacts) {
    const FeatureEncoding enc = feature_encoding_from_name(cfg.eval.sweep_feature_encoding);
    const CMat transform = feature_transform_matrix(artifacts.model.feature_transform, artifacts.dict, signal_dim(cfg));
    const double eps_rel = artifacts.model.label_epsilon_rel;
    const Eigen::Index users = cfg.eval.sweep_users_per_system;

    Eigen::Index max_systems = 0;
    for (Eigen::Index s : cfg.eval.train_size_sweep)
        max_systems = std::max(max_systems, s);

    const auto train_pool = synth_batch(cfg, "sweep-train", max_systems);
    const auto test_pool = synth_batch(cfg, "sweep-test", cfg.eval.sweep_test_systems);
    const SampleBatch train_all = collect_channel_samples(cfg, artifacts.dict, eps_rel, transform, enc, "sweep-train",
                                                          train_pool, users, cfg.eval.test_snr_db);
    const SampleBatch test = collect_channel_samples(cfg, artifacts.dict, eps_rel, transform, enc, "sweep-test",
                                                     test_pool, users, cfg.eval.test_snr_db);

    std::vector<SweepRow> rows;
    for (Eigen::Index size : cfg.eval.train_size_sweep) {
        const Eigen::Index samples = std::min<Eigen::Index>(size * users, train_all.features.cols());
        const RMat sub_features = train_all.features.leftCols(samples);
        const RVec sub_labels = train_all.labels.head(samples);

        LabeledDataset dataset = split_dataset(sub_features, sub_labels,
                                               derive_seed(cfg.seed, "sweep-split", static_cast<std::uint64_t>(size)),
                                               0.8, 0.2);
        TrainingHyperparams hp;
        hp.learning_rate = cfg.estimator.learning_rate;
        hp.max_epochs = cfg.eval.sweep_max_epochs;
        hp.patience = cfg.estimator.patience;
        hp.hidden_units = cfg.estimator.hidden_units;
        hp.optimizer = cfg.estimator.optimizer;
        hp.seed = derive_seed(cfg.seed, "sweep-model", static_cast<std::uint64_t>(size));
        const TrainResult result = train(dataset, hp);

        double mse = 0.0;
        for (Eigen::Index i = 0; i < test.features.cols(); ++i) {
            const double err = result.model.forward(test.features.col(i)) - test.labels(i);
            mse += err * err;
        }
        mse /= static_cast<double>(test.features.cols());
        rows.push_back({size, samples, mse});
    }
    return rows;
}

SpectrumMetrics evaluate_spectrum(const ExperimentConfig &cfg, const SparsityRegressor &model) {
    SpectrumMetrics metrics;
    double abs_err = 0.0;
    for (Eigen::Index i = 0; i < cfg.spectrum.test_observations; ++i) {
        const SpectrumObservation obs = synth_spectrum_obs(cfg, "spectrum-test", i, cfg.spectrum.test_snr_db);
        ScatterRow row;
        row.sample = i;
        row.snr_db = cfg.spectrum.test_snr_db[static_cast<std::size_t>(i) % cfg.spectrum.test_snr_db.size()];
        row.label = *obs.occupied_band_count;
        row.predicted = estimate_spectrum_sparsity(obs, nullptr, model);
        row.raw = static_cast<double>(row.predicted);
        abs_err += std::abs(static_cast<double>(row.predicted - row.label));
        metrics.scatter.push_back(row);
    }
    metrics.mae = cfg.spectrum.test_observations > 0 ? abs_err / static_cast<double>(cfg.spectrum.test_observations) : 0.0;
    return metrics;
}

// ---------------------------------------------------------------------------
// eval command
// ---------------------------------------------------------------------------

namespace {

void write_scatter_csv(const fs::path &path, const std::vector<ScatterRow> &rows, const char *label_name) {
    std::ostringstream os;
    os << "sample,snr_db," << label_name << ",predicted,raw\n";
    for (const ScatterRow &r : rows)
        os << r.sample << ',' << format_double(r.snr_db) << ',' << r.label << ',' << r.predicted << ','
           << format_double(r.raw) << '\n';
    write_file_atomic(path, os.str());
}

} // namespace

EvalMetrics cmd_eval(const ExperimentConfig &cfg) {
    cfg.validate();
    const fs::path out(cfg.out_dir);
    const std::uint64_t hash = config_hash(cfg);

    RunManifest manifest;
    manifest.command = "eval";
    manifest.config_hash = hash;
    manifest.seed = cfg.seed;
    StageTimer timer{manifest};

    EvalMetrics metrics;

    if (cfg.channel_scenario()) {
        const ChannelArtifacts artifacts = load_channel_artifacts(cfg);

        timer.run("sparsity-scatter", [&] { metrics.scatter = evaluate_scatter(cfg, artifacts); });
        Eigen::Index considered = 0, exact = 0;
        double abs_err = 0.0;
        for (const ScatterRow &r : metrics.scatter) {
            if (r.label < 1 || r.label > 10)
                continue;
            ++considered;
            abs_err += std::abs(static_cast<double>(r.predicted - r.label));
            exact += r.predicted == r.label ? 1 : 0;
        }
        metrics.scatter_mae = considered > 0 ? abs_err / static_cast<double>(considered) : 0.0;
        metrics.scatter_exact_rate = considered > 0 ? static_cast<double>(exact) / static_cast<double>(considered) : 0.0;
        write_scatter_csv(out / "sparsity_scatter.csv", metrics.scatter, "label");

        timer.run("mse-vs-snr", [&] {
            for (double snr = cfg.eval.snr_min_db; snr <= cfg.eval.snr_max_db + 1e-9; snr += cfg.eval.snr_step_db) {
                const auto rows = evaluate_mse(cfg, artifacts, snr, cfg.eval.mse_realizations);
                metrics.mse_rows.insert(metrics.mse_rows.end(), rows.begin(), rows.end());
            }
        });
        {
            std::ostringstream os;
            os << "method,snr_db,seed,mse,estimated_sparsity\n";
            for (const MseRow &r : metrics.mse_rows) {
                os << r.method << ',' << format_double(r.snr_db) << ',' << r.seed << ',' << format_double(r.mse) << ',';
                if (r.estimated_sparsity)
                    os << *r.estimated_sparsity;
                os << '\n';
            }
            write_file_atomic(out / "mse_results.csv", os.str());

            // Aggregate means per (method, snr).
            std::map<std::pair<std::string, long long>, std::pair<double, Eigen::Index>> agg;
            for (const MseRow &r : metrics.mse_rows) {
                auto &cell = agg[{r.method, std::llround(r.snr_db * 1000.0)}];
                cell.first += r.mse;
                cell.second += 1;
            }
            std::ostringstream os2;
            os2 << "method,snr_db,mean_mse,realizations\n";
            for (const auto &[key, cell] : agg)
                os2 << key.first << ',' << format_double(static_cast<double>(key.second) / 1000.0) << ','
                    << format_double(cell.first / static_cast<double>(cell.second)) << ',' << cell.second << '\n';
            write_file_atomic(out / "mse_summary.csv", os2.str());
        }

        timer.run("train-size-sweep", [&] { metrics.sweep = evaluate_train_size_sweep(cfg, artifacts); });
        {
            std::ostringstream os;
            os << "train_systems,train_samples,test_mse\n";
            for (const SweepRow &r : metrics.sweep)
                os << r.train_systems << ',' << r.train_samples << ',' << format_double(r.test_mse) << '\n';
            write_file_atomic(out / "train_size_sweep.csv", os.str());
        }

        for (const char *name : {"sparsity_scatter.csv", "mse_results.csv", "mse_summary.csv", "train_size_sweep.csv"})
            add_output(manifest, out, name);
    } else {
        const fs::path model_path = out / kModel;
        if (!fs::exists(model_path))
            throw MissingArtifactError("missing trained model in " + out.string() + " (run train first)");
        const SparsityRegressor model = load_model(model_path);
        SpectrumMetrics spectrum;
        timer.run("spectrum-scatter", [&] { spectrum = evaluate_spectrum(cfg, model); });
        metrics.scatter = spectrum.scatter;
        metrics.spectrum_mae = spectrum.mae;
        write_scatter_csv(out / "spectrum_scatter.csv", spectrum.scatter, "true_bands");
        add_output(manifest, out, "spectrum_scatter.csv");
    }

    write_manifest(manifest_path(out, "eval"), manifest);
    return metrics;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

namespace {

struct BenchCell {
    std::string sweep;
    Eigen::Index n, k, s;
    Eigen::Index reps;
    double seconds_per_call;
};

double time_omp_cell(Eigen::Index n, Eigen::Index k, Eigen::Index s, std::uint64_t seed) {
    Rng rng(seed);
    CMat atoms(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i)
            atoms(i, j) = rng.complex_gaussian();
        atoms.col(j) /= atoms.col(j).norm();
    }
    CVec y = CVec::Zero(n);
    const auto support = rng.choose_distinct(static_cast<std::size_t>(k), static_cast<std::size_t>(s));
    for (std::size_t i : support)
        y += atoms.col(static_cast<Eigen::Index>(i)) * rng.complex_gaussian();

    // Warm up once, then repeat until the cell accumulates enough wall time.
    volatile double sink = omp(y, atoms, OmpStop::sparsity(s)).residual_norm;
    Eigen::Index reps = 0;
    const auto t0 = std::chrono::steady_clock::now();
    std::chrono::duration<double> elapsed{0.0};
    while (elapsed.count() < 0.05 || reps < 3) {
        sink = omp(y, atoms, OmpStop::sparsity(s)).residual_norm;
        ++reps;
        elapsed = std::chrono::steady_clock::now() - t0;
    }
    (void)sink;
    return elapsed.count() / static_cast<double>(reps);
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

void cmd_bench(const ExperimentConfig &cfg) {
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    RunManifest manifest;
    manifest.command = "bench";
    manifest.config_hash = config_hash(cfg);
    manifest.seed = cfg.seed;
    StageTimer timer{manifest};

    std::vector<BenchCell> cells;
    std::vector<double> n_vals, n_times, k_vals, k_times;
    timer.run("omp-n-sweep", [&] {
        for (Eigen::Index n : {64, 128, 256, 512}) {
            const double t = time_omp_cell(n, 512, 8, derive_seed(cfg.seed, "bench-n", static_cast<std::uint64_t>(n)));
            cells.push_back({"n", n, 512, 8, 0, t});
            n_vals.push_back(static_cast<double>(n));
            n_times.push_back(t);
        }
    });
    timer.run("omp-k-sweep", [&] {
        for (Eigen::Index k : {128, 256, 512, 1024}) {
            const double t = time_omp_cell(64, k, 8, derive_seed(cfg.seed, "bench-k", static_cast<std::uint64_t>(k)));
            cells.push_back({"k", 64, k, 8, 0, t});
            k_vals.push_back(static_cast<double>(k));
            k_times.push_back(t);
        }
    });
    std::vector<std::pair<Eigen::Index, double>> s_times;
    timer.run("omp-s-sweep", [&] {
        for (Eigen::Index s : {1, 2, 4, 8}) {
            const double t = time_omp_cell(64, 256, s, derive_seed(cfg.seed, "bench-s", static_cast<std::uint64_t>(s)));
            cells.push_back({"s", 64, 256, s, 0, t});
            s_times.emplace_back(s, t);
        }
    });

    double ksvd_seconds_per_iter = 0.0;
    timer.run("ksvd-timing", [&] {
        Rng rng(derive_seed(cfg.seed, "bench-ksvd"));
        const Eigen::Index n = 32, k = 64, l = 500, s = 4, num = 3;
        CMat y(n, l);
        for (Eigen::Index c = 0; c < l; ++c)
            for (Eigen::Index r = 0; r < n; ++r)
                y(r, c) = rng.complex_gaussian();
        Dictionary init;
        init.atoms = y.leftCols(k);
        const auto t0 = std::chrono::steady_clock::now();
        ksvd(y, init, s, num);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        ksvd_seconds_per_iter = dt.count() / static_cast<double>(num);
    });

    const double slope_n = loglog_slope(n_vals, n_times);
    const double slope_k = loglog_slope(k_vals, k_times);

    {
        std::ostringstream os;
        os << "sweep,n,k,s,seconds_per_call\n";
        for (const BenchCell &c : cells)
            os << c.sweep << ',' << c.n << ',' << c.k << ',' << c.s << ',' << format_double(c.seconds_per_call) << '\n';
        write_file_atomic(out / "bench_omp.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "OMP cost model\n";
        os << "  per-iteration: O(n*k + k*s + k*s^2 + s^3)\n";
        os << "  total at sparsity s: O(n*k*s + k*s^2 + k*s^3 + s^4)\n";
        os << "  memory: O(n*k)\n";
        os << "K-SVD cost model: O(Num*(s^2+n)*k*l)\n\n";
        os << "measured log-log slope in n (fixed k=512, s=8): " << format_double(slope_n) << " (model: 1)\n";
        os << "measured log-log slope in k (fixed n=64, s=8): " << format_double(slope_k) << " (model: 1)\n";
        os << "sparsity sweep at n=64, k=256 (seconds per call):\n";
        for (const auto &[s, t] : s_times)
            os << "  s=" << s << ": " << format_double(t) << "\n";
        os << "K-SVD seconds per iteration (n=32, k=64, l=500, s=4): " << format_double(ksvd_seconds_per_iter) << "\n";
        write_file_atomic(out / "bench_report.txt", os.str());
    }
    add_output(manifest, out, "bench_omp.csv");
    add_output(manifest, out, "bench_report.txt");
    write_manifest(manifest_path(out, "bench"), manifest);
}

// ---------------------------------------------------------------------------
// ingest-psd
// ---------------------------------------------------------------------------

void cmd_ingest(const ExperimentConfig &cfg) {
    if (cfg.spectrum.file.empty())
        throw ConfigError("ingest-psd: spectrum.file is not set in the config");
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    RunManifest manifest;
    manifest.command = "ingest-psd";
    manifest.config_hash = config_hash(cfg);
    manifest.seed = cfg.seed;
    StageTimer timer{manifest};

    PsdFile file;
    timer.run("ingest", [&] { file = ingest_psd(cfg.spectrum.file); });
    std::cerr << "[ingest-psd] " << file.observations.size() << " observations, " << file.bins << " bins of "
              << file.bin_width_hz << " Hz\n";

    {
        std::ostringstream os;
        os << "index,bins,mean_power,max_power" << (file.labeled ? ",label" : "") << "\n";
        for (std::size_t i = 0; i < file.observations.size(); ++i) {
            const SpectrumObservation &obs = file.observations[i];
            os << i << ',' << obs.bins() << ',' << format_double(obs.psd.mean()) << ','
               << format_double(obs.psd.maxCoeff());
            if (file.labeled)
                os << ',' << *obs.occupied_band_count;
            os << '\n';
        }
        write_file_atomic(out / "ingest_summary.csv", os.str());
    }
    add_output(manifest, out, "ingest_summary.csv");

    // Predictions are attached only when a trained model is available.
    if (fs::exists(out / kModel)) {
        const SparsityRegressor model = load_model(out / kModel);
        std::ostringstream os;
        os << "index,predicted\n";
        for (std::size_t i = 0; i < file.observations.size(); ++i)
            os << i << ',' << estimate_spectrum_sparsity(file.observations[i], nullptr, model) << '\n';
        write_file_atomic(out / "spectrum_predictions.csv", os.str());
        add_output(manifest, out, "spectrum_predictions.csv");
    }

    write_manifest(manifest_path(out, "ingest-psd"), manifest);
}

} // namespace cskit
