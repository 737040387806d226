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

#include "cskit/experiment.hpp"
#include "cskit/io.hpp"

#include <filesystem>
#include <fstream>

using namespace cskit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small end-to-end configuration that runs in seconds.
ExperimentConfig tiny_config(const std::string &dir) {
    ExperimentConfig cfg;
    cfg.out_dir = dir;
    cfg.seed = 7;
    cfg.vcm.max_aoas = 8;
    cfg.vcm.max_aods = 8;
    cfg.vcm.subcarriers = 32;
    cfg.vcm.num_symbols = 8;
    cfg.vcm.max_delays = 16;
    cfg.vcm.delay_spread_bins = 16;
    cfg.vcm.angular_sparsity_max = 4;
    cfg.vcm.dd_sparsity_max = 6;
    cfg.dictionary.atoms = 48;
    cfg.dictionary.target_sparsity = 6;
    cfg.dictionary.iterations = 4;
    cfg.dictionary.train_realizations = 30;
    cfg.dictionary.domain_realizations = 12;
    cfg.estimator.train_systems = 60;
    cfg.estimator.test_systems = 10;
    cfg.estimator.users_per_system = 2;
    cfg.estimator.max_epochs = 15;
    cfg.estimator.calibration_trials = 40;
    cfg.eval.mse_realizations = 3;
    cfg.eval.train_size_sweep = {8, 16};
    cfg.eval.sweep_test_systems = 10;
    cfg.eval.sweep_max_epochs = 8;
    return cfg;
}

int line_count(const std::string &text) {
    int lines = 0;
    for (char c : text)
        lines += c == '\n' ? 1 : 0;
    return lines;
}

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / "cskit_experiment_tests" / name;
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("config serialization is a fixed point of parse-then-serialize") {
    ExperimentConfig cfg;
    cfg.scenario = "channel-gscm";
    cfg.seed = 99;
    cfg.estimator.train_snr_db = {1.5, 2.25};
    cfg.vcm.placement = SparsityPlacement::Union;
    const std::string once = serialize_config(cfg);
    const std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);

    const ExperimentConfig back = parse_config(once);
    CHECK(back.scenario == "channel-gscm");
    CHECK(back.seed == 99);
    CHECK(back.vcm.placement == SparsityPlacement::Union);
    CHECK(back.estimator.train_snr_db == std::vector<double>{1.5, 2.25});
}

TEST_CASE("config hash is independent of the output directory") {
    ExperimentConfig a, b;
    a.out_dir = "runs/x";
    b.out_dir = "runs/y";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = a.seed + 1;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("bad configurations raise ConfigError") {
    CHECK_THROWS_AS((void)parse_config("{\"scenario\": \"bogus\"}"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("not json"), ConfigError);
    ExperimentConfig cfg;
    cfg.eval.snr_step_db = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("paper scale restores the full-size dimensions") {
    ExperimentConfig cfg;
    apply_paper_scale(cfg);
    CHECK(cfg.vcm.max_aoas == 50);
    CHECK(cfg.vcm.max_aods == 50);
    CHECK(cfg.vcm.subcarriers == 128);
    CHECK(cfg.vcm.guard_band == 32);
    CHECK(cfg.vcm.max_delays == 9);
    CHECK(cfg.pilot_separation == 4);
    CHECK(cfg.dictionary.atoms == 256);
    CHECK(cfg.dictionary.train_realizations == 1000);
    CHECK(cfg.estimator.train_systems * cfg.estimator.users_per_system == 22400);
    cfg.validate();
}

TEST_CASE("manifests round-trip and detect tampering") {
    const fs::path dir = scratch("manifest");
    fs::create_directories(dir);
    write_file_atomic(dir / "artifact.bin", "payload");

    RunManifest m;
    m.command = "train";
    m.config_hash = 0xabc123;
    m.seed = 4;
    m.timings.emplace_back("stage-a", 1.25);
    m.outputs.emplace_back("artifact.bin", file_fingerprint(dir / "artifact.bin"));
    write_manifest(dir / "train_manifest.json", m);

    const RunManifest back = read_manifest(dir / "train_manifest.json");
    CHECK(back.command == "train");
    CHECK(back.config_hash == 0xabc123);
    CHECK(back.timings.size() == 1);
    CHECK(back.outputs.size() == 1);
    CHECK(manifest_valid(dir, "train", 0xabc123));
    CHECK_FALSE(manifest_valid(dir, "train", 0xdef456));

    write_file_atomic(dir / "artifact.bin", "tampered");
    CHECK_FALSE(manifest_valid(dir, "train", 0xabc123));
}

TEST_CASE("gen-data is deterministic and supports empty datasets") {
    ExperimentConfig a = tiny_config((scratch("det_a")).string());
    ExperimentConfig b = tiny_config((scratch("det_b")).string());
    cmd_gen_data(a);
    cmd_gen_data(b);
    for (const char *name : {"dict_general.chan", "dict_angle.chan", "est_train.chan", "est_train_meta.csv"})
        CHECK(slurp(fs::path(a.out_dir) / name) == slurp(fs::path(b.out_dir) / name));

    ExperimentConfig empty = tiny_config((scratch("det_empty")).string());
    empty.dictionary.train_realizations = 0;
    empty.dictionary.domain_realizations = 0;
    empty.estimator.train_systems = 0;
    empty.estimator.test_systems = 0;
    cmd_gen_data(empty);
    const RealizationFile file = load_realizations(fs::path(empty.out_dir) / "est_train.chan");
    CHECK(file.realizations.empty());
    CHECK(file.seed == empty.seed);
    CHECK(line_count(slurp(fs::path(empty.out_dir) / "est_train_meta.csv")) == 1); // header only
}

TEST_CASE("end-to-end tiny run: train, artifacts, eval outputs") {
    ExperimentConfig cfg = tiny_config((scratch("e2e")).string());
    cmd_gen_data(cfg);
    cmd_train(cfg);

    const fs::path out(cfg.out_dir);
    REQUIRE(fs::exists(out / "dictionary.dict"));
    REQUIRE(fs::exists(out / "model.bin"));
    REQUIRE(fs::exists(out / "loss.csv"));
    REQUIRE(fs::exists(out / "ksvd_objective.csv"));

    SUBCASE("dictionary invariants hold") {
        const Dictionary dict = load_dictionary(out / "dictionary.dict");
        CHECK(dict.atom_count() == cfg.dictionary.atoms);
        for (Eigen::Index j = 0; j < dict.atom_count(); ++j)
            CHECK(dict.atoms.col(j).norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(coherence(dict) < 1.0 - 1e-8);
        CHECK(dict.provenance.init_scheme == "multidomain");
        CHECK(dict.provenance.iterations == cfg.dictionary.iterations);
    }

    SUBCASE("K-SVD objective trace is monotone") {
        const std::string text = slurp(out / "ksvd_objective.csv");
        std::stringstream ss(text);
        std::string line;
        std::getline(ss, line); // header
        double prev = std::numeric_limits<double>::infinity();
        int rows = 0;
        while (std::getline(ss, line)) {
            const double v = std::stod(line.substr(line.find(',') + 1));
            CHECK(v <= prev * (1.0 + 1e-9) + 1e-30);
            prev = v;
            ++rows;
        }
        CHECK(rows == cfg.dictionary.iterations + 1);
    }

    SUBCASE("loss CSV has one row per epoch with train and validation columns") {
        const std::string text = slurp(out / "loss.csv");
        std::stringstream ss(text);
        std::string line;
        std::getline(ss, line);
        CHECK(line == "epoch,train_mse,val_mse");
        int rows = 0;
        double first_val = -1, best_val = std::numeric_limits<double>::infinity();
        while (std::getline(ss, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            REQUIRE(c2 != std::string::npos);
            const double val = std::stod(line.substr(c2 + 1));
            if (rows == 0)
                first_val = val;
            best_val = std::min(best_val, val);
            ++rows;
        }
        CHECK(rows >= 1);
        CHECK(rows <= cfg.estimator.max_epochs);
        CHECK(best_val <= first_val); // best epoch no worse than the first
    }

    SUBCASE("rerunning train skips work and leaves artifacts untouched") {
        const std::uint64_t dict_fp = file_fingerprint(out / "dictionary.dict");
        const std::uint64_t model_fp = file_fingerprint(out / "model.bin");
        cmd_train(cfg); // manifest is valid: no-op
        CHECK(file_fingerprint(out / "dictionary.dict") == dict_fp);
        CHECK(file_fingerprint(out / "model.bin") == model_fp);
    }

    SUBCASE("saved model reproduces predictions bit-exactly") {
        const ChannelArtifacts art = load_channel_artifacts(cfg);
        const SparsityRegressor reloaded = load_model(out / "model.bin");
        Rng rng(3);
        RVec v(art.model.input_dim());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v(i) = rng.uniform(0.0, 1.0);
        CHECK(art.model.forward(v) == reloaded.forward(v));
        CHECK(predict_sparsity(art.model, v) == predict_sparsity(reloaded, v));
    }

    SUBCASE("eval emits the documented CSVs with the right shapes") {
        const EvalMetrics metrics = cmd_eval(cfg);
        REQUIRE(fs::exists(out / "sparsity_scatter.csv"));
        REQUIRE(fs::exists(out / "mse_results.csv"));
        REQUIRE(fs::exists(out / "mse_summary.csv"));
        REQUIRE(fs::exists(out / "train_size_sweep.csv"));

        // scatter row count equals the held-out sample count
        const int scatter_rows = line_count(slurp(out / "sparsity_scatter.csv")) - 1;
        CHECK(scatter_rows == static_cast<int>(metrics.scatter.size()));
        CHECK(scatter_rows == cfg.estimator.test_systems * cfg.estimator.users_per_system);

        // 11 SNR points (-20..0 step 2) x 4 methods in the summary
        const std::string summary = slurp(out / "mse_summary.csv");
        CHECK(line_count(summary) - 1 == 11 * 4);

        // results schema: method,snr_db,seed,mse,estimated_sparsity
        const std::string results = slurp(out / "mse_results.csv");
        std::stringstream ss(results);
        std::string header;
        std::getline(ss, header);
        CHECK(header == "method,snr_db,seed,mse,estimated_sparsity");
        CHECK(line_count(results) - 1 == 11 * 4 * cfg.eval.mse_realizations);

        CHECK(line_count(slurp(out / "train_size_sweep.csv")) - 1 ==
              static_cast<int>(cfg.eval.train_size_sweep.size()));
        CHECK(manifest_valid(fs::path(cfg.out_dir), "eval", config_hash(cfg)));
    }

    SUBCASE("mismatched artifacts are reported explicitly") {
        ExperimentConfig other = cfg;
        other.vcm.subcarriers = 16;
        other.vcm.max_delays = 8;
        other.vcm.delay_spread_bins = 8;
        CHECK_THROWS_AS((void)load_channel_artifacts(other), ConfigError);
    }
}

TEST_CASE("missing datasets and artifacts raise MissingArtifactError") {
    ExperimentConfig cfg = tiny_config((scratch("missing")).string());
    CHECK_THROWS_AS(cmd_train(cfg), MissingArtifactError);
    CHECK_THROWS_AS((void)load_channel_artifacts(cfg), MissingArtifactError);
}

TEST_CASE("spectrum scenario end-to-end at tiny scale") {
    ExperimentConfig cfg;
    cfg.scenario = "spectrum-synthetic";
    cfg.out_dir = (scratch("spectrum")).string();
    cfg.seed = 13;
    cfg.spectrum.bins = 64;
    cfg.spectrum.band_max = 4;
    cfg.spectrum.width_min = 4;
    cfg.spectrum.width_max = 6;
    cfg.spectrum.train_observations = 300;
    cfg.spectrum.test_observations = 60;
    cfg.estimator.max_epochs = 20;
    cmd_gen_data(cfg);
    cmd_train(cfg);
    const EvalMetrics metrics = cmd_eval(cfg);
    CHECK(metrics.scatter.size() == 60);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "spectrum_scatter.csv"));
    CHECK(metrics.spectrum_mae < 2.5); // tiny corpus sanity bound only

    // ingest-psd summarizes the generated file and predicts with the model
    cfg.spectrum.file = (fs::path(cfg.out_dir) / "spectrum_test.csv").string();
    cmd_ingest(cfg);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "ingest_summary.csv"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "spectrum_predictions.csv"));
    CHECK(line_count(slurp(fs::path(cfg.out_dir) / "spectrum_predictions.csv")) - 1 == 60);
}

#ifdef CSKIT_CLI_PATH
TEST_CASE("CLI exit codes follow the documented contract") {
    const std::string cli = CSKIT_CLI_PATH;
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);

    // 2: config error (unreadable config file)
    int rc = std::system((cli + " gen-data --config /nonexistent.json >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // 2: parse error in an existing config
    write_file_atomic(dir / "bad.json", "{broken");
    rc = std::system((cli + " gen-data --config " + (dir / "bad.json").string() + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    // 3: missing artifacts for train
    write_file_atomic(dir / "ok.json", serialize_config(tiny_config((dir / "run").string())));
    rc = std::system((cli + " train --config " + (dir / "ok.json").string() + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 3);

    // 0: gen-data succeeds
    rc = std::system((cli + " gen-data --config " + (dir / "ok.json").string() + " >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 0);
}
#endif
