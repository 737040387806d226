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

#include <CLI11.hpp>

#include <iostream>

namespace {

// Exit codes: 0 success, 2 config error, 3 missing artifact, 4 numerical failure.
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool paper_scale = false;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides the config)");
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config)")->each([&](const std::string &) {
        opts.seed_set = true;
    });
    cmd->add_flag("--paper-scale", opts.paper_scale, "restore full-size simulation dimensions");
}

cskit::ExperimentConfig resolve_config(const CommonOptions &opts) {
    cskit::ExperimentConfig cfg;
    if (!opts.config_path.empty())
        cfg = cskit::load_config_file(opts.config_path);
    if (opts.paper_scale)
        cskit::apply_paper_scale(cfg);
    if (opts.seed_set)
        cfg.seed = opts.seed;
    if (!opts.out_dir.empty())
        cfg.out_dir = opts.out_dir;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"cskit - sparsity-aware channel and spectrum estimation experiments"};
    app.require_subcommand(1);

    CommonOptions gen_opts, train_opts, eval_opts, bench_opts, ingest_opts;
    std::string ingest_file;

    CLI::App *gen = app.add_subcommand("gen-data", "synthesize training and test datasets");
    add_common(gen, gen_opts);
    CLI::App *train = app.add_subcommand("train", "train the dictionary and the sparsity regressor");
    add_common(train, train_opts);
    CLI::App *eval = app.add_subcommand("eval", "run the experiment sweeps and export result CSVs");
    add_common(eval, eval_opts);
    CLI::App *bench = app.add_subcommand("bench", "time OMP and K-SVD against their cost models");
    add_common(bench, bench_opts);
    CLI::App *ingest = app.add_subcommand("ingest-psd", "parse a PSD CSV file and summarize it");
    add_common(ingest, ingest_opts);
    ingest->add_option("--file", ingest_file, "PSD CSV file (overrides spectrum.file)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            cskit::cmd_gen_data(resolve_config(gen_opts));
        } else if (train->parsed()) {
            cskit::cmd_train(resolve_config(train_opts));
        } else if (eval->parsed()) {
            const cskit::EvalMetrics metrics = cskit::cmd_eval(resolve_config(eval_opts));
            if (!metrics.scatter.empty())
                std::cout << "scatter rows: " << metrics.scatter.size() << ", mae=" << metrics.scatter_mae
                          << ", exact=" << metrics.scatter_exact_rate << "\n";
        } else if (bench->parsed()) {
            cskit::cmd_bench(resolve_config(bench_opts));
        } else if (ingest->parsed()) {
            cskit::ExperimentConfig cfg = resolve_config(ingest_opts);
            if (!ingest_file.empty())
                cfg.spectrum.file = ingest_file;
            cskit::cmd_ingest(cfg);
        }
    } catch (const cskit::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cskit::ParseError &e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cskit::MissingArtifactError &e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kExitMissing;
    } catch (const cskit::NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
