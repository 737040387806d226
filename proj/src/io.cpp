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

#include "cskit/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cskit {

namespace {

void write_bytes(std::ostream &os, const void *p, std::size_t n) {
    os.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
}

void write_u64(std::ostream &os, std::uint64_t v) { write_bytes(os, &v, sizeof v); }
void write_i64(std::ostream &os, std::int64_t v) { write_bytes(os, &v, sizeof v); }
void write_f64(std::ostream &os, double v) { write_bytes(os, &v, sizeof v); }

void write_string(std::ostream &os, const std::string &s) {
    write_u64(os, s.size());
    write_bytes(os, s.data(), s.size());
}

struct Reader {
    std::ifstream in;
    std::filesystem::path path;

    explicit Reader(const std::filesystem::path &p) : path(p) {
        in.open(p, std::ios::binary);
        if (!in)
            throw MissingArtifactError("cannot open " + p.string());
    }

    void bytes(void *p, std::size_t n) {
        in.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw ParseError("truncated file: " + path.string());
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::int64_t i64() {
        std::int64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string string() {
        const std::uint64_t n = u64();
        if (n > (1ull << 20))
            throw ParseError("implausible string length in " + path.string());
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    void expect_magic(const char (&magic)[9]) {
        char buf[8];
        bytes(buf, 8);
        if (std::string_view(buf, 8) != std::string_view(magic, 8))
            throw ParseError("bad magic in " + path.string());
    }
};

// Interleaved re/im doubles, row-major.
void write_cmat_rowmajor(std::ostream &os, const CMat &m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            write_f64(os, m(r, c).real());
            write_f64(os, m(r, c).imag());
        }
}

CMat read_cmat_rowmajor(Reader &rd, Eigen::Index rows, Eigen::Index cols) {
    CMat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double re = rd.f64();
            const double im = rd.f64();
            m(r, c) = cxd(re, im);
        }
    return m;
}

void write_rvec(std::ostream &os, const RVec &v) {
    write_i64(os, v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        write_f64(os, v(i));
}

RVec read_rvec(Reader &rd) {
    const std::int64_t n = rd.i64();
    if (n < 0 || n > (1ll << 28))
        throw ParseError("implausible vector length in " + rd.path.string());
    RVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rd.f64();
    return v;
}

std::ofstream open_out(const std::filesystem::path &path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    return os;
}

} // namespace

// --- channel realizations ----------------------------------------------------

void save_realizations(const std::filesystem::path &path, const std::vector<ChannelRealization> &realizations,
                       std::uint64_t config_hash, std::uint64_t seed) {
    std::ofstream os = open_out(path);
    os.write("CSKCHAN1", 8);
    write_u64(os, config_hash);
    write_u64(os, seed);
    write_u64(os, realizations.size());
    for (const ChannelRealization &r : realizations) {
        write_string(os, r.model);
        write_i64(os, r.cfr.rows());
        write_i64(os, r.cfr.cols());
        write_i64(os, r.true_sparsity);
        write_i64(os, r.component_count);
        write_i64(os, r.guard_band);
        write_i64(os, r.delay_extent);
        write_u64(os, r.seed);
        write_cmat_rowmajor(os, r.cfr);
        write_cmat_rowmajor(os, r.cir);
    }
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

RealizationFile load_realizations(const std::filesystem::path &path) {
    Reader rd(path);
    rd.expect_magic("CSKCHAN1");
    RealizationFile file;
    file.config_hash = rd.u64();
    file.seed = rd.u64();
    const std::uint64_t count = rd.u64();
    if (count > (1ull << 24))
        throw ParseError("implausible realization count in " + path.string());
    file.realizations.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ChannelRealization r;
        r.model = rd.string();
        const std::int64_t rows = rd.i64();
        const std::int64_t cols = rd.i64();
        if (rows < 1 || cols < 1 || rows * cols > (1ll << 26))
            throw ParseError("implausible grid shape in " + path.string());
        r.true_sparsity = rd.i64();
        r.component_count = rd.i64();
        r.guard_band = rd.i64();
        r.delay_extent = rd.i64();
        r.seed = rd.u64();
        r.cfr = read_cmat_rowmajor(rd, rows, cols);
        r.cir = read_cmat_rowmajor(rd, rows, cols);
        file.realizations.push_back(std::move(r));
    }
    return file;
}

void export_realization_metadata_csv(const std::filesystem::path &path,
                                     const std::vector<ChannelRealization> &realizations,
                                     const std::string &config_id) {
    std::ostringstream os;
    os << "index,model,true_sparsity,seed,config_id\n";
    for (std::size_t i = 0; i < realizations.size(); ++i) {
        const ChannelRealization &r = realizations[i];
        os << i << ',' << r.model << ',' << r.true_sparsity << ',' << r.seed << ',' << config_id << '\n';
    }
    write_file_atomic(path, os.str());
}

// --- dictionaries --------------------------------------------------------------

void save_dictionary(const std::filesystem::path &path, const Dictionary &dict) {
    std::ofstream os = open_out(path);
    os.write("CSKDICT1", 8);
    write_i64(os, dict.signal_dim());
    write_i64(os, dict.atom_count());
    write_string(os, dict.provenance.init_scheme);
    write_i64(os, dict.provenance.iterations);
    write_i64(os, dict.provenance.target_sparsity);
    write_string(os, dict.provenance.training_set_id);
    // column-major complex doubles
    for (Eigen::Index c = 0; c < dict.atom_count(); ++c)
        for (Eigen::Index r = 0; r < dict.signal_dim(); ++r) {
            write_f64(os, dict.atoms(r, c).real());
            write_f64(os, dict.atoms(r, c).imag());
        }
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

Dictionary load_dictionary(const std::filesystem::path &path) {
    Reader rd(path);
    rd.expect_magic("CSKDICT1");
    Dictionary dict;
    const std::int64_t n = rd.i64();
    const std::int64_t k = rd.i64();
    if (n < 1 || k < 1 || n * k > (1ll << 26))
        throw ParseError("implausible dictionary shape in " + path.string());
    dict.provenance.init_scheme = rd.string();
    dict.provenance.iterations = rd.i64();
    dict.provenance.target_sparsity = rd.i64();
    dict.provenance.training_set_id = rd.string();
    dict.atoms.resize(n, k);
    for (Eigen::Index c = 0; c < k; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
            const double re = rd.f64();
            const double im = rd.f64();
            dict.atoms(r, c) = cxd(re, im);
        }
    return dict;
}

// --- regressor models ------------------------------------------------------------

void save_model(const std::filesystem::path &path, const SparsityRegressor &model) {
    std::ofstream os = open_out(path);
    os.write("CSKMODL1", 8);
    write_i64(os, model.input_dim());
    write_i64(os, model.hidden_units());
    write_i64(os, model.output_dim());
    write_string(os, "tanh");   // hidden activation
    write_string(os, "linear"); // output activation
    for (Eigen::Index i = 0; i < model.hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < model.hidden.cols(); ++j)
            write_f64(os, model.hidden(i, j));
    for (Eigen::Index i = 0; i < model.output.rows(); ++i)
        for (Eigen::Index j = 0; j < model.output.cols(); ++j)
            write_f64(os, model.output(i, j));
    write_rvec(os, model.feature_mean);
    write_rvec(os, model.feature_scale);
    write_f64(os, model.label_mean);
    write_f64(os, model.label_scale);
    write_i64(os, model.clamp_max);
    write_string(os, model.feature_encoding);
    write_string(os, model.feature_transform);
    write_f64(os, model.label_epsilon_rel);
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

SparsityRegressor load_model(const std::filesystem::path &path) {
    Reader rd(path);
    rd.expect_magic("CSKMODL1");
    const std::int64_t p = rd.i64();
    const std::int64_t u = rd.i64();
    const std::int64_t o = rd.i64();
    if (p < 1 || u < 1 || o < 1 || p > (1ll << 24) || u > (1ll << 16) || o > (1ll << 8))
        throw ParseError("implausible model shape in " + path.string());
    const std::string hidden_act = rd.string();
    const std::string output_act = rd.string();
    if (hidden_act != "tanh" || output_act != "linear")
        throw ParseError("unsupported activations in " + path.string());
    SparsityRegressor m;
    m.hidden.resize(u, p + 1);
    m.output.resize(o, u + 1);
    for (Eigen::Index i = 0; i < m.hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < m.hidden.cols(); ++j)
            m.hidden(i, j) = rd.f64();
    for (Eigen::Index i = 0; i < m.output.rows(); ++i)
        for (Eigen::Index j = 0; j < m.output.cols(); ++j)
            m.output(i, j) = rd.f64();
    m.feature_mean = read_rvec(rd);
    m.feature_scale = read_rvec(rd);
    m.label_mean = rd.f64();
    m.label_scale = rd.f64();
    m.clamp_max = rd.i64();
    m.feature_encoding = rd.string();
    m.feature_transform = rd.string();
    m.label_epsilon_rel = rd.f64();
    return m;
}

// --- misc ------------------------------------------------------------------------

std::uint64_t file_fingerprint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingArtifactError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw std::runtime_error("cannot write " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os)
            throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace cskit
