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

#include "cskit/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>

namespace cskit {

// ---------------------------------------------------------------------------
// Features and labels
// ---------------------------------------------------------------------------

const char *feature_encoding_name(FeatureEncoding enc) {
    switch (enc) {
    case FeatureEncoding::TransformPlusRaw:
        return "transform+raw";
    case FeatureEncoding::TransformOnly:
        return "transform";
    case FeatureEncoding::TransformSorted:
        return "transform-sorted";
    }
    return "transform";
}

FeatureEncoding feature_encoding_from_name(const std::string &name) {
    if (name == "transform+raw")
        return FeatureEncoding::TransformPlusRaw;
    if (name == "transform")
        return FeatureEncoding::TransformOnly;
    if (name == "transform-sorted")
        return FeatureEncoding::TransformSorted;
    throw ConfigError("unknown feature encoding: " + name);
}

Eigen::Index feature_dimension(Eigen::Index signal_dim, Eigen::Index transform_cols, FeatureEncoding enc) {
    switch (enc) {
    case FeatureEncoding::TransformPlusRaw:
        return transform_cols + 2 * signal_dim;
    case FeatureEncoding::TransformOnly:
        return transform_cols;
    case FeatureEncoding::TransformSorted:
        return transform_cols + 1;
    }
    return transform_cols;
}

RVec extract_features(const CVec &y, const CMat &transform_columns, FeatureEncoding enc) {
    if (transform_columns.rows() != y.size())
        throw std::invalid_argument("extract_features: transform row count must match signal length");
    const Eigen::Index k = transform_columns.cols();
    RVec v(feature_dimension(y.size(), k, enc));
    v.head(k) = (transform_columns.adjoint() * y).cwiseAbs();
    if (enc == FeatureEncoding::TransformSorted) {
        // Order statistics of the coefficient energies as a cumulative
        // normalized profile; the sparsity level is where this profile
        // crosses the energy threshold, so it becomes an explicit feature
        // coordinate. A trailing log-energy term keeps the absolute scale.
        RVec energy = v.head(k).cwiseAbs2();
        std::sort(energy.data(), energy.data() + k, std::greater<double>());
        const double total = energy.sum();
        double cum = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            cum += energy(i);
            v(i) = total > 0.0 ? cum / total : 0.0;
        }
        v(k) = std::log1p(total);
    } else if (enc == FeatureEncoding::TransformPlusRaw) {
        for (Eigen::Index t = 0; t < y.size(); ++t) {
            v(k + 2 * t) = y(t).real();
            v(k + 2 * t + 1) = y(t).imag();
        }
    }
    return v;
}

Eigen::Index label_sparsity(const CVec &y, const Dictionary &dict, double epsilon) {
    if (epsilon <= 0.0)
        throw std::invalid_argument("label_sparsity: tolerance must be positive");
    const SparseCode code = omp(y, dict.atoms, OmpStop::residual(epsilon));
    if (code.residual_norm > epsilon)
        std::cerr << "warning: label_sparsity: tolerance " << epsilon << " not reached (residual "
                  << code.residual_norm << " after " << code.sparsity() << " atoms)\n";
    return code.sparsity();
}

LabelCalibration calibrate_label_tolerance(const Dictionary &dict, const CMat &signals,
                                           const std::vector<Eigen::Index> &targets, double min_accuracy) {
    if (signals.cols() < 1)
        throw ConfigError("calibrate_label_tolerance: empty calibration set");
    if (static_cast<std::size_t>(signals.cols()) != targets.size())
        throw ConfigError("calibrate_label_tolerance: signal/target count mismatch");
    if (signals.rows() != dict.signal_dim())
        throw ConfigError("calibrate_label_tolerance: signal dimension mismatch");

    static const double grid[] = {0.5,  0.45, 0.4,  0.35, 0.3,   0.25,  0.2,  0.15, 0.12, 0.1,
                                  0.08, 0.06, 0.05, 0.04, 0.03,  0.02,  0.015, 0.01, 7e-3, 5e-3,
                                  3e-3, 2e-3, 1e-3, 5e-4, 1e-4,  1e-5,  1e-6};

    // One tolerance-stopped run per signal at the tightest grid point; the
    // residual trajectory then yields the label under every looser tolerance.
    const Eigen::Index cap = std::min<Eigen::Index>(dict.atom_count(), 4 * dict.signal_dim());
    std::vector<Eigen::Index> hits(std::size(grid), 0);
    for (Eigen::Index c = 0; c < signals.cols(); ++c) {
        const double norm = signals.col(c).norm();
        if (norm <= 0.0)
            continue;
        OmpStop stop;
        stop.max_sparsity = cap;
        stop.tolerance = grid[std::size(grid) - 1] * norm;
        const SparseCode code = omp(signals.col(c), dict.atoms, stop);
        for (std::size_t g = 0; g < std::size(grid); ++g) {
            Eigen::Index label = code.sparsity();
            for (std::size_t i = 0; i < code.residual_history.size(); ++i)
                if (code.residual_history[i] <= grid[g] * norm) {
                    label = static_cast<Eigen::Index>(i) + 1;
                    break;
                }
            if (label == targets[static_cast<std::size_t>(c)])
                ++hits[g];
        }
    }

    LabelCalibration best;
    best.accuracy = -1.0;
    for (std::size_t g = 0; g < std::size(grid); ++g) {
        const double acc = static_cast<double>(hits[g]) / static_cast<double>(signals.cols());
        if (acc > best.accuracy) { // grid is descending: ties keep the larger tolerance
            best.accuracy = acc;
            best.epsilon_rel = grid[g];
        }
    }
    if (best.accuracy < min_accuracy)
        std::cerr << "warning: calibrate_label_tolerance: best grid point reaches accuracy " << best.accuracy
                  << " (< " << min_accuracy << "); using eps_rel=" << best.epsilon_rel << "\n";
    return best;
}

// ---------------------------------------------------------------------------
// Regressor
// ---------------------------------------------------------------------------

namespace {

// Standardized-space forward pass over a batch (columns are samples).
Eigen::RowVectorXd forward_core(const SparsityRegressor &m, const RMat &x_std) {
    const Eigen::Index n = x_std.cols();
    RMat xb(x_std.rows() + 1, n);
    xb.topRows(x_std.rows()) = x_std;
    xb.row(x_std.rows()).setOnes();
    RMat z = (m.hidden * xb).array().tanh();
    RMat zb(z.rows() + 1, n);
    zb.topRows(z.rows()) = z;
    zb.row(z.rows()).setOnes();
    return (m.output * zb).row(0);
}

RVec standardize(const SparsityRegressor &m, const RVec &features) {
    if (m.feature_mean.size() == features.size() && m.feature_scale.size() == features.size())
        return (features - m.feature_mean).cwiseProduct(m.feature_scale);
    return features;
}

} // namespace

double SparsityRegressor::forward(const RVec &features) const {
    if (features.size() != input_dim())
        throw std::invalid_argument("SparsityRegressor::forward: feature dimension mismatch");
    const RVec x = standardize(*this, features);
    const double out = forward_core(*this, x)(0);
    return out * label_scale + label_mean;
}

SparsityRegressor make_regressor(Eigen::Index input_dim, Eigen::Index hidden_units, std::uint64_t seed) {
    if (input_dim < 1 || hidden_units < 1)
        throw ConfigError("make_regressor: dimensions must be positive");
    Rng rng(seed);
    SparsityRegressor m;
    m.hidden.resize(hidden_units, input_dim + 1);
    m.output.resize(1, hidden_units + 1);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim + 1));
    for (Eigen::Index i = 0; i < m.hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < m.hidden.cols(); ++j)
            m.hidden(i, j) = rng.uniform(-a1, a1);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_units + 1));
    for (Eigen::Index j = 0; j < m.output.cols(); ++j)
        m.output(0, j) = rng.uniform(-a2, a2);
    m.clamp_max = std::numeric_limits<Eigen::Index>::max();
    return m;
}

Eigen::Index predict_sparsity(const SparsityRegressor &model, const RVec &features) {
    const double raw = model.forward(features);
    // llround rounds half away from zero.
    auto rounded = static_cast<Eigen::Index>(std::llround(raw));
    return std::clamp<Eigen::Index>(rounded, 0, model.clamp_max);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

LabeledDataset split_dataset(RMat features, RVec targets, std::uint64_t seed, double train_ratio, double val_ratio) {
    if (features.cols() != targets.size())
        throw ConfigError("split_dataset: feature/target count mismatch");
    if (!(train_ratio > 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio < 1.0 + 1e-12))
        throw ConfigError("split_dataset: bad split ratios");

    LabeledDataset ds;
    ds.features = std::move(features);
    ds.targets = std::move(targets);

    std::map<long long, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < ds.targets.size(); ++i)
        groups[std::llround(ds.targets(i))].push_back(i);

    Rng rng(seed);
    for (auto &[label, idx] : groups) {
        // seeded Fisher-Yates within the label group
        for (std::size_t i = idx.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(idx[i - 1], idx[j]);
        }
        const auto g = static_cast<double>(idx.size());
        const double want[3] = {train_ratio * g, val_ratio * g, (1.0 - train_ratio - val_ratio) * g};
        Eigen::Index take[3];
        double frac[3];
        Eigen::Index assigned = 0;
        for (int p = 0; p < 3; ++p) {
            take[p] = static_cast<Eigen::Index>(std::floor(want[p]));
            frac[p] = want[p] - std::floor(want[p]);
            assigned += take[p];
        }
        // largest remainder; ties resolved train > val > test
        while (assigned < static_cast<Eigen::Index>(idx.size())) {
            int pick = 0;
            for (int p = 1; p < 3; ++p)
                if (frac[p] > frac[pick])
                    pick = p;
            ++take[pick];
            frac[pick] = -1.0;
            ++assigned;
        }
        std::size_t pos = 0;
        for (Eigen::Index i = 0; i < take[0]; ++i)
            ds.train_idx.push_back(idx[pos++]);
        for (Eigen::Index i = 0; i < take[1]; ++i)
            ds.val_idx.push_back(idx[pos++]);
        for (Eigen::Index i = 0; i < take[2]; ++i)
            ds.test_idx.push_back(idx[pos++]);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Gradient and training
// ---------------------------------------------------------------------------

RVec gradient(const SparsityRegressor &model, const RMat &features_std, const RVec &targets_std) {
    const Eigen::Index n = features_std.cols();
    const Eigen::Index p = model.input_dim();
    const Eigen::Index u = model.hidden_units();
    if (features_std.rows() != p || targets_std.size() != n)
        throw std::invalid_argument("gradient: batch dimensions do not match the model");

    RMat xb(p + 1, n);
    xb.topRows(p) = features_std;
    xb.row(p).setOnes();
    const RMat z = (model.hidden * xb).array().tanh();
    RMat zb(u + 1, n);
    zb.topRows(u) = z;
    zb.row(u).setOnes();
    const Eigen::RowVectorXd out = (model.output * zb).row(0);

    const Eigen::RowVectorXd resid = out - targets_std.transpose();
    const double scale = n > 0 ? 2.0 / static_cast<double>(n) : 0.0;
    const Eigen::RowVectorXd dout = scale * resid;

    const RMat g_output = dout * zb.transpose();                             // 1 x (u+1)
    const RMat dz = model.output.leftCols(u).transpose() * dout;             // u x n
    const RMat dzin = dz.cwiseProduct(RMat::Ones(u, n) - z.cwiseProduct(z)); // tanh'
    const RMat g_hidden = dzin * xb.transpose();                             // u x (p+1)

    RVec g(model.parameter_count());
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < u; ++i)
        for (Eigen::Index j = 0; j < p + 1; ++j)
            g(pos++) = g_hidden(i, j);
    for (Eigen::Index j = 0; j < u + 1; ++j)
        g(pos++) = g_output(0, j);
    return g;
}

double mse_loss(const SparsityRegressor &model, const RMat &features_std, const RVec &targets_std) {
    const Eigen::RowVectorXd out = forward_core(model, features_std);
    return (out.transpose() - targets_std).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, targets_std.size()));
}

namespace {

void apply_delta(SparsityRegressor &m, const RVec &delta) {
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < m.hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < m.hidden.cols(); ++j)
            m.hidden(i, j) -= delta(pos++);
    for (Eigen::Index j = 0; j < m.output.cols(); ++j)
        m.output(0, j) -= delta(pos++);
}

// Jacobian of the standardized network output w.r.t. all weights, one row per
// sample; layout matches gradient().
RMat output_jacobian(const SparsityRegressor &m, const RMat &xb, const RMat &z) {
    const Eigen::Index n = xb.cols();
    const Eigen::Index p = xb.rows() - 1;
    const Eigen::Index u = z.rows();
    RMat jac(n, m.parameter_count());
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < u; ++i) {
            const double dzin = m.output(0, i) * (1.0 - z(i, c) * z(i, c));
            for (Eigen::Index j = 0; j < p + 1; ++j)
                jac(c, pos++) = dzin * xb(j, c);
        }
        for (Eigen::Index i = 0; i < u; ++i)
            jac(c, pos++) = z(i, c);
        jac(c, pos++) = 1.0;
    }
    return jac;
}

} // namespace

TrainResult train(const LabeledDataset &dataset, const TrainingHyperparams &hp) {
    if (dataset.train_idx.empty())
        throw ConfigError("train: empty training split");
    if (hp.max_epochs < 1 || hp.learning_rate <= 0.0)
        throw ConfigError("train: max_epochs >= 1 and learning_rate > 0 required");
    if (hp.optimizer != "lm" && hp.optimizer != "gd")
        throw ConfigError("train: unknown optimizer '" + hp.optimizer + "'");

    const Eigen::Index p = dataset.features.rows();
    const auto n_train = static_cast<Eigen::Index>(dataset.train_idx.size());
    const auto n_val = static_cast<Eigen::Index>(dataset.val_idx.size());

    // Standardization statistics from the training split only.
    RVec mean = RVec::Zero(p);
    for (Eigen::Index i : dataset.train_idx)
        mean += dataset.features.col(i);
    mean /= static_cast<double>(n_train);
    RVec var = RVec::Zero(p);
    for (Eigen::Index i : dataset.train_idx)
        var += (dataset.features.col(i) - mean).cwiseAbs2();
    var /= static_cast<double>(n_train);
    RVec scale(p);
    for (Eigen::Index j = 0; j < p; ++j)
        scale(j) = var(j) > 1e-24 ? 1.0 / std::sqrt(var(j)) : 1.0;

    double label_mean = 0.0;
    for (Eigen::Index i : dataset.train_idx)
        label_mean += dataset.targets(i);
    label_mean /= static_cast<double>(n_train);
    double label_var = 0.0;
    for (Eigen::Index i : dataset.train_idx)
        label_var += (dataset.targets(i) - label_mean) * (dataset.targets(i) - label_mean);
    label_var /= static_cast<double>(n_train);
    const double label_scale = label_var > 1e-24 ? std::sqrt(label_var) : 1.0;

    auto build = [&](const std::vector<Eigen::Index> &idx, RMat &x, RVec &t) {
        x.resize(p, static_cast<Eigen::Index>(idx.size()));
        t.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            x.col(static_cast<Eigen::Index>(c)) = (dataset.features.col(idx[c]) - mean).cwiseProduct(scale);
            t(static_cast<Eigen::Index>(c)) = (dataset.targets(idx[c]) - label_mean) / label_scale;
        }
    };
    RMat x_train, x_val;
    RVec t_train, t_val;
    build(dataset.train_idx, x_train, t_train);
    build(dataset.val_idx, x_val, t_val);

    SparsityRegressor model = make_regressor(p, hp.hidden_units, hp.seed);
    model.feature_mean = mean;
    model.feature_scale = scale;
    model.label_mean = label_mean;
    model.label_scale = label_scale;

    TrainResult result;
    result.model = model;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::Index since_best = 0;
    double lambda = hp.lm_lambda_init;
    const double label_var_scale = label_scale * label_scale; // losses reported in label units

    for (Eigen::Index epoch = 0; epoch < hp.max_epochs; ++epoch) {
        if (hp.optimizer == "gd") {
            const RVec g = gradient(model, x_train, t_train);
            apply_delta(model, hp.learning_rate * g);
        } else {
            // One damped Gauss-Newton step with retries on the damping factor.
            RMat xb(p + 1, n_train);
            xb.topRows(p) = x_train;
            xb.row(p).setOnes();
            const RMat z = (model.hidden * xb).array().tanh();
            RMat zb(z.rows() + 1, n_train);
            zb.topRows(z.rows()) = z;
            zb.row(z.rows()).setOnes();
            const RVec resid = ((model.output * zb).row(0).transpose() - t_train);
            const double sse = resid.squaredNorm();

            const RMat jac = output_jacobian(model, xb, z);
            RMat jtj = RMat::Zero(jac.cols(), jac.cols());
            jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
            jtj = jtj.selfadjointView<Eigen::Lower>();
            const RVec jtr = jac.transpose() * resid;
            const RVec diag_floor =
                jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));

            bool accepted = false;
            for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
                RMat a = jtj;
                a.diagonal() += lambda * diag_floor;
                const RVec delta = a.ldlt().solve(jtr);
                SparsityRegressor trial = model;
                apply_delta(trial, delta);
                const double trial_sse = mse_loss(trial, x_train, t_train) * static_cast<double>(n_train);
                if (std::isfinite(trial_sse) && trial_sse < sse) {
                    model.hidden = trial.hidden;
                    model.output = trial.output;
                    lambda = std::max(lambda * hp.lm_lambda_down, 1e-12);
                    accepted = true;
                } else {
                    lambda = std::min(lambda * hp.lm_lambda_up, 1e14);
                }
            }
        }

        const double train_mse = mse_loss(model, x_train, t_train) * label_var_scale;
        const double val_mse = n_val > 0 ? mse_loss(model, x_val, t_val) * label_var_scale : train_mse;
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
            throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch) +
                                 " (train=" + std::to_string(train_mse) + ", val=" + std::to_string(val_mse) + ")");
        result.train_loss.push_back(train_mse);
        result.val_loss.push_back(val_mse);

        if (val_mse < best_val) {
            best_val = val_mse;
            result.best_epoch = epoch;
            result.model.hidden = model.hidden;
            result.model.output = model.output;
            since_best = 0;
        } else if (++since_best >= hp.patience) {
            break;
        }
    }
    return result;
}

} // namespace cskit
