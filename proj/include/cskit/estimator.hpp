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

#ifndef CSKIT_ESTIMATOR_HPP
#define CSKIT_ESTIMATOR_HPP

#include "cskit/common.hpp"
#include "cskit/dictionary.hpp"

namespace cskit {

// ---------------------------------------------------------------------------
// Features and labels
// ---------------------------------------------------------------------------

enum class FeatureEncoding {
    TransformPlusRaw, // [ |columns^H y| ; Re y0, Im y0, Re y1, Im y1, ... ]
    TransformOnly,    // [ |columns^H y| ]
    TransformSorted,  // |columns^H y| sorted descending (permutation-invariant)
};

const char *feature_encoding_name(FeatureEncoding enc);
FeatureEncoding feature_encoding_from_name(const std::string &name);

Eigen::Index feature_dimension(Eigen::Index signal_dim, Eigen::Index transform_cols, FeatureEncoding enc);

// Feature vector for sparsity regression: magnitudes of the inner products of
// y with the transform columns (a DFT basis or dictionary atoms), optionally
// concatenated with the real/imaginary interleaving of y itself.
RVec extract_features(const CVec &y, const CMat &transform_columns,
                      FeatureEncoding enc = FeatureEncoding::TransformPlusRaw);

// Ground-truth sparsity for training: the support size of a tolerance-stopped
// OMP of y over the dictionary (epsilon bounds the residual 2-norm). Logs a
// warning when the tolerance cannot be met with the available atoms.
Eigen::Index label_sparsity(const CVec &y, const Dictionary &dict, double epsilon);

struct LabelCalibration {
    double epsilon_rel = 1e-4; // residual tolerance as a fraction of ||y||
    double accuracy = 0.0;     // fraction of calibration signals labeled with their construction sparsity
};

// Pick the labeling tolerance from a dense grid of relative epsilons: the
// value under which tolerance-stopped OMP labels the calibration signals
// (noiseless synthetic channels, columns of `signals`) with their
// construction sparsity (`targets`) most often; ties favor the larger
// tolerance. Warns when the best grid point stays below `min_accuracy`.
LabelCalibration calibrate_label_tolerance(const Dictionary &dict, const CMat &signals,
                                           const std::vector<Eigen::Index> &targets, double min_accuracy = 0.99);

// ---------------------------------------------------------------------------
// Two-layer feed-forward regressor
// ---------------------------------------------------------------------------

// tanh hidden layer, linear output. Inputs are standardized and targets
// de-standardized inside the model, so callers always work with raw features
// and raw (label-valued) outputs.
struct SparsityRegressor {
    RMat hidden; // u x (p_in + 1), bias in the last column
    RMat output; // o x (u + 1), bias in the last column

    RVec feature_mean;  // p_in
    RVec feature_scale; // p_in, multiplicative (1/std)
    double label_mean = 0.0;
    double label_scale = 1.0; // std of the training labels

    Eigen::Index clamp_max = 0; // upper bound for rounded predictions

    // provenance
    std::string feature_encoding = "transform+raw";
    std::string feature_transform = "dft"; // "dft" or "dictionary"
    double label_epsilon_rel = 0.0;

    Eigen::Index input_dim() const { return hidden.cols() - 1; }
    Eigen::Index hidden_units() const { return hidden.rows(); }
    Eigen::Index output_dim() const { return output.rows(); }
    Eigen::Index parameter_count() const {
        return hidden_units() * (input_dim() + 1) + output_dim() * (hidden_units() + 1);
    }

    // Raw-feature input, label-space output.
    double forward(const RVec &features) const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight init, identity scaling.
SparsityRegressor make_regressor(Eigen::Index input_dim, Eigen::Index hidden_units, std::uint64_t seed);

// Forward pass, round half away from zero, clamp to [0, clamp_max].
Eigen::Index predict_sparsity(const SparsityRegressor &model, const RVec &features);

// ---------------------------------------------------------------------------
// Datasets and training
// ---------------------------------------------------------------------------

// Samples are stored column-wise: features is (p_in x N).
struct LabeledDataset {
    RMat features;
    RVec targets;
    std::vector<Eigen::Index> train_idx, val_idx, test_idx;

    Eigen::Index sample_count() const { return features.cols(); }
};

// Stratified 60/20/20 split: samples are grouped by integer label, each group
// shuffled (seeded) and apportioned by largest remainder, so the splits are
// disjoint, exhaustive, and label-balanced.
LabeledDataset split_dataset(RMat features, RVec targets, std::uint64_t seed, double train_ratio = 0.6,
                             double val_ratio = 0.2);

struct TrainingHyperparams {
    double learning_rate = 0.001; // gradient-descent step size
    Eigen::Index max_epochs = 60;
    Eigen::Index patience = 10; // early stop after this many epochs without val improvement
    Eigen::Index hidden_units = 10;
    std::string optimizer = "lm"; // "lm" (damped Gauss-Newton) or "gd"
    std::uint64_t seed = 1;

    double lm_lambda_init = 1e-2;
    double lm_lambda_up = 10.0;
    double lm_lambda_down = 0.1;
};

struct TrainResult {
    SparsityRegressor model; // state at the best validation epoch
    std::vector<double> train_loss; // per epoch, label-space MSE
    std::vector<double> val_loss;
    Eigen::Index best_epoch = 0; // index into the loss vectors
};

// Minimize MSE on the train split, track validation each epoch, return the
// best-validation model. Throws NumericalError on divergence.
TrainResult train(const LabeledDataset &dataset, const TrainingHyperparams &hp);

// Analytic gradient of the batch MSE with respect to all weights, flattened
// as [hidden row-major | output row-major]. Inputs are the model's
// standardized features and standardized targets (i.e. the training
// internals); exposed for verification.
RVec gradient(const SparsityRegressor &model, const RMat &features_std, const RVec &targets_std);

// Matching loss for the gradient above.
double mse_loss(const SparsityRegressor &model, const RMat &features_std, const RVec &targets_std);

} // namespace cskit

#endif
