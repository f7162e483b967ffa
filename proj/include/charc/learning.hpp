#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "charc/measures.hpp"
#include "charc/quality.hpp"
#include "charc/rng.hpp"

namespace charc {

/// A behaviour and the task error measured for the same configuration.
struct BehaviourSample {
    BehaviourPoint behaviour;
    double nmse = 0.0;
};

struct TrainSpec {
    double train_fraction = 0.7;
    std::size_t epochs = 1000;
    std::size_t ensemble = 10;
    std::size_t hidden = 10;
    /// Stop when the training error has not improved for this many epochs.
    std::size_t stagnation_epochs = 100;
    /// Share of the training split held out per model for early stopping. 0 disables.
    double validation_fraction = 0.15;
    /// Consecutive epochs without a validation improvement before stopping.
    std::size_t max_fail = 6;
    /// Samples with NMSE above the threshold are dropped before splitting.
    std::optional<double> threshold;
    std::uint64_t seed = 1;

    void validate() const;
};

/// One-hidden-layer regressor (tanh hidden units, linear output) from z-scored
/// (KR, GR, MC) to predicted NMSE.
class PredictorModel {
public:
    PredictorModel() = default;
    PredictorModel(std::size_t hidden, std::array<double, 3> mean, std::array<double, 3> scale);

    std::size_t hidden() const { return hidden_; }
    std::size_t parameter_count() const { return 5 * hidden_ + 1; }

    double predict(const BehaviourPoint& b) const;
    std::vector<double> predict(std::span<const BehaviourSample> samples) const;

    /// Network output for already-normalised inputs; `grad` (optional, size
    /// parameter_count()) receives d output / d weights.
    double forward(const std::array<double, 3>& z, double* grad = nullptr) const;
    std::array<double, 3> normalise(const BehaviourPoint& b) const;

    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::array<double, 3>& input_mean() const { return mean_; }
    const std::array<double, 3>& input_scale() const { return scale_; }

    /// Flat weight record with normalisation constants, as JSON.
    std::string to_json() const;
    static PredictorModel from_json(const std::string& text);

private:
    std::size_t hidden_ = 0;
    std::array<double, 3> mean_{0, 0, 0};
    std::array<double, 3> scale_{1, 1, 1};
    // Layout: W1 (hidden x 3, row-major), b1 (hidden), w2 (hidden), b2.
    std::vector<double> weights_;
};

/// Fits one model on `train` by Levenberg-Marquardt on the mean squared error.
PredictorModel fit(std::span<const BehaviourSample> train, const TrainSpec& spec, Rng& rng);

/// Mean squared training error of ordinary least squares on [KR, GR, MC, 1].
double linear_baseline_mse(std::span<const BehaviourSample> train);

/// Root mean squared difference between predicted and actual NMSE.
double prediction_error(const PredictorModel& model, std::span<const BehaviourSample> test);

struct DataSplit {
    std::vector<BehaviourSample> train;
    std::vector<BehaviourSample> test;
};

/// Applies the threshold filter, shuffles with `spec.seed` and splits train/test.
DataSplit split_samples(std::span<const BehaviourSample> samples, const TrainSpec& spec);

struct EnsembleResult {
    DataSplit split;
    std::vector<PredictorModel> models;
    std::vector<double> test_error; ///< per model
    double mean_test_error = 0.0;
    std::size_t best = 0;           ///< index of the lowest test error
    Bounds training_box;            ///< behaviour range seen in training
};

/// Splits once and trains `spec.ensemble` models from different initial weights.
EnsembleResult fit_ensemble(std::span<const BehaviourSample> samples, const TrainSpec& spec);

struct TransferResult {
    double error = 0.0;      ///< best model's error on the other substrate's samples
    double best_self = 0.0;  ///< best model's error on its own test split
    double delta = 0.0;      ///< error - best_self
    bool extrapolated = false; ///< some sample lies outside the training box
};

TransferResult transfer_predict(const EnsembleResult& trained, std::span<const BehaviourSample> other);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> average_ranks(std::span<const double> v);

/// Rank correlation with a two-sided p-value: exact permutation for n <= 10,
/// Student-t approximation otherwise. Throws NumericalError for a constant input.
SpearmanResult spearman(std::span<const double> a, std::span<const double> b);

}  // namespace charc
