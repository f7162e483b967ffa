#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "charc/substrate.hpp"

namespace charc {

/// Linear output layer y = w . [x; 1].
struct Readout {
    std::vector<double> weights; ///< n_observables state weights followed by the bias
    double lambda = 0.0;

    double predict(std::span<const double> state) const;
    std::vector<double> predict(const StateMatrix& states, std::size_t first_row = 0,
                                std::size_t last_row = static_cast<std::size_t>(-1)) const;
};

/// Ridge regression on bias-augmented states, factorised once so that many
/// targets and regularisation strengths can be solved cheaply. Uses the thin
/// SVD X = U S V^T, so w = V diag(s / (s^2 + lambda)) U^T y; with lambda = 0
/// this is the minimum-norm least-squares solution.
class RidgeSolver {
public:
    /// Factorises rows [first_row, last_row) of `states`.
    RidgeSolver(const StateMatrix& states, std::size_t first_row, std::size_t last_row);
    explicit RidgeSolver(const StateMatrix& states) : RidgeSolver(states, 0, states.rows()) {}

    std::size_t rows() const { return rows_; }

    /// `target` has one entry per factorised row.
    Readout solve(std::span<const double> target, double lambda) const;

private:
    std::size_t rows_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd s_;
    Eigen::MatrixXd v_;
};

/// Trains a readout on all rows of `states`. Requires equal lengths and lambda >= 0.
Readout train_readout(const StateMatrix& states, std::span<const double> target, double lambda);

/// Mean squared error divided by the (population) variance of `target`.
/// Throws NumericalError when the target has zero variance.
double nmse(std::span<const double> prediction, std::span<const double> target);

}  // namespace charc
