#include "charc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "charc/error.hpp"
#include "charc/kernels.hpp"

namespace charc {

double Readout::predict(std::span<const double> state) const
{
    if (state.size() + 1 != weights.size()) throw ConfigError("readout size does not match the state width");
    return kernels::active().dot(weights.data(), state.data(), state.size()) + weights.back();
}

std::vector<double> Readout::predict(const StateMatrix& states, std::size_t first_row, std::size_t last_row) const
{
    last_row = std::min(last_row, states.rows());
    std::vector<double> out;
    out.reserve(last_row > first_row ? last_row - first_row : 0);
    for (std::size_t t = first_row; t < last_row; ++t) out.push_back(predict(states.row(t)));
    return out;
}

RidgeSolver::RidgeSolver(const StateMatrix& states, std::size_t first_row, std::size_t last_row)
{
    if (first_row >= last_row || last_row > states.rows()) throw ConfigError("readout needs a non-empty row range");
    rows_ = last_row - first_row;
    const std::size_t n = states.cols();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(n + 1));
    for (std::size_t t = 0; t < rows_; ++t) {
        const auto row = states.row(first_row + t);
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = row[i];
        x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) = 1.0;
    }
    if (!x.allFinite()) throw NumericalError("readout states contain non-finite values");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_ = svd.matrixU();
    s_ = svd.singularValues();
    v_ = svd.matrixV();
}

Readout RidgeSolver::solve(std::span<const double> target, double lambda) const
{
    if (target.size() != rows_) throw ConfigError("readout target length does not match the state rows");
    if (!(lambda >= 0.0)) throw ConfigError("ridge parameter must be non-negative");
    const Eigen::Map<const Eigen::VectorXd> y(target.data(), static_cast<Eigen::Index>(target.size()));
    Eigen::VectorXd coeff = u_.transpose() * y;
    const double s_max = s_.size() > 0 ? s_(0) : 0.0;
    const double cutoff = s_max * std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max<Eigen::Index>(u_.rows(), v_.rows()));
    for (Eigen::Index i = 0; i < s_.size(); ++i) {
        const double s = s_(i);
        double f;
        if (lambda > 0.0)
            f = s / (s * s + lambda);
        else
            f = s > cutoff ? 1.0 / s : 0.0;
        coeff(i) *= f;
    }
    const Eigen::VectorXd w = v_ * coeff;
    Readout r;
    r.lambda = lambda;
    r.weights.assign(w.data(), w.data() + w.size());
    return r;
}

Readout train_readout(const StateMatrix& states, std::span<const double> target, double lambda)
{
    if (target.size() != states.rows()) throw ConfigError("states and target lengths differ");
    return RidgeSolver(states).solve(target, lambda);
}

double nmse(std::span<const double> prediction, std::span<const double> target)
{
    if (prediction.size() != target.size() || target.empty())
        throw ConfigError("nmse needs equal, non-zero lengths");
    const double n = static_cast<double>(target.size());
    double mean = 0.0;
    for (double v : target) mean += v;
    mean /= n;
    double var = 0.0, mse = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        var += (target[i] - mean) * (target[i] - mean);
        mse += (prediction[i] - target[i]) * (prediction[i] - target[i]);
    }
    var /= n;
    mse /= n;
    if (!(var > 0.0)) throw NumericalError("NMSE is undefined for a zero-variance target");
    return mse / var;
}

}  // namespace charc
