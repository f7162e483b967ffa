#include "charc/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include "json.hpp"

#include "charc/error.hpp"

namespace charc {

void TrainSpec::validate() const
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
    if (ensemble < 1) throw ConfigError("ensemble size must be at least 1");
    if (hidden < 1) throw ConfigError("predictor needs at least one hidden unit");
    if (epochs < 1) throw ConfigError("predictor needs at least one epoch");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in [0, 1)");
    if (validation_fraction > 0.0 && max_fail < 1) throw ConfigError("max_fail must be at least 1");
}

PredictorModel::PredictorModel(std::size_t hidden, std::array<double, 3> mean, std::array<double, 3> scale)
    : hidden_(hidden), mean_(mean), scale_(scale), weights_(5 * hidden + 1, 0.0)
{
}

std::array<double, 3> PredictorModel::normalise(const BehaviourPoint& b) const
{
    return {(b.kr - mean_[0]) / scale_[0], (b.gr - mean_[1]) / scale_[1], (b.mc - mean_[2]) / scale_[2]};
}

double PredictorModel::forward(const std::array<double, 3>& z, double* grad) const
{
    const std::size_t h = hidden_;
    const double* w1 = weights_.data();
    const double* b1 = w1 + 3 * h;
    const double* w2 = b1 + h;
    const double b2 = weights_[5 * h];
    double out = b2;
    for (std::size_t k = 0; k < h; ++k) {
        const double a = std::tanh(w1[3 * k] * z[0] + w1[3 * k + 1] * z[1] + w1[3 * k + 2] * z[2] + b1[k]);
        out += w2[k] * a;
        if (grad) {
            const double da = w2[k] * (1.0 - a * a);
            grad[3 * k] = da * z[0];
            grad[3 * k + 1] = da * z[1];
            grad[3 * k + 2] = da * z[2];
            grad[3 * h + k] = da;
            grad[4 * h + k] = a;
        }
    }
    if (grad) grad[5 * h] = 1.0;
    return out;
}

double PredictorModel::predict(const BehaviourPoint& b) const
{
    return forward(normalise(b));
}

std::vector<double> PredictorModel::predict(std::span<const BehaviourSample> samples) const
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(s.behaviour));
    return out;
}

std::string PredictorModel::to_json() const
{
    nlohmann::json j{{"format", "charc-predictor/1"}, {"hidden", hidden_}, {"input_mean", mean_},
                     {"input_scale", scale_}, {"weights", weights_}};
    return j.dump();
}

PredictorModel PredictorModel::from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "charc-predictor/1") throw DataError("not a predictor model record");
        PredictorModel m(j.at("hidden").get<std::size_t>(), j.at("input_mean").get<std::array<double, 3>>(),
                         j.at("input_scale").get<std::array<double, 3>>());
        m.weights_ = j.at("weights").get<std::vector<double>>();
        if (m.weights_.size() != m.parameter_count()) throw DataError("predictor weight count mismatch");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed predictor model: ") + e.what());
    }
}

namespace {

std::array<double, 3> as_array(const BehaviourPoint& b)
{
    return {b.kr, b.gr, b.mc};
}

double mse_of(const PredictorModel& m, const std::vector<std::array<double, 3>>& z, const std::vector<double>& y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = m.forward(z[i]) - y[i];
        s += r * r;
    }
    return s / static_cast<double>(z.size());
}

// Below this many training samples no validation subset is carved out.
constexpr std::size_t kMinValidatedSamples = 40;

}  // namespace

PredictorModel fit(std::span<const BehaviourSample> train, const TrainSpec& spec, Rng& rng)
{
    spec.validate();
    if (train.empty()) throw DataError("predictor training set is empty");
    const std::size_t n = train.size();

    std::array<double, 3> mean{0, 0, 0}, scale{0, 0, 0};
    for (const auto& s : train) {
        const auto v = as_array(s.behaviour);
        for (std::size_t a = 0; a < 3; ++a) mean[a] += v[a];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& s : train) {
        const auto v = as_array(s.behaviour);
        for (std::size_t a = 0; a < 3; ++a) scale[a] += (v[a] - mean[a]) * (v[a] - mean[a]);
    }
    for (auto& sc : scale) {
        sc = std::sqrt(sc / static_cast<double>(n));
        if (!(sc > 0.0)) sc = 1.0;
    }

    PredictorModel model(spec.hidden, mean, scale);
    const std::size_t h = spec.hidden;
    const std::size_t p = model.parameter_count();
    auto& w = model.weights();
    for (std::size_t k = 0; k < 4 * h; ++k) w[k] = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 4 * h; k < 5 * h; ++k) w[k] = rng.uniform(-0.5, 0.5);
    double target_mean = 0.0;
    for (const auto& s : train) target_mean += s.nmse;
    w[5 * h] = target_mean / static_cast<double>(n);

    // Fitting and validation subsets, drawn after the initial weights.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::size_t n_val = 0;
    if (spec.validation_fraction > 0.0 && n >= kMinValidatedSamples) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        n_val = std::max<std::size_t>(1, static_cast<std::size_t>(
                                             std::llround(spec.validation_fraction * static_cast<double>(n))));
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    }
    std::vector<std::array<double, 3>> z, zv;
    std::vector<double> y, yv;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = train[order[i]];
        if (i < n_val) {
            zv.push_back(model.normalise(s.behaviour));
            yv.push_back(s.nmse);
        } else {
            z.push_back(model.normalise(s.behaviour));
            y.push_back(s.nmse);
        }
    }
    const std::size_t m = z.size();

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
    Eigen::VectorXd res(static_cast<Eigen::Index>(m));
    std::vector<double> grad(p);
    double mu = 1e-3;
    double current = mse_of(model, z, y);
    double best = current;
    std::size_t since_improvement = 0;
    double best_val = n_val ? mse_of(model, zv, yv) : 0.0;
    std::vector<double> best_val_weights = w;
    std::size_t val_fails = 0;

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        for (std::size_t i = 0; i < m; ++i) {
            res(static_cast<Eigen::Index>(i)) = model.forward(z[i], grad.data()) - y[i];
            for (std::size_t k = 0; k < p; ++k)
                jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = grad[k];
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;
        if (jtr.norm() < 1e-14) break;

        const std::vector<double> saved = w;
        bool accepted = false;
        while (mu < 1e12) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += mu;
            const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
            for (std::size_t k = 0; k < p; ++k) w[k] = saved[k] + delta(static_cast<Eigen::Index>(k));
            const double trial = mse_of(model, z, y);
            if (std::isfinite(trial) && trial < current) {
                current = trial;
                mu = std::max(mu * 0.1, 1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if (!accepted) {
            w = saved;
            break;
        }
        if (n_val) {
            const double v = mse_of(model, zv, yv);
            if (v < best_val) {
                best_val = v;
                best_val_weights = w;
                val_fails = 0;
            } else if (++val_fails >= spec.max_fail) {
                break;
            }
        }
        if (current < best * (1.0 - 1e-9)) {
            best = current;
            since_improvement = 0;
        } else if (++since_improvement >= spec.stagnation_epochs) {
            break;
        }
        if (current < 1e-30) break;
    }
    if (n_val) w = best_val_weights;
    return model;
}

double linear_baseline_mse(std::span<const BehaviourSample> train)
{
    if (train.empty()) throw DataError("baseline needs samples");
    const auto n = static_cast<Eigen::Index>(train.size());
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = train[static_cast<std::size_t>(i)];
        x.row(i) << s.behaviour.kr, s.behaviour.gr, s.behaviour.mc, 1.0;
        y(i) = s.nmse;
    }
    const Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(y);
    return (x * beta - y).squaredNorm() / static_cast<double>(n);
}

double prediction_error(const PredictorModel& model, std::span<const BehaviourSample> test)
{
    if (test.empty()) throw DataError("prediction error needs a non-empty test set");
    double s = 0.0;
    for (const auto& t : test) {
        const double d = model.predict(t.behaviour) - t.nmse;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(test.size()));
}

DataSplit split_samples(std::span<const BehaviourSample> samples, const TrainSpec& spec)
{
    spec.validate();
    std::vector<BehaviourSample> kept;
    for (const auto& s : samples)
        if (!spec.threshold || s.nmse <= *spec.threshold) kept.push_back(s);
    Rng rng(derive_seed(spec.seed, 101));
    for (std::size_t i = kept.size(); i > 1; --i) std::swap(kept[i - 1], kept[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(kept.size())));
    DataSplit split;
    split.train.assign(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(kept.begin() + static_cast<std::ptrdiff_t>(n_train), kept.end());
    return split;
}

EnsembleResult fit_ensemble(std::span<const BehaviourSample> samples, const TrainSpec& spec)
{
    EnsembleResult r;
    r.split = split_samples(samples, spec);
    if (r.split.train.empty() || r.split.test.empty())
        throw DataError("too few samples for a train/test split after thresholding");
    for (const auto& s : r.split.train) r.training_box.include(s.behaviour);
    double best = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t m = 0; m < spec.ensemble; ++m) {
        Rng rng(derive_seed(spec.seed, 1000 + m));
        r.models.push_back(fit(r.split.train, spec, rng));
        const double pe = prediction_error(r.models.back(), r.split.test);
        r.test_error.push_back(pe);
        sum += pe;
        if (pe < best) {
            best = pe;
            r.best = m;
        }
    }
    r.mean_test_error = sum / static_cast<double>(spec.ensemble);
    return r;
}

TransferResult transfer_predict(const EnsembleResult& trained, std::span<const BehaviourSample> other)
{
    if (trained.models.empty()) throw ConfigError("transfer needs a trained ensemble");
    TransferResult t;
    const PredictorModel& model = trained.models[trained.best];
    t.error = prediction_error(model, other);
    t.best_self = trained.test_error[trained.best];
    t.delta = t.error - t.best_self;
    for (const auto& s : other)
        if (!trained.training_box.contains(s.behaviour)) {
            t.extrapolated = true;
            break;
        }
    return t;
}

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b)
{
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

SpearmanResult spearman(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 3) throw ConfigError("spearman needs two sequences of equal length >= 3");
    const auto all_equal = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    if (all_equal(a) || all_equal(b)) throw NumericalError("spearman is undefined for a constant sequence");

    const std::vector<double> ra = average_ranks(a);
    std::vector<double> rb = average_ranks(b);
    SpearmanResult r;
    r.rho = std::clamp(pearson(ra, rb), -1.0, 1.0);
    const std::size_t n = a.size();

    if (n <= 10) {
        std::sort(rb.begin(), rb.end());
        std::size_t extreme = 0, total = 0;
        const double observed = std::abs(r.rho) - 1e-12;
        do {
            ++total;
            if (std::abs(pearson(ra, rb)) >= observed) ++extreme;
        } while (std::next_permutation(rb.begin(), rb.end()));
        r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    } else if (std::abs(r.rho) >= 1.0) {
        r.p_value = 0.0;
    } else {
        const double dof = static_cast<double>(n - 2);
        const double t = r.rho * std::sqrt(dof / (1.0 - r.rho * r.rho));
        const boost::math::students_t dist(dof);
        r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    return r;
}

}  // namespace charc
