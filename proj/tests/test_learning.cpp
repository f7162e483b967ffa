#include "doctest.h"

#include <cmath>
#include <vector>

#include "charc/error.hpp"
#include "charc/learning.hpp"
#include "support.hpp"

using namespace charc;

namespace {

PredictorModel constant_model(double c)
{
    PredictorModel m(1, {0, 0, 0}, {1, 1, 1});
    m.weights().assign(m.parameter_count(), 0.0);
    m.weights().back() = c;
    return m;
}

std::vector<BehaviourSample> synthetic_pairs(Rng& rng, std::size_t n, double kr_max, double (*map)(const BehaviourPoint&))
{
    std::vector<BehaviourSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        BehaviourPoint b{std::floor(rng.uniform(0, kr_max)), std::floor(rng.uniform(0, kr_max)), rng.uniform(0, kr_max / 2), false};
        out.push_back({b, map(b)});
    }
    return out;
}

double linear_kr(const BehaviourPoint& b) { return 0.01 * b.kr; }

}  // namespace

TEST_CASE("prediction error hand values")
{
    const std::vector<BehaviourSample> exact{{{1, 2, 3, false}, 0.5}, {{4, 5, 6, false}, 0.5}};
    CHECK(prediction_error(constant_model(0.5), exact) == 0.0);
    const std::vector<BehaviourSample> offset{{{1, 2, 3, false}, 0.45}, {{4, 5, 6, false}, 0.45}, {{0, 0, 0, false}, 0.45}};
    CHECK(prediction_error(constant_model(0.5), offset) == doctest::Approx(0.05).epsilon(1e-12));
    const std::vector<BehaviourSample> five{{{0, 0, 0, false}, 0.1}, {{0, 0, 0, false}, 0.2}, {{0, 0, 0, false}, 0.3},
                                            {{0, 0, 0, false}, 0.4}, {{0, 0, 0, false}, 0.5}};
    CHECK(prediction_error(constant_model(0.5), five) == doctest::Approx(std::sqrt(0.06)).epsilon(1e-12));
    CHECK_THROWS(prediction_error(constant_model(0.5), std::vector<BehaviourSample>{}));
}

TEST_CASE("constant target is learned")
{
    Rng rng(1);
    auto pairs = synthetic_pairs(rng, 200, 30, [](const BehaviourPoint&) { return 0.42; });
    TrainSpec spec;
    spec.ensemble = 3;
    const auto r = fit_ensemble(pairs, spec);
    CHECK(r.models.size() == 3);
    CHECK(r.test_error[r.best] < 1e-4);
}

TEST_CASE("linear map NMSE = 0.01 KR is learned to RMSE below 0.01")
{
    Rng rng(2);
    const auto pairs = synthetic_pairs(rng, 400, 50, linear_kr);
    TrainSpec spec;
    const auto r = fit_ensemble(pairs, spec);
    CHECK(r.models.size() == 10);
    CHECK(r.mean_test_error < 0.01);
    CHECK(r.split.train.size() == 280);
    CHECK(r.split.test.size() == 120);
}

TEST_CASE("training reduces error below the linear baseline on a non-linear map")
{
    Rng rng(3);
    const auto pairs = synthetic_pairs(rng, 300, 40, [](const BehaviourPoint& b) {
        return std::exp(-b.mc / 5.0) + 0.2 * std::tanh((b.kr - 20.0) / 5.0);
    });
    TrainSpec spec;
    spec.ensemble = 1;
    Rng init(4);
    const auto model = fit(pairs, spec, init);
    double mse = 0.0;
    for (const auto& s : pairs) mse += std::pow(model.predict(s.behaviour) - s.nmse, 2);
    mse /= static_cast<double>(pairs.size());
    CHECK(mse < 0.5 * linear_baseline_mse(pairs));
}

TEST_CASE("fewer samples than parameters still fit")
{
    Rng rng(5);
    const auto pairs = synthetic_pairs(rng, 12, 20, linear_kr);
    TrainSpec spec;
    Rng init(6);
    const auto model = fit(pairs, spec, init);
    for (const auto& s : pairs) CHECK(std::isfinite(model.predict(s.behaviour)));
}

TEST_CASE("threshold filters before the split")
{
    std::vector<BehaviourSample> s;
    for (int i = 0; i < 100; ++i) s.push_back({{static_cast<double>(i), 0, 0, false}, i / 100.0});
    TrainSpec spec;
    spec.threshold = 0.295;
    const auto split = split_samples(s, spec);
    CHECK(split.train.size() + split.test.size() == 30);
    for (const auto& x : split.train) CHECK(x.nmse <= 0.295);
    const auto again = split_samples(s, spec);
    CHECK(again.train.size() == split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) CHECK(again.train[i].behaviour == split.train[i].behaviour);
}

TEST_CASE("transfer to the same substrate has zero delta")
{
    Rng rng(7);
    const auto pairs = synthetic_pairs(rng, 200, 30, linear_kr);
    TrainSpec spec;
    spec.ensemble = 4;
    const auto r = fit_ensemble(pairs, spec);
    const auto t = transfer_predict(r, r.split.test);
    CHECK(t.delta == 0.0);
    CHECK(t.error == t.best_self);
}

TEST_CASE("transfer between substrates sharing one map: small delta")
{
    Rng rng(8);
    const auto a = synthetic_pairs(rng, 300, 30, linear_kr);
    const auto b = synthetic_pairs(rng, 300, 30, linear_kr);
    TrainSpec spec;
    spec.ensemble = 3;
    const auto r = fit_ensemble(a, spec);
    const auto t = transfer_predict(r, split_samples(b, spec).test);
    CHECK(std::abs(t.delta) < 0.01);
}

TEST_CASE("behaviours beyond the training range are flagged")
{
    Rng rng(9);
    const auto small = synthetic_pairs(rng, 100, 10, linear_kr);
    const auto large = synthetic_pairs(rng, 100, 50, linear_kr);
    TrainSpec spec;
    spec.ensemble = 2;
    const auto r = fit_ensemble(small, spec);
    CHECK(transfer_predict(r, large).extrapolated);
    CHECK_FALSE(transfer_predict(r, r.split.train).extrapolated);
}

TEST_CASE("model serialisation round trip")
{
    Rng rng(10);
    const auto pairs = synthetic_pairs(rng, 60, 20, linear_kr);
    TrainSpec spec;
    Rng init(1);
    const auto m = fit(pairs, spec, init);
    const auto back = PredictorModel::from_json(m.to_json());
    CHECK(back.weights() == m.weights());
    for (const auto& s : pairs) CHECK(back.predict(s.behaviour) == m.predict(s.behaviour));
    CHECK_THROWS(PredictorModel::from_json("{\"format\":\"other\"}"));
}

TEST_CASE("spearman: monotone sequences and oracle agreement")
{
    const std::vector<double> up{1, 2, 3, 4, 5, 6}, down{6, 5, 4, 3, 2, 1}, other{0.1, 0.5, 0.7, 1.5, 2, 9};
    CHECK(spearman(up, other).rho == doctest::Approx(1.0));
    CHECK(spearman(up, down).rho == doctest::Approx(-1.0));
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> a(10), b(10);
        for (auto& v : a) v = std::floor(rng.uniform(0, 6)); // ties exercise average ranks
        for (auto& v : b) v = rng.uniform();
        if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; })) continue;
        CHECK(std::abs(spearman(a, b).rho - testing::rank_then_pearson(a, b)) < 1e-12);
    }
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < 40; ++i) {
        a[i] = rng.uniform();
        b[i] = a[i] + rng.uniform(-0.3, 0.3);
    }
    CHECK(std::abs(spearman(a, b).rho - testing::rank_then_pearson(a, b)) < 1e-12);
}

TEST_CASE("spearman p-values")
{
    const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10};
    CHECK(spearman(a, b).p_value == doctest::Approx(2.0 / 120.0));
    Rng rng(12);
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        x[i] = rng.uniform();
        y[i] = x[i] + rng.uniform(-0.5, 0.5);
    }
    CHECK(spearman(x, y).p_value < 1e-6);
    for (auto& v : y) v = rng.uniform();
    CHECK(spearman(x, y).p_value > 0.001);
    const std::vector<double> flat(5, 1.0);
    CHECK_THROWS_AS(spearman(a, flat), NumericalError);
}

TEST_CASE("average ranks share ties")
{
    const std::vector<double> v{10, 20, 20, 5};
    CHECK(average_ranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
}
