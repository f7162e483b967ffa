#include "charc/measures.hpp"

#include <algorithm>
#include <cmath>

#include "charc/error.hpp"
#include "charc/readout.hpp"

namespace charc {

namespace {

enum Salt : std::uint64_t { kKernelSalt = 11, kGeneralisationSalt = 12, kMemorySalt = 13 };

/// Runs one stream per column and stacks the final post-washout states.
RankOutcome rank_of_final_states(const Substrate& substrate, const Genotype& genotype,
                                 const std::vector<std::vector<double>>& streams, const MeasureConfig& cfg)
{
    const std::size_t n = substrate.n_observables();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(streams.size()));
    for (std::size_t j = 0; j < streams.size(); ++j) {
        const StateMatrix states = substrate.run(genotype, streams[j], cfg.washout);
        if (states.degenerate() || states.rows() == 0) return {0, true};
        const auto last = states.row(states.rows() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(last[i])) return {0, true};
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = last[i];
        }
    }
    return {effective_rank(m, cfg.svd_threshold), false};
}

double mean_of(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::size_t MeasureConfig::stream_count(const Substrate& substrate) const
{
    return streams ? streams : substrate.n_observables();
}

void MeasureConfig::validate() const
{
    if (stream_len() <= washout) throw ConfigError("measure stream length must exceed the washout");
    if (!(svd_threshold > 0.0)) throw ConfigError("SVD threshold must be positive");
    if (gr_noise < 0.0) throw ConfigError("generalisation noise amplitude must be non-negative");
    if (mc_train < 2 || mc_test < 2) throw ConfigError("memory capacity needs at least two train and test samples");
    if (readout_lambda < 0.0) throw ConfigError("readout lambda must be non-negative");
}

std::size_t effective_rank(const Eigen::MatrixXd& m, double threshold)
{
    if (m.size() == 0) return 0;
    const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
    if (s.size() == 0 || !(s(0) > 0.0)) return 0;
    const double cut = threshold * s(0);
    return static_cast<std::size_t>(std::count_if(s.data(), s.data() + s.size(), [&](double v) { return v > cut; }));
}

RankOutcome kernel_rank(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg)
{
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, kKernelSalt));
    std::vector<std::vector<double>> streams(cfg.stream_count(substrate), std::vector<double>(cfg.stream_len()));
    for (auto& s : streams)
        for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    return rank_of_final_states(substrate, genotype, streams, cfg);
}

RankOutcome generalisation_rank(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg)
{
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, kGeneralisationSalt));
    std::vector<double> base(cfg.stream_len());
    for (auto& v : base) v = rng.uniform(-1.0, 1.0);
    std::vector<std::vector<double>> streams(cfg.stream_count(substrate), base);
    // Stream 0 is the clean base; the others are noisy copies of it.
    for (std::size_t j = 1; j < streams.size(); ++j)
        for (auto& v : streams[j]) v += rng.uniform(-cfg.gr_noise, cfg.gr_noise);
    return rank_of_final_states(substrate, genotype, streams, cfg);
}

CapacityOutcome memory_capacity(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg)
{
    cfg.validate();
    const std::size_t max_delay = 2 * substrate.n_observables();
    const std::size_t prefix = std::max(cfg.mc_washout, max_delay);
    const std::size_t total = prefix + cfg.mc_train + cfg.mc_test;

    Rng rng(derive_seed(cfg.seed, kMemorySalt));
    std::vector<double> u(total);
    for (auto& v : u) v = rng.uniform();

    const StateMatrix states = substrate.run(genotype, u, prefix);
    CapacityOutcome out;
    if (states.degenerate() || !states.all_finite()) {
        out.degenerate = true;
        return out;
    }

    const RidgeSolver solver(states, 0, cfg.mc_train);
    std::vector<double> target(cfg.mc_train);
    out.per_delay.assign(max_delay, 0.0);
    for (std::size_t k = 1; k <= max_delay; ++k) {
        for (std::size_t t = 0; t < cfg.mc_train; ++t) target[t] = u[prefix + t - k];
        const Readout readout = solver.solve(target, cfg.readout_lambda);

        const std::span<const double> delayed(u.data() + prefix + cfg.mc_train - k, cfg.mc_test);
        const std::vector<double> y = readout.predict(states, cfg.mc_train, cfg.mc_train + cfg.mc_test);
        const double mu = mean_of(delayed), my = mean_of(y);
        double cov = 0.0, vu = 0.0, vy = 0.0;
        for (std::size_t t = 0; t < cfg.mc_test; ++t) {
            const double a = delayed[t] - mu, b = y[t] - my;
            cov += a * b;
            vu += a * a;
            vy += b * b;
        }
        const bool flat = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
        double mck = 0.0;
        if (!flat && vu > 0.0 && vy > 0.0) mck = (cov * cov) / (vu * vy);
        if (!std::isfinite(mck)) mck = 0.0;
        out.per_delay[k - 1] = std::clamp(mck, 0.0, 1.0);
    }
    for (double v : out.per_delay) out.capacity += v;
    return out;
}

BehaviourPoint behaviour(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg)
{
    const RankOutcome kr = kernel_rank(substrate, genotype, cfg);
    if (kr.degenerate) return {0, 0, 0, true};
    const RankOutcome gr = generalisation_rank(substrate, genotype, cfg);
    if (gr.degenerate) return {0, 0, 0, true};
    const CapacityOutcome mc = memory_capacity(substrate, genotype, cfg);
    if (mc.degenerate) return {0, 0, 0, true};
    return {static_cast<double>(kr.rank), static_cast<double>(gr.rank), mc.capacity, false};
}

}  // namespace charc
