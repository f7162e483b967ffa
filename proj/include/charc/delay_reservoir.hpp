#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "charc/substrate.hpp"

namespace charc {

/// Decoded Mackey-Glass delay reservoir with a single delay line of length
/// tau = nodes * theta, time-multiplexed into `nodes` virtual nodes.
struct DrParams {
    double eta = 0.5;   ///< feedback strength, (0, 1)
    double gamma = 0.5; ///< input scaling, (0, 1)
    double p = 1.0;     ///< non-linearity exponent, (0, 20)
    std::vector<double> mask; ///< one entry per virtual node, each -0.1 or +0.1
    double theta = 0.2;
    double time_scale = 1.0;
    std::size_t steps_per_node = 4;

    std::size_t nodes() const { return mask.size(); }
    double tau() const { return static_cast<double>(mask.size()) * theta; }
    double step() const { return theta / static_cast<double>(steps_per_node); }
};

DrParams decode_dr(const SubstrateSpec& spec, const Genotype& genotype);

/// Right-hand side of the delayed feedback node:
/// dX/dt = (-X + eta * z / (1 + |z|^p)) / T with z = X(t - tau) + gamma * J(t).
double mackey_glass_rhs(const DrParams& params, double x, double delayed, double drive);

/// Integrates the delay differential equation with explicit Euler steps of
/// theta / steps_per_node from a zero history. Each input sample is held for
/// one delay period; row k holds the virtual node states sampled at the end
/// of each theta slot during the k-th period. A diverging trajectory yields a
/// matrix marked degenerate.
StateMatrix dr_integrate(const DrParams& params, std::span<const double> input);

class DelayReservoirSubstrate final : public Substrate {
public:
    explicit DelayReservoirSubstrate(SubstrateSpec spec);

    std::size_t n_observables() const override { return spec_.n_observables; }
    std::size_t gene_count() const override { return spec_.gene_count(); }
    StateMatrix run(const Genotype& genotype, std::span<const double> input, std::size_t washout) const override;

    const SubstrateSpec& spec() const { return spec_; }

private:
    SubstrateSpec spec_;
};

}  // namespace charc
