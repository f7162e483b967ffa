#include "charc/delay_reservoir.hpp"

#include <cmath>

#include "charc/error.hpp"

namespace charc {

DrParams decode_dr(const SubstrateSpec& spec, const Genotype& genotype)
{
    if (spec.kind != SubstrateKind::DelayReservoir) throw ConfigError("decode_dr called on a non-delay-reservoir spec");
    check_genotype(spec, genotype);
    const auto& genes = genotype.genes;

    DrParams p;
    p.eta = spec.range("eta").decode(genes[spec.offset("eta")]);
    p.gamma = spec.range("gamma").decode(genes[spec.offset("gamma")]);
    p.p = spec.range("p").decode(genes[spec.offset("p")]);

    const GeneRange& mr = spec.range("mask");
    const std::size_t mask_off = spec.offset("mask");
    p.mask.resize(mr.count);
    for (std::size_t i = 0; i < mr.count; ++i) p.mask[i] = genes[mask_off + i] >= 0.5 ? mr.upper : mr.lower;

    p.theta = spec.delay.theta;
    p.time_scale = spec.delay.time_scale;
    p.steps_per_node = spec.delay.steps_per_node;
    return p;
}

double mackey_glass_rhs(const DrParams& params, double x, double delayed, double drive)
{
    const double z = delayed + params.gamma * drive;
    return (-x + params.eta * z / (1.0 + std::pow(std::abs(z), params.p))) / params.time_scale;
}

StateMatrix dr_integrate(const DrParams& params, std::span<const double> input)
{
    const std::size_t nodes = params.nodes();
    const std::size_t sub = params.steps_per_node;
    if (nodes == 0 || sub == 0) throw ConfigError("delay reservoir needs nodes and Euler steps");
    const double h = params.step();
    const std::size_t delay_steps = nodes * sub;

    StateMatrix states(input.size(), nodes);
    // Slot k % delay_steps holds X at step k - delay_steps until step k overwrites it.
    std::vector<double> history(delay_steps, 0.0);
    double x = 0.0;
    std::size_t k = 0;
    for (std::size_t t = 0; t < input.size(); ++t) {
        const double u = input[t];
        if (!std::isfinite(u)) throw ConfigError("delay reservoir input must be finite");
        for (std::size_t node = 0; node < nodes; ++node) {
            const double drive = u * params.mask[node];
            for (std::size_t s = 0; s < sub; ++s, ++k) {
                double& slot = history[k % delay_steps];
                const double delayed = slot;
                slot = x;
                x += h * mackey_glass_rhs(params, x, delayed, drive);
            }
            if (!std::isfinite(x)) {
                states.mark_degenerate();
                return states;
            }
            states(t, node) = x;
        }
    }
    return states;
}

DelayReservoirSubstrate::DelayReservoirSubstrate(SubstrateSpec spec) : spec_(std::move(spec))
{
    if (spec_.kind != SubstrateKind::DelayReservoir) throw ConfigError("DelayReservoirSubstrate needs a delay spec");
    spec_.validate();
}

StateMatrix DelayReservoirSubstrate::run(const Genotype& genotype, std::span<const double> input, std::size_t washout) const
{
    if (washout >= input.size()) throw ConfigError("washout must be shorter than the input");
    StateMatrix full = dr_integrate(decode_dr(spec_, genotype), input);
    return full.drop_rows(washout);
}

}  // namespace charc
