#include "charc/substrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "charc/delay_reservoir.hpp"
#include "charc/error.hpp"
#include "charc/esn.hpp"

namespace charc {

std::string_view to_string(SubstrateKind kind)
{
    switch (kind) {
    case SubstrateKind::Esn: return "esn";
    case SubstrateKind::DelayReservoir: return "dr";
    }
    return "unknown";
}

SubstrateKind substrate_kind_from_string(std::string_view name)
{
    if (name == "esn") return SubstrateKind::Esn;
    if (name == "dr" || name == "delay") return SubstrateKind::DelayReservoir;
    throw ConfigError("unknown substrate kind '" + std::string(name) + "' (expected esn or dr)");
}

double GeneRange::decode(double gene) const
{
    double v = lower + gene * (upper - lower);
    if (open_interval) v = std::clamp(v, lower + kOpenIntervalEpsilon, upper - kOpenIntervalEpsilon);
    return v;
}

SubstrateSpec SubstrateSpec::esn(std::size_t nodes)
{
    SubstrateSpec spec;
    spec.kind = SubstrateKind::Esn;
    spec.n_observables = nodes;
    spec.washout = 50;
    spec.ranges = {
        {"w", nodes * nodes, -0.5, 0.5},
        {"connectivity", nodes * nodes, 0.0, 1.0},
        {"w_in", nodes * 2, -1.0, 1.0},
        {"w_scale", 1, 0.0, 2.0},
        {"input_scale", 1, -1.0, 1.0},
        {"sparseness", 1, 0.0, 1.0},
    };
    return spec;
}

SubstrateSpec SubstrateSpec::delay_reservoir(std::size_t virtual_nodes)
{
    SubstrateSpec spec;
    spec.kind = SubstrateKind::DelayReservoir;
    spec.n_observables = virtual_nodes;
    spec.washout = 50;
    spec.ranges = {
        {"mask", virtual_nodes, -0.1, 0.1},
        {"eta", 1, 0.0, 1.0, true},
        {"gamma", 1, 0.0, 1.0, true},
        {"p", 1, 0.0, 20.0, true},
    };
    return spec;
}

std::size_t SubstrateSpec::gene_count() const
{
    return std::accumulate(ranges.begin(), ranges.end(), std::size_t{0},
                           [](std::size_t n, const GeneRange& r) { return n + r.count; });
}

std::size_t SubstrateSpec::offset(std::string_view block) const
{
    std::size_t off = 0;
    for (const auto& r : ranges) {
        if (r.name == block) return off;
        off += r.count;
    }
    throw ConfigError("substrate has no gene block '" + std::string(block) + "'");
}

const GeneRange& SubstrateSpec::range(std::string_view block) const
{
    for (const auto& r : ranges)
        if (r.name == block) return r;
    throw ConfigError("substrate has no gene block '" + std::string(block) + "'");
}

GeneRange& SubstrateSpec::range(std::string_view block)
{
    return const_cast<GeneRange&>(std::as_const(*this).range(block));
}

void SubstrateSpec::validate() const
{
    if (n_observables < 1) throw ConfigError("substrate needs at least one observable");
    for (const auto& r : ranges) {
        if (!(r.lower <= r.upper)) throw ConfigError("gene range '" + r.name + "' has lower > upper");
        if (r.open_interval && r.upper - r.lower <= 2 * kOpenIntervalEpsilon)
            throw ConfigError("open gene range '" + r.name + "' is empty");
    }
    if (kind == SubstrateKind::DelayReservoir) {
        if (!(delay.theta > 0)) throw ConfigError("delay reservoir theta must be positive");
        if (delay.steps_per_node < 1) throw ConfigError("delay reservoir needs at least one Euler step per node");
        if (delay.time_scale < delay.theta) throw ConfigError("delay reservoir requires T >= theta");
        if (range("mask").count != n_observables) throw ConfigError("mask length must equal the virtual node count");
    } else {
        if (range("w").count != n_observables * n_observables) throw ConfigError("ESN weight block does not match node count");
    }
}

Genotype random_genotype(const SubstrateSpec& spec, Rng& rng)
{
    Genotype g;
    g.genes.resize(spec.gene_count());
    for (auto& v : g.genes) v = rng.uniform();
    return g;
}

void check_genotype(const SubstrateSpec& spec, const Genotype& genotype)
{
    if (genotype.genes.size() != spec.gene_count())
        throw ConfigError("genotype has " + std::to_string(genotype.genes.size()) + " genes, spec expects " +
                          std::to_string(spec.gene_count()));
    for (double g : genotype.genes)
        if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("genotype gene outside [0, 1]");
}

Genotype mutate(const Genotype& genotype, double rate, Rng& rng)
{
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("mutation rate must lie in [0, 1]");
    Genotype child = genotype;
    for (auto& g : child.genes)
        if (rng.bernoulli(rate)) g = rng.uniform();
    return child;
}

Genotype infect(const Genotype& winner, const Genotype& loser, double recombination_rate, Rng& rng)
{
    if (!(recombination_rate >= 0.0 && recombination_rate <= 1.0))
        throw ConfigError("recombination rate must lie in [0, 1]");
    if (winner.genes.size() != loser.genes.size()) throw ConfigError("infect: parents come from different specs");
    Genotype child = loser;
    for (std::size_t i = 0; i < child.genes.size(); ++i)
        if (rng.bernoulli(recombination_rate)) child.genes[i] = winner.genes[i];
    return child;
}

bool StateMatrix::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

StateMatrix StateMatrix::drop_rows(std::size_t first) const
{
    if (first > rows_) throw ConfigError("cannot drop more rows than the state matrix holds");
    StateMatrix out(rows_ - first, cols_);
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), data_.end(), out.data_.begin());
    out.degenerate_ = degenerate_;
    return out;
}

std::unique_ptr<Substrate> make_substrate(const SubstrateSpec& spec)
{
    switch (spec.kind) {
    case SubstrateKind::Esn: return std::make_unique<EsnSubstrate>(spec);
    case SubstrateKind::DelayReservoir: return std::make_unique<DelayReservoirSubstrate>(spec);
    }
    throw ConfigError("unsupported substrate kind");
}

}  // namespace charc
