#include "charc/esn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "charc/error.hpp"
#include "charc/kernels.hpp"

namespace charc {

EsnParams EsnParams::from_matrices(std::size_t nodes, std::vector<double> w, std::vector<double> w_in)
{
    if (w.size() != nodes * nodes || w_in.size() != nodes * 2)
        throw ConfigError("ESN matrices do not match the node count");
    EsnParams p;
    p.nodes = nodes;
    p.raw_w = w;
    p.raw_w_in = w_in;
    p.w = std::move(w);
    p.w_in = std::move(w_in);
    return p;
}

std::size_t EsnParams::nonzero_weights() const
{
    return static_cast<std::size_t>(std::count_if(raw_w.begin(), raw_w.end(), [](double v) { return v != 0.0; }));
}

EsnParams decode_esn(const SubstrateSpec& spec, const Genotype& genotype)
{
    if (spec.kind != SubstrateKind::Esn) throw ConfigError("decode_esn called on a non-ESN spec");
    check_genotype(spec, genotype);
    const std::size_t n = spec.n_observables;
    const auto& genes = genotype.genes;

    EsnParams p;
    p.nodes = n;
    p.w_scale = spec.range("w_scale").decode(genes[spec.offset("w_scale")]);
    p.input_scale = spec.range("input_scale").decode(genes[spec.offset("input_scale")]);
    p.sparseness = spec.range("sparseness").decode(genes[spec.offset("sparseness")]);

    const GeneRange& wr = spec.range("w");
    const std::size_t w_off = spec.offset("w");
    const std::size_t conn_off = spec.offset("connectivity");
    p.raw_w.resize(n * n);
    for (std::size_t k = 0; k < n * n; ++k) p.raw_w[k] = wr.decode(genes[w_off + k]);

    // Keep exactly round((1 - sparseness) * n^2) connections: those with the
    // largest connectivity genes, ties to the lower index.
    const std::size_t total = n * n;
    const double keep_fraction = std::clamp(1.0 - p.sparseness, 0.0, 1.0);
    const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(total)));
    if (keep < total) {
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto stronger = [&](std::size_t a, std::size_t b) {
            const double ga = genes[conn_off + a], gb = genes[conn_off + b];
            return ga != gb ? ga > gb : a < b;
        };
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), stronger);
        for (std::size_t k = keep; k < total; ++k) p.raw_w[order[k]] = 0.0;
    }

    const GeneRange& ir = spec.range("w_in");
    const std::size_t in_off = spec.offset("w_in");
    p.raw_w_in.resize(n * 2);
    for (std::size_t k = 0; k < n * 2; ++k) p.raw_w_in[k] = ir.decode(genes[in_off + k]);

    p.w.resize(n * n);
    std::transform(p.raw_w.begin(), p.raw_w.end(), p.w.begin(), [&](double v) { return v * p.w_scale; });
    p.w_in.resize(n * 2);
    std::transform(p.raw_w_in.begin(), p.raw_w_in.end(), p.w_in.begin(), [&](double v) { return v * p.input_scale; });
    return p;
}

void esn_step(const EsnParams& params, std::span<const double> x_prev, double u, std::span<double> x)
{
    const std::size_t n = params.nodes;
    if (x_prev.size() != n || x.size() != n) throw ConfigError("esn_step: state size mismatch");
    kernels::active().gemv(params.w.data(), n, n, x_prev.data(), x.data());
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::tanh(x[i] + params.w_in[2 * i] * u + params.w_in[2 * i + 1]);
        if (!std::isfinite(x[i])) throw NumericalError("non-finite ESN state");
    }
}

std::vector<double> esn_step(const EsnParams& params, std::span<const double> x_prev, double u)
{
    std::vector<double> x(params.nodes);
    esn_step(params, x_prev, u, x);
    return x;
}

StateMatrix esn_run(const EsnParams& params, std::span<const double> input, std::size_t washout)
{
    if (washout >= input.size()) throw ConfigError("washout must be shorter than the input");
    const std::size_t n = params.nodes;
    StateMatrix states(input.size() - washout, n);
    std::vector<double> prev(n, 0.0), next(n, 0.0);
    for (std::size_t t = 0; t < input.size(); ++t) {
        esn_step(params, prev, input[t], next);
        if (t >= washout) std::copy(next.begin(), next.end(), states.row(t - washout).begin());
        std::swap(prev, next);
    }
    return states;
}

EsnSubstrate::EsnSubstrate(SubstrateSpec spec) : spec_(std::move(spec))
{
    if (spec_.kind != SubstrateKind::Esn) throw ConfigError("EsnSubstrate needs an ESN spec");
    spec_.validate();
}

StateMatrix EsnSubstrate::run(const Genotype& genotype, std::span<const double> input, std::size_t washout) const
{
    return esn_run(decode_esn(spec_, genotype), input, washout);
}

}  // namespace charc
