#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "charc/substrate.hpp"

namespace charc {

/// Decoded echo state network. Matrices are row-major and already include the
/// global scalings and the sparseness mask; the unscaled values are kept for
/// inspection. Output feedback is not modelled (W_fb is identically zero).
struct EsnParams {
    std::size_t nodes = 0;
    std::vector<double> w;        ///< nodes x nodes, effective internal weights
    std::vector<double> w_in;     ///< nodes x 2, effective [input, bias] weights
    std::vector<double> raw_w;    ///< masked, unscaled, in [-0.5, 0.5]
    std::vector<double> raw_w_in; ///< unscaled, in [-1, 1]
    double w_scale = 1.0;
    double input_scale = 1.0;
    double sparseness = 0.0;

    /// Builds parameters from explicit effective matrices (scales 1, no mask).
    static EsnParams from_matrices(std::size_t nodes, std::vector<double> w, std::vector<double> w_in);

    std::size_t nonzero_weights() const;
};

EsnParams decode_esn(const SubstrateSpec& spec, const Genotype& genotype);

/// x = tanh(W_in [u; 1] + W x_prev). `x` must not alias `x_prev`.
void esn_step(const EsnParams& params, std::span<const double> x_prev, double u, std::span<double> x);
std::vector<double> esn_step(const EsnParams& params, std::span<const double> x_prev, double u);

/// Drives a decoded network from the zero state; row t is the state after input t.
StateMatrix esn_run(const EsnParams& params, std::span<const double> input, std::size_t washout);

class EsnSubstrate final : public Substrate {
public:
    explicit EsnSubstrate(SubstrateSpec spec);

    std::size_t n_observables() const override { return spec_.n_observables; }
    std::size_t gene_count() const override { return spec_.gene_count(); }
    StateMatrix run(const Genotype& genotype, std::span<const double> input, std::size_t washout) const override;

    const SubstrateSpec& spec() const { return spec_; }

private:
    SubstrateSpec spec_;
};

}  // namespace charc
