#pragma once

// Substrate abstraction: anything that can be configured from a normalised
// genotype, driven by a scalar input sequence, and observed through a set of
// state variables. The simulated echo state network and the Mackey-Glass
// delay reservoir live in esn.hpp and delay_reservoir.hpp; hardware-backed
// substrates can implement the same interface.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "charc/rng.hpp"

namespace charc {

enum class SubstrateKind { Esn, DelayReservoir };

std::string_view to_string(SubstrateKind kind);
SubstrateKind substrate_kind_from_string(std::string_view name);

/// A contiguous block of genes sharing one decode range.
struct GeneRange {
    std::string name;
    std::size_t count = 0;
    double lower = 0.0;
    double upper = 1.0;
    /// Decoded values are kept strictly inside (lower, upper) by kOpenIntervalEpsilon.
    bool open_interval = false;

    /// Affine map of a normalised gene onto [lower, upper].
    double decode(double gene) const;
};

inline constexpr double kOpenIntervalEpsilon = 1e-6;

/// Fixed constants of the time-multiplexed delay reservoir. tau is derived as nodes * theta.
struct DelayConstants {
    double theta = 0.2;      ///< virtual node separation
    double time_scale = 1.0; ///< characteristic time T of the non-linear node
    std::size_t steps_per_node = 4;
};

struct SubstrateSpec {
    SubstrateKind kind = SubstrateKind::Esn;
    std::size_t n_observables = 0;
    std::vector<GeneRange> ranges;
    DelayConstants delay;
    std::size_t washout = 50;

    static SubstrateSpec esn(std::size_t nodes);
    static SubstrateSpec delay_reservoir(std::size_t virtual_nodes);

    std::size_t gene_count() const;
    /// Index of the first gene of the named block.
    std::size_t offset(std::string_view block) const;
    const GeneRange& range(std::string_view block) const;
    GeneRange& range(std::string_view block);

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Normalised genes in [0, 1]. The owning spec determines the layout.
struct Genotype {
    std::vector<double> genes;

    bool operator==(const Genotype&) const = default;
};

/// Uniform random genotype for the spec.
Genotype random_genotype(const SubstrateSpec& spec, Rng& rng);

/// Throws ConfigError unless the genotype matches the spec length and all genes lie in [0, 1].
void check_genotype(const SubstrateSpec& spec, const Genotype& genotype);

/// Each gene independently replaced by a fresh uniform draw with probability `rate`.
Genotype mutate(const Genotype& genotype, double rate, Rng& rng);

/// Horizontal gene transfer: each child gene is the winner's with probability
/// `recombination_rate`, otherwise the loser's.
Genotype infect(const Genotype& winner, const Genotype& loser, double recombination_rate, Rng& rng);

/// Time-major observations: row t holds the observable states at input step t.
class StateMatrix {
public:
    StateMatrix() = default;
    StateMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t t, std::size_t i) { return data_[t * cols_ + i]; }
    double operator()(std::size_t t, std::size_t i) const { return data_[t * cols_ + i]; }

    std::span<double> row(std::size_t t) { return {data_.data() + t * cols_, cols_}; }
    std::span<const double> row(std::size_t t) const { return {data_.data() + t * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Set when the substrate diverged; the contents are then meaningless.
    bool degenerate() const { return degenerate_; }
    void mark_degenerate() { degenerate_ = true; }

    bool all_finite() const;

    /// Copy of rows [first, rows()).
    StateMatrix drop_rows(std::size_t first) const;

    bool operator==(const StateMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
    bool degenerate_ = false;
};

/// A configurable dynamical system observed through `n_observables()` state variables.
///
/// Implementations must be immutable after construction so that `run` can be
/// called concurrently.
class Substrate {
public:
    virtual ~Substrate() = default;

    virtual std::size_t n_observables() const = 0;
    virtual std::size_t gene_count() const = 0;

    /// Drives the configured substrate with `input` and returns the states for
    /// steps washout..input.size()-1. Requires washout < input.size().
    virtual StateMatrix run(const Genotype& genotype, std::span<const double> input, std::size_t washout) const = 0;
};

std::unique_ptr<Substrate> make_substrate(const SubstrateSpec& spec);

}  // namespace charc
