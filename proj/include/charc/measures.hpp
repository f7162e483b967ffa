#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "charc/substrate.hpp"

namespace charc {

/// A point in the (kernel rank, generalisation rank, memory capacity) behaviour space.
struct BehaviourPoint {
    double kr = 0.0;
    double gr = 0.0;
    double mc = 0.0;
    bool degenerate = false;

    bool operator==(const BehaviourPoint&) const = default;
};

struct MeasureConfig {
    std::size_t streams = 0;       ///< m; 0 selects n_observables
    std::size_t stream_length = 0; ///< 0 selects 100 + washout
    std::size_t washout = 50;
    double gr_noise = 0.1;
    double svd_threshold = 1e-6;
    std::size_t mc_washout = 500;
    std::size_t mc_train = 1000;
    std::size_t mc_test = 1000;
    double readout_lambda = 1e-8;
    std::uint64_t seed = 1;

    std::size_t stream_count(const Substrate& substrate) const;
    std::size_t stream_len() const { return stream_length ? stream_length : 100 + washout; }
    void validate() const;
};

struct RankOutcome {
    std::size_t rank = 0;
    bool degenerate = false;
};

struct CapacityOutcome {
    double capacity = 0.0;
    std::vector<double> per_delay; ///< MC_k for k = 1..2N, each clamped to [0, 1]
    bool degenerate = false;
};

/// Number of singular values above threshold * largest singular value.
std::size_t effective_rank(const Eigen::MatrixXd& m, double threshold);

RankOutcome kernel_rank(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg);
RankOutcome generalisation_rank(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg);
CapacityOutcome memory_capacity(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg);

/// All three measures, each from its own fixed seed. Any degenerate
/// sub-measure yields the degenerate point (0, 0, 0).
BehaviourPoint behaviour(const Substrate& substrate, const Genotype& genotype, const MeasureConfig& cfg);

}  // namespace charc
