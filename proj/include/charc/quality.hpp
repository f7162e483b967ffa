#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "charc/measures.hpp"

namespace charc {

/// Voxel edge lengths along the KR, GR and MC axes.
struct VoxelSize {
    double kr = 10.0;
    double gr = 10.0;
    double mc = 10.0;

    static VoxelSize cube(double edge) { return {edge, edge, edge}; }
    void validate() const;
};

/// Axis-aligned box over the behaviour space.
struct Bounds {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};
    bool empty = true;

    void include(const BehaviourPoint& p);
    void include(std::span<const BehaviourPoint> points);
    bool contains(const BehaviourPoint& p) const;

    static Bounds of(std::span<const BehaviourPoint> points);
};

/// Number of distinct voxels holding at least one point. Cells are half-open
/// [lo + i*edge, lo + (i+1)*edge) except the last along each axis, which is
/// closed at hi. Throws ConfigError for points outside `bounds`.
std::size_t coverage(std::span<const BehaviourPoint> points, const VoxelSize& voxel, const Bounds& bounds);

/// Behaviour with the generation it was discovered in.
struct StampedBehaviour {
    BehaviourPoint behaviour;
    std::size_t generation = 0;
};

struct CoveragePoint {
    std::size_t generation = 0;
    std::size_t coverage = 0;
};

/// Coverage of everything discovered up to each multiple of `interval`, plus
/// the final generation. Non-decreasing; the last value equals coverage of the
/// whole database.
std::vector<CoveragePoint> coverage_curve(std::span<const StampedBehaviour> db, const VoxelSize& voxel,
                                          const Bounds& bounds, std::size_t interval = 200);

struct CoverageSummary {
    std::vector<std::size_t> per_run;
    double mean = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
    std::size_t pooled = 0; ///< coverage of the union of all runs
};

struct ComparisonReport {
    VoxelSize voxel;
    Bounds bounds; ///< shared bounding box over every compared run
    CoverageSummary test;
    CoverageSummary reference;
    double ratio = 0.0; ///< mean test coverage / mean reference coverage
};

/// Compares test and reference databases (one behaviour set per run) on a
/// common grid spanning the union of all of them.
ComparisonReport compare(const std::vector<std::vector<BehaviourPoint>>& test_runs,
                         const std::vector<std::vector<BehaviourPoint>>& reference_runs, const VoxelSize& voxel);

}  // namespace charc
