#include "charc/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "charc/error.hpp"

namespace charc {

void VoxelSize::validate() const
{
    if (!(kr > 0 && gr > 0 && mc > 0)) throw ConfigError("voxel edges must be positive");
}

void Bounds::include(const BehaviourPoint& p)
{
    const std::array<double, 3> v{p.kr, p.gr, p.mc};
    for (std::size_t a = 0; a < 3; ++a) {
        if (empty) {
            lo[a] = hi[a] = v[a];
        } else {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    }
    empty = false;
}

void Bounds::include(std::span<const BehaviourPoint> points)
{
    for (const auto& p : points) include(p);
}

bool Bounds::contains(const BehaviourPoint& p) const
{
    const std::array<double, 3> v{p.kr, p.gr, p.mc};
    if (empty) return false;
    for (std::size_t a = 0; a < 3; ++a)
        if (!(v[a] >= lo[a] && v[a] <= hi[a])) return false;
    return true;
}

Bounds Bounds::of(std::span<const BehaviourPoint> points)
{
    Bounds b;
    b.include(points);
    return b;
}

namespace {

struct CellHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& c) const noexcept
    {
        std::uint64_t h = 1469598103934665603ULL;
        for (auto v : c) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
        return static_cast<std::size_t>(h);
    }
};

class Grid {
public:
    Grid(const VoxelSize& voxel, const Bounds& bounds) : bounds_(bounds), edge_{voxel.kr, voxel.gr, voxel.mc}
    {
        voxel.validate();
        for (std::size_t a = 0; a < 3; ++a) {
            const double cells = bounds.empty ? 1.0 : std::ceil((bounds.hi[a] - bounds.lo[a]) / edge_[a]);
            last_[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(cells)) - 1;
        }
    }

    std::array<std::int64_t, 3> cell(const BehaviourPoint& p) const
    {
        if (!bounds_.contains(p)) throw ConfigError("behaviour lies outside the voxel grid bounds");
        const std::array<double, 3> v{p.kr, p.gr, p.mc};
        std::array<std::int64_t, 3> c{};
        for (std::size_t a = 0; a < 3; ++a) {
            const auto i = static_cast<std::int64_t>(std::floor((v[a] - bounds_.lo[a]) / edge_[a]));
            c[a] = std::clamp<std::int64_t>(i, 0, last_[a]);
        }
        return c;
    }

private:
    Bounds bounds_;
    std::array<double, 3> edge_;
    std::array<std::int64_t, 3> last_{};
};

using CellSet = std::unordered_set<std::array<std::int64_t, 3>, CellHash>;

CoverageSummary summarise(const std::vector<std::vector<BehaviourPoint>>& runs, const Grid& grid)
{
    CoverageSummary s;
    CellSet pooled;
    for (const auto& run : runs) {
        CellSet cells;
        for (const auto& p : run) {
            const auto c = grid.cell(p);
            cells.insert(c);
            pooled.insert(c);
        }
        s.per_run.push_back(cells.size());
    }
    if (!s.per_run.empty()) {
        double sum = 0.0;
        for (auto c : s.per_run) sum += static_cast<double>(c);
        s.mean = sum / static_cast<double>(s.per_run.size());
        s.min = *std::min_element(s.per_run.begin(), s.per_run.end());
        s.max = *std::max_element(s.per_run.begin(), s.per_run.end());
    }
    s.pooled = pooled.size();
    return s;
}

}  // namespace

std::size_t coverage(std::span<const BehaviourPoint> points, const VoxelSize& voxel, const Bounds& bounds)
{
    const Grid grid(voxel, bounds);
    CellSet cells;
    for (const auto& p : points) cells.insert(grid.cell(p));
    return cells.size();
}

std::vector<CoveragePoint> coverage_curve(std::span<const StampedBehaviour> db, const VoxelSize& voxel,
                                          const Bounds& bounds, std::size_t interval)
{
    if (interval == 0) throw ConfigError("coverage curve interval must be positive");
    const Grid grid(voxel, bounds);
    if (db.empty()) return {};

    std::vector<StampedBehaviour> sorted(db.begin(), db.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.generation < b.generation; });
    const std::size_t last_gen = sorted.back().generation;

    std::vector<CoveragePoint> curve;
    CellSet cells;
    std::size_t next = 0;
    for (std::size_t g = 0;; g += interval) {
        const std::size_t upto = std::min(g, last_gen);
        while (next < sorted.size() && sorted[next].generation <= upto) cells.insert(grid.cell(sorted[next++].behaviour));
        curve.push_back({upto, cells.size()});
        if (upto == last_gen) break;
    }
    return curve;
}

ComparisonReport compare(const std::vector<std::vector<BehaviourPoint>>& test_runs,
                         const std::vector<std::vector<BehaviourPoint>>& reference_runs, const VoxelSize& voxel)
{
    ComparisonReport r;
    r.voxel = voxel;
    for (const auto& run : test_runs) r.bounds.include(run);
    for (const auto& run : reference_runs) r.bounds.include(run);
    const Grid grid(voxel, r.bounds);
    r.test = summarise(test_runs, grid);
    r.reference = summarise(reference_runs, grid);
    r.ratio = r.reference.mean > 0 ? r.test.mean / r.reference.mean
                                   : (r.test.mean > 0 ? std::numeric_limits<double>::infinity() : 1.0);
    return r;
}

}  // namespace charc
